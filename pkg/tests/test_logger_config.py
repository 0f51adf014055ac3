import logging
import warnings

import logger_config
from logger_config import get_logger


def test_get_logger_uses_shared_queue_and_warning_console():
    logger = get_logger("gmm_bench.tests.wiring")
    assert logger.level == logging.DEBUG
    assert logger_config.queue_handler in logger.handlers
    assert logger_config.console_handler in logger.handlers
    assert logger_config.console_handler.level == logging.WARNING


def test_get_logger_does_not_stack_handlers():
    first = get_logger("gmm_bench.tests.repeat")
    count = len(first.handlers)
    assert get_logger("gmm_bench.tests.repeat") is first
    assert len(first.handlers) == count


def test_file_handlers_write_under_log_dir():
    assert logger_config.file_handler.baseFilename.endswith("combined.log")
    assert logger_config.debug_handler.baseFilename.endswith("debug.log")
    assert logger_config.debug_handler.level == logging.DEBUG
    assert logger_config.queue_listener.handlers == (logger_config.file_handler, logger_config.debug_handler)


def test_runtime_warnings_are_logged():
    assert logger_config.warnings_logger.propagate is False
    assert logger_config.queue_handler in logger_config.warnings_logger.handlers
    records = []
    capture = logging.Handler()
    capture.emit = records.append
    logger_config.warnings_logger.addHandler(capture)
    try:
        logging.getLogger("py.warnings").warning(
            warnings.formatwarning("overflow encountered in exp", RuntimeWarning, "numkit.py", 1))
    finally:
        logger_config.warnings_logger.removeHandler(capture)
    assert any("overflow encountered in exp" in record.getMessage() for record in records)
