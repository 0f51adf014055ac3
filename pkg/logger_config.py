##############################################################################
# Logging for the library, the CLI and the replication workers.
# Records from every module go through one queue; a listener thread writes
# them to combined.log (LOG_LEVEL) and debug.log (everything) under
# GMM_BENCH_LOG_DIR. The console only shows warnings and errors, so progress
# bars and printed reports stay readable. Each spawned worker process imports
# this module and gets its own listener on the same files.
##############################################################################
import logging
import logging.handlers
import os
import queue

LOG_DIR = os.getenv('GMM_BENCH_LOG_DIR', 'logs')
LOG_LEVEL = os.getenv('LOG_LEVEL', 'DEBUG').upper()
MAX_BYTES = 1024 * 1024
BACKUP_COUNT = 5

os.makedirs(LOG_DIR, exist_ok=True)

formatter = logging.Formatter('%(asctime)s - %(processName)s - %(name)s - %(levelname)s - %(message)s')


def _rotating(filename: str, level) -> logging.Handler:
    handler = logging.handlers.RotatingFileHandler(
        os.path.join(LOG_DIR, filename), maxBytes=MAX_BYTES, backupCount=BACKUP_COUNT, encoding='utf-8'
    )
    handler.setFormatter(formatter)
    handler.setLevel(level)
    return handler


log_queue = queue.Queue()
queue_handler = logging.handlers.QueueHandler(log_queue)

file_handler = _rotating('combined.log', LOG_LEVEL)
debug_handler = _rotating('debug.log', logging.DEBUG)

console_handler = logging.StreamHandler()
console_handler.setFormatter(formatter)
console_handler.setLevel(logging.WARNING)

queue_listener = logging.handlers.QueueListener(log_queue, file_handler, debug_handler)
queue_listener.start()


def get_logger(name: str) -> logging.Logger:
    """Module logger wired to the shared queue and the warning-level console."""
    logger = logging.getLogger(name)
    if not logger.hasHandlers():
        logger.setLevel(logging.DEBUG)
        logger.addHandler(queue_handler)
        logger.addHandler(console_handler)
    return logger


# numpy RuntimeWarnings (overflow in exp, divide by zero) end up in the log files
logging.captureWarnings(True)
warnings_logger = logging.getLogger("py.warnings")
warnings_logger.setLevel(logging.DEBUG)
warnings_logger.addHandler(queue_handler)
warnings_logger.propagate = False

# executor and event-loop chatter from the replication runner
logging.getLogger("asyncio").setLevel(logging.WARNING)
logging.getLogger("concurrent.futures").setLevel(logging.WARNING)
