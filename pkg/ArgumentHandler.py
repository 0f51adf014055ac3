#################################################################################
# Command-line surface: generate | cluster | snr | oracle | experiment.
# Defaults come from config.json (missing keys are filled in memory from
# DEFAULT_CONFIG). Launched without arguments, the program asks for an
# experiment interactively and saves the answers that differ from the defaults.
#################################################################################
import argparse
import json
import os
import sys

from experiment_config import DEFAULT_EXPERIMENT_CONFIG, METHODS, SIM_KINDS
from initializers import INIT_METHODS
from logger_config import get_logger

CONFIG_FILE = os.environ.get("GMM_BENCH_CONFIG", "config.json")

DEFAULT_CONFIG = {
    "seed": 0,
    "iters": None,
    "ridge": 1e-6,
    "trials": 100000,
    "rule": "qda",
    "restarts": 10,
    "lloyd_iters": 100,
    "workers": 1,
    "model_kind": "sim1",
    "n": 1200,
    "replications": 100,
    "methods": ["spectral", "vanilla", "spectral+alg1", "vanilla+alg1"],
    "out": "results/curves.csv",
}

logger = get_logger(__name__)


def load_config():
    """Load configuration from config.json, ensuring missing keys get default values in memory only."""
    if not os.path.exists(CONFIG_FILE):
        logger.warning(f"{CONFIG_FILE} not found. Using default configuration.")
        return DEFAULT_CONFIG.copy()

    try:
        with open(CONFIG_FILE, "r", encoding="utf-8") as f:
            config_data = json.load(f)
        return {key: config_data.get(key, DEFAULT_CONFIG[key]) for key in DEFAULT_CONFIG}

    except (json.JSONDecodeError, ValueError, AttributeError) as e:
        logger.error(f"Invalid {CONFIG_FILE}: {e}. Using default configuration.")
        return DEFAULT_CONFIG.copy()


def save_config(config):
    """Save configuration back to config.json, only if the user explicitly changes values."""
    try:
        with open(CONFIG_FILE, "w", encoding="utf-8") as f:
            json.dump(config, f, indent=2)
        logger.info(f"Configuration saved to {CONFIG_FILE}")
    except OSError as e:
        logger.error(f"Failed to save {CONFIG_FILE}: {e}")


def _ask(prompt: str, default, cast=str):
    answer = input(f"{prompt} [{default}]: ").strip()
    if not answer:
        return default
    try:
        return cast(answer)
    except ValueError:
        print(f"Invalid value {answer!r}; keeping {default}")
        return default


def _method_list(text: str):
    methods = [m.strip() for m in text.split(",") if m.strip()]
    if not methods or any(m not in METHODS for m in methods):
        raise ValueError(text)
    return methods


def _init_choice(text: str) -> str:
    if text in INIT_METHODS or (text.startswith("file:") and len(text) > 5):
        return text
    raise argparse.ArgumentTypeError(f"expected one of {', '.join(INIT_METHODS)} or file:<labels>")


class ArgumentHandler:
    @staticmethod
    def prompt_for_arguments() -> argparse.Namespace:
        """Prompt for an experiment interactively, using config.json values as defaults."""
        config = load_config()

        print("\n=== Experiment Configuration ===")
        model_kind = _ask(f"Model ({' / '.join(SIM_KINDS)} / params file)", config["model_kind"])
        n = _ask("Number of observations", config["n"], int)
        replications = _ask("Replications", config["replications"], int)
        methods = _ask(f"Methods, comma-separated ({', '.join(METHODS)})",
                       ",".join(config["methods"]), _method_list)
        if isinstance(methods, str):
            methods = _method_list(methods)
        workers = _ask("Parallel workers", config["workers"], int)
        out = _ask("Output curve CSV", config["out"])

        updated_config = dict(config, model_kind=model_kind, n=n, replications=replications,
                              methods=methods, workers=workers, out=out)
        if updated_config != config:
            save_config(updated_config)

        experiment = dict(DEFAULT_EXPERIMENT_CONFIG, model_kind=model_kind, n=n, replications=replications,
                          methods=methods, base_seed=config["seed"], ridge=config["ridge"],
                          max_iters=config["iters"], restarts=config["restarts"],
                          lloyd_iters=config["lloyd_iters"])
        return argparse.Namespace(command="experiment", config=None, inline_config=experiment,
                                  out=out, workers=workers)

    @staticmethod
    def build_parser(config: dict) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="gmm-bench",
            description="Adjusted Lloyd clustering for anisotropic Gaussian mixtures",
        )
        sub = parser.add_subparsers(dest="command", required=True)

        generate = sub.add_parser("generate", help="Draw a dataset from a mixture")
        source = generate.add_mutually_exclusive_group(required=True)
        source.add_argument("--sim", choices=SIM_KINDS, help="Built-in simulation configuration")
        source.add_argument("--params", help="Params JSON file")
        generate.add_argument("--n", type=int, required=True, help="Number of observations")
        generate.add_argument("--seed", type=int, default=config["seed"], help="Base seed")
        generate.add_argument("--out", required=True, help="Dataset CSV to write")
        generate.add_argument("--labels", required=True, help="True labels file to write")
        generate.add_argument("--params-out", help="Write the parameters used as JSON")

        cluster = sub.add_parser("cluster", help="Cluster a dataset")
        cluster.add_argument("--data", required=True, help="Dataset CSV")
        cluster.add_argument("--k", type=int, required=True, help="Number of clusters")
        cluster.add_argument("--model", choices=("homog", "hetero", "vanilla", "spectral"), default="homog")
        cluster.add_argument("--init", type=_init_choice, default="spectral",
                             help="kmeanspp | vanilla | spectral | file:<labels>")
        cluster.add_argument("--iters", type=int, default=config["iters"],
                             help="Iterations (default: ceil(ln n))")
        cluster.add_argument("--ridge", type=float, default=config["ridge"], help="Covariance ridge")
        cluster.add_argument("--seed", type=int, default=config["seed"], help="Initializer seed")
        cluster.add_argument("--restarts", type=int, default=config["restarts"], help="Spectral restarts")
        cluster.add_argument("--lloyd-iters", type=int, default=config["lloyd_iters"],
                             help="Iteration cap of vanilla Lloyd")
        cluster.add_argument("--out", required=True, help="Labels file to write")
        cluster.add_argument("--report", help="Fit report JSON to write")
        cluster.add_argument("--truth", help="True labels, enables the error curve in the report")

        snr = sub.add_parser("snr", help="Separation functionals of a mixture")
        snr.add_argument("--params", required=True, help="Params JSON file")

        oracle = sub.add_parser("oracle", help="Monte-Carlo error of the optimal pairwise test")
        oracle.add_argument("--params", required=True, help="Params JSON file")
        oracle.add_argument("--pair", type=int, nargs=2, required=True, metavar=("A", "B"))
        oracle.add_argument("--trials", type=int, default=config["trials"], help="Draws per hypothesis")
        oracle.add_argument("--seed", type=int, default=config["seed"], help="Monte-Carlo seed")
        oracle.add_argument("--rule", choices=("qda", "lda"), default=config["rule"])

        experiment = sub.add_parser("experiment", help="Replicated benchmark")
        experiment.add_argument("--config", required=True, help="Experiment JSON file")
        experiment.add_argument("--out", default=config["out"], help="Curve CSV to write")
        experiment.add_argument("--workers", type=int, default=None, help="Override the worker count")
        return parser

    @staticmethod
    def parse_arguments(argv=None) -> argparse.Namespace:
        """Parse command-line arguments, using config.json for defaults."""
        parser = ArgumentHandler.build_parser(load_config())
        args = parser.parse_args(argv)
        if args.command == "experiment":
            args.inline_config = None
        return args

    @staticmethod
    def get_arguments(argv=None) -> argparse.Namespace:
        """Determine whether to use command-line arguments or interactive input."""
        argv = sys.argv[1:] if argv is None else argv
        if argv:
            return ArgumentHandler.parse_arguments(argv)
        return ArgumentHandler.prompt_for_arguments()
