import json
import math
import sys

from AdjustedLloyd import adjusted_lloyd_hetero, adjusted_lloyd_homog
from ArgumentHandler import ArgumentHandler
from bayes import PairHypothesis, lda_exact_error, mc_pair_error, minimax_exponent_bound
from errors import EmptyRegion, GmmBenchError, InvalidInput
from experiment_config import ExperimentConfig
from ExperimentRunner import replication_params, run_experiment
from file_formats import (read_dataset, read_labels, read_params, summary_path, write_curves, write_dataset,
                          write_json, write_labels, write_params)
from GmmModel import Dataset, balanced_assignment, sample
from initializers import initial_labels, spectral_init, vanilla_lloyd
from logger_config import get_logger
from losses import misclustering_rate
from snr import boundary, min_norm_on_boundary, snr_delta_bounds, snr_hetero, snr_prime_bounds
from utils import check_memory_usage, default_iterations, derive_seed

logger = get_logger(__name__)


def _finite(value):
    return value if value is not None and math.isfinite(value) else None


def _print(document: dict):
    print(json.dumps(document, indent=2))


class MainApp:
    def __init__(self, argv=None):
        self.args = ArgumentHandler.get_arguments(argv)

    def run(self) -> int:
        handler = getattr(self, f"cmd_{self.args.command}")
        try:
            handler()
        except GmmBenchError as e:
            logger.error(f"{type(e).__name__}: {e}")
            return e.exit_code
        finally:
            check_memory_usage()
        return 0

    def cmd_generate(self):
        args = self.args
        if args.n < 1:
            raise InvalidInput(f"--n must be positive, got {args.n}")
        if args.sim:
            config = ExperimentConfig(model_kind=args.sim, base_seed=args.seed)
            params = replication_params(config, 0)
        else:
            params = read_params(args.params)
        data = sample(params, balanced_assignment(args.n, params.k), derive_seed(args.seed, 0, "data"))
        write_dataset(data, args.out)
        write_labels(data.truth, args.labels)
        if args.params_out:
            write_params(params, args.params_out)
        logger.info(f"Generated n={data.n}, d={data.d}, k={params.k}")

    def cmd_cluster(self):
        args = self.args
        y = read_dataset(args.data)
        truth = read_labels(args.truth, args.k, y.shape[0]) if args.truth else None
        data = Dataset(y, truth)
        iterations = args.iters if args.iters is not None else default_iterations(data.n)
        report = {"model": args.model, "init": args.init, "k": args.k, "n": data.n, "d": data.d,
                  "max_iters": iterations, "ridge": args.ridge, "seed": args.seed,
                  "restarts": args.restarts, "lloyd_iters": args.lloyd_iters}

        if args.model == "vanilla":
            labels, _, used = vanilla_lloyd(data, args.k, args.seed, args.lloyd_iters)
            report["iterations_used"] = used
        elif args.model == "spectral":
            labels = spectral_init(data, args.k, args.seed, args.restarts, args.lloyd_iters)
        else:
            if args.init.startswith("file:"):
                z0 = read_labels(args.init[len("file:"):], args.k, data.n)
            else:
                z0 = initial_labels(data, args.k, args.init, args.seed, args.restarts, args.lloyd_iters)
            fit = adjusted_lloyd_homog if args.model == "homog" else adjusted_lloyd_hetero
            trace = fit(data, args.k, z0, iterations, args.ridge)
            labels = trace.labels
            report.update(trace.to_dict())
            if truth is not None:
                report["initial_h"] = misclustering_rate(z0, truth, args.k)[0]

        if truth is not None:
            report["h"] = misclustering_rate(labels, truth, args.k)[0]
        write_labels(labels, args.out)
        if args.report:
            write_json(report, args.report)

    def cmd_snr(self):
        params = read_params(self.args.params)
        report = snr_hetero(params)
        document = report.to_dict()
        if params.homogeneous:
            lower, upper = snr_delta_bounds(params)
            document["snr_delta_bounds"] = [lower, upper]
        document["snr_prime_bounds"] = {
            f"{a},{b}": list(snr_prime_bounds(params, a, b))
            for a in range(params.k) for b in range(params.k) if a != b
        }
        _print(document)

    def cmd_oracle(self):
        args = self.args
        params = read_params(args.params)
        a, b = args.pair
        hyp = PairHypothesis.from_params(params, a, b)
        total, std_error = mc_pair_error(hyp, args.trials, args.seed, args.rule)
        try:
            pair_snr = 2.0 * min_norm_on_boundary(boundary(params, a, b))[1]
        except EmptyRegion:
            pair_snr = math.inf
        document = {
            "pair": [a, b],
            "rule": args.rule,
            "trials": args.trials,
            "total_error": total,
            "std_error": std_error,
            "snr_prime_pair": _finite(pair_snr),
            "envelope": minimax_exponent_bound(pair_snr) if math.isfinite(pair_snr) else 0.0,
        }
        if hyp.shared:
            document["lda_exact_error"] = lda_exact_error(hyp)
        _print(document)

    def cmd_experiment(self):
        args = self.args
        if args.inline_config is not None:
            config = ExperimentConfig.from_dict(args.inline_config)
        else:
            config = ExperimentConfig.load_config(args.config)
        if args.workers is not None:
            config.workers = args.workers
            config.validate()
        table = run_experiment(config, show_progress=True)
        write_curves(table, args.out)
        write_json(table.to_summary(), summary_path(args.out))
        print(f"Wrote {args.out} ({table.completed}/{table.requested} replications)")


def main(argv=None) -> int:
    return MainApp(argv).run()


if __name__ == "__main__":
    sys.exit(main())
