##############################################################################
# Runs replicated clustering experiments with controlled concurrency.
# Replication indices go through an asyncio queue drained by a fixed number
# of workers; each replication runs end-to-end in an executor (worker
# processes when more than one worker is configured). Results are merged by
# replication index and folded in index order, so the curve table does not
# depend on scheduling. A wall-clock budget stops new replications from
# starting and marks the table as truncated.
##############################################################################
import asyncio
import math
import multiprocessing
import time
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Optional

import numpy as np
from tqdm import tqdm

from AdjustedLloyd import adjusted_lloyd_hetero, adjusted_lloyd_homog
from errors import ReplicationError
from experiment_config import SIM_KINDS, ExperimentConfig, split_method
from file_formats import read_params
from GmmModel import GmmParams, balanced_assignment, make_sim1, make_sim2, sample
from initializers import initial_labels
from logger_config import get_logger
from losses import misclustering_rate
from snr import snr_hetero, snr_homogeneous
from utils import check_memory_usage, derive_seed

logger = get_logger(__name__)


class ReplicationProgress:
    """Progress tracking for replications"""
    def __init__(self, total: int, enabled: bool = True):
        self.pbar = tqdm(total=total, desc="replications", unit="rep", disable=not enabled)

    def update(self):
        self.pbar.update(1)

    def close(self):
        self.pbar.close()


def replication_params(config: ExperimentConfig, index: int, params: Optional[GmmParams] = None) -> GmmParams:
    """Fresh sim1/sim2 parameters per replication; a params file is shared by all of them."""
    seed = derive_seed(config.base_seed, index, "params")
    if config.model_kind == "sim1":
        return make_sim1(seed, **config.sim_options)
    if config.model_kind == "sim2":
        return make_sim2(seed, **config.sim_options)
    return params if params is not None else read_params(config.model_kind)


def _padded(initial_h: float, h_curve: List[float], length: int) -> List[float]:
    """[h(z0)] followed by the per-iteration rates, holding the last value after convergence."""
    curve = [initial_h] + list(h_curve)
    return curve + [curve[-1]] * (length - len(curve))


def run_replication(config: ExperimentConfig, index: int, params: Optional[GmmParams] = None) -> dict:
    """Draw one instance, run every configured method on it and record its error curves."""
    params = replication_params(config, index, params)
    data_seed = derive_seed(config.base_seed, index, "data")
    data = sample(params, balanced_assignment(config.n, params.k), data_seed)
    iterations = config.iterations

    if params.homogeneous:
        snr_value = snr_homogeneous(params)
    else:
        snr_value = snr_hetero(params).snr_prime

    seeds = {"params": derive_seed(config.base_seed, index, "params"), "data": data_seed}
    starts = {}
    for init in config.initializers:
        seeds[init] = derive_seed(config.base_seed, index, init)
        z0 = initial_labels(data, params.k, init, seeds[init], config.restarts, config.lloyd_iters)
        starts[init] = (z0, misclustering_rate(z0, data.truth, params.k)[0])

    curves, regularization = {}, {}
    for method in config.methods:
        init, algorithm = split_method(method)
        z0, initial_h = starts[init]
        if algorithm is None:
            curves[method] = [initial_h] * (iterations + 1)
            continue
        fit = adjusted_lloyd_homog if algorithm == "alg1" else adjusted_lloyd_hetero
        trace = fit(data, params.k, z0, iterations, config.ridge)
        curves[method] = _padded(initial_h, trace.h_curve, iterations + 1)
        regularization[method] = trace.regularization_events

    logger.info(f"Replication {index} done: snr={snr_value:.4f}, "
                + ", ".join(f"{m}={c[-1]:.4g}" for m, c in curves.items()))
    return {
        "index": index,
        "seeds": seeds,
        "snr": snr_value,
        "exponent": -snr_value ** 2 / 8.0,
        "curves": curves,
        "regularization_events": regularization,
    }


@dataclass
class CurveRow:
    mean_h: List[float]
    mean_ln_h: List[float]
    n_zero_reps: List[int]


@dataclass
class CurveTable:
    curves: Dict[str, CurveRow]
    snr_summary: List[dict]
    metadata: dict = field(default_factory=dict)
    requested: int = 0
    completed: int = 0

    @property
    def truncated(self) -> bool:
        return self.completed < self.requested

    @classmethod
    def from_records(cls, config: ExperimentConfig, records: Dict[int, dict], metadata: dict) -> "CurveTable":
        ordered = [records[i] for i in sorted(records)]
        curves = {}
        for method in config.methods:
            H = np.array([r["curves"][method] for r in ordered], dtype=float).reshape(len(ordered), config.iterations + 1)
            positive = H > 0.0
            zeros = (~positive).sum(axis=0)
            with np.errstate(divide="ignore", invalid="ignore"):
                ln_sum = np.where(positive, np.log(np.where(positive, H, 1.0)), 0.0).sum(axis=0)
                mean_ln = np.where(positive.any(axis=0), ln_sum / positive.sum(axis=0), math.nan)
            curves[method] = CurveRow(
                mean_h=H.mean(axis=0).tolist() if ordered else [math.nan] * (config.iterations + 1),
                mean_ln_h=mean_ln.tolist(),
                n_zero_reps=[int(v) for v in zeros],
            )
        snr_summary = [{
            "index": r["index"],
            "snr": r["snr"] if math.isfinite(r["snr"]) else None,
            "exponent": r["exponent"] if math.isfinite(r["exponent"]) else None,
            "final_h": {m: c[-1] for m, c in r["curves"].items()},
            "seeds": r["seeds"],
            "regularization_events": r["regularization_events"],
        } for r in ordered]
        return cls(curves=curves, snr_summary=snr_summary, metadata=metadata,
                   requested=config.replications, completed=len(ordered))

    def to_summary(self) -> dict:
        return {
            "metadata": self.metadata,
            "truncated": self.truncated,
            "completed": self.completed,
            "requested": self.requested,
            "replications": self.snr_summary,
        }


class ExperimentRunner:
    def __init__(self, config: ExperimentConfig, show_progress: bool = False):
        self.config = config
        self.show_progress = show_progress
        self.params = None if config.model_kind in SIM_KINDS else read_params(config.model_kind)
        self.records: Dict[int, dict] = {}
        self.failures: List[ReplicationError] = []
        self.budget_hit = False

    def _executor(self) -> Executor:
        if self.config.workers > 1:
            return ProcessPoolExecutor(max_workers=self.config.workers,
                                       mp_context=multiprocessing.get_context("spawn"))
        return ThreadPoolExecutor(max_workers=1)

    def _over_budget(self, started: float) -> bool:
        budget = self.config.time_budget
        return budget is not None and time.monotonic() - started > budget

    async def run(self) -> CurveTable:
        config = self.config
        logger.info(f"Starting experiment: {config.model_kind}, n={config.n}, "
                    f"{config.replications} replication(s), methods {config.methods}")
        started = time.monotonic()
        loop = asyncio.get_running_loop()
        job = partial(run_replication, config, params=self.params)

        indices = asyncio.Queue()
        for index in range(config.replications):
            await indices.put(index)
        progress = ReplicationProgress(config.replications, self.show_progress)
        executor = self._executor()

        async def process_worker():
            while True:
                try:
                    index = await indices.get()
                except asyncio.CancelledError:
                    break
                try:
                    if self.failures:
                        continue
                    if self._over_budget(started):
                        if not self.budget_hit:
                            logger.warning(f"Time budget of {config.time_budget}s exceeded; "
                                           f"no further replications will start")
                        self.budget_hit = True
                        continue
                    self.records[index] = await loop.run_in_executor(executor, job, index)
                    progress.update()
                    check_memory_usage()
                except Exception as e:
                    logger.error(f"Replication {index} failed: {e}")
                    self.failures.append(ReplicationError(index, e))
                finally:
                    indices.task_done()

        workers = [asyncio.create_task(process_worker()) for _ in range(config.workers)]
        try:
            await indices.join()
        finally:
            for worker in workers:
                worker.cancel()
            await asyncio.gather(*workers, return_exceptions=True)
            progress.close()
            executor.shutdown(wait=True)

        if self.failures:
            raise min(self.failures, key=lambda f: f.index)

        wall_time = time.monotonic() - started
        metadata = {
            "config": config.to_dict(),
            "iterations": config.iterations,
            "parameter_redraw": config.model_kind in SIM_KINDS,
            "log_base": "e",
            "wall_time_seconds": wall_time,
        }
        table = CurveTable.from_records(config, self.records, metadata)
        if table.truncated:
            logger.warning(f"Experiment truncated: {table.completed} of {table.requested} replications completed")
        logger.info(f"Experiment finished in {wall_time:.1f}s")
        return table


def run_experiment(config: ExperimentConfig, show_progress: bool = False) -> CurveTable:
    return asyncio.run(ExperimentRunner(config, show_progress).run())
