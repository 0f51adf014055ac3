##############################################################################
# Optimal two-hypothesis tests between Gaussian clusters (linear rule for a
# shared covariance, quadratic rule otherwise), Monte-Carlo estimates of
# their total testing error and the exp(-snr^2/8) reference envelope.
# Decisions accept a single point (returns an int) or a batch of rows
# (returns an int array). Ties go to hypothesis 1.
##############################################################################
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.stats import norm

import numkit
from errors import InvalidInput
from GmmModel import make_rng
from logger_config import get_logger
from utils import derive_seed

logger = get_logger(__name__)

MIN_TRIALS = 1000
SHARD_TRIALS = 100_000
RULES = ("qda", "lda")


@dataclass(frozen=True, eq=False)
class PairHypothesis:
    theta0: np.ndarray
    theta1: np.ndarray
    sigma0: np.ndarray
    sigma1: np.ndarray

    def __post_init__(self):
        for name in ("theta0", "theta1", "sigma0", "sigma1"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        d = self.theta0.shape[0]
        if self.theta0.shape != (d,) or self.theta1.shape != (d,):
            raise InvalidInput("hypothesis centers must be d-vectors of equal length")
        if self.sigma0.shape != (d, d) or self.sigma1.shape != (d, d):
            raise InvalidInput(f"hypothesis covariances must be {d} x {d}")

    @property
    def d(self) -> int:
        return self.theta0.shape[0]

    @property
    def shared(self) -> bool:
        return bool(np.array_equal(self.sigma0, self.sigma1))

    @classmethod
    def from_params(cls, params, a: int, b: int) -> "PairHypothesis":
        """Cluster a as hypothesis 0, cluster b as hypothesis 1."""
        if a == b or not (0 <= a < params.k and 0 <= b < params.k):
            raise InvalidInput(f"invalid cluster pair ({a}, {b}) for k={params.k}")
        return cls(params.centers[a], params.centers[b], params.sigma(a), params.sigma(b))


def _points(x) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    return np.atleast_2d(x), x.ndim == 1


def _shaped(decisions: np.ndarray, single: bool):
    decisions = decisions.astype(np.int64)
    return int(decisions[0]) if single else decisions


class _LinearRule:
    def __init__(self, hyp: PairHypothesis):
        if not hyp.shared:
            raise InvalidInput("the linear rule needs sigma0 == sigma1")
        inverse = numkit.spd_inverse(hyp.sigma0)
        self.w = 2.0 * inverse @ (hyp.theta1 - hyp.theta0)
        self.threshold = float(hyp.theta1 @ inverse @ hyp.theta1 - hyp.theta0 @ inverse @ hyp.theta0)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return X @ self.w >= self.threshold


class _QuadraticRule:
    def __init__(self, hyp: PairHypothesis):
        self.theta0, self.theta1 = hyp.theta0, hyp.theta1
        self.L0 = numkit.chol_lower(hyp.sigma0)
        self.L1 = numkit.chol_lower(hyp.sigma1)
        self.log_det0 = 2.0 * float(np.sum(np.log(np.diag(self.L0))))
        self.log_det1 = 2.0 * float(np.sum(np.log(np.diag(self.L1))))

    def __call__(self, X: np.ndarray) -> np.ndarray:
        q0 = np.sum(numkit.whiten(self.L0, X - self.theta0) ** 2, axis=1) + self.log_det0
        q1 = np.sum(numkit.whiten(self.L1, X - self.theta1) ** 2, axis=1) + self.log_det1
        return q0 >= q1


def lda_decide(x, hyp: PairHypothesis):
    """1 iff 2 (theta1 - theta0)^T Sigma^{-1} x >= theta1^T Sigma^{-1} theta1 - theta0^T Sigma^{-1} theta0."""
    X, single = _points(x)
    return _shaped(_LinearRule(hyp)(X), single)


def qda_decide(x, hyp: PairHypothesis):
    """1 iff log|S0| + (x - t0)^T S0^{-1} (x - t0) >= log|S1| + (x - t1)^T S1^{-1} (x - t1)."""
    X, single = _points(x)
    return _shaped(_QuadraticRule(hyp)(X), single)


def _rule(hyp: PairHypothesis, rule: str):
    if rule == "qda":
        return _QuadraticRule(hyp)
    if rule == "lda":
        return _LinearRule(hyp)
    raise InvalidInput(f"unknown rule {rule!r}; expected one of {RULES}")


def _count_errors(decide, theta, root, wrong: bool, trials: int, seed: int, stream: str) -> int:
    errors = 0
    for shard, start in enumerate(range(0, trials, SHARD_TRIALS)):
        size = min(SHARD_TRIALS, trials - start)
        rng = make_rng(derive_seed(seed, shard, stream))
        X = theta + rng.standard_normal((size, theta.size)) @ root
        errors += int(np.count_nonzero(decide(X) == wrong))
    return errors


def mc_pair_error(hyp: PairHypothesis, trials: int, seed: int, rule: str = "qda") -> Tuple[float, float]:
    """
    Monte-Carlo estimate of P_H0(decide = 1) + P_H1(decide = 0) with `trials`
    draws per hypothesis. Draws are produced in fixed-size shards, each with its
    own derived seed, so the estimate does not depend on how shards are scheduled.

    Returns (total_error, std_error), the latter from the two binomial variances.
    """
    if trials < MIN_TRIALS:
        raise InvalidInput(f"need at least {MIN_TRIALS} trials, got {trials}")
    decide = _rule(hyp, rule)
    root0 = numkit.spd_sqrt(hyp.sigma0)
    root1 = root0 if hyp.shared else numkit.spd_sqrt(hyp.sigma1)

    p0 = _count_errors(decide, hyp.theta0, root0, True, trials, seed, "h0") / trials
    p1 = _count_errors(decide, hyp.theta1, root1, False, trials, seed, "h1") / trials
    std_error = math.sqrt(p0 * (1.0 - p0) / trials + p1 * (1.0 - p1) / trials)
    logger.debug(f"{rule} error over {trials} trials: {p0:.6f} + {p1:.6f} (se {std_error:.2e})")
    return p0 + p1, std_error


def whitened_gap(hyp: PairHypothesis) -> float:
    """||Sigma^{-1/2} (theta1 - theta0)|| for a shared covariance."""
    if not hyp.shared:
        raise InvalidInput("the whitened gap needs sigma0 == sigma1")
    L = numkit.chol_lower(hyp.sigma0)
    return float(np.linalg.norm(numkit.whiten(L, (hyp.theta1 - hyp.theta0)[None, :])))


def lda_exact_error(hyp: PairHypothesis) -> float:
    """Total error of the linear rule: 2 Phi(-s/2), s the whitened gap."""
    return float(2.0 * norm.cdf(-whitened_gap(hyp) / 2.0))


def minimax_exponent_bound(snr_value: float) -> float:
    if snr_value < 0 or math.isnan(snr_value):
        raise InvalidInput(f"snr must be non-negative, got {snr_value}")
    return math.exp(-snr_value ** 2 / 8.0)
