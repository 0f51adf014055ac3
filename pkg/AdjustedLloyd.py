##############################################################################
# Adjusted Lloyd iterations for Gaussian mixtures with unknown covariances.
#
# Each iteration re-estimates the centers from the current labels, then the
# covariance (pooled over all n points with denominator n for the shared
# model, per cluster with denominator n_a for the heterogeneous one), then
# reassigns every point to the cluster minimizing its Mahalanobis distance
# (plus log|Sigma_a| in the heterogeneous model). This is hard EM: the
# classification objective cannot increase from one iteration to the next.
##############################################################################
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

import numkit
from errors import DegenerateCovariance, InvalidInput, NotPositiveDefinite
from GmmModel import CovarianceSpec, Dataset, GmmParams, Heterogeneous, Homogeneous, as_labels, observations
from initializers import cluster_means, fill_empty_clusters
from logger_config import get_logger
from losses import center_loss, misclustering_rate

logger = get_logger(__name__)

DEFAULT_RIDGE = 1e-6


@dataclass(frozen=True, eq=False)
class FitState:
    centers: np.ndarray
    covariance: CovarianceSpec
    labels: np.ndarray
    iteration: int

    def to_params(self) -> GmmParams:
        return GmmParams(self.centers, self.covariance)


@dataclass
class FitTrace:
    initial_labels: np.ndarray
    states: List[FitState] = field(default_factory=list)
    objective: List[float] = field(default_factory=list)
    h_curve: Optional[List[float]] = None
    l_curve: Optional[List[float]] = None
    converged_at: Optional[int] = None
    regularization_events: int = 0
    empty_repairs: int = 0

    @property
    def labels(self) -> np.ndarray:
        return self.states[-1].labels if self.states else self.initial_labels

    @property
    def iterations(self) -> int:
        return len(self.states)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged_at": self.converged_at,
            "regularization_events": self.regularization_events,
            "empty_repairs": self.empty_repairs,
            "objective": [float(v) for v in self.objective],
            "h_curve": self.h_curve,
            "l_curve": self.l_curve,
        }


def _factor(sigma: np.ndarray):
    L = numkit.chol_lower(sigma)
    return L, 2.0 * float(np.sum(np.log(np.diag(L))))


def _costs(Y: np.ndarray, centers: np.ndarray, covariance: CovarianceSpec, with_log_det: bool) -> np.ndarray:
    """n x k matrix of (Y_j - theta_a)^T Sigma_a^{-1} (Y_j - theta_a) [+ log|Sigma_a|]."""
    k = centers.shape[0]
    costs = np.empty((Y.shape[0], k))
    if isinstance(covariance, Homogeneous):
        L, log_det = _factor(covariance.sigma)
        factors = [(L, log_det)] * k
    else:
        factors = [_factor(s) for s in covariance.sigmas]
    for a, (L, log_det) in enumerate(factors):
        costs[:, a] = np.sum(numkit.whiten(L, Y - centers[a]) ** 2, axis=1)
        if with_log_det:
            costs[:, a] += log_det
    return costs


def classification_objective(data, state: FitState) -> float:
    """
    sum_j (Y_j - theta_{z_j})^T Sigma_{z_j}^{-1} (Y_j - theta_{z_j}) + log|Sigma_{z_j}|,
    twice the negative complete-data log-likelihood up to n d ln(2 pi).
    """
    Y = observations(data)
    labels = as_labels(state.labels, state.centers.shape[0], Y.shape[0])
    costs = _costs(Y, state.centers, state.covariance, with_log_det=True)
    return float(np.sum(costs[np.arange(labels.size), labels]))


class AdjustedLloyd:
    """Shared iteration loop; `homogeneous` selects the pooled or per-cluster covariance update."""

    def __init__(self, homogeneous: bool, max_iters: int, ridge: float = DEFAULT_RIDGE):
        if max_iters < 1:
            raise InvalidInput(f"max_iters must be at least 1, got {max_iters}")
        if ridge < 0:
            raise InvalidInput(f"ridge must be non-negative, got {ridge}")
        self.homogeneous = homogeneous
        self.max_iters = max_iters
        self.ridge = ridge
        self.regularization_events = 0
        self.fallback_scale = 1.0

    def _regularized(self, sigma: np.ndarray, what: str) -> np.ndarray:
        sigma = (sigma + sigma.T) / 2.0
        try:
            numkit.chol_lower(sigma)
            return sigma
        except NotPositiveDefinite:
            pass
        d = sigma.shape[0]
        scale = float(np.trace(sigma)) / d
        if scale <= 0.0:
            scale = self.fallback_scale
        regularized = sigma + self.ridge * scale * np.eye(d)
        self.regularization_events += 1
        logger.warning(f"Regularized singular {what} with ridge {self.ridge:g} (scale {scale:.3e})")
        try:
            numkit.chol_lower(regularized)
        except NotPositiveDefinite as e:
            raise DegenerateCovariance(f"{what} is singular even after regularization") from e
        return regularized

    def _covariance(self, Y: np.ndarray, centers: np.ndarray, labels: np.ndarray, k: int) -> CovarianceSpec:
        R = Y - centers[labels]
        if self.homogeneous:
            return Homogeneous(self._regularized(R.T @ R / Y.shape[0], "pooled covariance"))
        sigmas = []
        for a in range(k):
            Ra = R[labels == a]
            sigmas.append(self._regularized(Ra.T @ Ra / Ra.shape[0], f"covariance of cluster {a}"))
        return Heterogeneous(tuple(sigmas))

    def _start(self, Y: np.ndarray, z0, k: int) -> np.ndarray:
        labels = as_labels(z0, k, Y.shape[0])
        if np.any(np.bincount(labels, minlength=k) == 0):
            means = cluster_means(Y, labels, k)
            own = np.sum((Y - np.nan_to_num(means[labels])) ** 2, axis=1)
            labels, moved = fill_empty_clusters(labels, own, k)
            logger.warning(f"Initial labeling left clusters empty; moved {moved} point(s)")
        return labels

    def fit(self, data, k: int, z0) -> FitTrace:
        Y = observations(data)
        if Y.shape[0] < k:
            raise InvalidInput(f"{Y.shape[0]} points cannot form {k} clusters")
        self.regularization_events = 0
        # scale for the ridge when a covariance estimate has zero trace
        self.fallback_scale = float(np.trace(np.atleast_2d(np.cov(Y, rowvar=False, bias=True)))) / Y.shape[1] or 1.0

        labels = self._start(Y, z0, k)
        trace = FitTrace(initial_labels=labels)
        for t in range(1, self.max_iters + 1):
            centers = cluster_means(Y, labels, k)
            covariance = self._covariance(Y, centers, labels, k)
            costs = _costs(Y, centers, covariance, with_log_det=not self.homogeneous)
            new_labels = np.argmin(costs, axis=1).astype(np.int64)
            new_labels, moved = fill_empty_clusters(new_labels, costs[np.arange(Y.shape[0]), new_labels], k)
            if moved:
                trace.empty_repairs += moved
                logger.warning(f"Iteration {t}: moved {moved} point(s) into empty clusters")

            state = FitState(centers=centers, covariance=covariance, labels=new_labels, iteration=t)
            trace.states.append(state)
            trace.objective.append(classification_objective(Y, state))
            relabeled = int(np.count_nonzero(new_labels != labels))
            logger.debug(f"Iteration {t}: objective {trace.objective[-1]:.10g}, {relabeled} relabeled")
            if relabeled == 0:
                trace.converged_at = t
                break
            labels = new_labels

        trace.regularization_events = self.regularization_events
        if isinstance(data, Dataset) and data.truth is not None:
            _score(trace, data, k)
        logger.info(f"Adjusted Lloyd ({'shared' if self.homogeneous else 'per-cluster'} covariance) "
                    f"finished after {trace.iterations} iteration(s), converged_at={trace.converged_at}")
        return trace


def _score(trace: FitTrace, data: Dataset, k: int) -> None:
    trace.h_curve = []
    with_centers = data.params is not None and data.params.k == k
    if with_centers:
        trace.l_curve = []
    for state in trace.states:
        h, psi = misclustering_rate(state.labels, data.truth, k)
        trace.h_curve.append(h)
        if with_centers:
            trace.l_curve.append(center_loss(psi.apply(state.labels), data.truth, data.params))


def adjusted_lloyd_homog(data, k: int, z0, max_iters: int, ridge: float = DEFAULT_RIDGE) -> FitTrace:
    """Shared-covariance iterations: pooled Sigma with denominator n, Mahalanobis argmin."""
    return AdjustedLloyd(True, max_iters, ridge).fit(data, k, z0)


def adjusted_lloyd_hetero(data, k: int, z0, max_iters: int, ridge: float = DEFAULT_RIDGE) -> FitTrace:
    """Per-cluster Sigma_a with denominator n_a, argmin of Mahalanobis distance plus log|Sigma_a|."""
    return AdjustedLloyd(False, max_iters, ridge).fit(data, k, z0)
