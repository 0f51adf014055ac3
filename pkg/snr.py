##############################################################################
# Separation functionals of a mixture: minimum center gap, the whitened gap
# for a shared covariance, and the heterogeneous version obtained as twice the
# minimum norm of the region B_{a,b} = {x : b.x + x^T A x / 2 + c <= 0}.
#
# The minimum-norm problem is solved in the eigenbasis of A. Stationary points
# are x(mu)_i = -mu v_i / (1 + mu lambda_i); g(x(mu)) = 0 is a secular
# equation in mu > 0 that is bracketed interval by interval between the poles
# -1/lambda_i and solved with brentq.
##############################################################################
import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.spatial.distance import pdist

import numkit
from errors import EmptyRegion, InvalidInput, NumericalFailure
from GmmModel import GmmParams, Homogeneous
from logger_config import get_logger

logger = get_logger(__name__)

DEFAULT_TOL = 1e-10
ROOT_XTOL = 1e-12
ZERO_EIGEN_TOL = 1e-12
SCAN_POINTS = 200
POLISH_FEASIBILITY = 1e-9


@dataclass(frozen=True, eq=False)
class QuadraticBoundary:
    a_mat: np.ndarray
    b_vec: np.ndarray
    c: float

    @property
    def d(self) -> int:
        return self.b_vec.shape[0]

    def g(self, x) -> np.ndarray:
        """b.x + x^T A x / 2 + c, row-wise for a batch of points."""
        x = np.asarray(x, dtype=float)
        return x @ self.b_vec + 0.5 * np.einsum("...i,ij,...j->...", x, self.a_mat, x) + self.c

    def contains(self, x) -> np.ndarray:
        return self.g(x) <= 0.0


@dataclass
class SnrReport:
    delta: float
    snr: Optional[float]
    snr_pairs: np.ndarray  # k x k, diagonal is nan
    snr_prime: float
    witnesses: dict = field(default_factory=dict)  # (a, b) -> minimizing point

    @property
    def exponent(self) -> float:
        value = self.snr if self.snr is not None else self.snr_prime
        return -value ** 2 / 8.0

    def to_dict(self) -> dict:
        pairs = [[None if (a == b or not math.isfinite(v)) else float(v) for b, v in enumerate(row)]
                 for a, row in enumerate(self.snr_pairs)]
        return {
            "delta": self.delta,
            "snr": self.snr,
            "snr_prime": self.snr_prime if math.isfinite(self.snr_prime) else None,
            "exponent": self.exponent if math.isfinite(self.exponent) else None,
            "snr_pairs": pairs,
        }


def min_center_gap(params: GmmParams) -> float:
    if params.k < 2:
        raise InvalidInput("the center gap needs at least two clusters")
    return float(np.min(pdist(params.centers)))


def _pair_differences(params: GmmParams):
    a_idx, b_idx = np.triu_indices(params.k, 1)
    return a_idx, b_idx, params.centers[a_idx] - params.centers[b_idx]


def snr_homogeneous(params: GmmParams) -> float:
    """min over pairs of ||Sigma^{-1/2}(theta_a - theta_b)||."""
    if not params.homogeneous:
        raise InvalidInput("snr_homogeneous needs a shared covariance")
    L = numkit.chol_lower(params.covariance.sigma)
    _, _, gaps = _pair_differences(params)
    return float(np.min(np.linalg.norm(numkit.whiten(L, gaps), axis=1)))


def snr_delta_bounds(params: GmmParams) -> Tuple[float, float]:
    """Delta / sqrt(lambda_max) <= SNR <= Delta / sqrt(lambda_min) for the shared covariance."""
    eig = numkit.sym_eig(params.covariance.for_cluster(0))
    delta = min_center_gap(params)
    return delta / math.sqrt(eig.eigenvalues[-1]), delta / math.sqrt(eig.eigenvalues[0])


@dataclass(frozen=True, eq=False)
class _ClusterFactors:
    root: np.ndarray
    inverse: np.ndarray
    log_det: float


def _factors(sigma: np.ndarray) -> _ClusterFactors:
    return _ClusterFactors(numkit.spd_sqrt(sigma), numkit.spd_inverse(sigma), numkit.log_det_spd(sigma))


def _boundary_from(theta_a, fa: _ClusterFactors, theta_b, fb: _ClusterFactors) -> QuadraticBoundary:
    xi = theta_a - theta_b
    a_mat = fa.root @ fb.inverse @ fa.root - np.eye(xi.size)
    a_mat = (a_mat + a_mat.T) / 2.0
    b_vec = fa.root @ fb.inverse @ xi
    c = 0.5 * float(xi @ fb.inverse @ xi) - 0.5 * fa.log_det + 0.5 * fb.log_det
    return QuadraticBoundary(a_mat=a_mat, b_vec=b_vec, c=c)


def boundary(params: GmmParams, a: int, b: int) -> QuadraticBoundary:
    """Region of cluster-a whitened observations that the optimal quadratic rule sends to b."""
    if a == b:
        raise InvalidInput("boundary needs two different clusters")
    return _boundary_from(params.centers[a], _factors(params.sigma(a)),
                          params.centers[b], _factors(params.sigma(b)))


class _Secular:
    """g along the stationary curve y(mu) in the eigenbasis of A."""

    def __init__(self, lam: np.ndarray, v: np.ndarray, c: float):
        self.lam = lam
        self.v = v
        self.c = c

    def point(self, mu: float) -> np.ndarray:
        return -mu * self.v / (1.0 + mu * self.lam)

    def __call__(self, mu: float) -> float:
        y = self.point(mu)
        return float(self.v @ y + 0.5 * np.sum(self.lam * y * y) + self.c)


def _first_negative(phi: _Secular, candidates) -> Optional[Tuple[float, float]]:
    """Walk mu values upward from 0 and return the first bracket [prev, mu] with phi(prev) > 0 >= phi(mu)."""
    prev = (0.0, phi.c)
    for mu in candidates:
        value = phi(mu)
        if not math.isfinite(value):
            continue
        if prev is not None and prev[1] > 0.0 >= value:
            return prev[0], mu
        prev = (mu, value)
    return None


def _roots_in(phi: _Secular, lo: float, hi: float) -> List[float]:
    """Roots of phi on a scan grid strictly inside (lo, hi)."""
    if math.isinf(hi):
        s = np.linspace(0.0, 1.0, SCAN_POINTS + 2)[1:-1]
        grid = lo + s / (1.0 - s) * max(lo, 1.0) * 1e3
    else:
        s = np.linspace(0.0, 1.0, SCAN_POINTS + 2)[1:-1]
        grid = lo + (hi - lo) * s
    values = np.array([phi(mu) for mu in grid])
    roots = []
    for i in range(len(grid) - 1):
        if np.isfinite(values[i]) and np.isfinite(values[i + 1]) and values[i] * values[i + 1] < 0.0:
            roots.append(brentq(phi, grid[i], grid[i + 1], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps))
    return roots


def min_norm_on_boundary(qb: QuadraticBoundary, tol: float = DEFAULT_TOL) -> Tuple[np.ndarray, float]:
    """
    Minimum-norm point of {x : g(x) <= 0}.

    Returns (x_star, ||x_star||). Raises EmptyRegion when the region is empty
    and NumericalFailure when no stationary point meets the residual tolerance.
    """
    d = qb.d
    if qb.c <= 0.0:
        return np.zeros(d), 0.0

    eig = numkit.sym_eig(qb.a_mat)
    scale = max(1.0, float(np.max(np.abs(eig.eigenvalues))))
    lam = np.where(np.abs(eig.eigenvalues) <= ZERO_EIGEN_TOL * scale, 0.0, eig.eigenvalues)
    U = eig.eigenvectors
    v = U.T @ qb.b_vec
    b_norm = float(np.linalg.norm(qb.b_vec))
    v_tiny = ZERO_EIGEN_TOL * max(1.0, b_norm)
    phi = _Secular(lam, v, qb.c)

    if lam[0] >= 0.0:
        flat = lam == 0.0
        if not np.any(np.abs(v[flat]) > v_tiny):
            positive = lam > 0.0
            inf_g = qb.c - 0.5 * float(np.sum(v[positive] ** 2 / lam[positive]))
            if inf_g > 0.0:
                raise EmptyRegion(f"quadratic region is empty (inf g = {inf_g:.6g} > 0)")

    candidates: List[np.ndarray] = []

    poles = sorted({-1.0 / l for l in lam if l < 0.0})
    edges = [0.0] + poles + [math.inf]

    # first interval: phi(0) = c > 0 and phi decreases, so at most one root
    first_hi = edges[1]
    if math.isinf(first_hi):
        walk = (2.0 ** e for e in range(-60, 1024))
    else:
        # geometric in mu near 0, then geometric in the distance to the pole
        walk = itertools.chain((first_hi * 2.0 ** -e for e in range(60, 1, -1)),
                               (first_hi * (1.0 - 2.0 ** -e) for e in range(1, 60)))
    bracket = _first_negative(phi, walk)
    if bracket is not None:
        mu = brentq(phi, bracket[0], bracket[1], xtol=ROOT_XTOL * max(1.0, bracket[1]),
                    rtol=4 * np.finfo(float).eps)
        candidates.append(phi.point(mu))
        logger.debug(f"Secular root mu={mu:.6g} in first interval (0, {first_hi:.6g})")

    # remaining intervals only add further stationary points
    for lo, hi in zip(edges[1:-1], edges[2:]):
        for mu in _roots_in(phi, lo, hi):
            candidates.append(phi.point(mu))

    # degenerate eigendirections at a pole: complete the point along the eigenspace
    for pole in poles:
        block = np.isclose(lam, -1.0 / pole, rtol=1e-12, atol=0.0)
        if np.any(np.abs(v[block]) > v_tiny):
            continue
        rest = ~block
        y = np.zeros(d)
        y[rest] = -pole * v[rest] / (1.0 + pole * lam[rest])
        residual = phi.c + float(v[rest] @ y[rest]) + 0.5 * float(np.sum(lam[rest] * y[rest] ** 2))
        if residual < 0.0:
            continue
        i = int(np.flatnonzero(block)[0])
        y[i] = math.sqrt(2.0 * residual / -lam[i])
        candidates.append(y)
        logger.debug(f"Degenerate eigendirection at pole {pole:.6g} completed")

    limit = tol * max(1.0, abs(qb.c))
    best = None
    for y in candidates:
        x = U @ y
        if not np.all(np.isfinite(x)) or abs(float(qb.g(x))) > limit:
            continue
        if best is None or np.linalg.norm(x) < np.linalg.norm(best):
            best = x
    if best is None:
        raise NumericalFailure(f"no stationary point met the residual tolerance {limit:.3e}")
    return best, float(np.linalg.norm(best))


def _halfspace_pair(root_inv, xi: np.ndarray):
    """Shared-covariance case: the region is a halfspace and everything is closed form."""
    w = root_inv @ xi
    norm = float(np.linalg.norm(w))
    witness = -0.5 * w
    return norm, witness


def snr_hetero(params: GmmParams, tol: float = DEFAULT_TOL) -> SnrReport:
    """All ordered-pair SNR' values, their minimum and the minimizing points."""
    k = params.k
    if k < 2:
        raise InvalidInput("SNR' needs at least two clusters")
    pairs = np.full((k, k), np.nan)
    witnesses = {}

    if isinstance(params.covariance, Homogeneous):
        root_inv = numkit.spd_inv_sqrt(params.covariance.sigma)
        for a in range(k):
            for b in range(k):
                if a != b:
                    pairs[a, b], witnesses[(a, b)] = _halfspace_pair(root_inv, params.centers[a] - params.centers[b])
        snr = snr_homogeneous(params)
    else:
        factors = [_factors(params.sigma(a)) for a in range(k)]
        for a in range(k):
            for b in range(k):
                if a == b:
                    continue
                qb = _boundary_from(params.centers[a], factors[a], params.centers[b], factors[b])
                try:
                    x_star, value = min_norm_on_boundary(qb, tol)
                except EmptyRegion:
                    logger.debug(f"Pair ({a}, {b}) has an empty error region")
                    pairs[a, b] = math.inf
                    continue
                pairs[a, b] = 2.0 * value
                witnesses[(a, b)] = x_star
        snr = None

    off = pairs[~np.eye(k, dtype=bool)]
    finite = off[np.isfinite(off)]
    snr_prime = float(finite.min()) if finite.size else math.inf
    return SnrReport(delta=min_center_gap(params), snr=snr, snr_pairs=pairs,
                     snr_prime=snr_prime, witnesses=witnesses)


def snr_prime_bounds(params: GmmParams, a: int, b: int) -> Tuple[float, float]:
    """
    Closed-form sandwich on SNR'_{a,b} in terms of ||theta_a - theta_b|| and the
    extreme eigenvalues over all covariance matrices of the model.
    """
    eigenvalues = np.concatenate([numkit.sym_eig(s).eigenvalues for s in params.covariance.matrices(params.k)])
    lam_min, lam_max = float(eigenvalues.min()), float(eigenvalues.max())
    gap = float(np.linalg.norm(params.centers[a] - params.centers[b]))
    lower = gap * (-math.sqrt(lam_max) + math.sqrt(lam_max + lam_min * (lam_min + lam_max) / (2.0 * lam_max))) \
        / (lam_min + lam_max)
    upper = gap / math.sqrt(lam_min) + math.sqrt(1.5 * params.d) + math.sqrt(params.d * math.log(lam_max / lam_min))
    return lower, upper


def _grid_pass(qb: QuadraticBoundary, lows: np.ndarray, highs: np.ndarray, resolution: int):
    """Feasible grid point of least norm over the box [lows, highs]; (point, norm) or (None, inf)."""
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(lows, highs)]
    d = qb.d
    best_point, best_sq = None, math.inf
    if d == 3:
        x1, x2 = np.meshgrid(axes[1], axes[2], indexing="ij")
        A, bv = qb.a_mat, qb.b_vec
        plane = bv[1] * x1 + bv[2] * x2 + 0.5 * (A[1, 1] * x1 * x1 + 2.0 * A[1, 2] * x1 * x2 + A[2, 2] * x2 * x2)
        cross = A[0, 1] * x1 + A[0, 2] * x2
        plane_sq = x1 * x1 + x2 * x2
        # slices nearest the origin first, so the rest can be skipped once |x0| alone is too large
        for x0 in sorted(axes[0], key=abs):
            if x0 * x0 >= best_sq:
                break
            g = plane + x0 * cross + (bv[0] * x0 + 0.5 * A[0, 0] * x0 * x0 + qb.c)
            sq = np.where(g <= 0.0, plane_sq + x0 * x0, np.inf)
            idx = np.unravel_index(np.argmin(sq), sq.shape)
            if sq[idx] < best_sq:
                best_sq = float(sq[idx])
                best_point = np.array([x0, x1[idx], x2[idx]])
    else:
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        sq = np.where(qb.g(mesh) <= 0.0, np.sum(mesh * mesh, axis=1), np.inf)
        i = int(np.argmin(sq))
        if math.isfinite(sq[i]):
            best_sq = float(sq[i])
            best_point = mesh[i]
    return best_point, math.sqrt(best_sq)


def grid_oracle(qb: QuadraticBoundary, radius: float, resolution: int, polish: bool = True) -> float:
    """
    Brute-force estimate of min ||x|| over g(x) <= 0 within the box of half-width
    `radius`, refined once around the best grid point. With `polish`, the best
    grid point then seeds a local SLSQP solve of the constrained problem.
    """
    d = qb.d
    if d > 3:
        raise InvalidInput("the grid oracle handles d <= 3 only")
    point, value = _grid_pass(qb, np.full(d, -radius), np.full(d, radius), resolution)
    if point is None:
        return math.inf
    spacing = 2.0 * radius / (resolution - 1)
    # near-optimal feasible points may sit sideways along the boundary, within
    # sqrt(2 * value * excess) of the minimizer
    half_width = spacing + math.sqrt(2.0 * value * spacing * math.sqrt(d))
    refined_point, refined = _grid_pass(qb, point - half_width, point + half_width, resolution)
    best = min(value, refined)
    if not polish:
        return best
    start = refined_point if refined_point is not None and refined <= value else point
    return min(best, _polished(qb, start))


def _polished(qb: QuadraticBoundary, start: np.ndarray) -> float:
    result = minimize(
        lambda x: float(x @ x), start, jac=lambda x: 2.0 * x, method="SLSQP",
        constraints=[{"type": "ineq", "fun": lambda x: -float(qb.g(x)), "jac": lambda x: -(qb.b_vec + qb.a_mat @ x)}],
        options={"ftol": 1e-15, "maxiter": 500},
    )
    x = result.x
    if not np.all(np.isfinite(x)) or float(qb.g(x)) > POLISH_FEASIBILITY * max(1.0, abs(qb.c)):
        logger.debug(f"Local polish rejected: {result.message}")
        return math.inf
    return float(np.linalg.norm(x))
