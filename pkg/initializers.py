##############################################################################
# Initial labelings for the adjusted Lloyd iterations:
#   k-means++ seeding, vanilla (Euclidean) Lloyd from those seeds, and
#   spectral clustering (projection on the top-k right singular vectors
#   followed by restarted vanilla Lloyd).
# Every random choice goes through a Philox generator seeded by the caller.
##############################################################################
from typing import Iterator, Tuple

import numpy as np
from scipy.spatial.distance import cdist

import numkit
from errors import InvalidInput, TooFewPoints
from GmmModel import make_rng, observations
from logger_config import get_logger
from utils import derive_seed

logger = get_logger(__name__)

DEFAULT_RESTARTS = 10
DEFAULT_LLOYD_ITERS = 100
INIT_METHODS = ("kmeanspp", "vanilla", "spectral")


def _require_points(Y: np.ndarray, k: int) -> None:
    if k < 1:
        raise InvalidInput(f"k must be positive, got {k}")
    if Y.shape[0] < k:
        raise TooFewPoints(f"{Y.shape[0]} points cannot seed {k} clusters")


def kmeanspp_seed(data, k: int, seed: int) -> np.ndarray:
    """
    k rows of the data chosen with probability proportional to the squared
    distance to the nearest row already chosen. If every remaining point
    coincides with a chosen one, the next seed is drawn uniformly among the
    rows not yet chosen.
    """
    Y = observations(data)
    _require_points(Y, k)
    n = Y.shape[0]
    rng = make_rng(seed)

    chosen = [int(rng.integers(n))]
    nearest = np.sum((Y - Y[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = float(nearest.sum())
        if total > 0.0:
            idx = int(rng.choice(n, p=nearest / total))
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(remaining[rng.integers(remaining.size)])
        chosen.append(idx)
        nearest = np.minimum(nearest, np.sum((Y - Y[idx]) ** 2, axis=1))
    return Y[chosen].copy()


def fill_empty_clusters(labels: np.ndarray, own_cost: np.ndarray, k: int) -> Tuple[np.ndarray, int]:
    """
    Give every empty cluster the point with the largest cost to its own
    cluster, taken only from clusters that keep at least one member.
    Returns the repaired labels and the number of points moved.
    """
    labels = labels.copy()
    own_cost = np.asarray(own_cost, dtype=float).copy()
    counts = np.bincount(labels, minlength=k)
    moved = 0
    for a in np.flatnonzero(counts == 0):
        donors = counts[labels] > 1
        if not np.any(donors):
            break
        candidates = np.where(donors, own_cost, -np.inf)
        j = int(np.argmax(candidates))
        counts[labels[j]] -= 1
        labels[j] = a
        counts[a] += 1
        own_cost[j] = 0.0
        moved += 1
    return labels, moved


def cluster_means(Y: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    counts = np.bincount(labels, minlength=k).astype(float)
    sums = np.zeros((k, Y.shape[1]))
    np.add.at(sums, labels, Y)
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / counts[:, None]


def within_sse(Y: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    return float(np.sum((Y - centers[labels]) ** 2))


def lloyd_steps(Y: np.ndarray, centers: np.ndarray, max_iters: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """
    Yield (labels, centers) after each nearest-center assignment and mean
    update. Stops once an assignment repeats the previous one; the repeated
    assignment is not yielded.
    """
    k = centers.shape[0]
    previous = None
    for _ in range(max_iters):
        distances = cdist(Y, centers, "sqeuclidean")
        labels = np.argmin(distances, axis=1).astype(np.int64)
        labels, moved = fill_empty_clusters(labels, distances[np.arange(labels.size), labels], k)
        if moved:
            logger.debug(f"Re-seeded {moved} empty cluster(s) in vanilla Lloyd")
        if previous is not None and np.array_equal(labels, previous):
            return
        centers = cluster_means(Y, labels, k)
        previous = labels
        yield labels, centers


def vanilla_lloyd(data, k: int, seed: int, max_iters: int = DEFAULT_LLOYD_ITERS) -> Tuple[np.ndarray, np.ndarray, int]:
    """Euclidean Lloyd from k-means++ seeds; returns (labels, centers, iterations_used)."""
    Y = observations(data)
    _require_points(Y, k)
    if max_iters < 1:
        raise InvalidInput(f"max_iters must be at least 1, got {max_iters}")
    centers = kmeanspp_seed(Y, k, seed)
    labels, used = None, 0
    for labels, centers in lloyd_steps(Y, centers, max_iters):
        used += 1
    logger.debug(f"Vanilla Lloyd stopped after {used} iteration(s), SSE {within_sse(Y, labels, centers):.6g}")
    return labels, centers, used


def spectral_init(data, k: int, seed: int, restarts: int = DEFAULT_RESTARTS,
                  max_iters: int = DEFAULT_LLOYD_ITERS) -> np.ndarray:
    """
    Project the rows of Y on the span of its top right singular vectors and
    cluster the projection with vanilla Lloyd, keeping the restart of least SSE.
    """
    Y = observations(data)
    _require_points(Y, k)
    if restarts < 1:
        raise InvalidInput(f"restarts must be at least 1, got {restarts}")
    rank = min(k, Y.shape[0], Y.shape[1])
    _, V = numkit.svd_topk(Y, rank)
    projected = Y @ V

    best_labels, best_sse = None, np.inf
    for r in range(restarts):
        labels, centers, _ = vanilla_lloyd(projected, k, derive_seed(seed, r, "spectral"), max_iters)
        sse = within_sse(projected, labels, centers)
        if sse < best_sse:
            best_labels, best_sse = labels, sse
    logger.debug(f"Spectral initialization: best SSE {best_sse:.6g} over {restarts} restart(s)")
    return best_labels


def initial_labels(data, k: int, method: str, seed: int, restarts: int = DEFAULT_RESTARTS,
                   lloyd_iters: int = DEFAULT_LLOYD_ITERS) -> np.ndarray:
    """Dispatch on an initializer name; `kmeanspp` assigns each point to its nearest seed."""
    Y = observations(data)
    if method == "kmeanspp":
        seeds = kmeanspp_seed(Y, k, seed)
        return np.argmin(cdist(Y, seeds, "sqeuclidean"), axis=1).astype(np.int64)
    if method == "vanilla":
        return vanilla_lloyd(Y, k, seed, lloyd_iters)[0]
    if method == "spectral":
        return spectral_init(Y, k, seed, restarts, lloyd_iters)
    raise InvalidInput(f"unknown initializer {method!r}; expected one of {INIT_METHODS}")
