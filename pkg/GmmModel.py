##############################################################################
# Ground-truth parameter containers and seeded synthetic data generation.
# Covers the shared-covariance mixture (one Sigma for every cluster) and the
# heterogeneous mixture (one Sigma per cluster), plus the two simulation
# configurations used by the benchmark harness.
##############################################################################
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np
from scipy.spatial.distance import pdist

import numkit
from errors import InvalidInput, InvalidParams, LengthMismatch, NotPositiveDefinite, NotSymmetric
from logger_config import get_logger

logger = get_logger(__name__)

SYMMETRY_TOL = 1e-12


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox generator; every random draw in the package goes through this."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass(frozen=True, eq=False)
class Homogeneous:
    sigma: np.ndarray

    kind = "homogeneous"

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    def for_cluster(self, a: int) -> np.ndarray:
        return self.sigma

    def matrices(self, k: int) -> List[np.ndarray]:
        return [self.sigma] * k

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma.tolist()}


@dataclass(frozen=True, eq=False)
class Heterogeneous:
    sigmas: tuple

    kind = "heterogeneous"

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(np.asarray(s, dtype=float) for s in self.sigmas))

    @property
    def d(self) -> int:
        return self.sigmas[0].shape[0]

    def for_cluster(self, a: int) -> np.ndarray:
        return self.sigmas[a]

    def matrices(self, k: int) -> List[np.ndarray]:
        return list(self.sigmas)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigmas": [s.tolist() for s in self.sigmas]}


CovarianceSpec = Union[Homogeneous, Heterogeneous]


def covariance_from_dict(data: dict) -> CovarianceSpec:
    kind = data.get("kind")
    if kind == "homogeneous":
        return Homogeneous(np.asarray(data["sigma"], dtype=float))
    if kind == "heterogeneous":
        return Heterogeneous(tuple(np.asarray(s, dtype=float) for s in data["sigmas"]))
    raise InvalidParams(f"unknown covariance kind: {kind!r}")


@dataclass(frozen=True, eq=False)
class GmmParams:
    centers: np.ndarray  # k x d, row a is the center of cluster a
    covariance: CovarianceSpec

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    @property
    def homogeneous(self) -> bool:
        return isinstance(self.covariance, Homogeneous)

    def sigma(self, a: int) -> np.ndarray:
        return self.covariance.for_cluster(a)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "d": self.d,
            "centers": self.centers.tolist(),
            "covariance": self.covariance.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GmmParams":
        try:
            centers = np.asarray(data["centers"], dtype=float)
            covariance = covariance_from_dict(data["covariance"])
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidParams(f"malformed params document: {e}") from e
        if centers.ndim != 2:
            raise InvalidParams(f"centers must be a k x d array, got shape {centers.shape}")
        if "k" in data and int(data["k"]) != centers.shape[0]:
            raise InvalidParams(f"k={data['k']} does not match {centers.shape[0]} centers")
        if "d" in data and int(data["d"]) != centers.shape[1]:
            raise InvalidParams(f"d={data['d']} does not match center dimension {centers.shape[1]}")
        return cls(centers, covariance)


@dataclass
class Dataset:
    y: np.ndarray
    truth: Optional[np.ndarray] = None
    params: Optional[GmmParams] = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if self.y.ndim != 2:
            raise InvalidInput(f"observations must be an n x d matrix, got shape {self.y.shape}")
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=np.int64)
            if self.truth.shape != (self.n,):
                raise LengthMismatch(f"truth has {self.truth.size} labels for {self.n} observations")
        if self.params is not None and self.params.d != self.d:
            raise InvalidParams(f"params dimension {self.params.d} does not match data dimension {self.d}")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.y.shape[1]


def observations(data) -> np.ndarray:
    """Accept a Dataset or a raw n x d array."""
    if isinstance(data, Dataset):
        return data.y
    y = np.asarray(data, dtype=float)
    if y.ndim != 2:
        raise InvalidInput(f"observations must be an n x d matrix, got shape {y.shape}")
    return y


def as_labels(z, k: int, n: Optional[int] = None) -> np.ndarray:
    labels = np.asarray(z)
    if labels.ndim != 1:
        raise InvalidInput(f"labels must be one-dimensional, got shape {labels.shape}")
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        if not np.all(labels == np.round(labels)):
            raise InvalidInput("labels must be integers")
    labels = labels.astype(np.int64)
    if n is not None and labels.size != n:
        raise LengthMismatch(f"expected {n} labels, got {labels.size}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise InvalidInput(f"labels must lie in 0..{k - 1}")
    return labels


def _check_matrix(sigma: np.ndarray, d: int, name: str) -> None:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (d, d):
        raise InvalidParams(f"{name} has shape {sigma.shape}, expected ({d}, {d})")
    scale = max(1.0, float(np.max(np.abs(sigma))))
    if np.max(np.abs(sigma - sigma.T)) > SYMMETRY_TOL * scale:
        raise InvalidParams(f"{name} is not symmetric")
    try:
        numkit.chol_lower(sigma)
    except (NotPositiveDefinite, NotSymmetric) as e:
        raise InvalidParams(f"{name} is not positive definite: {e}") from e


def validate(params: GmmParams, min_clusters: int = 2) -> None:
    centers = np.asarray(params.centers, dtype=float)
    if centers.ndim != 2:
        raise InvalidParams(f"centers must be a k x d matrix, got shape {centers.shape}")
    k, d = centers.shape
    if k < min_clusters:
        raise InvalidParams(f"need at least {min_clusters} clusters, got k={k}")
    if not np.all(np.isfinite(centers)):
        raise InvalidParams("centers contain non-finite values")
    if k >= 2 and np.min(pdist(centers)) <= 0.0:
        raise InvalidParams("centers are not pairwise distinct")
    cov = params.covariance
    if isinstance(cov, Homogeneous):
        _check_matrix(cov.sigma, d, "sigma")
    elif isinstance(cov, Heterogeneous):
        if len(cov.sigmas) != k:
            raise InvalidParams(f"heterogeneous covariance lists {len(cov.sigmas)} matrices for k={k}")
        for a, sigma in enumerate(cov.sigmas):
            _check_matrix(sigma, d, f"sigma[{a}]")
    else:
        raise InvalidParams(f"unsupported covariance specification {type(cov).__name__}")


def sample(params: GmmParams, assignment, seed: int) -> Dataset:
    """Y_j = theta_{z_j} + Sigma_{z_j}^{1/2} w_j with w_j standard normal, deterministic in seed."""
    validate(params, min_clusters=1)
    z = as_labels(assignment, params.k)
    rng = make_rng(seed)
    w = rng.standard_normal((z.size, params.d))
    y = params.centers[z].copy()
    if params.homogeneous:
        y += w @ numkit.spd_sqrt(params.covariance.sigma)
    else:
        for a in range(params.k):
            mask = z == a
            if np.any(mask):
                y[mask] += w[mask] @ numkit.spd_sqrt(params.sigma(a))
    logger.debug(f"Sampled n={z.size}, d={params.d}, k={params.k} with seed {seed}")
    return Dataset(y=y, truth=z, params=params)


def balanced_assignment(n: int, k: int) -> np.ndarray:
    """Labels in contiguous blocks 0..k-1; the first n mod k clusters get one extra point."""
    if k < 1 or n < 0:
        raise InvalidInput(f"invalid sizes n={n}, k={k}")
    base, extra = divmod(n, k)
    sizes = [base + 1 if a < extra else base for a in range(k)]
    return np.repeat(np.arange(k, dtype=np.int64), sizes)


def _haar_frame(rng: np.random.Generator, d: int, r: int) -> np.ndarray:
    """d x r matrix with orthonormal columns: QR of a Gaussian matrix, R's diagonal made positive."""
    Q, R = np.linalg.qr(rng.standard_normal((d, r)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def random_orthogonal(d: int, seed: int) -> np.ndarray:
    if d < 1:
        raise InvalidInput(f"dimension must be positive, got {d}")
    return _haar_frame(make_rng(seed), d, d)


def _rotated(U: np.ndarray, spectrum: np.ndarray) -> np.ndarray:
    sigma = U.T @ np.diag(spectrum) @ U
    return (sigma + sigma.T) / 2.0


def make_sim1(seed: int, d: int = 50, k: int = 30, center_norm: float = 9.0,
              spectrum: tuple = (0.5, 8.0)) -> GmmParams:
    """
    Shared covariance U^T Lambda U with Lambda equally spaced over `spectrum`
    (endpoints included) and mutually orthogonal centers of equal norm.
    """
    if k > d:
        raise InvalidInput(f"cannot place {k} orthogonal centers in dimension {d}")
    rng = make_rng(seed)
    U = _haar_frame(rng, d, d)
    sigma = _rotated(U, np.linspace(spectrum[0], spectrum[1], d))
    centers = center_norm * _haar_frame(rng, d, k).T
    return GmmParams(centers=centers, covariance=Homogeneous(sigma))


def make_sim2(seed: int, d: int = 5, first_step: float = 5.0, second_step: float = 10.0,
              spectrum: tuple = (0.5, 8.0), uniform_range: tuple = (0.5, 2.0)) -> GmmParams:
    """
    Three clusters: Sigma_1 = I, Sigma_2 diagonal equally spaced over `spectrum`,
    Sigma_3 = U^T Lambda_3 U with Lambda_3 uniform over `uniform_range`.
    theta_1 is a random unit vector, theta_2 = theta_1 + first_step * e_1 and
    theta_3 = theta_2 + v with ||v|| = second_step in a random direction.
    """
    rng = make_rng(seed)
    sigma1 = np.eye(d)
    sigma2 = np.diag(np.linspace(spectrum[0], spectrum[1], d))
    U = _haar_frame(rng, d, d)
    sigma3 = _rotated(U, rng.uniform(uniform_range[0], uniform_range[1], d))

    theta1 = rng.standard_normal(d)
    theta1 /= np.linalg.norm(theta1)
    e1 = np.zeros(d)
    e1[0] = 1.0
    theta2 = theta1 + first_step * e1
    direction = rng.standard_normal(d)
    theta3 = theta2 + second_step * direction / np.linalg.norm(direction)
    return GmmParams(
        centers=np.vstack([theta1, theta2, theta3]),
        covariance=Heterogeneous((sigma1, sigma2, sigma3)),
    )


def rescale(params: GmmParams, sigma: float) -> GmmParams:
    """(theta, Sigma) -> (sigma * theta, sigma^2 * Sigma)."""
    cov = params.covariance
    if isinstance(cov, Homogeneous):
        scaled = Homogeneous(cov.sigma * sigma ** 2)
    else:
        scaled = Heterogeneous(tuple(s * sigma ** 2 for s in cov.sigmas))
    return GmmParams(centers=params.centers * sigma, covariance=scaled)


def as_heterogeneous(params: GmmParams) -> GmmParams:
    """The same model with the shared covariance repeated per cluster."""
    return GmmParams(params.centers, Heterogeneous(tuple(params.covariance.matrices(params.k))))
