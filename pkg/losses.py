"""Misclustering losses with optimal label alignment."""
import itertools
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from errors import InvalidInput, LengthMismatch

BRUTE_FORCE_MAX_K = 8


@dataclass(frozen=True)
class PermutationMap:
    """A bijection psi on 0..k-1; mapping[a] is the truth label estimate label a is sent to."""
    mapping: Tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(m) for m in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise InvalidInput(f"mapping {mapping} is not a bijection")
        object.__setattr__(self, "mapping", mapping)

    @property
    def k(self) -> int:
        return len(self.mapping)

    def apply(self, z) -> np.ndarray:
        return np.asarray(self.mapping, dtype=np.int64)[np.asarray(z, dtype=np.int64)]

    @classmethod
    def identity(cls, k: int) -> "PermutationMap":
        return cls(tuple(range(k)))


def _checked(z, zstar, k: int):
    z = np.asarray(z, dtype=np.int64)
    zstar = np.asarray(zstar, dtype=np.int64)
    if z.shape != zstar.shape or z.ndim != 1:
        raise LengthMismatch(f"label vectors differ in length: {z.size} vs {zstar.size}")
    for labels in (z, zstar):
        if labels.size and (labels.min() < 0 or labels.max() >= k):
            raise InvalidInput(f"labels must lie in 0..{k - 1}")
    return z, zstar


def confusion_matrix(z, zstar, k: int) -> np.ndarray:
    """C[a, b] = #{j : z_j = a and zstar_j = b}."""
    z, zstar = _checked(z, zstar, k)
    C = np.zeros((k, k), dtype=np.int64)
    np.add.at(C, (z, zstar), 1)
    return C


def _assignment_value(C: np.ndarray) -> int:
    if C.shape[0] == 0:
        return 0
    rows, cols = linear_sum_assignment(C, maximize=True)
    return int(C[rows, cols].sum())


def best_bijection(z, zstar, k: int) -> PermutationMap:
    """
    Bijection maximizing #{j : psi(z_j) = zstar_j}; among optimal bijections the
    lexicographically smallest mapping is returned.
    """
    C = confusion_matrix(z, zstar, k)
    rows, cols = linear_sum_assignment(C, maximize=True)
    optimum = int(C[rows, cols].sum())
    current = dict(zip(rows.tolist(), cols.tolist()))

    mapping = []
    used = set()
    fixed_value = 0
    for i in range(k):
        rest_rows = list(range(i + 1, k))
        for j in range(current[i]):
            if j in used:
                continue
            rest_cols = [c for c in range(k) if c not in used and c != j]
            sub = C[np.ix_(rest_rows, rest_cols)]
            if fixed_value + int(C[i, j]) + _assignment_value(sub) == optimum:
                # a smaller column keeps the optimum; re-anchor the completion on it
                if rest_rows:
                    sub_rows, sub_cols = linear_sum_assignment(sub, maximize=True)
                    for r, c in zip(sub_rows.tolist(), sub_cols.tolist()):
                        current[rest_rows[r]] = rest_cols[c]
                current[i] = j
                break
        mapping.append(current[i])
        used.add(current[i])
        fixed_value += int(C[i, current[i]])
    return PermutationMap(tuple(mapping))


def brute_force_bijection(z, zstar, k: int) -> PermutationMap:
    """Exhaustive search over all k! bijections; first optimum in lexicographic order."""
    if k > BRUTE_FORCE_MAX_K:
        raise InvalidInput(f"exhaustive search is limited to k <= {BRUTE_FORCE_MAX_K}")
    C = confusion_matrix(z, zstar, k)
    best, best_value = None, -1
    for perm in itertools.permutations(range(k)):
        value = int(C[np.arange(k), perm].sum())
        if value > best_value:
            best, best_value = perm, value
    return PermutationMap(best)


def agreement(z, zstar, k: int, psi: PermutationMap) -> int:
    C = confusion_matrix(z, zstar, k)
    return int(C[np.arange(k), list(psi.mapping)].sum())


def misclustering_rate(z, zstar, k: int) -> Tuple[float, PermutationMap]:
    """h(z, z*) = min over bijections psi of (1/n) #{j : psi(z_j) != z*_j}, with the minimizing psi."""
    z, zstar = _checked(z, zstar, k)
    n = z.size
    if n == 0:
        return 0.0, PermutationMap.identity(k)
    psi = best_bijection(z, zstar, k)
    return (n - agreement(z, zstar, k, psi)) / n, psi


def center_loss(z, zstar, params) -> float:
    """l(z, z*) = sum_j ||theta_{z_j} - theta_{z*_j}||^2, evaluated on the labels as given."""
    z, zstar = _checked(z, zstar, params.k)
    gaps = params.centers[z] - params.centers[zstar]
    return float(np.sum(gaps * gaps))
