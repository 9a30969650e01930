"""Matrix measures (logarithmic norms) for induced and composite norms.

The matrix measure of ``A`` for an induced norm ``||.||`` is the one-sided
derivative ``lim_{t->0+} (||I + tA|| - 1) / t``.  Closed forms are used for the
three basic norms:

* ``one``:  ``max_j (a_jj + sum_{i != j} |a_ij|)``  (column sums)
* ``two``:  ``lambda_max((A + A^T) / 2)``
* ``inf``:  ``max_i (a_ii + sum_{j != i} |a_ij|)``  (row sums)

Composite norms follow the local/network construction
``|v|_G = | (|v_1|_L1, ..., |v_m|_Lm) |_N`` where every local and network norm
is one of the basic kinds.  No closed form exists for the measure of a
composite norm; :func:`composite_measure_bound` returns the network-matrix
upper bound instead.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, ValidationError

__all__ = [
    "Norm",
    "MeasureSpec",
    "as_square",
    "vector_norm",
    "induced_norm",
    "block_norm",
    "matrix_measure",
    "lower_measure",
    "measure",
    "measure_batch",
    "network_matrix_of",
    "composite_measure_bound",
    "composite_vector_norm",
    "metzler_eigen_max",
    "is_metzler",
    "block_slices",
]

# sign enumeration for the inf->q and 2->1 block norms is exact up to this size
_MAX_SIGN_ENUM = 16


class Norm(str, enum.Enum):
    ONE = "one"
    TWO = "two"
    INF = "inf"

    @classmethod
    def parse(cls, value) -> "Norm":
        if isinstance(value, Norm):
            return value
        aliases = {"1": "one", "2": "two", "infinity": "inf", "max": "inf"}
        key = str(value).strip().lower()
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValidationError(f"unknown norm kind {value!r}") from None


@dataclass(frozen=True)
class MeasureSpec:
    """Which norm a matrix measure is taken with.

    A spec with ``partition=None`` is basic and uses ``kind``.  Otherwise it is
    composite: block ``i`` of size ``partition[i]`` carries the local norm
    ``local_kinds[i]`` and the block magnitudes are combined with the monotone
    ``network_kind``.
    """

    kind: Norm = Norm.INF
    partition: tuple[int, ...] | None = None
    local_kinds: tuple[Norm, ...] | None = None
    network_kind: Norm = Norm.INF

    def __post_init__(self):
        object.__setattr__(self, "kind", Norm.parse(self.kind))
        object.__setattr__(self, "network_kind", Norm.parse(self.network_kind))
        if self.partition is None:
            if self.local_kinds is not None:
                raise ValidationError("local_kinds given without a partition")
            return
        part = tuple(int(k) for k in self.partition)
        if not part or any(k <= 0 for k in part):
            raise ValidationError(f"partition entries must be positive, got {self.partition!r}")
        local = self.local_kinds
        if local is None:
            local = (self.kind,) * len(part)
        local = tuple(Norm.parse(k) for k in local)
        if len(local) != len(part):
            raise ValidationError("need one local norm per block")
        object.__setattr__(self, "partition", part)
        object.__setattr__(self, "local_kinds", local)

    @classmethod
    def basic(cls, kind="inf") -> "MeasureSpec":
        return cls(kind=Norm.parse(kind))

    @classmethod
    def composite(cls, partition, local_kinds="inf", network_kind="inf") -> "MeasureSpec":
        if isinstance(local_kinds, (str, Norm)):
            local_kinds = (Norm.parse(local_kinds),) * len(partition)
        return cls(partition=tuple(partition), local_kinds=tuple(local_kinds),
                   network_kind=network_kind)

    @property
    def is_composite(self) -> bool:
        return self.partition is not None

    @property
    def label(self) -> str:
        if not self.is_composite:
            return self.kind.value
        local = ",".join(k.value for k in self.local_kinds)
        return f"composite(local={local};network={self.network_kind.value})"


def as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")
    return A


def block_slices(partition: Sequence[int], n: int) -> list[slice]:
    if sum(partition) != n:
        raise DimensionError(f"partition {tuple(partition)} does not sum to n={n}")
    edges = np.concatenate([[0], np.cumsum(partition)])
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def vector_norm(v, kind=Norm.INF) -> float:
    kind = Norm.parse(kind)
    v = np.asarray(v, dtype=float)
    if kind is Norm.ONE:
        return float(np.sum(np.abs(v)))
    if kind is Norm.TWO:
        return float(np.sqrt(np.sum(v * v)))
    return float(np.max(np.abs(v))) if v.size else 0.0


def composite_vector_norm(v, spec: MeasureSpec) -> float:
    v = np.asarray(v, dtype=float)
    if not spec.is_composite:
        return vector_norm(v, spec.kind)
    parts = [vector_norm(v[s], k)
             for s, k in zip(block_slices(spec.partition, v.shape[-1]), spec.local_kinds)]
    return vector_norm(parts, spec.network_kind)


def _sign_vectors(k: int) -> np.ndarray:
    # s and -s give the same norm, so the first sign is pinned to +1
    if k == 0:
        return np.zeros((1, 0))
    tails = np.array(list(itertools.product((1.0, -1.0), repeat=k - 1)), dtype=float)
    tails = tails.reshape(2 ** (k - 1), k - 1)
    return np.hstack([np.ones((tails.shape[0], 1)), tails])


def block_norm(A, out_kind=Norm.INF, in_kind=Norm.INF) -> float:
    """Induced norm ``max_{|v|_in = 1} |A v|_out`` of a rectangular block.

    Exact for every pair of basic norms.  The ``inf -> one``, ``inf -> two``
    and ``two -> one`` cases maximize over sign vectors; beyond 16 columns
    (rows for ``two -> one``) a valid upper bound is returned instead.
    """
    out_kind, in_kind = Norm.parse(out_kind), Norm.parse(in_kind)
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"expected a 2-D block, got shape {A.shape}")
    if A.size == 0:
        return 0.0
    if in_kind is Norm.ONE:
        return max(vector_norm(A[:, j], out_kind) for j in range(A.shape[1]))
    if out_kind is Norm.INF:
        dual = {Norm.INF: Norm.ONE, Norm.TWO: Norm.TWO}[in_kind]
        return max(vector_norm(A[i], dual) for i in range(A.shape[0]))
    if in_kind is Norm.TWO and out_kind is Norm.TWO:
        return float(np.linalg.norm(A, 2))
    if in_kind is Norm.TWO:  # two -> one equals inf -> two of the transpose
        return block_norm(A.T, Norm.TWO, Norm.INF)
    # in_kind is INF, out_kind in {ONE, TWO}
    k = A.shape[1]
    if k <= _MAX_SIGN_ENUM:
        images = _sign_vectors(k) @ A.T
        if out_kind is Norm.ONE:
            return float(np.max(np.sum(np.abs(images), axis=1)))
        return float(np.sqrt(np.max(np.sum(images * images, axis=1))))
    if out_kind is Norm.ONE:
        return float(np.sum(np.abs(A)))
    return float(np.sqrt(k) * np.linalg.norm(A, 2))


def induced_norm(A, kind=Norm.INF) -> float:
    kind = Norm.parse(kind)
    return block_norm(as_square(A), kind, kind)


def matrix_measure(A, kind=Norm.INF) -> float:
    """Matrix measure of a square matrix for a basic induced norm.

    >>> matrix_measure([[-1, 0.1], [0.1, -1]], "inf")
    -0.9
    """
    if isinstance(kind, MeasureSpec):
        if kind.is_composite:
            raise ValidationError("matrix_measure takes a basic kind; use measure() for composites")
        kind = kind.kind
    kind = Norm.parse(kind)
    A = as_square(A)
    if A.shape[0] == 0:
        return 0.0
    diag = np.diag(A)
    if kind is Norm.INF:
        off = np.sum(np.abs(A), axis=1) - np.abs(diag)
        return float(np.max(diag + off))
    if kind is Norm.ONE:
        off = np.sum(np.abs(A), axis=0) - np.abs(diag)
        return float(np.max(diag + off))
    return float(np.linalg.eigvalsh(0.5 * (A + A.T))[-1])


def network_matrix_of(A, spec: MeasureSpec) -> np.ndarray:
    """Metzler network matrix of ``A`` for a composite spec.

    Diagonal entry ``i`` is the local measure of block ``A_ii``; the
    off-diagonal entry ``(i, j)`` is the induced norm of block ``A_ij`` from
    the local norm of block ``j`` to that of block ``i``.
    """
    A = as_square(A)
    if not spec.is_composite:
        raise ValidationError("network_matrix_of needs a composite MeasureSpec")
    slices = block_slices(spec.partition, A.shape[0])
    m = len(slices)
    out = np.empty((m, m))
    for i, si in enumerate(slices):
        for j, sj in enumerate(slices):
            if i == j:
                out[i, i] = matrix_measure(A[si, si], spec.local_kinds[i])
            else:
                out[i, j] = block_norm(A[si, sj], spec.local_kinds[i], spec.local_kinds[j])
    return out


def composite_measure_bound(A, spec: MeasureSpec) -> float:
    """Network-level upper bound ``mu_N(A^N)`` on the composite measure of ``A``."""
    return matrix_measure(network_matrix_of(A, spec), spec.network_kind)


def measure(A, spec: MeasureSpec) -> float:
    """Measure of ``A`` under ``spec``; composites use the network bound."""
    if spec.is_composite:
        return composite_measure_bound(A, spec)
    return matrix_measure(A, spec.kind)


def measure_batch(J, spec: MeasureSpec) -> np.ndarray:
    """:func:`measure` over a stack of matrices of shape ``(B, n, n)``."""
    J = np.asarray(J, dtype=float)
    if J.ndim != 3 or J.shape[1] != J.shape[2]:
        raise DimensionError(f"expected a (B, n, n) stack, got shape {J.shape}")
    if spec.is_composite:
        return np.array([composite_measure_bound(M, spec) for M in J])
    diag = np.diagonal(J, axis1=1, axis2=2)
    absJ = np.abs(J)
    if spec.kind is Norm.INF:
        return np.max(diag + absJ.sum(axis=2) - np.abs(diag), axis=1)
    if spec.kind is Norm.ONE:
        return np.max(diag + absJ.sum(axis=1) - np.abs(diag), axis=1)
    return np.linalg.eigvalsh(0.5 * (J + np.swapaxes(J, 1, 2)))[:, -1]


def lower_measure(A, spec: MeasureSpec) -> float:
    """``-mu(-A)``, the lower counterpart bounding every ``Re(lambda)`` from below."""
    return -measure(-np.asarray(A, dtype=float), spec)


def is_metzler(A, tol: float = 0.0) -> bool:
    A = as_square(A)
    off = A[~np.eye(A.shape[0], dtype=bool)]
    return bool(np.all(off >= -tol))


def metzler_eigen_max(A) -> float:
    """Rightmost eigenvalue of a Metzler matrix (which is real)."""
    A = as_square(A)
    if not is_metzler(A):
        raise ValidationError("matrix is not Metzler (negative off-diagonal entry)")
    return float(np.max(np.linalg.eigvals(A).real))
