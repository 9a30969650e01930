"""Switched systems, Lotka-Volterra constructors and an event-aligned integrator.

All vector fields are evaluated on batches: ``f(x)`` takes ``x`` of shape
``(B, n)`` and returns ``(B, n)``; ``jac(x)`` returns ``(B, n, n)``.
"""
from __future__ import annotations

import csv
import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, DivergenceError, RefusalError, ValidationError
from .measures import block_slices, matrix_measure
from .switching import SwitchingSignal

__all__ = [
    "Structure",
    "SmoothMap",
    "SwitchedSystem",
    "CompactBox",
    "Trajectory",
    "lv_system",
    "linear_system",
    "lv_uub_check",
    "lv_uub_violations",
    "lv_limit_box",
    "integrate",
    "variational_integrate",
    "DIVERGENCE_LIMIT",
]

DIVERGENCE_LIMIT = 1e12


class Structure(str, enum.Enum):
    GENERAL = "general"
    INTERCONNECTED = "interconnected"
    BLOCK_DIAGONAL = "block-diagonal"

    @classmethod
    def parse(cls, value) -> "Structure":
        if isinstance(value, Structure):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"blockdiagonal": "block-diagonal", "block": "block-diagonal",
                   "diagonal": "block-diagonal"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValidationError(f"unknown structure {value!r}") from None


def _fd_jacobian(f: Callable, x: np.ndarray) -> np.ndarray:
    # central differences, step 1e-6 (1 + |x_j|) per coordinate
    B, n = x.shape
    J = np.empty((B, n, n))
    for j in range(n):
        h = 1e-6 * (1.0 + np.abs(x[:, j]))
        e = np.zeros_like(x)
        e[:, j] = h
        J[:, :, j] = (f(x + e) - f(x - e)) / (2 * h)[:, None]
    return J


@dataclass(frozen=True, eq=False)
class SmoothMap:
    """One mode: a batched vector field with its Jacobian.

    Without ``jac`` a central finite-difference Jacobian is used.
    ``affine_jacobian`` declares that ``jac`` is an affine function of the
    state, which lets set extrema be taken at box vertices.
    """

    dim: int
    f: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray] | None = None
    affine_jacobian: bool = False

    def __call__(self, x) -> np.ndarray:
        return self.eval(x)

    def eval(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        out = self.f(np.atleast_2d(x))
        return out[0] if single else out

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        xb = np.atleast_2d(x)
        J = self.jac(xb) if self.jac is not None else _fd_jacobian(self.f, xb)
        return J[0] if single else J


@dataclass(frozen=True, eq=False)
class SwitchedSystem:
    modes: tuple[SmoothMap, ...]
    n: int
    partition: tuple[int, ...] | None = None
    structure: Structure = Structure.GENERAL
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        modes = tuple(self.modes)
        if not modes:
            raise ValidationError("a switched system needs at least one mode")
        if any(m.dim != self.n for m in modes):
            raise DimensionError("all modes must share the state dimension")
        object.__setattr__(self, "modes", modes)
        structure = Structure.parse(self.structure)
        object.__setattr__(self, "structure", structure)
        if self.partition is not None:
            part = tuple(int(k) for k in self.partition)
            block_slices(part, self.n)
            object.__setattr__(self, "partition", part)
        elif structure is not Structure.GENERAL:
            raise ValidationError(f"{structure.value} structure requires a partition")
        if structure is Structure.BLOCK_DIAGONAL:
            self._validate_block_diagonal()

    def _validate_block_diagonal(self, samples: int = 16):
        rng = np.random.default_rng(0)
        x = rng.uniform(0.0, 2.0, size=(samples, self.n))
        mask = self.block_mask()
        for p, m in enumerate(self.modes):
            J = m.jacobian(x)
            if np.any(np.abs(J[:, ~mask]) > 1e-9 * (1 + np.abs(J).max())):
                raise ValidationError(f"mode {p} Jacobian is not block-diagonal for partition {self.partition}")

    def block_mask(self) -> np.ndarray:
        mask = np.zeros((self.n, self.n), dtype=bool)
        for s in block_slices(self.partition or (self.n,), self.n):
            mask[s, s] = True
        return mask

    @property
    def num_modes(self) -> int:
        return len(self.modes)

    @property
    def affine_jacobian(self) -> bool:
        return all(m.affine_jacobian for m in self.modes)

    def f(self, p: int, x) -> np.ndarray:
        return self.modes[p].eval(x)

    def jacobian(self, p: int, x) -> np.ndarray:
        return self.modes[p].jacobian(x)

    def with_structure(self, structure, partition=None) -> "SwitchedSystem":
        return SwitchedSystem(self.modes, self.n,
                              self.partition if partition is None else partition,
                              structure, self.kind, dict(self.params))


@dataclass(frozen=True)
class CompactBox:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionError("box bounds differ in length")
        if lo.size == 0:
            raise ValidationError("empty box")
        if np.any(lo > hi) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValidationError("box needs finite bounds with lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __eq__(self, other):
        return (isinstance(other, CompactBox) and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi))

    @classmethod
    def from_intervals(cls, intervals) -> "CompactBox":
        arr = np.asarray(intervals, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def dim(self) -> int:
        return int(self.lo.size)

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def vertices(self) -> np.ndarray:
        corners = itertools.product(*[sorted({a, b}) for a, b in zip(self.lo, self.hi)])
        return np.array(list(corners), dtype=float)

    def grid(self, resolution: int | Sequence[int]) -> np.ndarray:
        res = np.broadcast_to(np.asarray(resolution, dtype=int), (self.dim,))
        axes = [np.linspace(a, b, int(k)) if b > a else np.array([a])
                for a, b, k in zip(self.lo, self.hi, res)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(k, self.dim))

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lo - tol) & (x <= self.hi + tol), axis=-1)

    def to_list(self) -> list[list[float]]:
        return [[float(a), float(b)] for a, b in zip(self.lo, self.hi)]


# -- constructors ------------------------------------------------------

def _lv_mode(r: np.ndarray, A: np.ndarray) -> SmoothMap:
    def f(x):
        return (r + x @ A.T) * x

    def jac(x):
        B, n = x.shape
        J = x[:, :, None] * A[None, :, :]
        idx = np.arange(n)
        J[:, idx, idx] += r + x @ A.T
        return J

    return SmoothMap(r.size, f, jac, affine_jacobian=True)


def lv_system(r: Sequence, A: Sequence, partition=None, structure=None) -> SwitchedSystem:
    """Switched Lotka-Volterra system ``x' = (r_p + A_p x) o x``.

    ``r`` holds one growth vector per mode and ``A`` one interaction matrix per
    mode.  With a partition and no explicit structure, block-diagonal
    interaction matrices give a block-diagonal system.
    """
    r = [np.asarray(v, dtype=float).reshape(-1) for v in r]
    A = [np.asarray(M, dtype=float) for M in A]
    if len(r) != len(A) or not r:
        raise DimensionError("need matching, nonempty lists of r vectors and A matrices")
    n = r[0].size
    for v, M in zip(r, A):
        if v.size != n or M.shape != (n, n):
            raise DimensionError(f"mode data must be {n}-vectors and {n}x{n} matrices")
        if np.any(np.diag(M) >= 0):
            raise ValidationError("self-interaction terms a_p^ii must be negative")
    if structure is None:
        structure = Structure.GENERAL
        if partition is not None:
            probe = SwitchedSystem((SmoothMap(n, lambda x: x),), n, partition, Structure.GENERAL)
            off = ~probe.block_mask()
            structure = (Structure.BLOCK_DIAGONAL if all(np.all(M[off] == 0) for M in A)
                         else Structure.INTERCONNECTED)
    modes = tuple(_lv_mode(v, M) for v, M in zip(r, A))
    params = {"r": [v.tolist() for v in r], "A": [M.tolist() for M in A]}
    return SwitchedSystem(modes, n, partition, structure, "lotka-volterra", params)


def _linear_mode(A: np.ndarray) -> SmoothMap:
    return SmoothMap(A.shape[0], lambda x: x @ A.T,
                     lambda x: np.broadcast_to(A, (x.shape[0],) + A.shape).copy(),
                     affine_jacobian=True)


def linear_system(A: Sequence, partition=None, structure=None) -> SwitchedSystem:
    """Switched linear system ``x' = A_p x``."""
    A = [np.atleast_2d(np.asarray(M, dtype=float)) for M in A]
    if not A:
        raise DimensionError("need at least one mode matrix")
    n = A[0].shape[0]
    if any(M.shape != (n, n) for M in A):
        raise DimensionError(f"all mode matrices must be {n}x{n}")
    if structure is None:
        structure = Structure.GENERAL
        if partition is not None:
            probe = SwitchedSystem((SmoothMap(n, lambda x: x),), n, partition, Structure.GENERAL)
            off = ~probe.block_mask()
            structure = (Structure.BLOCK_DIAGONAL if all(np.all(M[off] == 0) for M in A)
                         else Structure.INTERCONNECTED)
    modes = tuple(_linear_mode(M) for M in A)
    return SwitchedSystem(modes, n, partition, structure, "linear", {"A": [M.tolist() for M in A]})


# -- Lotka-Volterra boundedness ----------------------------------------

def _lv_matrices(sys: SwitchedSystem) -> tuple[list[np.ndarray], list[np.ndarray]]:
    if sys.kind != "lotka-volterra":
        raise ValidationError("system was not built by lv_system")
    return ([np.asarray(v, dtype=float) for v in sys.params["r"]],
            [np.asarray(M, dtype=float) for M in sys.params["A"]])


def lv_uub_violations(sys: SwitchedSystem) -> list[str]:
    """Human-readable list of failed row/column dominance conditions."""
    _, A = _lv_matrices(sys)
    out = []
    for p, M in enumerate(A):
        absM = np.abs(M)
        d = np.diag(M)
        rows = d + absM.sum(axis=1) - np.abs(d)
        cols = d + absM.sum(axis=0) - np.abs(d)
        for i in range(M.shape[0]):
            if rows[i] >= 0:
                out.append(f"mode {p} row {i}: a_ii + sum_j |a_ij| = {rows[i]:.6g} >= 0")
            if cols[i] >= 0:
                out.append(f"mode {p} column {i}: a_ii + sum_j |a_ji| = {cols[i]:.6g} >= 0")
    return out


def lv_uub_check(sys: SwitchedSystem) -> bool:
    """Row and column diagonal dominance of every interaction matrix."""
    _, A = _lv_matrices(sys)
    return all(matrix_measure(M, "inf") < 0 and matrix_measure(M.T, "inf") < 0 for M in A)


def lv_limit_box(sys: SwitchedSystem, block_partition=None) -> CompactBox:
    """Box containing the omega-limit set of a UUB Lotka-Volterra system.

    Coordinate ``i`` gets ``[0, max_p max(-2 r_p^i / lambda_max(A_p + A_p^T), 0)]``;
    with a block partition the eigenvalue is that of the block holding ``i``.
    """
    bad = lv_uub_violations(sys)
    if bad:
        raise RefusalError("limit box needs the UUB condition; failed: " + "; ".join(bad))
    r, A = _lv_matrices(sys)
    n = sys.n
    slices = block_slices(block_partition, n) if block_partition is not None else [slice(0, n)]
    hi = np.zeros(n)
    for v, M in zip(r, A):
        for s in slices:
            blk = M[s, s]
            lam = float(np.linalg.eigvalsh(blk + blk.T)[-1])
            hi[s] = np.maximum(hi[s], np.maximum(-2.0 * v[s] / lam, 0.0))
    return CompactBox(np.zeros(n), hi)


# -- integration -------------------------------------------------------

@dataclass(eq=False)
class Trajectory:
    """Solution sampled at integrator nodes.

    ``states`` has shape ``(N, B, n)``; ``modes[j]`` is the mode used on
    ``[times[j], times[j+1])`` and the last entry is the mode at the final time.
    ``switch_nodes`` marks nodes that coincide with a switch.
    """

    times: np.ndarray
    states: np.ndarray
    modes: np.ndarray
    switch_nodes: np.ndarray
    variational: np.ndarray | None = None
    logdet: np.ndarray | None = None
    integrals: np.ndarray | None = None
    batched: bool = True

    def final(self) -> np.ndarray:
        x = self.states[-1]
        return x if self.batched else x[0]

    def state(self, j: int | None = None) -> np.ndarray:
        """All node states of trajectory ``j`` (default: the only one)."""
        j = 0 if j is None else j
        return self.states[:, j, :]

    def write_csv(self, path, j: int = 0) -> None:
        """Columns ``t, x_1..x_n, mode``; switch nodes appear twice (old mode, new mode)."""
        n = self.states.shape[-1]
        fmt = "{:.12g}".format
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"x_{i + 1}" for i in range(n)] + ["mode"])
            for k, t in enumerate(self.times):
                x = [fmt(float(v)) for v in self.states[k, j]]
                if self.switch_nodes[k] and k > 0:
                    w.writerow([fmt(float(t))] + x + [int(self.modes[k - 1])])
                w.writerow([fmt(float(t))] + x + [int(self.modes[k])])


def _node_grid(sig: SwitchingSignal, T: float, step: float, extra=None):
    """Node times with every switch (and every extra time) in ``[0, T]`` as a node."""
    brk = sig.switch_times[(sig.switch_times > 0) & (sig.switch_times < T)]
    marks = [np.array([0.0, T]), brk]
    if extra is not None:
        e = np.asarray(extra, dtype=float)
        marks.append(e[(e > 0) & (e < T)])
    edges = np.unique(np.concatenate(marks))
    pieces = [edges[:1]]
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(1, int(math.ceil((b - a) / step - 1e-9)))
        pieces.append(np.linspace(a, b, k + 1)[1:])
    times = np.concatenate(pieces)
    is_switch = np.isin(times, brk)
    return times, is_switch


def integrate(sys: SwitchedSystem, sig: SwitchingSignal, x0, T: float, step: float,
              variational: bool = False, integrands: Callable | None = None,
              extra_nodes=None, record: str = "all") -> Trajectory:
    """Classical RK4 with switch-aligned nodes.

    ``x0`` is one state ``(n,)`` or a batch ``(B, n)``.  With ``variational``
    the sensitivity ``M' = J M`` (``M(0) = I``) and ``d logdet/dt = tr J`` are
    co-integrated.  ``integrands(mode, x, J)`` may return ``(B, k)`` rates to
    be integrated alongside.  ``record='all'`` keeps every node;
    ``record='final'`` keeps only the first and last; an array of times keeps
    exactly the nodes at those times (they are added as nodes).
    """
    if not T >= 0:
        raise ValidationError("T must be nonnegative")
    if not step > 0:
        raise ValidationError("step must be positive")
    x = np.array(x0, dtype=float)
    batched = x.ndim == 2
    x = np.atleast_2d(x)
    if x.shape[1] != sys.n:
        raise DimensionError(f"initial state has dimension {x.shape[1]}, system has {sys.n}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("initial state must be finite")
    B, n = x.shape
    keep_times = None
    if not isinstance(record, str):
        keep_times = np.asarray(record, dtype=float).reshape(-1)
        extra_nodes = keep_times if extra_nodes is None else np.concatenate(
            [np.asarray(extra_nodes, dtype=float).reshape(-1), keep_times])
    elif record not in ("all", "final"):
        raise ValidationError(f"record must be 'all', 'final' or an array of times, got {record!r}")
    times, is_switch = _node_grid(sig, float(T), float(step), extra_nodes)
    node_modes = np.asarray(sig.mode_at(times), dtype=int).reshape(-1)
    need_J = variational or integrands is not None
    n_int = 0
    if integrands is not None:
        n_int = np.asarray(integrands(int(node_modes[0]), x, sys.jacobian(int(node_modes[0]), x))).shape[1]

    def pack(xs, Ms, ld, q):
        return [xs, Ms, ld, q]

    def deriv(p, state):
        xs, Ms, ld, q = state
        mode = sys.modes[p]
        dx = mode.eval(xs)
        if not need_J:
            return [dx, None, None, None]
        J = mode.jacobian(xs)
        dM = J @ Ms if variational else None
        dld = np.trace(J, axis1=1, axis2=2) if variational else None
        dq = np.asarray(integrands(p, xs, J), dtype=float) if integrands is not None else None
        return [dx, dM, dld, dq]

    def axpy(state, k, h):
        return [None if s is None else s + h * d for s, d in zip(state, k)]

    state = pack(x, np.broadcast_to(np.eye(n), (B, n, n)).copy() if variational else None,
                 np.zeros(B) if variational else None,
                 np.zeros((B, n_int)) if integrands is not None else None)

    keep_all = record == "all" if keep_times is None else False
    keep = np.isin(times, keep_times) if keep_times is not None else np.zeros(len(times), bool)
    rec_t, rec_x, rec_M, rec_ld, rec_q, rec_mode, rec_sw = [], [], [], [], [], [], []

    def remember(j, st):
        rec_t.append(times[j])
        rec_x.append(st[0].copy())
        rec_mode.append(node_modes[j])
        rec_sw.append(is_switch[j])
        if variational:
            rec_M.append(st[1].copy())
            rec_ld.append(st[2].copy())
        if integrands is not None:
            rec_q.append(st[3].copy())

    def build():
        return Trajectory(np.asarray(rec_t), np.asarray(rec_x), np.asarray(rec_mode, dtype=int),
                          np.asarray(rec_sw, dtype=bool),
                          np.asarray(rec_M) if variational else None,
                          np.asarray(rec_ld) if variational else None,
                          np.asarray(rec_q) if integrands is not None else None,
                          batched)

    if keep_times is None or keep[0]:
        remember(0, state)
    for j in range(len(times) - 1):
        h = times[j + 1] - times[j]
        p = int(node_modes[j])
        k1 = deriv(p, state)
        k2 = deriv(p, axpy(state, k1, h / 2))
        k3 = deriv(p, axpy(state, k2, h / 2))
        k4 = deriv(p, axpy(state, k3, h))
        state = [None if s is None else s + (h / 6) * (a + 2 * b + 2 * c + d)
                 for s, a, b, c, d in zip(state, k1, k2, k3, k4)]
        xs = state[0]
        if not np.all(np.isfinite(xs)) or np.max(np.abs(xs)) > DIVERGENCE_LIMIT:
            partial = build()
            raise DivergenceError(f"state norm exceeded {DIVERGENCE_LIMIT:g} at t = {times[j + 1]:.6g}",
                                  time=float(times[j + 1]), partial=partial)
        if keep_all or keep[j + 1] or (keep_times is None and j + 1 == len(times) - 1):
            remember(j + 1, state)
    return build()


def variational_integrate(sys: SwitchedSystem, sig: SwitchingSignal, x0, T: float,
                          step: float, **kw) -> Trajectory:
    """:func:`integrate` with the sensitivity matrix and log-determinant."""
    return integrate(sys, sig, x0, T, step, variational=True, **kw)
