"""Brute-force entropy estimation from (T, eps)-spanning and separated sets.

Trajectories are compared with the sup over time of the infinity-norm
distance.  The sup is taken over a finite set of check times (a uniform grid
plus every switch and every requested horizon), so computed distances
under-approximate the true ones.

Counting is greedy and deterministic (ties go to the lowest grid index):

* :func:`separated_number` is a greedy maximal packing of the candidate grid,
  a lower bound on the largest separated subset of that grid;
* :func:`spanning_number` is a greedy set cover of a probe grid by candidate
  balls, an upper bound on the smallest cover of the probes.

Pairs are prefiltered with a k-d tree on the states at ``t = 0`` and at the
horizon (a pair closer than ``eps`` over all times is closer at both), so the
cost grows with the number of near pairs rather than quadratically.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse, stats
from scipy.spatial import cKDTree

from .bounds import _jsonable
from .dynamics import CompactBox, SwitchedSystem, Structure, integrate
from .errors import RefusalError, ResolutionError, ValidationError
from .measures import MeasureSpec, Norm, block_slices, measure_batch, vector_norm
from .switching import SwitchingSignal

__all__ = [
    "CountResult",
    "EntropyEstimate",
    "GridSpacing",
    "TrajectoryBank",
    "simulate_bank",
    "separated_number",
    "spanning_number",
    "entropy_estimate",
    "auto_resolution",
    "axis_stretch",
    "grid_theta",
    "grid_cover_check",
    "volume_growth_check",
    "DEFAULT_SEED",
]

DEFAULT_SEED = 42
DEFAULT_STEP = 1e-2
DEFAULT_CHECK_TIMES = 64
MAX_GRID_POINTS = 150_000
# candidate spacing is this many times finer than the certified spacing;
# non-integer so grid separations never sit exactly on eps
OVERSAMPLE = 2.5
# above this many estimated near pairs the cover draws candidates from the packing
PAIR_BUDGET = 4_000_000


@dataclass
class CountResult:
    T: float
    eps: float
    count: int
    method: str  # "greedy-cover" or "greedy-packing"
    resolution: tuple[int, ...]
    probes: int = 0
    sound: bool = True  # cover: every probe within eps of its assigned center
    candidates: str = "grid"  # cover candidates: the whole grid or the greedy packing

    def to_dict(self) -> dict:
        d = asdict(self)
        d["resolution"] = list(self.resolution)
        return d


@dataclass
class EntropyEstimate:
    rate: float
    rate_spanning: float | None
    slope: float
    stderr: float
    T_used: list[float]
    eps: float
    refit: bool
    degenerate: bool
    counts: list[CountResult] = field(default_factory=list)
    monotone: bool = True
    seed: int = DEFAULT_SEED
    parameters: dict = field(default_factory=dict)
    diagnostic: str = ""

    def to_dict(self) -> dict:
        fit = {
            "slope": self.slope, "stderr": self.stderr, "T_used": list(self.T_used),
            "eps": self.eps, "refit_last_three": self.refit, "degenerate": self.degenerate,
            "monotone_counts": self.monotone, "rate_spanning": self.rate_spanning,
            "diagnostic": self.diagnostic,
        }
        return _jsonable({
            "counts": [c.to_dict() for c in self.counts],
            "fit": fit,
            "rate": self.rate,
            "seed": self.seed,
            "parameters": self.parameters,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


# -- trajectory bank ----------------------------------------------------

@dataclass
class TrajectoryBank:
    """States of many trajectories at shared check times.

    ``states`` has shape ``(B, len(times), n)``.  ``axes`` holds the grid axes
    when the initial states form a lexicographic grid.
    """

    times: np.ndarray
    states: np.ndarray
    resolution: tuple[int, ...]

    def upto(self, T: float) -> np.ndarray:
        cols = self.times <= T * (1 + 1e-12)
        return self.states[:, cols, :]

    def final_index(self, T: float) -> int:
        return int(np.nonzero(self.times <= T * (1 + 1e-12))[0][-1])


def _check_times(sig: SwitchingSignal, T_list, n_check: int) -> np.ndarray:
    Tmax = float(max(T_list))
    sw = sig.switch_times[(sig.switch_times > 0) & (sig.switch_times <= Tmax)]
    return np.unique(np.concatenate([np.linspace(0.0, Tmax, n_check), sw,
                                     np.asarray(T_list, dtype=float)]))


def _resolution(K: CompactBox, resolution) -> tuple[int, ...]:
    res = tuple(int(r) for r in np.broadcast_to(np.asarray(resolution, dtype=int), (K.dim,)))
    if any(r < 2 for r in res):
        raise ValidationError(f"resolution must give at least 2 points per axis, got {res}")
    return res


def simulate_bank(sys: SwitchedSystem, sig: SwitchingSignal, K: CompactBox, T_list,
                  resolution, step: float = DEFAULT_STEP,
                  n_check: int = DEFAULT_CHECK_TIMES) -> TrajectoryBank:
    res = _resolution(K, resolution)
    x0 = K.grid(res)
    times = _check_times(sig, T_list, n_check)
    traj = integrate(sys, sig, x0, float(max(T_list)), step, record=times)
    return TrajectoryBank(traj.times, np.swapaxes(traj.states, 0, 1), res)


def _sup_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise sup over times of the infinity-norm distance, inputs ``(k, m, n)``."""
    return np.max(np.abs(a - b), axis=(1, 2))


def _features(X: np.ndarray) -> np.ndarray:
    # states at the first and last check time; both are lower bounds on the sup distance
    return np.hstack([X[:, 0, :], X[:, -1, :]])


def _near_pairs(X: np.ndarray, eps: float, chunk: int = 200_000) -> np.ndarray:
    """Index pairs ``(i, j)``, ``i < j``, whose sup distance is below ``eps``."""
    tree = cKDTree(_features(X))
    pairs = tree.query_pairs(eps, p=np.inf, output_type="ndarray")
    if pairs.size == 0:
        return pairs.reshape(0, 2)
    keep = np.empty(len(pairs), dtype=bool)
    for s in range(0, len(pairs), chunk):
        pi = pairs[s:s + chunk]
        keep[s:s + chunk] = _sup_dist(X[pi[:, 0]], X[pi[:, 1]]) < eps
    pairs = pairs[keep]
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


# -- counting -----------------------------------------------------------

def _greedy_packing(X: np.ndarray, eps: float) -> np.ndarray:
    """Accept candidates in index order unless an accepted one is closer than ``eps``.

    Accepted points are hashed by their initial state into cubes of side
    ``eps``; a conflicting point starts within ``eps`` and therefore lies in
    one of the ``3^n`` surrounding cubes.
    """
    N, _, n = X.shape
    flat = X.reshape(N, -1)
    x0 = X[:, 0, :]
    keys = np.floor((x0 - x0.min(axis=0)) / eps).astype(np.int64)
    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=n)), dtype=np.int64)
    buckets: dict[tuple, list[int]] = {}
    accepted = np.zeros(N, dtype=bool)
    for i in range(N):
        near = []
        for key in map(tuple, keys[i] + offsets):
            near.extend(buckets.get(key, ()))
        if near and np.max(np.abs(flat[near] - flat[i]), axis=1).min() < eps:
            continue
        accepted[i] = True
        buckets.setdefault(tuple(keys[i]), []).append(i)
    return accepted


def _estimated_pairs(X: np.ndarray, eps: float, sample: int = 2000) -> float:
    """Near-pair count of the ``[x(0), x(T)]`` prefilter, extrapolated from a subsample."""
    feats = _features(X)
    tree = cKDTree(feats)
    idx = np.linspace(0, len(X) - 1, min(sample, len(X))).astype(int)
    hits = tree.query_ball_point(feats[idx], eps, p=np.inf, return_length=True)
    return float(np.mean(hits)) * len(X) / 2


def _packing_count(X: np.ndarray, eps: float) -> int:
    return int(_greedy_packing(X, eps).sum())


def _self_cover_matrix(N: int, pairs: np.ndarray) -> sparse.csr_matrix:
    """Cover matrix when probes and candidates are the same points."""
    idx = np.arange(N)
    rows = np.concatenate([idx, pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([idx, pairs[:, 1], pairs[:, 0]])
    return sparse.csr_matrix((np.ones(len(rows), dtype=bool), (rows, cols)), shape=(N, N))


def _cover_matrix(C: np.ndarray, P: np.ndarray, eps: float, chunk: int = 200_000):
    """Sparse boolean matrix: candidate ``c`` covers probe ``q``."""
    tree_p = cKDTree(_features(P))
    tree_c = cKDTree(_features(C))
    coo = tree_c.sparse_distance_matrix(tree_p, eps, p=np.inf, output_type="ndarray")
    ci = coo["i"].astype(np.int64)
    qi = coo["j"].astype(np.int64)
    keep = np.empty(len(ci), dtype=bool)
    for s in range(0, len(ci), chunk):
        keep[s:s + chunk] = _sup_dist(C[ci[s:s + chunk]], P[qi[s:s + chunk]]) < eps
    ci, qi = ci[keep], qi[keep]
    return sparse.csr_matrix((np.ones(len(ci), dtype=bool), (ci, qi)), shape=(len(C), len(P)))


def _greedy_cover(cover: sparse.csr_matrix) -> tuple[list[int], np.ndarray]:
    """Greedy set cover; returns chosen candidates and each probe's assigned center."""
    nC, nP = cover.shape
    by_probe = cover.tocsc()
    gains = np.asarray(cover.sum(axis=1)).reshape(-1).astype(np.int64)
    uncovered = np.ones(nP, dtype=bool)
    assigned = np.full(nP, -1, dtype=np.int64)
    chosen = []
    while uncovered.any():
        c = int(np.argmax(gains))  # argmax returns the lowest index among ties
        if gains[c] <= 0:
            break
        row = cover.indices[cover.indptr[c]:cover.indptr[c + 1]]
        new = row[uncovered[row]]
        uncovered[new] = False
        assigned[new] = c
        chosen.append(c)
        hit = np.concatenate([by_probe.indices[by_probe.indptr[q]:by_probe.indptr[q + 1]] for q in new])
        gains -= np.bincount(hit, minlength=nC)
    if uncovered.any():
        raise ResolutionError(
            f"{int(uncovered.sum())} probe(s) have no candidate within eps; refine the candidate grid")
    return chosen, assigned


def _cover_count(C: np.ndarray, P: np.ndarray, eps: float) -> tuple[int, bool]:
    if P is C:
        cover = _self_cover_matrix(len(C), _near_pairs(C, eps))
    else:
        cover = _cover_matrix(C, P, eps)
    chosen, assigned = _greedy_cover(cover)
    sound = bool(np.all(_sup_dist(P, C[assigned]) < eps))
    return len(chosen), sound


def separated_number(sys: SwitchedSystem, sig: SwitchingSignal, K: CompactBox, T: float,
                     eps: float, candidate_resolution=51, step: float = DEFAULT_STEP,
                     n_check: int = DEFAULT_CHECK_TIMES) -> CountResult:
    """Greedy (T, eps)-separated subset of a candidate grid on ``K``."""
    if not eps > 0:
        raise ValidationError("eps must be positive")
    bank = simulate_bank(sys, sig, K, [T], candidate_resolution, step, n_check)
    count = _packing_count(bank.upto(T), eps)
    return CountResult(float(T), float(eps), count, "greedy-packing", bank.resolution)


def spanning_number(sys: SwitchedSystem, sig: SwitchingSignal, K: CompactBox, T: float,
                    eps: float, candidate_resolution=51, probe_resolution=None,
                    step: float = DEFAULT_STEP, n_check: int = DEFAULT_CHECK_TIMES) -> CountResult:
    """Greedy cover of a probe grid on ``K`` by (T, eps)-balls around candidates.

    ``probe_resolution`` defaults to the candidate grid, in which case every
    probe can cover itself and the cover always exists.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    cand = simulate_bank(sys, sig, K, [T], candidate_resolution, step, n_check)
    if probe_resolution is None or _resolution(K, probe_resolution) == cand.resolution:
        probe = cand
    else:
        probe = simulate_bank(sys, sig, K, [T], probe_resolution, step, n_check)
    C = cand.upto(T)
    count, sound = _cover_count(C, C if probe is cand else probe.upto(T), eps)
    return CountResult(float(T), float(eps), count, "greedy-cover", cand.resolution,
                       probes=len(probe.states), sound=sound)


# -- grid spacing from the distance bound ---------------------------------

@dataclass
class GridSpacing:
    """Per-block spacings for a grid whose cells lie inside (T, eps)-balls."""

    eps: float
    T: float
    partition: tuple[int, ...]
    exponents: np.ndarray  # max_{t <= T} of the per-block exponent integral
    block_theta: np.ndarray
    theta: np.ndarray  # per coordinate

    def points(self, K: CompactBox) -> np.ndarray:
        """Grid ``lo + k * theta`` inside ``K``."""
        axes = [a + th * np.arange(int(math.floor((b - a) / th + 1e-9)) + 1)
                for a, b, th in zip(K.lo, K.hi, self.theta)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def size(self, K: CompactBox) -> int:
        return int(np.prod([math.floor((b - a) / th + 1e-9) + 1
                            for a, b, th in zip(K.lo, K.hi, self.theta)]))

    def nearest(self, K: CompactBox, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = np.rint((x - K.lo) / self.theta)
        kmax = np.floor((K.hi - K.lo) / self.theta + 1e-9)
        return K.lo + np.clip(k, 0, kmax) * self.theta


def _block_partition(sys: SwitchedSystem) -> tuple[int, ...]:
    if sys.structure is Structure.BLOCK_DIAGONAL and sys.partition is not None:
        return tuple(sys.partition)
    return (sys.n,)


def block_exponents(sys: SwitchedSystem, sig: SwitchingSignal, K: CompactBox, T: float,
                    local_kinds=None, resolution: int = 9, step: float = DEFAULT_STEP) -> np.ndarray:
    """``max_{t <= T}`` of the largest integral of each block's local measure over a cloud on K."""
    part = _block_partition(sys)
    kinds = [Norm.INF] * len(part) if local_kinds is None else [Norm.parse(k) for k in local_kinds]
    slices = block_slices(part, sys.n)
    specs = [MeasureSpec.basic(k) for k in kinds]

    def rates(p, x, J):
        return np.stack([measure_batch(J[:, s, s], sp) for s, sp in zip(slices, specs)], axis=1)

    cloud = np.vstack([K.grid(resolution), K.vertices()])
    traj = integrate(sys, sig, cloud, T, step, integrands=rates)
    eta = traj.integrals.max(axis=1)  # (N, m): largest integral per block and node
    return np.maximum(eta.max(axis=0), 0.0)


def grid_theta(sys: SwitchedSystem, sig: SwitchingSignal, K: CompactBox, T: float, eps: float,
               exponents=None, local_kinds=None, resolution: int = 9,
               step: float = DEFAULT_STEP) -> GridSpacing:
    """Spacings ``theta_i = e^{-max_t eta_i} eps / |1|_{L_i}`` for each block.

    A point within ``theta`` (per coordinate) of a grid point then stays
    within ``eps`` of that grid point's trajectory up to time ``T``.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    part = _block_partition(sys)
    kinds = [Norm.INF] * len(part) if local_kinds is None else [Norm.parse(k) for k in local_kinds]
    if exponents is None:
        exponents = block_exponents(sys, sig, K, T, kinds, resolution, step)
    exponents = np.asarray(exponents, dtype=float).reshape(-1)
    if exponents.size != len(part):
        raise ValidationError(f"need one exponent per block ({len(part)}), got {exponents.size}")
    norms = np.array([vector_norm(np.ones(k), kind) for k, kind in zip(part, kinds)])
    with np.errstate(over="ignore"):
        block_theta = np.exp(-exponents) * eps / norms
    if not np.all(np.isfinite(block_theta)) or np.any(block_theta <= 0):
        raise RefusalError(f"grid spacing underflows to zero (exponents {exponents.tolist()})")
    theta = np.repeat(block_theta, part)
    return GridSpacing(float(eps), float(T), part, exponents, block_theta, theta)


def grid_cover_check(sys: SwitchedSystem, sig: SwitchingSignal, K: CompactBox, spacing: GridSpacing,
                     probes, step: float = DEFAULT_STEP,
                     n_check: int = DEFAULT_CHECK_TIMES) -> dict:
    """Simulate probes and their nearest grid points; report the worst sup distance."""
    probes = np.asarray(probes, dtype=float)
    centers = spacing.nearest(K, probes)
    times = _check_times(sig, [spacing.T], n_check)
    traj = integrate(sys, sig, np.vstack([probes, centers]), spacing.T, step, record=times)
    X = np.swapaxes(traj.states, 0, 1)
    d = _sup_dist(X[:len(probes)], X[len(probes):])
    return {"max_distance": float(d.max()), "eps": spacing.eps,
            "covered": bool(np.all(d < spacing.eps)), "probes": len(probes)}


def axis_stretch(sys: SwitchedSystem, sig: SwitchingSignal, K: CompactBox, T: float,
                 coarse: int = 17, step: float = DEFAULT_STEP,
                 n_check: int = DEFAULT_CHECK_TIMES) -> np.ndarray:
    """Largest observed ratio (sup distance up to T) / (initial distance) along each axis.

    Measured between neighbouring points of a coarse grid on ``K``; always >= 1
    because the sup includes ``t = 0``.
    """
    bank = simulate_bank(sys, sig, K, [T], coarse, step, n_check)
    X = bank.states.reshape(bank.resolution + bank.states.shape[1:])
    out = np.ones(K.dim)
    for i in range(K.dim):
        if K.hi[i] <= K.lo[i]:
            continue
        a = np.take(X, np.arange(X.shape[i] - 1), axis=i)
        b = np.take(X, np.arange(1, X.shape[i]), axis=i)
        d = np.max(np.abs(a - b), axis=(-2, -1))
        h = (K.hi[i] - K.lo[i]) / (X.shape[i] - 1)
        out[i] = max(1.0, float(d.max()) / h)
    return out


def auto_resolution(sys: SwitchedSystem, sig: SwitchingSignal, K: CompactBox, T: float, eps: float,
                    oversample: float = OVERSAMPLE, max_points: int = MAX_GRID_POINTS,
                    step: float = DEFAULT_STEP) -> tuple[int, ...]:
    """Per-axis candidate resolution for horizon ``T``.

    The spacing along axis ``i`` is ``eps / (oversample * L_i)`` with ``L_i``
    the stretch observed by :func:`axis_stretch`.  If the grid would exceed
    ``max_points`` all refinable axes are scaled down by a common factor (the
    counts then saturate and the slope is biased low).
    """
    L = axis_stretch(sys, sig, K, T, step=step)
    width = K.hi - K.lo
    want = np.where(width > 0, np.ceil(oversample * L * width / eps) + 1, 2.0)
    want = np.maximum(want, 2.0)
    total = float(np.prod(want))
    if total > max_points:
        free = want > 2
        scale = (max_points / total) ** (1.0 / max(int(free.sum()), 1))
        want = np.where(free, np.maximum(np.floor(want * scale), 2.0), want)
    return tuple(int(w) for w in want)


# -- entropy fit ------------------------------------------------------------

def _fit(T: np.ndarray, counts: np.ndarray) -> tuple[float, float, bool]:
    y = np.log(counts)
    fit = stats.linregress(T, y)
    slope, stderr = float(fit.slope), float(fit.stderr)
    resid = y - (fit.intercept + fit.slope * T)
    refit = False
    if len(T) > 3 and np.max(np.abs(resid)) > 0.05 * abs(slope):
        fit = stats.linregress(T[-3:], y[-3:])
        slope, stderr, refit = float(fit.slope), float(fit.stderr), True
    return slope, stderr, refit


def _monotone(values: Sequence[int]) -> bool:
    return all(b >= a for a, b in zip(values[:-1], values[1:]))


def entropy_estimate(sys: SwitchedSystem, sig: SwitchingSignal, K: CompactBox, eps: float,
                     T_list: Sequence[float], resolutions=None, probe_resolution=None,
                     step: float = DEFAULT_STEP, n_check: int = DEFAULT_CHECK_TIMES,
                     spanning: bool = True, seed: int = DEFAULT_SEED,
                     max_points: int = MAX_GRID_POINTS) -> EntropyEstimate:
    """Slope of ``log(count)`` against ``T``, clamped at zero.

    ``resolutions`` is an int or per-axis tuple shared by every horizon, a
    dict mapping each horizon to its resolution, or ``None`` for a grid per
    horizon sized by :func:`auto_resolution`.  Per-horizon grids keep the
    rounding bias of greedy packing the same at every horizon.  The rate comes
    from the separated counts; the spanning slope is reported alongside.  For
    the spanning count the probes are the candidate grid (or
    ``probe_resolution``).  The cover candidates are the whole grid unless its
    near-pair count is over budget; then the greedy packing, which already
    covers the grid, keeps the cover matrix small.
    """
    T = np.asarray(T_list, dtype=float)
    if T.ndim != 1 or len(T) < 3 or np.any(np.diff(T) <= 0) or T[0] <= 0:
        raise ValidationError("T_list must be increasing, positive, with at least 3 entries")
    if not eps > 0:
        raise ValidationError("eps must be positive")

    def res_for(t):
        if resolutions is None:
            return auto_resolution(sys, sig, K, float(t), eps, max_points=max_points, step=step)
        if isinstance(resolutions, dict):
            return resolutions[t] if t in resolutions else resolutions[float(t)]
        return resolutions

    results: list[CountResult] = []
    sep = []
    span = []
    used_res = []
    banks: dict = {}
    for t in T:
        res = _resolution(K, res_for(t))
        used_res.append(list(res))
        if res not in banks:
            # a shared grid is simulated once up to the largest horizon
            banks = {res: simulate_bank(sys, sig, K, T, res, step, n_check)}
        bank = banks[res]
        X = bank.upto(t)
        packed = _greedy_packing(X, eps)
        n_sep = int(packed.sum())
        sep.append(n_sep)
        results.append(CountResult(float(t), float(eps), n_sep, "greedy-packing", res))
        if spanning:
            P = X
            if probe_resolution is not None and _resolution(K, probe_resolution) != res:
                P = simulate_bank(sys, sig, K, [t], probe_resolution, step, n_check).upto(t)
            source = "grid"
            if P is X and _estimated_pairs(X, eps) <= PAIR_BUDGET:
                n_span, sound = _cover_count(X, X, eps)
            elif P is X:
                source = "packing"
                n_span, sound = _cover_count(X[packed], X, eps)
            else:
                n_span, sound = _cover_count(X, P, eps)
            span.append(n_span)
            results.append(CountResult(float(t), float(eps), n_span, "greedy-cover", res,
                                       probes=len(P), sound=sound, candidates=source))

    sep = np.asarray(sep, dtype=float)
    degenerate = bool(np.all(sep == sep[0]))
    diagnostic = ""
    if degenerate:
        slope, stderr, refit, used = 0.0, 0.0, False, T
        diagnostic = "all separated counts equal; rate set to 0"
    else:
        slope, stderr, refit = _fit(T, sep)
        used = T[-3:] if refit else T
    rate_span = None
    if spanning:
        sp = np.asarray(span, dtype=float)
        rate_span = 0.0 if np.all(sp == sp[0]) else max(_fit(T, sp)[0], 0.0)
    monotone = _monotone(list(sep)) and (not spanning or _monotone(span))
    params = {
        "eps": float(eps), "T_list": T.tolist(), "resolution": used_res,
        "probe_resolution": None if probe_resolution is None else list(_resolution(K, probe_resolution)),
        "step": step, "check_times": int(n_check),
        "K": K.to_list(),
    }
    return EntropyEstimate(max(slope, 0.0), rate_span, slope, stderr, [float(u) for u in used],
                           float(eps), refit, degenerate, results, monotone, int(seed), params,
                           diagnostic)


# -- volume growth ------------------------------------------------------------

def _cell_volume(Y: np.ndarray, per_cell: float, rounds: int = 4) -> float:
    """Volume of a point cloud as the total volume of occupied cubic cells.

    The cell size is chosen so an occupied region holds about ``per_cell``
    points per cell, iterating from the bounding-box volume.
    """
    lo = Y.min(axis=0)
    span = np.maximum(Y.max(axis=0) - lo, 1e-300)
    vol = float(np.prod(span))
    n = Y.shape[1]
    for _ in range(rounds):
        h = (per_cell * vol / len(Y)) ** (1.0 / n)
        if not h > 0:
            return 0.0
        cells = np.floor((Y - lo) / h).astype(np.int64)
        vol = len(np.unique(cells, axis=0)) * h ** n
    return vol


def volume_growth_check(sys: SwitchedSystem, sig: SwitchingSignal, K: CompactBox, T: float,
                        samples: int = 20_000, seed: int = DEFAULT_SEED, step: float = DEFAULT_STEP,
                        slack: float = 0.95, per_cell: float = 8.0) -> dict:
    """Compare the volume of the pushed-forward cloud with ``e^{gamma} vol(K)``.

    ``gamma`` is the smallest log-determinant integral over the samples.  The
    image volume is measured by counting occupied cells; the change-of-variables
    value ``vol(K) * mean(e^{logdet})`` is reported as a cross-check.
    """
    if samples < 100:
        raise ValidationError("need at least 100 samples")
    if not K.volume > 0:
        raise ValidationError("K has zero volume")
    rng = np.random.default_rng(seed)
    X0 = K.sample(rng, samples)
    traj = integrate(sys, sig, X0, T, step, variational=True, record="final")
    Y = traj.states[-1]
    logdet = traj.logdet[-1]
    gamma = float(logdet.min())
    bound = math.exp(gamma) * K.volume
    est = _cell_volume(Y, per_cell)
    return {
        "volume_estimate": est, "bound": bound, "gamma": gamma,
        "liouville_volume": float(K.volume * np.mean(np.exp(logdet))),
        "ratio": est / bound if bound > 0 else math.inf,
        "passed": bool(est >= slack * bound), "slack": slack,
        "samples": samples, "seed": seed, "T": float(T),
    }
