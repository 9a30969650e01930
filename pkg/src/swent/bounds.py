"""Analytic upper and lower bounds on the topological entropy of switched systems.

Every bound combines per-mode constants (extrema of Jacobian functionals over
a compact set ``S``) with asymptotic weighted averages of the switching
signal's active rates.  Report keys name the formula a value comes from:

========== ==========================================================
tag        value
========== ==========================================================
Eq16       ``max{limsup_t sum_{P+} n mu_p rho_p(t), 0}``
Eq18       ``max{limsup_t sum_{P+} chi_p rho_p(t), 0}``       (lower)
Eq19upper  ``max{n mu, 0}`` for a constant signal
Eq19lower  ``max{chi, 0}`` for a constant signal                (lower)
Eq20       ``sum_{P+} max{n mu_p, 0} rho_hat_p``
Eq21       ``max_{P+} max{n mu_p, 0}``
Eq26       Eq16 with the network-matrix measure ``mu_N(A_p^N(v))``
Eq28       Eq16 with ``mu_N`` of the entrywise maximal network matrix
InterSum   ``sum_{P+} max{n mu^N_p, 0} rho_hat_p``
InterMax   ``max_{P+} max{n mu^N_p, 0}``
Eq29       ``max{n mu_N(A_hat^N), 0}`` for a constant signal
Eq32       ``max{n lambda_max(A_hat^N), 0}`` for a constant signal
Eq34       ``limsup_T sum_i (1/T) max_{t<=T} sum_{P+} n_i mu^i_p tau_p(t)``
Eq36       Eq34 with ``-mu_i(-J)`` minima                        (lower)
Eq38       ``limsup_t sum_i max{sum_{P+} chi^i_p rho_p(t), 0}``  (lower)
Eq39       ``sum_i max{limsup_t sum_{P+} n_i mu^i_p rho_p(t), 0}``
Eq40       ``limsup_t sum_{P+} (sum_i max{n_i mu^i_p, 0}) rho_p(t)``
Eq41       ``sum_{P+} (sum_i max{n_i mu^i_p, 0}) rho_hat_p``
Eq42       ``max_{P+} sum_i max{n_i mu^i_p, 0}``
Eq43       Eq38 for switched linear diagonal systems            (lower)
========== ==========================================================

Finite-horizon convention.  ``limsup_{t -> inf}`` is replaced by the maximum
over the candidate times of :func:`swent.switching.candidate_times` (the tail
window's start, its switches and the horizon), and the inner ``max_{t <= T}``
of Eq34/Eq36 ranges over ``0`` and the candidates up to ``T``.  With one
candidate set for every formula, the orderings between bounds hold exactly
at any horizon.  When a signal declares the extreme points of its rate limit
set, functionals that are convex in the rates are evaluated there instead.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import CompactBox, Structure, SwitchedSystem, integrate
from .errors import RefusalError, ValidationError
from .measures import (MeasureSpec, Norm, block_slices, composite_vector_norm,
                       matrix_measure, measure_batch, metzler_eigen_max, network_matrix_of)
from .switching import (DEFAULT_TAIL_FRACTION, DEFAULT_THRESHOLD, SwitchingSignal,
                        asymptotic_rates, candidate_times)

__all__ = [
    "BoundReport",
    "RateContext",
    "mode_measure_sup",
    "mode_trace_inf",
    "mode_minus_measure_inf",
    "mode_network_sup",
    "prefix_max_weighted_avg",
    "rate_limsup_avg",
    "bound_general",
    "bound_interconnected",
    "bound_block_diagonal",
    "all_bounds",
    "distance_bound_check",
    "LOWER_TAGS",
    "UPPER_TAGS",
]

LOWER_TAGS = ("Eq18", "Eq19lower", "Eq36", "Eq38", "Eq43")
UPPER_TAGS = ("Eq16", "Eq19upper", "Eq20", "Eq21", "Eq26", "Eq28", "InterSum", "InterMax",
              "Eq29", "Eq32", "Eq34", "Eq39", "Eq40", "Eq41", "Eq42")
DEFAULT_RESOLUTION = 41


# -- extrema of Jacobian functionals --------------------------------------

def _region_points(sys: SwitchedSystem, region, resolution: int):
    """Evaluation points for a set extremum and a description of how they were chosen.

    For Jacobians affine in the state every functional used here is convex or
    concave along the box, so its extrema sit at the vertices.
    """
    if isinstance(region, CompactBox):
        if region.dim != sys.n:
            raise ValidationError(f"box dimension {region.dim} differs from system dimension {sys.n}")
        if sys.affine_jacobian:
            return region.vertices(), {"method": "vertices"}
        if resolution < 2:
            raise ValidationError("grid resolution must be at least 2")
        spacing = (region.hi - region.lo) / (resolution - 1)
        return region.grid(resolution), {"method": "grid", "spacing": spacing.tolist()}
    pts = np.atleast_2d(np.asarray(region, dtype=float))
    if pts.size == 0:
        raise ValidationError("empty region")
    if pts.shape[1] != sys.n:
        raise ValidationError("region points have the wrong dimension")
    return pts, {"method": "samples", "count": int(pts.shape[0])}


def _block_jac(sys, p, pts, block):
    J = sys.jacobian(p, pts)
    if block is None:
        return J
    return J[:, block, block]


def mode_measure_sup(sys: SwitchedSystem, p: int, S, spec: MeasureSpec | str = "inf",
                     resolution: int = DEFAULT_RESOLUTION, block: slice | None = None) -> float:
    """``max_{v in S} mu(J f_p(v))`` (restricted to a diagonal block if given)."""
    spec = spec if isinstance(spec, MeasureSpec) else MeasureSpec.basic(spec)
    pts, _ = _region_points(sys, S, resolution)
    return float(np.max(measure_batch(_block_jac(sys, p, pts, block), spec)))


def mode_trace_inf(sys: SwitchedSystem, p: int, region, resolution: int = DEFAULT_RESOLUTION,
                   block: slice | None = None) -> float:
    """``min_{v in region} tr(J f_p(v))``."""
    pts, _ = _region_points(sys, region, resolution)
    J = _block_jac(sys, p, pts, block)
    return float(np.min(np.trace(J, axis1=1, axis2=2)))


def mode_minus_measure_inf(sys: SwitchedSystem, p: int, region, spec: MeasureSpec | str = "inf",
                           resolution: int = DEFAULT_RESOLUTION, block: slice | None = None) -> float:
    """``min_{v in region} -mu(-J f_p(v))``."""
    spec = spec if isinstance(spec, MeasureSpec) else MeasureSpec.basic(spec)
    pts, _ = _region_points(sys, region, resolution)
    return float(np.min(-measure_batch(-_block_jac(sys, p, pts, block), spec)))


def mode_network_sup(sys: SwitchedSystem, p: int, S, spec: MeasureSpec,
                     resolution: int = DEFAULT_RESOLUTION):
    """Network-level constants of mode ``p`` over ``S``.

    Returns ``(max_v mu_N(A_p^N(v)), A_hat)`` where ``A_hat`` is the entrywise
    maximum of the network matrix over ``S``.
    """
    if not spec.is_composite:
        raise ValidationError("network constants need a composite MeasureSpec")
    pts, _ = _region_points(sys, S, resolution)
    J = sys.jacobian(p, pts)
    nets = np.array([network_matrix_of(M, spec) for M in J])
    mu = np.array([matrix_measure(N, spec.network_kind) for N in nets])
    return float(mu.max()), nets.max(axis=0)


# -- asymptotic weighted averages -------------------------------------------

@dataclass
class RateContext:
    """Rates of one signal at the shared candidate times."""

    sig: SwitchingSignal
    horizon: float
    tail_fraction: float = DEFAULT_TAIL_FRACTION
    threshold: float = DEFAULT_THRESHOLD
    use_declared: bool = True

    def __post_init__(self):
        self.profile = asymptotic_rates(self.sig, self.horizon, self.tail_fraction,
                                        self.threshold, self.use_declared)
        self.cand = candidate_times(self.sig, self.horizon, self.tail_fraction)
        self.tau0 = np.vstack([np.zeros((1, self.sig.num_modes)), self.sig.active_times(self.cand)])
        self.rates = self.tau0[1:] / self.cand[:, None]
        d = self.sig.declared
        self.limit_points = (np.asarray(d.limit_points, dtype=float)
                             if (self.use_declared and d is not None) else None)
        self.mask = np.zeros(self.sig.num_modes, dtype=bool)
        self.mask[sorted(self.profile.strongly_persistent)] = True

    @classmethod
    def build(cls, sig, horizon=None, tail_fraction=DEFAULT_TAIL_FRACTION,
              threshold=DEFAULT_THRESHOLD, use_declared=True) -> "RateContext":
        return cls(sig, sig.horizon if horizon is None else float(horizon),
                   tail_fraction, threshold, use_declared)

    @property
    def rho_hat(self) -> np.ndarray:
        return np.asarray(self.profile.rho_hat, dtype=float)

    @property
    def convergent(self) -> bool:
        return self.limit_points is not None and self.limit_points.shape[0] == 1

    def restrict(self, c) -> np.ndarray:
        """Coefficients with modes outside ``P_+`` zeroed; refuses non-finite values on ``P_inf``."""
        c = np.array(c, dtype=float, ndmin=1)
        if c.shape[-1] != self.sig.num_modes:
            raise ValidationError(f"need one constant per mode ({self.sig.num_modes}), got {c.shape[-1]}")
        pinf = sorted(self.profile.persistent)
        if not np.all(np.isfinite(c[..., pinf])):
            raise RefusalError("a mode constant is not finite for a persistent mode; "
                               "the bound's hypotheses fail")
        return np.where(self.mask, np.nan_to_num(c, nan=0.0, posinf=0.0, neginf=0.0), 0.0)

    def rate_points(self) -> np.ndarray:
        """Rate vectors over which convex rate functionals are maximised."""
        return self.limit_points if self.limit_points is not None else self.rates

    def rate_limsup(self, c) -> float:
        c = self.restrict(c)
        return float(np.max(self.rate_points() @ c))

    def blockwise_positive_limsup(self, C) -> float:
        """``limsup_t sum_i max{sum_p C[i, p] rho_p(t), 0}``."""
        C = self.restrict(np.atleast_2d(C))
        vals = np.maximum(self.rate_points() @ C.T, 0.0).sum(axis=1)
        return float(np.max(vals))

    def prefix_max_sum(self, C) -> float:
        """``limsup_T sum_i (1/T) max_{t <= T} sum_p C[i, p] tau_p(t)``."""
        C = self.restrict(np.atleast_2d(C))
        if self.convergent:
            return float(np.maximum(C @ self.limit_points[0], 0.0).sum())
        S = self.tau0 @ C.T  # row 0 is t = 0 where every sum vanishes
        run = np.maximum.accumulate(S, axis=0)[1:]
        return float(np.max(run.sum(axis=1) / self.cand))


def prefix_max_weighted_avg(c, sig: SwitchingSignal, horizon: float | None = None,
                            tail_fraction: float = DEFAULT_TAIL_FRACTION,
                            threshold: float = DEFAULT_THRESHOLD, use_declared: bool = True) -> float:
    """``limsup_T (1/T) max_{t <= T} sum_{p in P+} c_p tau_p(t)`` at a finite horizon."""
    ctx = RateContext.build(sig, horizon, tail_fraction, threshold, use_declared)
    return ctx.prefix_max_sum(c)


def rate_limsup_avg(c, sig: SwitchingSignal, horizon: float | None = None,
                    tail_fraction: float = DEFAULT_TAIL_FRACTION,
                    threshold: float = DEFAULT_THRESHOLD, use_declared: bool = True) -> float:
    """``limsup_t sum_{p in P+} c_p rho_p(t)`` at a finite horizon (not clamped at 0)."""
    ctx = RateContext.build(sig, horizon, tail_fraction, threshold, use_declared)
    return ctx.rate_limsup(c)


# -- reports -----------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_jsonable(v) for v in x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, CompactBox):
        return x.to_list()
    return x


@dataclass
class BoundReport:
    values: dict[str, float] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __getitem__(self, tag: str) -> float:
        return self.values[tag]

    def __contains__(self, tag: str) -> bool:
        return tag in self.values

    def merge(self, other: "BoundReport") -> "BoundReport":
        values = dict(self.values)
        values.update(other.values)
        meta = dict(self.meta)
        for k, v in other.meta.items():
            meta.setdefault(k, v)
        return BoundReport(values, meta)

    def to_dict(self) -> dict:
        return {"values": _jsonable(self.values), "meta": _jsonable(self.meta)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_table(self, digits: int = 4) -> str:
        tags = [t for t in (*UPPER_TAGS, *LOWER_TAGS) if t in self.values]
        tags += sorted(t for t in self.values if t not in tags)
        width = max(len(t) for t in tags) if tags else 4
        lines = [f"{'bound':<{width}}  {'value':>12}  kind"]
        for t in tags:
            kind = "lower" if t in LOWER_TAGS else "upper"
            lines.append(f"{t:<{width}}  {self.values[t]:>12.{digits}f}  {kind}")
        return "\n".join(lines)


def _rate_meta(ctx: RateContext) -> dict:
    meta = {"horizon": ctx.horizon, "tail_fraction": ctx.tail_fraction,
            "window": list(ctx.profile.window), "rates": ctx.profile.to_dict(),
            "rate_source": "declared" if ctx.limit_points is not None else "breakpoints"}
    if ctx.profile.warning:
        meta["warning"] = ctx.profile.warning
    return meta


def _spec(spec) -> MeasureSpec:
    return spec if isinstance(spec, MeasureSpec) else MeasureSpec.basic(spec)


# -- general switched systems ------------------------------------------------

def bound_general(sys: SwitchedSystem, sig: SwitchingSignal, S: CompactBox | None = None,
                  spec: MeasureSpec | str = "inf", horizon: float | None = None,
                  tail_fraction: float = DEFAULT_TAIL_FRACTION, threshold: float = DEFAULT_THRESHOLD,
                  resolution: int = DEFAULT_RESOLUTION, use_declared: bool = True,
                  mu_hat=None, chi_check=None) -> BoundReport:
    """Bounds that use only whole-system constants.

    ``mu_hat`` / ``chi_check`` override the constants computed over ``S``.
    """
    spec = _spec(spec)
    if sig.num_modes < sys.num_modes:
        raise ValidationError("signal declares fewer modes than the system has")
    P = sig.num_modes
    provenance = "user-supplied"
    info = {}
    if mu_hat is None or chi_check is None:
        if S is None:
            raise ValidationError("need a set S or user-supplied constants")
        _, info = _region_points(sys, S, resolution)
        provenance = "set-maximization over S"
    if mu_hat is None:
        mu_hat = [mode_measure_sup(sys, p, S, spec, resolution) for p in range(sys.num_modes)]
    if chi_check is None:
        chi_check = [mode_trace_inf(sys, p, S, resolution) for p in range(sys.num_modes)]
    mu_hat = _pad(mu_hat, P)
    chi_check = _pad(chi_check, P)
    ctx = RateContext.build(sig, horizon, tail_fraction, threshold, use_declared)
    n = sys.n
    nmu = ctx.restrict(n * mu_hat)
    chi = ctx.restrict(chi_check)
    rho_hat = ctx.rho_hat
    plus = ctx.mask
    values = {
        "Eq16": max(ctx.rate_limsup(nmu), 0.0),
        "Eq18": max(ctx.rate_limsup(chi), 0.0),
        "Eq20": float(np.sum(np.maximum(nmu, 0.0)[plus] * rho_hat[plus])),
        "Eq21": float(np.max(np.maximum(nmu, 0.0)[plus], initial=0.0)),
    }
    if _constant_on(sig, ctx.horizon):
        p = sig.initial_mode
        values["Eq19upper"] = max(n * float(mu_hat[p]), 0.0)
        values["Eq19lower"] = max(float(chi_check[p]), 0.0)
    meta = _rate_meta(ctx)
    meta.update({"measure": spec.label, "S": S.to_list() if S is not None else None,
                 "provenance": provenance, "extremum": info, "n": n,
                 "constants": {"mu_hat": mu_hat, "chi_check": chi_check}})
    return BoundReport(values, meta)


def _pad(c, P: int) -> np.ndarray:
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.size > P:
        raise ValidationError("more constants than modes")
    # modes without a vector field can never be active
    return np.concatenate([c, np.full(P - c.size, np.nan)]) if c.size < P else c


def _constant_on(sig: SwitchingSignal, horizon: float) -> bool:
    return not np.any(sig.switch_times <= horizon)


# -- interconnected systems -----------------------------------------------

def bound_interconnected(sys: SwitchedSystem, sig: SwitchingSignal, S: CompactBox,
                         spec: MeasureSpec | None = None, horizon: float | None = None,
                         tail_fraction: float = DEFAULT_TAIL_FRACTION,
                         threshold: float = DEFAULT_THRESHOLD,
                         resolution: int = DEFAULT_RESOLUTION, use_declared: bool = True,
                         partition=None, metzler: bool = False) -> BoundReport:
    """Bounds built from network matrices of a partitioned system."""
    partition = partition or (spec.partition if spec is not None and spec.is_composite else None) \
        or sys.partition
    if partition is None:
        raise ValidationError("interconnected bounds need a partition")
    if spec is None:
        spec = MeasureSpec.composite(partition)
    elif not spec.is_composite:
        spec = MeasureSpec.composite(partition, spec.kind, spec.kind)
    if tuple(spec.partition) != tuple(partition):
        raise ValidationError("measure partition differs from the system partition")
    P = sig.num_modes
    mu_net = np.full(P, np.nan)
    m = len(partition)
    A_hat = np.full((P, m, m), np.nan)
    for p in range(sys.num_modes):
        mu_net[p], A_hat[p] = mode_network_sup(sys, p, S, spec, resolution)
    mu_entry = np.array([matrix_measure(A_hat[p], spec.network_kind) if p < sys.num_modes else np.nan
                         for p in range(P)])
    ctx = RateContext.build(sig, horizon, tail_fraction, threshold, use_declared)
    n = sys.n
    c26 = ctx.restrict(n * mu_net)
    c28 = ctx.restrict(n * mu_entry)
    plus = ctx.mask
    rho_hat = ctx.rho_hat
    values = {
        "Eq26": max(ctx.rate_limsup(c26), 0.0),
        "Eq28": max(ctx.rate_limsup(c28), 0.0),
        "InterSum": float(np.sum(np.maximum(c26, 0.0)[plus] * rho_hat[plus])),
        "InterMax": float(np.max(np.maximum(c26, 0.0)[plus], initial=0.0)),
    }
    if _constant_on(sig, ctx.horizon):
        p = sig.initial_mode
        values["Eq29"] = max(n * float(mu_entry[p]), 0.0)
        if metzler:
            values["Eq32"] = max(n * metzler_eigen_max(A_hat[p]), 0.0)
    _, info = _region_points(sys, S, resolution)
    meta = _rate_meta(ctx)
    meta.update({"measure": spec.label, "S": S.to_list(), "extremum": info, "n": n,
                 "provenance": "set-maximization over S",
                 "constants": {"mu_hat_network": mu_net, "network_entry_max": A_hat,
                               "mu_network_of_entry_max": mu_entry}})
    return BoundReport(values, meta)


# -- block-diagonal systems ---------------------------------------------------

def bound_block_diagonal(sys: SwitchedSystem, sig: SwitchingSignal, S: CompactBox | None = None,
                         specs=None, horizon: float | None = None,
                         tail_fraction: float = DEFAULT_TAIL_FRACTION,
                         threshold: float = DEFAULT_THRESHOLD,
                         resolution: int = DEFAULT_RESOLUTION, use_declared: bool = True,
                         mu_hat_blocks=None, mu_check_blocks=None,
                         chi_check_blocks=None) -> BoundReport:
    """Bounds exploiting independent subsystems.

    ``specs`` gives the local norm of each block (one kind for all blocks if a
    single value).  Block constants may be supplied as ``(m, P)`` arrays.
    """
    if sys.structure is not Structure.BLOCK_DIAGONAL:
        raise RefusalError("block-diagonal bounds need a system with block-diagonal structure")
    part = sys.partition
    m = len(part)
    slices = block_slices(part, sys.n)
    if specs is None or isinstance(specs, (str, Norm, MeasureSpec)):
        specs = [specs if specs is not None else "inf"] * m
    specs = [_spec(s) for s in specs]
    if len(specs) != m:
        raise ValidationError("need one local norm per block")
    P = sig.num_modes
    supplied = [mu_hat_blocks, mu_check_blocks, chi_check_blocks]

    def table(fn):
        out = np.full((m, P), np.nan)
        for i, s in enumerate(slices):
            for p in range(sys.num_modes):
                out[i, p] = fn(p, i, s)
        return out

    if any(x is None for x in supplied) and S is None:
        raise ValidationError("need a set S or user-supplied block constants")
    mu_hat = (np.asarray(mu_hat_blocks, dtype=float) if mu_hat_blocks is not None else
              table(lambda p, i, s: mode_measure_sup(sys, p, S, specs[i], resolution, s)))
    mu_check = (np.asarray(mu_check_blocks, dtype=float) if mu_check_blocks is not None else
                table(lambda p, i, s: mode_minus_measure_inf(sys, p, S, specs[i], resolution, s)))
    chi = (np.asarray(chi_check_blocks, dtype=float) if chi_check_blocks is not None else
           table(lambda p, i, s: mode_trace_inf(sys, p, S, resolution, s)))
    for arr in (mu_hat, mu_check, chi):
        if arr.shape != (m, P):
            raise ValidationError(f"block constants must have shape ({m}, {P})")
    ctx = RateContext.build(sig, horizon, tail_fraction, threshold, use_declared)
    sizes = np.asarray(part, dtype=float)[:, None]
    up = ctx.restrict(sizes * mu_hat)
    low = ctx.restrict(sizes * mu_check)
    chi_r = ctx.restrict(chi)
    per_mode = np.maximum(up, 0.0).sum(axis=0)
    plus = ctx.mask
    rho_hat = ctx.rho_hat
    values = {
        "Eq34": ctx.prefix_max_sum(up),
        "Eq36": ctx.prefix_max_sum(low),
        "Eq38": ctx.blockwise_positive_limsup(chi_r),
        "Eq39": float(sum(max(ctx.rate_limsup(row), 0.0) for row in up)),
        "Eq40": max(ctx.rate_limsup(per_mode), 0.0),
        "Eq41": float(np.sum(per_mode[plus] * rho_hat[plus])),
        "Eq42": float(np.max(per_mode[plus], initial=0.0)),
    }
    if sys.kind == "linear" and all(k == 1 for k in part):
        values["Eq43"] = values["Eq38"]
    meta = _rate_meta(ctx)
    meta.update({"measure": [s.label for s in specs], "partition": list(part),
                 "S": S.to_list() if S is not None else None,
                 "provenance": "user-supplied" if all(x is not None for x in supplied)
                 else "set-maximization over S",
                 "constants": {"mu_hat_blocks": mu_hat, "mu_check_blocks": mu_check,
                               "chi_check_blocks": chi}})
    if S is not None:
        meta["extremum"] = _region_points(sys, S, resolution)[1]
    return BoundReport(values, meta)


def all_bounds(sys: SwitchedSystem, sig: SwitchingSignal, S: CompactBox,
               spec: MeasureSpec | str = "inf", **kw) -> BoundReport:
    """General bounds plus the structured ones the system's structure admits."""
    spec = _spec(spec)
    basic = spec if not spec.is_composite else MeasureSpec.basic(spec.network_kind)
    report = bound_general(sys, sig, S, basic, **kw)
    if sys.structure is Structure.BLOCK_DIAGONAL:
        local = spec.local_kinds if spec.is_composite else [basic.kind] * len(sys.partition)
        report = report.merge(bound_block_diagonal(sys, sig, S, [MeasureSpec.basic(k) for k in local], **kw))
    elif sys.structure is Structure.INTERCONNECTED:
        comp = spec if spec.is_composite else MeasureSpec.composite(sys.partition, basic.kind, basic.kind)
        report = report.merge(bound_interconnected(sys, sig, S, comp, **kw))
    return report


# -- solution-distance checks ------------------------------------------------

def _pairwise_midpoints(x: np.ndarray, limit: int = 400) -> np.ndarray:
    k = x.shape[0]
    if k > limit:
        x = x[np.linspace(0, k - 1, limit).astype(int)]
        k = limit
    i, j = np.triu_indices(k, 1)
    return 0.5 * (x[i] + x[j])


def distance_bound_check(sys: SwitchedSystem, sig: SwitchingSignal, K: CompactBox, T: float,
                         step: float = 1e-3, n_pairs: int = 50, seed: int = 42,
                         spec: MeasureSpec | str = "inf", cloud_resolution: int = 6,
                         slack: float = 1.05) -> dict:
    """Numerically test the solution-distance bounds on sampled pairs from ``K``.

    Checks, at every integrator node,

    * ``|xi(t, y) - xi(t, x)| <= e^{eta_bar(t)} |y - x|`` with ``eta_bar`` the
      largest integral of ``mu(J)`` along trajectories from the sampled ``K``;
    * ``e^{eta_low(t)} |y - x| <= |xi(t, y) - xi(t, x)| <= e^{eta_alt(t)} |y - x|``
      with the integrands ``min / max`` of ``-mu(-J)`` / ``mu(J)`` over the
      sampled reachable cloud (plus pairwise midpoints when the Jacobian is
      not affine; for affine Jacobians the cloud's extreme points suffice).

    The sampled sets under-approximate the true sets, hence the slack factor.
    """
    spec = _spec(spec)
    rng = np.random.default_rng(seed)
    xs = K.sample(rng, n_pairs)
    ys = K.sample(rng, n_pairs)
    cloud = np.vstack([K.grid(cloud_resolution), xs, ys])
    traj = integrate(sys, sig, cloud, T, step,
                     integrands=lambda p, x, J: measure_batch(J, spec)[:, None])
    eta_bar = traj.integrals[:, :, 0].max(axis=1)
    times = traj.times
    states = traj.states
    upper_rate = np.empty((len(times) - 1, 2))
    lower_rate = np.empty((len(times) - 1, 2))
    for j in range(len(times) - 1):
        p = int(traj.modes[j])
        for k, X in enumerate((states[j], states[j + 1])):
            pts = X if sys.affine_jacobian else np.vstack([X, _pairwise_midpoints(X)])
            J = sys.jacobian(p, pts)
            upper_rate[j, k] = measure_batch(J, spec).max()
            lower_rate[j, k] = (-measure_batch(-J, spec)).min()
    dt = np.diff(times)
    eta_alt = np.concatenate([[0.0], np.cumsum(0.5 * dt * upper_rate.sum(axis=1))])
    eta_low = np.concatenate([[0.0], np.cumsum(0.5 * dt * lower_rate.sum(axis=1))])
    nk = cloud_resolution ** K.dim
    X = states[:, nk:nk + n_pairs]
    Y = states[:, nk + n_pairs:]
    dist = np.array([[composite_vector_norm(Y[t, i] - X[t, i], spec) for i in range(n_pairs)]
                     for t in range(len(times))])
    d0 = dist[0]
    ok50 = dist <= slack * np.exp(eta_bar)[:, None] * d0[None, :]
    ok_up = dist <= slack * np.exp(eta_alt)[:, None] * d0[None, :]
    ok_low = dist >= np.exp(eta_low)[:, None] * d0[None, :] / slack
    return {
        "times": times, "distance": dist, "eta_bar": eta_bar, "eta_alt": eta_alt,
        "eta_low": eta_low, "upper_ok": bool(ok50.all()), "alt_upper_ok": bool(ok_up.all()),
        "lower_ok": bool(ok_low.all()), "slack": slack, "pairs": n_pairs, "seed": seed,
    }
