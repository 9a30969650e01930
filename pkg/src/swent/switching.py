"""Piecewise-constant switching signals and their active times and rates.

A signal is right-continuous: the mode on ``[t_k, t_{k+1})`` is
``mode_sequence[k]`` (with ``t_0 = 0`` carrying ``initial_mode``).  Modes are
0-based indices.

Rates are queried exactly from interval lengths.  The asymptotic quantities
(limsup of rates, persistent sets) can only be estimated at a finite horizon;
all estimators here share one convention, see :func:`tail_window` and
:func:`candidate_times`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import HorizonError, ValidationError

__all__ = [
    "DeclaredAsymptotics",
    "SwitchingSignal",
    "RateProfile",
    "make_periodic",
    "make_setpoint",
    "make_constant",
    "make_explicit",
    "asymptotic_rates",
    "tail_window",
    "candidate_times",
    "DEFAULT_TAIL_FRACTION",
    "DEFAULT_THRESHOLD",
]

DEFAULT_TAIL_FRACTION = 0.5
DEFAULT_THRESHOLD = 1e-6
# a periodic signal is generated over this many time units unless asked otherwise
_PERIODIC_DEFAULT_HORIZON = 1e7
# generations of the set-point rule kept by default (t_1 .. t_12)
_SETPOINT_DEFAULT_SWITCHES = 12


@dataclass(frozen=True)
class DeclaredAsymptotics:
    """Analytically known asymptotics of a constructed signal.

    ``limit_points`` are the extreme points of the set of limit points of the
    rate vector ``(rho_p(t))_p`` as ``t -> inf``.  Any limsup of a convex
    function of the rates is the maximum of that function over these points.
    A single point means the rates converge.
    """

    rho_hat: tuple[float, ...]
    persistent: frozenset[int]
    strongly_persistent: frozenset[int]
    limit_points: tuple[tuple[float, ...], ...]

    @property
    def convergent(self) -> bool:
        return len(self.limit_points) == 1

    def to_dict(self) -> dict:
        return {
            "rho_hat": list(self.rho_hat),
            "persistent": sorted(self.persistent),
            "strongly_persistent": sorted(self.strongly_persistent),
            "limit_points": [list(p) for p in self.limit_points],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeclaredAsymptotics":
        rho = tuple(float(x) for x in d["rho_hat"])
        points = d.get("limit_points") or [rho]
        return cls(
            rho_hat=rho,
            persistent=frozenset(int(p) for p in d["persistent"]),
            strongly_persistent=frozenset(int(p) for p in d["strongly_persistent"]),
            limit_points=tuple(tuple(float(x) for x in p) for p in points),
        )


@dataclass(frozen=True, eq=False)
class SwitchingSignal:
    """Right-continuous mode schedule known up to ``horizon``.

    ``switch_times[k]`` is the instant the mode changes to
    ``mode_sequence[k]``.  ``exact_switch_times`` optionally carries the same
    instants as rationals for constructed signals.
    """

    initial_mode: int
    switch_times: np.ndarray
    mode_sequence: np.ndarray
    horizon: float
    num_modes: int
    declared: DeclaredAsymptotics | None = None
    kind: str = "explicit"
    params: dict = field(default_factory=dict)
    exact_switch_times: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        times = np.asarray(self.switch_times, dtype=float).reshape(-1)
        modes = np.asarray(self.mode_sequence, dtype=int).reshape(-1)
        if times.shape != modes.shape:
            raise ValidationError("switch_times and mode_sequence differ in length")
        if times.size and (times[0] <= 0 or np.any(np.diff(times) <= 0)):
            raise ValidationError("switch times must be positive and strictly increasing")
        if not np.all(np.isfinite(times)):
            raise ValidationError("switch times must be finite")
        init = int(self.initial_mode)
        seq = np.concatenate([[init], modes])
        if np.any(seq < 0):
            raise ValidationError("mode indices must be nonnegative")
        if np.any(seq[1:] == seq[:-1]):
            raise ValidationError("consecutive modes must differ")
        nm = int(self.num_modes)
        if nm <= int(seq.max()):
            raise ValidationError(f"num_modes={nm} too small for mode index {int(seq.max())}")
        horizon = float(self.horizon)
        if not horizon > 0:
            raise ValidationError("horizon must be positive")
        if times.size and times[-1] > horizon:
            raise ValidationError("a switch lies beyond the declared horizon")
        times.flags.writeable = False
        modes.flags.writeable = False
        object.__setattr__(self, "initial_mode", init)
        object.__setattr__(self, "switch_times", times)
        object.__setattr__(self, "mode_sequence", modes)
        object.__setattr__(self, "num_modes", nm)
        object.__setattr__(self, "horizon", horizon)
        # segment tables: segment j is [starts[j], starts[j+1]) with mode seg_modes[j]
        starts = np.concatenate([[0.0], times])
        seg_modes = seq
        lengths = np.diff(np.concatenate([starts, [horizon]]))
        tau = np.zeros((starts.size, nm))
        if starts.size > 1:
            inc = np.zeros((starts.size - 1, nm))
            inc[np.arange(starts.size - 1), seg_modes[:-1]] = lengths[:-1]
            tau[1:] = np.cumsum(inc, axis=0)
        object.__setattr__(self, "_starts", starts)
        object.__setattr__(self, "_seg_modes", seg_modes)
        object.__setattr__(self, "_tau_at_start", tau)

    # -- basic queries -------------------------------------------------
    @property
    def modes(self) -> range:
        return range(self.num_modes)

    @property
    def num_switches(self) -> int:
        return int(self.switch_times.size)

    def _check_time(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValidationError("time must be nonnegative")
        if np.any(t > self.horizon * (1 + 1e-12)):
            raise HorizonError(
                f"time {float(np.max(t))} beyond the generated horizon {self.horizon}")
        return t

    def _segment(self, t: np.ndarray) -> np.ndarray:
        return np.searchsorted(self._starts, t, side="right") - 1

    def mode_at(self, t):
        """Mode active at ``t`` (right-continuous); vectorised over ``t``."""
        t = self._check_time(t)
        out = self._seg_modes[self._segment(t)]
        return int(out) if out.ndim == 0 else out

    def active_times(self, t) -> np.ndarray:
        """``tau_p(t)`` for every mode; shape ``t.shape + (num_modes,)``."""
        t = self._check_time(t)
        j = self._segment(t)
        tau = self._tau_at_start[j].copy()
        elapsed = t - self._starts[j]
        m = self._seg_modes[j]
        if tau.ndim == 1:
            tau[m] += elapsed
        else:
            tau[np.arange(tau.shape[0]), m] += elapsed
        return tau

    def active_time(self, p: int, t) -> float:
        tau = self.active_times(t)
        return tau[..., int(p)] if np.ndim(t) else float(tau[int(p)])

    def active_rates(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        tau = self.active_times(t)
        with np.errstate(invalid="ignore", divide="ignore"):
            rates = tau / t[..., None]
        zero = t == 0
        if np.any(zero):
            rates[zero] = 0.0
            rates[zero, self.initial_mode] = 1.0
        return rates

    def active_rate(self, p: int, t) -> float:
        rates = self.active_rates(t)
        return rates[..., int(p)] if np.ndim(t) else float(rates[int(p)])

    def breakpoints(self, upto: float | None = None) -> np.ndarray:
        """``0`` and every switch time not exceeding ``upto``."""
        upto = self.horizon if upto is None else float(upto)
        return self._starts[self._starts <= upto]

    def segments(self, t0: float, t1: float):
        """``(start, end, mode)`` triples partitioning ``[t0, t1]``."""
        self._check_time([t0, t1])
        j0, j1 = int(self._segment(np.float64(t0))), int(self._segment(np.float64(t1)))
        out = []
        for j in range(j0, j1 + 1):
            a = max(t0, self._starts[j])
            b = min(t1, self._starts[j + 1] if j + 1 < self._starts.size else t1)
            if b > a:
                out.append((float(a), float(b), int(self._seg_modes[j])))
        return out

    def truncated(self, horizon: float) -> "SwitchingSignal":
        keep = self.switch_times <= horizon
        exact = None
        if self.exact_switch_times is not None:
            exact = tuple(self.exact_switch_times[: int(keep.sum())])
        return SwitchingSignal(self.initial_mode, self.switch_times[keep],
                               self.mode_sequence[keep], horizon, self.num_modes,
                               self.declared, self.kind, dict(self.params), exact)

    # -- serialisation -------------------------------------------------
    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "initial_mode": self.initial_mode,
            "num_modes": self.num_modes,
            "horizon": self.horizon,
            "switch_times": [float(x) for x in self.switch_times],
            "mode_sequence": [int(x) for x in self.mode_sequence],
            "params": dict(self.params),
        }
        if self.declared is not None:
            out["declared"] = self.declared.to_dict()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SwitchingSignal":
        declared = d.get("declared")
        return cls(
            initial_mode=int(d["initial_mode"]),
            switch_times=np.asarray(d.get("switch_times", []), dtype=float),
            mode_sequence=np.asarray(d.get("mode_sequence", []), dtype=int),
            horizon=float(d["horizon"]),
            num_modes=int(d["num_modes"]),
            declared=DeclaredAsymptotics.from_dict(declared) if declared else None,
            kind=d.get("kind", "explicit"),
            params=dict(d.get("params", {})),
        )

    def same_as(self, other: "SwitchingSignal") -> bool:
        return (self.initial_mode == other.initial_mode
                and self.num_modes == other.num_modes
                and self.horizon == other.horizon
                and np.array_equal(self.switch_times, other.switch_times)
                and np.array_equal(self.mode_sequence, other.mode_sequence)
                and self.declared == other.declared)


# -- constructors ------------------------------------------------------

def make_explicit(initial_mode: int, switch_times: Sequence[float],
                  mode_sequence: Sequence[int], horizon: float | None = None,
                  num_modes: int | None = None,
                  declared: DeclaredAsymptotics | None = None) -> SwitchingSignal:
    times = np.asarray(switch_times, dtype=float)
    modes = np.asarray(mode_sequence, dtype=int)
    if horizon is None:
        horizon = float(times[-1]) if times.size else 1.0
    if num_modes is None:
        num_modes = int(max([initial_mode, *modes.tolist()])) + 1
    return SwitchingSignal(initial_mode, times, modes, horizon, num_modes, declared)


def make_constant(mode: int = 0, horizon: float = 1.0, num_modes: int | None = None) -> SwitchingSignal:
    nm = mode + 1 if num_modes is None else num_modes
    rho = tuple(1.0 if p == mode else 0.0 for p in range(nm))
    declared = DeclaredAsymptotics(rho, frozenset([mode]), frozenset([mode]), (rho,))
    return SwitchingSignal(mode, np.zeros(0), np.zeros(0, dtype=int), horizon, nm,
                           declared, "constant", {"mode": int(mode)})


def make_periodic(dwell_times: Sequence[float], mode_cycle: Sequence[int] | None = None,
                  horizon: float | None = None, num_modes: int | None = None) -> SwitchingSignal:
    """Cycle through ``mode_cycle`` spending ``dwell_times[k]`` in its k-th entry.

    ``dwell_times`` is aligned with ``mode_cycle`` (default ``0, 1, ...``).
    """
    dwell = [float(d) for d in dwell_times]
    cycle = list(range(len(dwell))) if mode_cycle is None else [int(m) for m in mode_cycle]
    if not cycle:
        raise ValidationError("empty mode cycle")
    if len(dwell) != len(cycle):
        raise ValidationError("need one dwell time per entry of the mode cycle")
    if any(not d > 0 for d in dwell):
        raise ValidationError("dwell times must be positive")
    if len(cycle) > 1 and (any(a == b for a, b in zip(cycle, cycle[1:])) or cycle[0] == cycle[-1]):
        raise ValidationError("consecutive modes in the cycle must differ")
    nm = max(cycle) + 1 if num_modes is None else int(num_modes)
    if horizon is None:
        horizon = _PERIODIC_DEFAULT_HORIZON
    period = sum(dwell)
    rho = [0.0] * nm
    for d, m in zip(dwell, cycle):
        rho[m] += d / period
    rho = tuple(rho)
    active = frozenset(cycle)
    declared = DeclaredAsymptotics(rho, active, active, (rho,))
    params = {"dwell": dwell, "cycle": cycle}
    if len(cycle) == 1:
        return SwitchingSignal(cycle[0], np.zeros(0), np.zeros(0, dtype=int), horizon, nm,
                               declared, "periodic", params)
    n_periods = int(math.floor(horizon / period)) + 1
    offsets = np.cumsum([0.0] + dwell[:-1])
    starts = (np.arange(n_periods)[:, None] * period + offsets[None, :]).reshape(-1)
    modes = np.tile(np.asarray(cycle), n_periods)
    starts, modes = starts[1:], modes[1:]
    keep = starts <= horizon
    return SwitchingSignal(cycle[0], starts[keep], modes[keep], horizon, nm,
                           declared, "periodic", params)


def make_setpoint(ratio=Fraction(9, 10), t1=1, num_switches: int | None = None,
                  horizon: float | None = None) -> SwitchingSignal:
    """Two-mode signal switching whenever the active mode's rate reaches ``ratio``.

    Mode 0 runs on ``[0, t1)``; afterwards each switch happens at the first
    instant the current mode's active rate reaches ``ratio``.  With the
    active mode's time ``a`` and the other's ``b`` at the switch, the next
    switch is at ``t = b / (1 - ratio)``.  Switch times are generated in
    exact rational arithmetic.  By default ``t_1 .. t_12`` are generated and
    the horizon is the last of them.
    """
    r = Fraction(ratio) if not isinstance(ratio, float) else Fraction(ratio).limit_denominator(10**9)
    if not (Fraction(1, 2) < r < 1):
        raise ValidationError(f"ratio must lie in (1/2, 1), got {ratio}")
    t1 = Fraction(t1) if not isinstance(t1, float) else Fraction(t1).limit_denominator(10**9)
    if t1 <= 0:
        raise ValidationError("t1 must be positive")
    if num_switches is None and horizon is None:
        num_switches = _SETPOINT_DEFAULT_SWITCHES
    times = [t1]
    tau = [t1, Fraction(0)]  # active time of mode 0, mode 1 at the latest switch
    current = 1
    while True:
        if num_switches is not None and len(times) >= num_switches:
            break
        # the rate of `current` reaches r when tau_current + (t - t_k) = r t
        t_next = tau[1 - current] / (1 - r)
        if horizon is not None and t_next > horizon:
            break
        tau[current] += t_next - times[-1]
        times.append(t_next)
        current = 1 - current
    modes = [(k + 1) % 2 for k in range(len(times))]
    H = float(horizon) if horizon is not None else float(times[-1])
    rf = float(r)
    declared = DeclaredAsymptotics((rf, rf), frozenset({0, 1}), frozenset({0, 1}),
                                   ((rf, 1 - rf), (1 - rf, rf)))
    params = {"ratio": str(r), "t1": str(t1)}
    return SwitchingSignal(0, np.array([float(t) for t in times]), np.array(modes), H, 2,
                           declared, "setpoint", params, tuple(times))


# -- asymptotics -------------------------------------------------------

def tail_window(sig: SwitchingSignal, horizon: float | None = None,
                tail_fraction: float = DEFAULT_TAIL_FRACTION) -> tuple[float, float]:
    """Window ``[w0, H]`` standing in for ``t -> inf``.

    ``w0`` is the earlier of ``(1 - tail_fraction) H`` and the time of the
    ``(num_modes + 1)``-th last switch, so slowly alternating signals still
    have a full round of modes inside the window.
    """
    H = sig.horizon if horizon is None else float(horizon)
    if not H > 0:
        raise ValidationError("horizon must be positive")
    if not 0 < tail_fraction <= 1:
        raise ValidationError("tail_fraction must lie in (0, 1]")
    sig._check_time(H)
    w0 = (1.0 - tail_fraction) * H
    times = sig.switch_times[sig.switch_times <= H]
    k = sig.num_modes + 1
    if times.size >= k:
        w0 = min(w0, float(times[-k]))
    return w0, H


def candidate_times(sig: SwitchingSignal, horizon: float | None = None,
                    tail_fraction: float = DEFAULT_TAIL_FRACTION) -> np.ndarray:
    """Positive evaluation times for finite-horizon limsups.

    Contains ``w0``, every switch in the window and ``H``.  Every functional of
    the rates evaluated here is monotone between consecutive candidates, so
    maxima over the window are exact.
    """
    w0, H = tail_window(sig, horizon, tail_fraction)
    inside = sig.switch_times[(sig.switch_times >= w0) & (sig.switch_times <= H)]
    pts = np.unique(np.concatenate([[w0, H], inside]))
    return pts[pts > 0]


@dataclass(frozen=True)
class RateProfile:
    """Finite-horizon estimates of the asymptotic rate quantities."""

    rho_hat: np.ndarray
    estimated_rho_hat: np.ndarray
    persistent: frozenset[int]
    strongly_persistent: frozenset[int]
    window: tuple[float, float]
    horizon: float
    declared: bool
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "rho_hat": [float(x) for x in self.rho_hat],
            "estimated_rho_hat": [float(x) for x in self.estimated_rho_hat],
            "persistent": sorted(self.persistent),
            "strongly_persistent": sorted(self.strongly_persistent),
            "window": [float(self.window[0]), float(self.window[1])],
            "horizon": float(self.horizon),
            "declared": self.declared,
            "warning": self.warning,
        }


def asymptotic_rates(sig: SwitchingSignal, horizon: float | None = None,
                     tail_fraction: float = DEFAULT_TAIL_FRACTION,
                     threshold: float = DEFAULT_THRESHOLD,
                     use_declared: bool = True) -> RateProfile:
    """Estimate ``rho_hat``, ``P_inf`` and ``P_+`` over the tail window.

    Declared metadata, when present and ``use_declared`` is set, provides the
    returned values; the breakpoint estimate is always included.
    """
    w0, H = tail_window(sig, horizon, tail_fraction)
    cand = candidate_times(sig, H, tail_fraction)
    est = sig.active_rates(cand).max(axis=0)
    active = {m for _, _, m in sig.segments(w0, H)} if H > w0 else {sig.mode_at(H)}
    persistent = frozenset(int(m) for m in active)
    strong = frozenset(p for p in persistent if est[p] > threshold)
    warning = None
    n_sw = int(np.sum(sig.switch_times <= H))
    if n_sw < 10 and sig.num_switches > 0 and sig.kind != "constant":
        warning = f"only {n_sw} switches up to the horizon; tail estimates are unreliable"
        warnings.warn(warning, RuntimeWarning, stacklevel=2)
    if use_declared and sig.declared is not None:
        d = sig.declared
        return RateProfile(np.asarray(d.rho_hat, dtype=float), est, d.persistent,
                           d.strongly_persistent, (w0, H), H, True, warning)
    return RateProfile(est, est, persistent, strong, (w0, H), H, False, warning)
