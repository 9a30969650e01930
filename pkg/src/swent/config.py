"""Run configuration in INI form with exact rational literals.

Sections and keys (all optional except ``[system]`` and ``[signal]``)::

    [system]
    type = lotka-volterra            ; or: linear
    r = [[-1, 2], [3, -1]]           ; LV only, one growth vector per mode
    A = [[[-1, 1/10], [1/10, -1]], [[-1, 1/10], [1/10, -1]]]
    partition = [2, 1]               ; optional block sizes
    structure = block-diagonal       ; general | interconnected | block-diagonal
    S = auto                         ; or [[lo, hi], ...]; auto needs the LV bound check

    [signal]
    kind = periodic                  ; periodic | setpoint | explicit | constant
    dwell = [1000, 1000]             ; periodic
    cycle = [0, 1]                   ; periodic, optional
    ratio = 9/10                     ; setpoint
    t1 = 1                           ; setpoint
    switches = 12                    ; setpoint
    initial_mode = 0                 ; explicit
    switch_times = [1, 5/2]          ; explicit
    mode_sequence = [1, 0]           ; explicit
    mode = 0                         ; constant
    modes = 2                        ; number of modes, optional
    horizon = 1e7

    [bounds]
    norm = inf
    tail_fraction = 1/2
    resolution = 41
    use_declared = true

    [estimate]
    K = [[3.8, 4], [2.8, 3]]         ; default: S
    eps = 1/10
    T = [1, 2, 3, 4, 5]
    resolution = auto                ; or an int / per-axis list
    step = 1/100
    seed = 42
    samples = 20000

    [simulate]
    x0 = [[4, 3]]
    T = 50
    step = 1/1000

Modes are numbered from 0.  Numbers may be integers, decimals, exponents or
rationals ``p/q``; they are kept as exact fractions until a float is needed.
"""
from __future__ import annotations

import configparser
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .dynamics import CompactBox, Structure, SwitchedSystem, linear_system, lv_limit_box, lv_system
from .errors import SwentError
from .measures import Norm
from .switching import (SwitchingSignal, make_constant, make_explicit, make_periodic,
                        make_setpoint)

__all__ = ["ConfigError", "RunConfig", "parse_value", "format_value", "load_config", "parse_config"]

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_ATOM = re.compile(rf"(?<![\w.\"])({_NUMBER}(?:\s*/\s*{_NUMBER})?)(?![\w.\"])")

SECTIONS = ("system", "signal", "bounds", "estimate", "simulate")


class ConfigError(SwentError, ValueError):
    """Malformed configuration; the message names the section, key and line."""


def parse_value(text: str):
    """Parse a scalar or nested list; numeric atoms become :class:`Fraction`.

    >>> parse_value("[0, 10/3]")
    [Fraction(0, 1), Fraction(10, 3)]
    """
    text = text.strip()
    quoted = _ATOM.sub(lambda m: '"#' + re.sub(r"\s+", "", m.group(1)) + '"', text)
    try:
        obj = json.loads(quoted)
    except json.JSONDecodeError:
        return text  # bare word such as "auto" or "periodic"

    def conv(x):
        if isinstance(x, list):
            return [conv(v) for v in x]
        if isinstance(x, str) and x.startswith("#"):
            num, _, den = x[1:].partition("/")
            value = Fraction(num)
            return value / Fraction(den) if den else value
        return x

    return conv(obj)


def format_value(value) -> str:
    if isinstance(value, list):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _floats(x):
    if isinstance(x, list):
        return [_floats(v) for v in x]
    return float(x)


@dataclass
class RunConfig:
    """Parsed configuration; every section is kept as a ``key -> value`` dict."""

    system: dict
    signal: dict
    bounds: dict = field(default_factory=dict)
    estimate: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    source: str = field(default="<string>", compare=False)

    # -- builders ------------------------------------------------------------

    def build_system(self) -> SwitchedSystem:
        s = self.system
        kind = str(s.get("type", "lotka-volterra")).lower()
        partition = s.get("partition")
        partition = [int(k) for k in partition] if partition is not None else None
        structure = s.get("structure")
        if "A" not in s:
            raise ConfigError(f"{self.source}: [system] needs key 'A'")
        A = _floats(s["A"])
        if kind in ("lotka-volterra", "lv"):
            if "r" not in s:
                raise ConfigError(f"{self.source}: [system] type lotka-volterra needs key 'r'")
            return lv_system(_floats(s["r"]), A, partition, structure)
        if kind == "linear":
            return linear_system(A, partition, structure)
        raise ConfigError(f"{self.source}: [system] unknown type {kind!r}")

    def build_S(self, sys: SwitchedSystem | None = None) -> CompactBox:
        sys = sys or self.build_system()
        S = self.system.get("S", "auto")
        if isinstance(S, str):
            if S.lower() != "auto":
                raise ConfigError(f"{self.source}: [system] S must be 'auto' or a list of intervals")
            part = sys.partition if sys.structure is Structure.BLOCK_DIAGONAL else None
            return lv_limit_box(sys, part)
        return CompactBox.from_intervals(_floats(S))

    def build_signal(self, horizon=None) -> SwitchingSignal:
        g = self.signal
        kind = str(g.get("kind", "")).lower()
        h = horizon if horizon is not None else g.get("horizon")
        modes = int(g["modes"]) if "modes" in g else None
        if kind == "periodic":
            cycle = g.get("cycle")
            return make_periodic(_floats(_need(g, "dwell", self.source)),
                                 [int(c) for c in cycle] if cycle is not None else None,
                                 horizon=_opt_float(h), num_modes=modes)
        if kind == "setpoint":
            return make_setpoint(Fraction(g.get("ratio", Fraction(9, 10))), Fraction(g.get("t1", 1)),
                                 int(g["switches"]) if "switches" in g else None,
                                 horizon=h if h is None else Fraction(h))
        if kind == "explicit":
            return make_explicit(int(g.get("initial_mode", 0)),
                                 _floats(_need(g, "switch_times", self.source)),
                                 [int(m) for m in _need(g, "mode_sequence", self.source)],
                                 horizon=_opt_float(h), num_modes=modes)
        if kind == "constant":
            return make_constant(int(g.get("mode", 0)), horizon=_opt_float(h) or 1.0,
                                 num_modes=modes)
        raise ConfigError(f"{self.source}: [signal] kind must be periodic, setpoint, explicit "
                          f"or constant, got {kind!r}")

    @property
    def norm(self) -> Norm:
        return Norm.parse(self.bounds.get("norm", "inf"))

    def seed(self, default: int = 42) -> int:
        return int(self.estimate.get("seed", default))

    # -- serialization -------------------------------------------------------

    def to_ini(self) -> str:
        lines = []
        for name in SECTIONS:
            sec = getattr(self, name)
            if not sec:
                continue
            lines.append(f"[{name}]")
            lines.extend(f"{k} = {format_value(v)}" for k, v in sec.items())
            lines.append("")
        return "\n".join(lines)


def _need(sec: dict, key: str, source: str):
    if key not in sec:
        raise ConfigError(f"{source}: [signal] missing key {key!r}")
    return sec[key]


def _opt_float(x):
    return None if x is None else float(x)


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip().lower()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return i
    return None


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse INI text into a :class:`RunConfig` and check that it builds."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str  # keys are case sensitive ("A" vs "a")
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    unknown = [s for s in cp.sections() if s.lower() not in SECTIONS]
    if unknown:
        raise ConfigError(f"{source}: unknown section(s) {unknown}; expected {list(SECTIONS)}")
    data = {name: {} for name in SECTIONS}
    for sec in cp.sections():
        for key, raw in cp.items(sec):
            data[sec.lower()][key] = parse_value(raw)
    for name in ("system", "signal"):
        if not data[name]:
            raise ConfigError(f"{source}: missing section [{name}]")
    cfg = RunConfig(**data, source=source)
    for section, build in (("system", cfg.build_system), ("signal", cfg.build_signal)):
        try:
            build()
        except ConfigError:
            raise
        except (SwentError, ValueError, TypeError, KeyError) as exc:
            key = _guess_key(str(exc), data[section])
            line = _line_of(text, section, key) if key else None
            where = f"line {line}, " if line else ""
            field_ = f"key {key!r}" if key else "section"
            raise ConfigError(f"{source}: {where}[{section}] {field_}: {exc}") from None
    return cfg


def _guess_key(message: str, section: dict) -> str | None:
    lowered = message.lower()
    for key in section:
        if re.search(rf"\b{re.escape(key.lower())}\b", lowered):
            return key
    return next(iter(section), None)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))
