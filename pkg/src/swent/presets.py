"""Bundled example systems, signals and the published table values.

Example 1 is a two-species Lotka-Volterra system switching between two
growth vectors; Example 2 appends an independent third species, giving a
block-diagonal system with blocks of sizes 2 and 1.  Signal ``sigma1`` is
periodic with dwell time 1000 in each mode; ``sigma2`` is the rate-setpoint
signal with ratio 9/10 whose active rates keep oscillating.
"""
from __future__ import annotations

from dataclasses import dataclass

from .bounds import BoundReport, all_bounds, bound_general
from .config import RunConfig, parse_config

__all__ = [
    "EXAMPLE1_INI",
    "EXAMPLE2_INI",
    "SIGNAL_INI",
    "TABLES",
    "TableCell",
    "example_config",
    "example1",
    "example2",
    "reproduce_table",
]

_SYSTEM1 = """\
[system]
type = lotka-volterra
r = [[-1, 2], [3, -1]]
A = [[[-1, 1/10], [1/10, -1]], [[-1, 1/10], [1/10, -1]]]
S = auto
"""

_SYSTEM2 = """\
[system]
type = lotka-volterra
r = [[-1, -1, 2], [3, 3, -1]]
A = [[[-1, 1/10, 0], [1/10, -1, 0], [0, 0, -1]], [[-1, 1/10, 0], [1/10, -1, 0], [0, 0, -1]]]
partition = [2, 1]
structure = block-diagonal
S = auto
"""

SIGNAL_INI = {
    "sigma1": """\
[signal]
kind = periodic
dwell = [1000, 1000]
horizon = 1e7
""",
    "sigma2": """\
[signal]
kind = setpoint
ratio = 9/10
t1 = 1
switches = 12
""",
}

EXAMPLE1_INI = _SYSTEM1 + "\n" + SIGNAL_INI["sigma1"]
EXAMPLE2_INI = _SYSTEM2 + "\n" + SIGNAL_INI["sigma2"]

# values as printed, two decimals (or fewer)
TABLES = {
    "table1": {
        "example": 1,
        "tags": ("Eq16", "Eq20", "Eq21"),
        "published": {"sigma1": (5.56, 5.56, 6.45), "sigma2": (6.27, 10.0, 6.45)},
    },
    "table2": {
        "example": 2,
        "tags": ("Eq16", "Eq20", "Eq21", "Eq34", "Eq39", "Eq40", "Eq41", "Eq42"),
        "published": {"sigma1": (8.0, 8.0, 10.0, 3.17, 3.17, 4.34, 4.34, 6.67),
                  "sigma2": (9.6, 14.4, 10.0, 6.06, 7.57, 6.2, 7.8, 6.67)},
    },
}

TOLERANCE = 0.01


def example_config(example: int, signal: str = "sigma1") -> RunConfig:
    system = {1: _SYSTEM1, 2: _SYSTEM2}[example]
    return parse_config(system + "\n" + SIGNAL_INI[signal], f"<example{example}-{signal}>")


def example1(signal: str = "sigma1"):
    """``(system, signal, S)`` for Example 1."""
    cfg = example_config(1, signal)
    sys = cfg.build_system()
    return sys, cfg.build_signal(), cfg.build_S(sys)


def example2(signal: str = "sigma1"):
    """``(system, signal, S)`` for Example 2."""
    cfg = example_config(2, signal)
    sys = cfg.build_system()
    return sys, cfg.build_signal(), cfg.build_S(sys)


@dataclass
class TableCell:
    signal: str
    tag: str
    computed: float
    published: float

    @property
    def deviation(self) -> float:
        return abs(self.computed - self.published)

    @property
    def ok(self) -> bool:
        return self.deviation <= TOLERANCE

    def to_dict(self) -> dict:
        return {"signal": self.signal, "tag": self.tag, "computed": self.computed,
                "published": self.published, "deviation": self.deviation, "ok": self.ok}


def reproduce_table(name: str, norm: str = "inf") -> tuple[list[TableCell], dict[str, BoundReport]]:
    """Compute every cell of a bundled table; returns cells and the full reports."""
    if name not in TABLES:
        raise KeyError(f"unknown table {name!r}; choose from {sorted(TABLES)}")
    spec = TABLES[name]
    cells: list[TableCell] = []
    reports: dict[str, BoundReport] = {}
    for signal, row in spec["published"].items():
        sys, sig, S = (example1 if spec["example"] == 1 else example2)(signal)
        report = bound_general(sys, sig, S, norm) if spec["example"] == 1 else all_bounds(sys, sig, S, norm)
        reports[signal] = report
        cells.extend(TableCell(signal, tag, report[tag], value) for tag, value in zip(spec["tags"], row))
    return cells, reports
