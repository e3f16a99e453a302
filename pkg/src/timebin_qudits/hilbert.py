"""Discrete mode space for ultrafast time-bin qudits.

A mode is a (fine time bin, coarse time offset, polarization) triple.  Fine bins
are picosecond-scale slots of pitch ``fine_pitch_ps``; coarse offsets are the
nanosecond-scale shifts introduced by polarization time delays and are stored
as integer picoseconds so that bin identity is exact.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import GridMismatchError, InvalidGridError, InvalidModeError

PRUNE_THRESHOLD = 1e-15
NORM_SLACK = 1e-12


class Polarization(enum.IntEnum):
    H = 0
    V = 1

    @property
    def other(self) -> "Polarization":
        return Polarization(1 - self.value)

    @classmethod
    def parse(cls, value) -> "Polarization":
        if isinstance(value, Polarization):
            return value
        if isinstance(value, str) and value.upper() in ("H", "V"):
            return cls[value.upper()]
        raise InvalidModeError(f"not a polarization: {value!r}", value=repr(value))


def ns_to_ps(value) -> int:
    """Convert a nanosecond value to exact integer picoseconds.

    Floats go through their shortest repr, so ``2.6`` becomes 2600 and not
    2599.9999...
    """
    if isinstance(value, float):
        value = repr(value)
    ps = Fraction(value) * 1000
    if ps.denominator != 1:
        raise InvalidGridError(f"{value} ns is not a whole number of picoseconds", value=str(value))
    return int(ps)


def ps_to_ns(value: int) -> float:
    return value / 1000.0


@dataclass(frozen=True, order=True)
class ModeLabel:
    fine_bin: int
    coarse_ps: int
    pol: Polarization

    def __post_init__(self):
        # coerce plain ints / "H" strings so labels hash and compare consistently
        object.__setattr__(self, "pol", Polarization.parse(self.pol))

    @property
    def coarse_ns(self) -> float:
        return ps_to_ns(self.coarse_ps)

    def arrival_ps(self, fine_pitch_ps: float) -> float:
        return self.coarse_ps + self.fine_bin * fine_pitch_ps

    def __repr__(self):
        return f"ModeLabel(t{self.fine_bin}, {self.coarse_ps}ps, {self.pol.name})"


@dataclass(frozen=True)
class TimeGrid:
    """Fine-bin pitch, qudit dimension and the coarse delays available on the grid.

    Coarse offsets reachable on the grid are all subset sums of ``coarse_delays_ps``.
    """

    fine_pitch_ps: float = 2.25
    dimension: int = 4
    coarse_delays_ps: tuple[int, ...] = (2600, 5600)

    def __post_init__(self):
        object.__setattr__(self, "coarse_delays_ps", tuple(int(x) for x in self.coarse_delays_ps))
        if not self.fine_pitch_ps > 0:
            raise InvalidGridError("fine pitch must be positive", fine_pitch_ps=self.fine_pitch_ps)
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise InvalidGridError("dimension must be an integer >= 2", dimension=self.dimension)
        if any(x < 0 for x in self.coarse_delays_ps):
            raise InvalidGridError("coarse delays must be non-negative", coarse_delays_ps=self.coarse_delays_ps)
        positive = [x for x in self.coarse_delays_ps if x > 0]
        # fine structure must stay well inside one coarse bin
        if positive and self.dimension * self.fine_pitch_ps * 10 > min(positive):
            raise InvalidGridError(
                "fine structure would alias into neighbouring coarse bins",
                span_ps=self.dimension * self.fine_pitch_ps,
                min_delay_ps=min(positive),
            )

    @classmethod
    def from_ns(cls, fine_pitch_ps: float, dimension: int, coarse_delays_ns: Iterable) -> "TimeGrid":
        return cls(fine_pitch_ps, dimension, tuple(ns_to_ps(x) for x in coarse_delays_ns))

    @property
    def coarse_offsets(self) -> frozenset[int]:
        sums = {0}
        for r in range(1, len(self.coarse_delays_ps) + 1):
            for combo in itertools.combinations(self.coarse_delays_ps, r):
                sums.add(sum(combo))
        return frozenset(sums)

    def contains(self, label: ModeLabel) -> bool:
        """Valid as a prepared (input) mode: fine bin in [0, d)."""
        return 0 <= label.fine_bin < self.dimension and label.coarse_ps in self.coarse_offsets

    def routable(self, label: ModeLabel) -> bool:
        """Reachable inside an apparatus.

        Crystals shift the delayed polarization to earlier bins by at most d-1 in
        total, so light left in the wrong polarization by an imperfect switch can
        end up as early as bin -(d-1).
        """
        return -self.dimension < label.fine_bin < self.dimension and label.coarse_ps in self.coarse_offsets

    def check(self, label: ModeLabel) -> ModeLabel:
        if not isinstance(label, ModeLabel) or not self.contains(label):
            raise InvalidModeError(f"{label!r} is not on the grid", label=repr(label), dimension=self.dimension)
        return label

    def to_dict(self) -> dict:
        return {
            "fine_pitch_ps": self.fine_pitch_ps,
            "dimension": self.dimension,
            "coarse_delays_ps": list(self.coarse_delays_ps),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TimeGrid":
        return cls(float(data["fine_pitch_ps"]), int(data["dimension"]), tuple(data["coarse_delays_ps"]))


@dataclass(frozen=True)
class PhotonicState:
    """Sparse, immutable single-photon state over the grid's modes.

    The squared norm drops below one when loss has been applied.
    """

    grid: TimeGrid
    amplitudes: Mapping[ModeLabel, complex] = field(default_factory=dict)

    def __post_init__(self):
        amps = {}
        for label, amp in self.amplitudes.items():
            amp = complex(amp)
            if abs(amp) >= PRUNE_THRESHOLD:
                amps[label] = amp
        object.__setattr__(self, "amplitudes", MappingProxyType(amps))

    def __getitem__(self, label: ModeLabel) -> complex:
        return self.amplitudes.get(label, 0j)

    def __len__(self):
        return len(self.amplitudes)

    @property
    def modes(self) -> list[ModeLabel]:
        return sorted(self.amplitudes)

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def norm(self) -> float:
        return float(np.sqrt(self.norm_squared()))

    def normalized(self) -> "PhotonicState":
        n = self.norm()
        if n == 0:
            raise InvalidModeError("cannot normalise the zero state")
        return self * (1 / n)

    def __mul__(self, scalar) -> "PhotonicState":
        scalar = complex(scalar)
        return PhotonicState(self.grid, {k: scalar * v for k, v in self.amplitudes.items()})

    __rmul__ = __mul__

    def __add__(self, other: "PhotonicState") -> "PhotonicState":
        _same_grid(self, other)
        amps = dict(self.amplitudes)
        for k, v in other.amplitudes.items():
            amps[k] = amps.get(k, 0j) + v
        return PhotonicState(self.grid, amps)

    def __sub__(self, other: "PhotonicState") -> "PhotonicState":
        return self + (-1) * other

    def vector(self, modes: list[ModeLabel]) -> np.ndarray:
        """Dense amplitude vector in the given mode order; modes not listed must be empty."""
        index = {m: i for i, m in enumerate(modes)}
        vec = np.zeros(len(modes), dtype=complex)
        for label, amp in self.amplitudes.items():
            if label not in index:
                raise InvalidModeError(f"{label!r} missing from the supplied mode list", label=repr(label))
            vec[index[label]] = amp
        return vec

    @classmethod
    def from_vector(cls, grid: TimeGrid, modes: list[ModeLabel], vec) -> "PhotonicState":
        for m in modes:
            if not grid.routable(m):
                raise InvalidModeError(f"{m!r} is not on the grid", label=repr(m))
        return cls(grid, dict(zip(modes, vec)))


def _same_grid(a: PhotonicState, b: PhotonicState):
    if a.grid != b.grid:
        raise GridMismatchError("states live on different grids", left=a.grid.to_dict(), right=b.grid.to_dict())


def make_basis_state(label: ModeLabel, grid: TimeGrid) -> PhotonicState:
    return PhotonicState(grid, {grid.check(label): 1.0})


def inner_product(a: PhotonicState, b: PhotonicState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _same_grid(a, b)
    small = a if len(a) <= len(b) else b
    total = 0j
    for label in small.amplitudes:
        total += np.conj(a[label]) * b[label]
    return complex(total)


def mode_probability(s: PhotonicState, predicate: Callable[[ModeLabel], bool]) -> float:
    return float(sum(abs(a) ** 2 for m, a in s.amplitudes.items() if predicate(m)))


def qudit_state(grid: TimeGrid, coefficients, pol: Polarization = Polarization.V) -> PhotonicState:
    """Time-bin superposition sum_m c_m |t_m> in one polarization at zero coarse offset."""
    coefficients = np.asarray(coefficients, dtype=complex)
    if coefficients.shape != (grid.dimension,):
        raise InvalidModeError("need one coefficient per fine bin", got=list(coefficients.shape))
    return PhotonicState(grid, {ModeLabel(m, 0, pol): c for m, c in enumerate(coefficients)})
