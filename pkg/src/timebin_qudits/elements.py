"""Jones-calculus optical elements acting on :class:`PhotonicState`.

Polarization vectors are ordered (H, V).  Angles are in radians throughout.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import GridMismatchError, InvalidElementError, InvalidRoutingError
from .hilbert import ModeLabel, PhotonicState, Polarization, TimeGrid, ps_to_ns

TWO_PI = 2 * math.pi


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def retarder(theta: float, retardance: float) -> np.ndarray:
    """Linear retarder with its reference axis at ``theta``; no global phase correction."""
    return rotation(theta) @ np.diag([1.0, np.exp(1j * retardance)]) @ rotation(-theta)


def waveplate_jones(kind: str, angle: float) -> np.ndarray:
    """Jones matrix of a half- or quarter-wave plate with its axis at ``angle``.

    Global phase convention: the (H, H) entry is made real and non-negative
    whenever it is not already real.  A half-wave plate is therefore exactly
    ``[[cos 2a, sin 2a], [sin 2a, -cos 2a]]``.
    """
    if kind == "half":
        m = rotation(angle) @ np.diag([1.0, -1.0]) @ rotation(-angle)
    elif kind == "quarter":
        m = retarder(angle, math.pi / 2)
    else:
        raise InvalidElementError(f"unknown wave plate kind {kind!r}", kind=kind)
    h = m[0, 0]
    if abs(h) > 1e-15 and abs(h.imag) > 1e-15:
        m = m * np.conj(h) / abs(h)
    return m


def ups_jones(theta: float, delta_phi: float) -> np.ndarray:
    """Ultrafast polarization switch: the pump-aligned component picks up ``delta_phi``.

    ``theta`` is the angle between pump and signal polarization.
    """
    return retarder(theta, delta_phi)


def switch_efficiency(theta: float, delta_phi: float) -> float:
    """Closed-form H->V switching probability, sin^2(2 theta) sin^2(delta_phi / 2)."""
    return math.sin(2 * theta) ** 2 * math.sin(delta_phi / 2) ** 2


def nonlinear_phase(n2: float, effective_length: float, pump_intensity: float, signal_wavelength: float) -> float:
    """Cross-phase-modulation phase 8 pi n2 L_eff I_pump / (3 lambda_signal), SI units."""
    return 8 * math.pi * n2 * effective_length * pump_intensity / (3 * signal_wavelength)


@dataclass(frozen=True)
class Waveplate:
    kind: str
    angle: float

    def __post_init__(self):
        if self.kind not in ("half", "quarter"):
            raise InvalidElementError(f"unknown wave plate kind {self.kind!r}", kind=self.kind)


@dataclass(frozen=True)
class PolarizingSplitter:
    kept_pol: Polarization

    def __post_init__(self):
        object.__setattr__(self, "kept_pol", Polarization.parse(self.kept_pol))


@dataclass(frozen=True)
class BirefringentDelay:
    """alpha-BBO crystal; one bin of shift corresponds to 5 mm of crystal."""

    shift_bins: int
    delayed_pol: Polarization = Polarization.V

    def __post_init__(self):
        object.__setattr__(self, "delayed_pol", Polarization.parse(self.delayed_pol))
        if int(self.shift_bins) != self.shift_bins or self.shift_bins < 1:
            raise InvalidElementError("shift_bins must be a positive integer", shift_bins=self.shift_bins)

    @property
    def crystal_length_mm(self) -> float:
        return 5.0 * self.shift_bins


@dataclass(frozen=True)
class UltrafastSwitch:
    """Pump-gated polarization rotation on selected fine bins.

    ``coarse_offsets_ps`` restricts the pump to particular nanosecond slots;
    ``None`` means the pump overlaps the target bins in every slot.
    """

    target_fine_bins: frozenset
    theta: float = math.pi / 4
    delta_phi: float = math.pi
    extra_phase: float = 0.0
    coarse_offsets_ps: Optional[frozenset] = None

    def __post_init__(self):
        object.__setattr__(self, "target_fine_bins", frozenset(int(b) for b in self.target_fine_bins))
        if self.coarse_offsets_ps is not None:
            object.__setattr__(self, "coarse_offsets_ps", frozenset(int(c) for c in self.coarse_offsets_ps))
        if not 0 <= self.theta <= math.pi / 2:
            raise InvalidElementError("theta must lie in [0, pi/2]", theta=self.theta)
        if not 0 <= self.delta_phi < TWO_PI:
            raise InvalidElementError("delta_phi must lie in [0, 2 pi)", delta_phi=self.delta_phi)

    def targets(self, label: ModeLabel) -> bool:
        if label.fine_bin not in self.target_fine_bins:
            return False
        return self.coarse_offsets_ps is None or label.coarse_ps in self.coarse_offsets_ps


@dataclass(frozen=True)
class PolarizationTimeDelay:
    offset_ps: int
    delayed_pol: Polarization = Polarization.V

    def __post_init__(self):
        object.__setattr__(self, "delayed_pol", Polarization.parse(self.delayed_pol))
        object.__setattr__(self, "offset_ps", int(self.offset_ps))
        if self.offset_ps < 0:
            raise InvalidElementError("offset must be non-negative", offset_ps=self.offset_ps)

    @property
    def offset_ns(self) -> float:
        return ps_to_ns(self.offset_ps)


@dataclass(frozen=True)
class Attenuator:
    transmission: float

    def __post_init__(self):
        if not 0.0 <= self.transmission <= 1.0:
            raise InvalidElementError("transmission must lie in [0, 1]", transmission=self.transmission)


@dataclass(frozen=True)
class PhaseCorrector:
    """Per-fine-bin phases; bins beyond the end of the list are left alone."""

    phases: tuple

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))


Element = Union[
    Waveplate,
    PolarizingSplitter,
    BirefringentDelay,
    UltrafastSwitch,
    PolarizationTimeDelay,
    Attenuator,
    PhaseCorrector,
]

LOSSY_TYPES = (PolarizingSplitter, Attenuator)


def is_lossless(e: Element) -> bool:
    if isinstance(e, Attenuator):
        return e.transmission == 1.0
    return not isinstance(e, PolarizingSplitter)


def validate_element(e: Element, grid: TimeGrid) -> None:
    if isinstance(e, UltrafastSwitch):
        bad = [b for b in e.target_fine_bins if not 0 <= b < grid.dimension]
        if bad:
            raise InvalidElementError("switch targets lie outside the grid", bins=sorted(bad))
    elif isinstance(e, BirefringentDelay) and e.shift_bins >= grid.dimension:
        raise InvalidElementError("crystal shift exceeds the grid", shift_bins=e.shift_bins)
    elif isinstance(e, PhaseCorrector) and len(e.phases) > grid.dimension:
        raise InvalidElementError("more phases than fine bins", n=len(e.phases))


def _polarization_pairs(s: PhotonicState):
    """Group amplitudes into (H, V) pairs keyed by (fine_bin, coarse_ps)."""
    pairs = defaultdict(lambda: np.zeros(2, dtype=complex))
    for label, amp in s.amplitudes.items():
        pairs[(label.fine_bin, label.coarse_ps)][label.pol] += amp
    return pairs


def _jones_on(s: PhotonicState, matrix_for) -> PhotonicState:
    out = {}
    for (fine, coarse), vec in _polarization_pairs(s).items():
        m = matrix_for(fine, coarse)
        new = vec if m is None else m @ vec
        out[ModeLabel(fine, coarse, Polarization.H)] = new[0]
        out[ModeLabel(fine, coarse, Polarization.V)] = new[1]
    return PhotonicState(s.grid, out)


def _relabel(s: PhotonicState, move) -> PhotonicState:
    out = {}
    for label, amp in s.amplitudes.items():
        target = move(label)
        if not s.grid.routable(target):
            raise InvalidRoutingError(
                f"{label!r} is routed off the grid to {target!r}", source=repr(label), target=repr(target)
            )
        out[target] = out.get(target, 0j) + amp
    return PhotonicState(s.grid, out)


def apply_element(s: PhotonicState, e: Element, grid: Optional[TimeGrid] = None) -> PhotonicState:
    if grid is not None and grid != s.grid:
        raise GridMismatchError("state and apparatus grids differ", state=s.grid.to_dict(), grid=grid.to_dict())
    validate_element(e, s.grid)

    if isinstance(e, Waveplate):
        m = waveplate_jones(e.kind, e.angle)
        return _jones_on(s, lambda fine, coarse: m)

    if isinstance(e, UltrafastSwitch):
        m = ups_jones(e.theta, e.delta_phi) * np.exp(1j * e.extra_phase)

        def pick(fine, coarse):
            return m if e.targets(ModeLabel(fine, coarse, Polarization.H)) else None

        return _jones_on(s, pick)

    if isinstance(e, PhaseCorrector):
        phases = e.phases
        return PhotonicState(
            s.grid,
            {
                label: amp * (np.exp(1j * phases[label.fine_bin]) if label.fine_bin < len(phases) else 1.0)
                for label, amp in s.amplitudes.items()
            },
        )

    if isinstance(e, PolarizingSplitter):
        return PhotonicState(s.grid, {k: v for k, v in s.amplitudes.items() if k.pol == e.kept_pol})

    if isinstance(e, BirefringentDelay):
        return _relabel(
            s,
            lambda m: ModeLabel(m.fine_bin - e.shift_bins, m.coarse_ps, m.pol) if m.pol == e.delayed_pol else m,
        )

    if isinstance(e, PolarizationTimeDelay):
        return _relabel(
            s,
            lambda m: ModeLabel(m.fine_bin, m.coarse_ps + e.offset_ps, m.pol) if m.pol == e.delayed_pol else m,
        )

    if isinstance(e, Attenuator):
        return s * math.sqrt(e.transmission)

    raise InvalidElementError(f"unknown element {e!r}")


# -- serialization -------------------------------------------------------------

_TYPES = {
    "waveplate": Waveplate,
    "polarizing_splitter": PolarizingSplitter,
    "birefringent_delay": BirefringentDelay,
    "ultrafast_switch": UltrafastSwitch,
    "polarization_time_delay": PolarizationTimeDelay,
    "attenuator": Attenuator,
    "phase_corrector": PhaseCorrector,
}
_NAMES = {cls: name for name, cls in _TYPES.items()}


def element_to_dict(e: Element) -> dict:
    out = {"type": _NAMES[type(e)]}
    for key, value in vars(e).items():
        if isinstance(value, Polarization):
            value = value.name
        elif isinstance(value, frozenset):
            value = sorted(value)
        elif isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


def element_from_dict(data: dict) -> Element:
    data = dict(data)
    try:
        cls = _TYPES[data.pop("type")]
    except KeyError as exc:
        raise InvalidElementError(f"unknown element type {exc}") from None
    if cls is UltrafastSwitch:
        data["target_fine_bins"] = frozenset(data["target_fine_bins"])
        if data.get("coarse_offsets_ps") is not None:
            data["coarse_offsets_ps"] = frozenset(data["coarse_offsets_ps"])
    try:
        return cls(**data)
    except TypeError as exc:
        raise InvalidElementError(str(exc)) from None
