"""State preparation, measurement-chain construction, propagation and routing.

The measurement apparatus for d = 2**n is a cascade of n stages.  Stage k
(1-indexed) pairs fine bins that differ in bit k-1:

1. fibre coupling (attenuator, transmission 1 for ideal hardware),
2. ultrafast polarization switch(es) that rotate one bin of each pair so the
   partner bin is in the crystal's delayed polarization,
3. alpha-BBO crystal shifting that polarization by 2**(k-1) bins, which
   overlaps each pair in a single fine bin,
4. half-wave plate at 0 (computational basis) or 22.5 degrees (superposition),
5. polarization time delay mapping polarization to a nanosecond offset.

After the first stage the polarization entering a stage depends on the coarse
slot (delayed slots carry the delayed polarization, the others the orthogonal
one), so later stages carry one pump per slot group with complementary
fine-bin targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .elements import (
    Attenuator,
    BirefringentDelay,
    Element,
    PhaseCorrector,
    PolarizationTimeDelay,
    PolarizingSplitter,
    UltrafastSwitch,
    Waveplate,
    apply_element,
    element_from_dict,
    element_to_dict,
    is_lossless,
    validate_element,
)
from .errors import (
    DegenerateRoutingError,
    InvalidModeError,
    UnsupportedDimensionError,
)
from .hilbert import (
    ModeLabel,
    PhotonicState,
    Polarization,
    TimeGrid,
    make_basis_state,
    ns_to_ps,
    qudit_state,
)

COMPUTATIONAL = 0
SUPERPOSITION = 1
BASES = (COMPUTATIONAL, SUPERPOSITION)

REFERENCE_DELAYS_NS = (2.6, 5.6)
WINDOW_WIDTH_PS = 1000


def is_power_of_two(d: int) -> bool:
    return d >= 2 and d & (d - 1) == 0


def stage_count(d: int) -> int:
    if not is_power_of_two(d):
        raise UnsupportedDimensionError(f"dimension {d} is not a power of two", dimension=d)
    return d.bit_length() - 1


def default_delays_ps(d: int) -> tuple[int, ...]:
    """2.6 ns and 5.6 ns for the first two stages, then 2*previous + 0.4 ns."""
    n = stage_count(d)
    delays = [ns_to_ps(x) for x in REFERENCE_DELAYS_NS]
    while len(delays) < n:
        delays.append(2 * delays[-1] + 400)
    return tuple(delays[:n])


@dataclass(frozen=True)
class HardwareParams:
    """Measurement hardware.  Defaults describe the ideal reference geometry."""

    fine_pitch_ps: float = 2.25
    coarse_delays_ps: Optional[tuple] = None
    theta: float = math.pi / 4
    delta_phi: float = math.pi
    extra_phases: tuple = ()
    delayed_pol: Polarization = Polarization.V
    hwp_angles: tuple = (0.0, math.pi / 8)
    stage_transmissions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "delayed_pol", Polarization.parse(self.delayed_pol))
        if self.coarse_delays_ps is not None:
            object.__setattr__(self, "coarse_delays_ps", tuple(int(x) for x in self.coarse_delays_ps))
        object.__setattr__(self, "extra_phases", tuple(float(x) for x in self.extra_phases))
        object.__setattr__(self, "hwp_angles", tuple(float(x) for x in self.hwp_angles))
        object.__setattr__(self, "stage_transmissions", tuple(float(x) for x in self.stage_transmissions))

    def delays_for(self, d: int) -> tuple[int, ...]:
        n = stage_count(d)
        if self.coarse_delays_ps is None:
            return default_delays_ps(d)
        if len(self.coarse_delays_ps) != n:
            raise UnsupportedDimensionError(
                f"dimension {d} needs {n} coarse delays, got {len(self.coarse_delays_ps)}",
                dimension=d,
                delays=list(self.coarse_delays_ps),
            )
        return self.coarse_delays_ps

    def grid(self, d: int) -> TimeGrid:
        return TimeGrid(self.fine_pitch_ps, d, self.delays_for(d))

    def extra_phase(self, stage: int) -> float:
        return self.extra_phases[stage - 1] if stage <= len(self.extra_phases) else 0.0

    def transmission(self, stage: int) -> float:
        return self.stage_transmissions[stage - 1] if stage <= len(self.stage_transmissions) else 1.0

    def ideal(self) -> "HardwareParams":
        """Same geometry and phase conventions with perfect switching and no loss."""
        return replace(self, theta=math.pi / 4, delta_phi=math.pi, stage_transmissions=())

    def to_dict(self) -> dict:
        return {
            "fine_pitch_ps": self.fine_pitch_ps,
            "coarse_delays_ps": None if self.coarse_delays_ps is None else list(self.coarse_delays_ps),
            "theta": self.theta,
            "delta_phi": self.delta_phi,
            "extra_phases": list(self.extra_phases),
            "delayed_pol": self.delayed_pol.name,
            "hwp_angles": list(self.hwp_angles),
            "stage_transmissions": list(self.stage_transmissions),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HardwareParams":
        data = dict(data)
        if data.get("coarse_delays_ps") is not None:
            data["coarse_delays_ps"] = tuple(data["coarse_delays_ps"])
        return cls(**data)


# -- states ------------------------------------------------------------------


def _default_grid(d: int, grid: Optional[TimeGrid]) -> TimeGrid:
    if grid is None:
        return HardwareParams().grid(d)
    if grid.dimension != d:
        raise InvalidModeError("grid dimension does not match", dimension=d, grid_dimension=grid.dimension)
    return grid


def mub_state(d: int, n: int, grid: Optional[TimeGrid] = None, pol=Polarization.V) -> PhotonicState:
    """Fourier basis state (1/sqrt d) sum_m exp(2 pi i n m / d) |t_m>."""
    if not 0 <= n < d:
        raise IndexError(f"MUB index {n} out of range for d={d}")
    m = np.arange(d)
    coefficients = np.exp(2j * np.pi * n * m / d) / np.sqrt(d)
    return qudit_state(_default_grid(d, grid), coefficients, Polarization.parse(pol))


def hadamard_state(d: int, n: int, grid: Optional[TimeGrid] = None, pol=Polarization.V) -> PhotonicState:
    """Real-sign superposition state: row ``n`` of the Sylvester Hadamard matrix over sqrt(d).

    For d = 4 these are the states |phi_0>..|phi_3> measured by the apparatus.
    """
    if not 0 <= n < d:
        raise IndexError(f"superposition index {n} out of range for d={d}")
    stage_count(d)
    row = scipy.linalg.hadamard(d)[n] / np.sqrt(d)
    return qudit_state(_default_grid(d, grid), row, Polarization.parse(pol))


def reference_state(
    d: int, basis: int, index: int, grid: Optional[TimeGrid] = None, pol=Polarization.V
) -> PhotonicState:
    """|t_index> for the computational basis, the Hadamard-row state for the superposition basis."""
    if basis == COMPUTATIONAL:
        if not 0 <= index < d:
            raise IndexError(f"time-bin index {index} out of range for d={d}")
        return make_basis_state(ModeLabel(index, 0, Polarization.parse(pol)), _default_grid(d, grid))
    if basis == SUPERPOSITION:
        return hadamard_state(d, index, grid, pol)
    raise ValueError(f"basis must be 0 or 1, got {basis!r}")


@dataclass(frozen=True)
class PreparationSetting:
    """HWP angles (degrees, one per preparation stage) selecting a prepared state."""

    basis: int
    index: int
    hwp_angles_deg: tuple

    @classmethod
    def for_state(cls, d: int, basis: int, index: int) -> "PreparationSetting":
        """Angle table: bit k of ``index`` picks the angle of the (k+1)-th HWP.

        Computational basis: 0 -> 22.5, 1 -> -22.5.  Superposition basis: 0 -> 0, 1 -> 45.
        """
        n = stage_count(d)
        if not 0 <= index < d:
            raise IndexError(f"index {index} out of range for d={d}")
        if basis == COMPUTATIONAL:
            choices = (22.5, -22.5)
        elif basis == SUPERPOSITION:
            choices = (0.0, 45.0)
        else:
            raise ValueError(f"basis must be 0 or 1, got {basis!r}")
        return cls(basis, index, tuple(choices[(index >> k) & 1] for k in range(n)))


def preparation_elements(
    n_stages: int, hwp_angles_deg: Sequence[float], delayed_pol=Polarization.V, phase_correction=()
) -> list[Element]:
    """HWP, alpha-BBO at 45 degrees, PBS per stage, crystal lengths doubling each stage.

    The 45-degree crystal is a lab-frame crystal between two frame-rotating
    half-wave plates that map the diagonal component onto the delayed axis.
    A final HWP at 45 degrees launches the photon in the delayed polarization
    when that is V.
    """
    delayed_pol = Polarization.parse(delayed_pol)
    frame = math.pi / 8 if delayed_pol == Polarization.H else -math.pi / 8
    elements: list[Element] = []
    for k, angle in enumerate(hwp_angles_deg[:n_stages]):
        elements += [
            Waveplate("half", math.radians(angle)),
            Waveplate("half", frame),
            BirefringentDelay(2**k, delayed_pol),
            Waveplate("half", frame),
            PolarizingSplitter(Polarization.H),
        ]
    if delayed_pol == Polarization.V:
        elements.append(Waveplate("half", math.pi / 4))
    if len(phase_correction):
        elements.append(PhaseCorrector(tuple(phase_correction)))
    return elements


def prepare_state(
    setting: PreparationSetting,
    grid: Optional[TimeGrid] = None,
    delayed_pol=Polarization.V,
    phase_correction=(),
) -> PhotonicState:
    """Run an H-polarized pulse in the last fine bin through the preparation optics.

    The result is not renormalized; its squared norm is the post-selection
    efficiency 1/d.
    """
    n = len(setting.hwp_angles_deg)
    d = 2**n
    grid = _default_grid(d, grid)
    state = make_basis_state(ModeLabel(d - 1, 0, Polarization.H), grid)
    for e in preparation_elements(n, setting.hwp_angles_deg, delayed_pol, phase_correction):
        state = apply_element(state, e)
    return state


def compensation_phases(hw: HardwareParams, d: int) -> tuple:
    """Preparation phases cancelling the first-stage switch's extra phase on its target bins."""
    phi = hw.extra_phase(1)
    return tuple(-phi if b % 2 == 0 else 0.0 for b in range(d))


# -- apparatus -----------------------------------------------------------------


@dataclass(frozen=True)
class Apparatus:
    elements: tuple
    grid: TimeGrid
    stage_count: int = 0
    basis: Optional[int] = None
    signal_pol: Polarization = Polarization.V
    hardware: Optional[HardwareParams] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "signal_pol", Polarization.parse(self.signal_pol))
        for e in self.elements:
            validate_element(e, self.grid)

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    @property
    def lossless(self) -> bool:
        return all(is_lossless(e) for e in self.elements)

    def input_modes(self) -> list[ModeLabel]:
        return [ModeLabel(m, 0, self.signal_pol) for m in range(self.dimension)]

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "stage_count": self.stage_count,
            "basis": self.basis,
            "signal_pol": self.signal_pol.name,
            "hardware": None if self.hardware is None else self.hardware.to_dict(),
            "elements": [element_to_dict(e) for e in self.elements],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Apparatus":
        hw = data.get("hardware")
        return cls(
            elements=tuple(element_from_dict(e) for e in data["elements"]),
            grid=TimeGrid.from_dict(data["grid"]),
            stage_count=int(data.get("stage_count", 0)),
            basis=data.get("basis"),
            signal_pol=data.get("signal_pol", "V"),
            hardware=None if hw is None else HardwareParams.from_dict(hw),
        )


def _bit_bins(d: int, bit: int, value: int) -> frozenset:
    return frozenset(b for b in range(d) if (b >> bit) & 1 == value)


def build_measurement_chain(d: int, basis: int, hw: Optional[HardwareParams] = None) -> Apparatus:
    if basis not in BASES:
        raise ValueError(f"basis must be 0 or 1, got {basis!r}")
    hw = hw or HardwareParams()
    n = stage_count(d)
    grid = hw.grid(d)
    slow = hw.delayed_pol
    fast = slow.other
    # polarization carried by each occupied coarse slot on entry to the stage
    slots = {0: slow}
    elements: list[Element] = []
    for k in range(1, n + 1):
        bit = k - 1
        elements.append(Attenuator(hw.transmission(k)))
        for pol, value in ((slow, 0), (fast, 1)):
            group = frozenset(c for c, p in slots.items() if p == pol)
            if not group:
                continue
            elements.append(
                UltrafastSwitch(
                    _bit_bins(d, bit, value),
                    theta=hw.theta,
                    delta_phi=hw.delta_phi,
                    extra_phase=hw.extra_phase(k),
                    coarse_offsets_ps=None if len(group) == len(slots) else group,
                )
            )
        elements.append(BirefringentDelay(2**bit, slow))
        elements.append(Waveplate("half", hw.hwp_angles[basis]))
        delay = grid.coarse_delays_ps[bit]
        elements.append(PolarizationTimeDelay(delay, slow))
        new_slots = {}
        for c in slots:
            new_slots[c] = fast
        for c in slots:
            new_slots[c + delay] = slow
        slots = new_slots
    return Apparatus(tuple(elements), grid, n, basis, slow, hw)


def propagate(s: PhotonicState, a: Apparatus) -> PhotonicState:
    for e in a.elements:
        s = apply_element(s, e, a.grid)
    return s


# -- detection windows ---------------------------------------------------------


@dataclass(frozen=True)
class Window:
    outcome: int
    center_ps: int
    width_ps: int = WINDOW_WIDTH_PS

    @property
    def start_ps(self) -> float:
        return self.center_ps - self.width_ps / 2

    @property
    def stop_ps(self) -> float:
        return self.center_ps + self.width_ps / 2

    def contains(self, t_ps: float) -> bool:
        return self.start_ps <= t_ps < self.stop_ps


@dataclass(frozen=True)
class DetectionWindows:
    windows: tuple

    def __post_init__(self):
        windows = tuple(sorted(self.windows, key=lambda w: w.outcome))
        object.__setattr__(self, "windows", windows)
        by_time = sorted(windows, key=lambda w: w.center_ps)
        for a, b in zip(by_time, by_time[1:]):
            if a.stop_ps > b.start_ps:
                raise DegenerateRoutingError(
                    "detection windows overlap",
                    outcomes=[a.outcome, b.outcome],
                    centers_ps=[a.center_ps, b.center_ps],
                )

    def __len__(self):
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    @property
    def centers_ps(self) -> list[int]:
        return [w.center_ps for w in self.windows]

    @property
    def centers_ns(self) -> list[float]:
        return [w.center_ps / 1000 for w in self.windows]

    def outcome_at(self, t_ps: float) -> Optional[int]:
        for w in self.windows:
            if w.contains(t_ps):
                return w.outcome
        return None

    def edges(self):
        """Arrays (outcome, start, stop) sorted by start time."""
        ws = sorted(self.windows, key=lambda w: w.center_ps)
        return (
            np.array([w.outcome for w in ws]),
            np.array([w.start_ps for w in ws], dtype=float),
            np.array([w.stop_ps for w in ws], dtype=float),
        )

    def to_dict(self) -> list:
        return [{"outcome": w.outcome, "center_ns": w.center_ps / 1000, "width_ns": w.width_ps / 1000} for w in self]


def coarse_distribution(s: PhotonicState) -> dict[int, float]:
    out: dict[int, float] = {}
    for label, amp in s.amplitudes.items():
        out[label.coarse_ps] = out.get(label.coarse_ps, 0.0) + abs(amp) ** 2
    return out


def routing_table(a: Apparatus, basis: Optional[int] = None, width_ps: int = WINDOW_WIDTH_PS) -> DetectionWindows:
    """Windows centred on the coarse slot each basis state is routed to.

    Each ideal basis state is propagated; its most probable coarse slot must be
    unambiguous and distinct from every other state's.
    """
    basis = a.basis if basis is None else basis
    d = a.dimension
    windows = []
    seen: dict[int, int] = {}
    for i in range(d):
        out = propagate(reference_state(d, basis, i, a.grid, a.signal_pol), a)
        dist = sorted(coarse_distribution(out).items(), key=lambda kv: kv[1], reverse=True)
        if not dist or (len(dist) > 1 and dist[0][1] - dist[1][1] < 1e-9):
            raise DegenerateRoutingError(
                f"state {i} of basis {basis} has no unique coarse slot",
                state=i,
                basis=basis,
                distribution={str(k): v for k, v in dist},
            )
        coarse = dist[0][0]
        if coarse in seen:
            raise DegenerateRoutingError(
                f"states {seen[coarse]} and {i} are routed to the same coarse slot",
                states=[seen[coarse], i],
                coarse_ps=coarse,
            )
        seen[coarse] = i
        windows.append(Window(i, coarse, width_ps))
    return DetectionWindows(tuple(windows))


def window_probabilities(s: PhotonicState, windows: DetectionWindows) -> np.ndarray:
    """Probability mass arriving inside each outcome's window (jitter-free)."""
    probs = np.zeros(len(windows))
    pitch = s.grid.fine_pitch_ps
    for label, amp in s.amplitudes.items():
        outcome = windows.outcome_at(label.arrival_ps(pitch))
        if outcome is not None:
            probs[outcome] += abs(amp) ** 2
    return probs


def arrival_distribution(s: PhotonicState) -> tuple[np.ndarray, np.ndarray]:
    """(arrival times in ps, probabilities) of the occupied modes, in sorted mode order."""
    pitch = s.grid.fine_pitch_ps
    modes = s.modes
    times = np.array([m.arrival_ps(pitch) for m in modes], dtype=float)
    probs = np.array([abs(s[m]) ** 2 for m in modes], dtype=float)
    return times, probs
