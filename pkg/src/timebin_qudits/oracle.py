"""Brute-force validator: an apparatus compiled to an explicit mode-space matrix.

Nothing here calls :func:`chain.propagate` or the element action code.  Every
element is rebuilt as a dense matrix from closed-form Jones matrices, and the
chain is their product.  Delay elements are partial permutations of the mode
basis; they are completed to full permutations by pairing the modes they
would push off the basis with the modes nothing maps onto, so lossless chains
compile to exactly unitary matrices.  The completion only touches modes that
carry no amplitude in chain order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.special import ndtr

from . import elements as el
from .errors import ComplexityError, DegenerateRoutingError, InvalidRoutingError
from .hilbert import ModeLabel, PhotonicState, Polarization

DEFAULT_MODE_CAP = 4096


def _half_wave(angle: float) -> np.ndarray:
    c, s = math.cos(2 * angle), math.sin(2 * angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


def _quarter_wave(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    m = np.array([[c * c + 1j * s * s, c * s * (1 - 1j)], [c * s * (1 - 1j), s * s + 1j * c * c]])
    h = m[0, 0]
    if abs(h) > 1e-15 and abs(h.imag) > 1e-15:
        m = m * np.conj(h) / abs(h)
    return m


def _switch(theta: float, delta_phi: float, extra_phase: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    e = np.exp(1j * delta_phi)
    off = c * s * (1 - e)
    return np.exp(1j * extra_phase) * np.array([[c * c + s * s * e, off], [off, s * s + c * c * e]])


def _moved(e, m: ModeLabel) -> ModeLabel:
    if isinstance(e, el.BirefringentDelay) and m.pol == e.delayed_pol:
        return ModeLabel(m.fine_bin - e.shift_bins, m.coarse_ps, m.pol)
    if isinstance(e, el.PolarizationTimeDelay) and m.pol == e.delayed_pol:
        return ModeLabel(m.fine_bin, m.coarse_ps + e.offset_ps, m.pol)
    return m


def _image_support(e, m: ModeLabel) -> list[ModeLabel]:
    if isinstance(e, (el.Waveplate, el.UltrafastSwitch)):
        return [ModeLabel(m.fine_bin, m.coarse_ps, p) for p in Polarization]
    if isinstance(e, el.PolarizingSplitter):
        return [m] if m.pol == e.kept_pol else []
    return [_moved(e, m)]


def mode_basis(a, input_modes: Optional[Sequence[ModeLabel]] = None, mode_cap: int = DEFAULT_MODE_CAP):
    """Every mode reachable from the inputs in chain order, with both polarizations of each slot."""
    current = set(input_modes if input_modes is not None else a.input_modes())
    seen = set(current)
    for e in a.elements:
        nxt = set()
        for m in current:
            for target in _image_support(e, m):
                if not a.grid.routable(target):
                    raise InvalidRoutingError(f"{m!r} leaves the grid at {type(e).__name__}", mode=repr(m))
                nxt.add(target)
        current = nxt
        seen |= current
        if 2 * len(seen) > mode_cap:
            raise ComplexityError("mode closure exceeds the cap", cap=mode_cap, size=2 * len(seen))
    full = {ModeLabel(m.fine_bin, m.coarse_ps, p) for m in seen for p in Polarization}
    return sorted(full)


def element_matrix(e, basis: list[ModeLabel]) -> np.ndarray:
    n = len(basis)
    index = {m: i for i, m in enumerate(basis)}

    if isinstance(e, (el.Waveplate, el.UltrafastSwitch)):
        out = np.zeros((n, n), dtype=complex)
        if isinstance(e, el.Waveplate):
            jones = _half_wave(e.angle) if e.kind == "half" else _quarter_wave(e.angle)
        else:
            jones = _switch(e.theta, e.delta_phi, e.extra_phase)
        for m, i in index.items():
            if isinstance(e, el.UltrafastSwitch):
                hit = m.fine_bin in e.target_fine_bins and (
                    e.coarse_offsets_ps is None or m.coarse_ps in e.coarse_offsets_ps
                )
                if not hit:
                    out[i, i] = 1.0
                    continue
            for p in Polarization:
                out[index[ModeLabel(m.fine_bin, m.coarse_ps, p)], i] = jones[p, m.pol]
        return out

    if isinstance(e, el.PolarizingSplitter):
        return np.diag([1.0 + 0j if m.pol == e.kept_pol else 0j for m in basis])

    if isinstance(e, el.Attenuator):
        return math.sqrt(e.transmission) * np.eye(n, dtype=complex)

    if isinstance(e, el.PhaseCorrector):
        phases = [e.phases[m.fine_bin] if m.fine_bin < len(e.phases) else 0.0 for m in basis]
        return np.diag(np.exp(1j * np.array(phases)))

    if isinstance(e, (el.BirefringentDelay, el.PolarizationTimeDelay)):
        out = np.zeros((n, n), dtype=complex)
        hit = set()
        stray = []
        for m, i in index.items():
            j = index.get(_moved(e, m))
            if j is None:
                stray.append(i)
            else:
                out[j, i] = 1.0
                hit.add(j)
        free = [j for j in range(n) if j not in hit]
        for i, j in zip(stray, free):
            out[j, i] = 1.0
        return out

    raise TypeError(f"unknown element {e!r}")


@dataclass(frozen=True)
class ChainMatrix:
    basis: tuple
    matrix: np.ndarray
    input_modes: tuple

    def apply(self, state: PhotonicState) -> PhotonicState:
        out = self.matrix @ state.vector(list(self.basis))
        return PhotonicState(state.grid, dict(zip(self.basis, out)))

    def apply_vector(self, input_amplitudes) -> np.ndarray:
        """Output amplitudes over the basis for amplitudes given on the input modes."""
        vec = np.zeros(len(self.basis), dtype=complex)
        index = {m: i for i, m in enumerate(self.basis)}
        for m, amp in zip(self.input_modes, input_amplitudes):
            vec[index[m]] = amp
        return self.matrix @ vec

    def unitarity_error(self) -> float:
        n = self.matrix.shape[0]
        return float(np.max(np.abs(self.matrix.conj().T @ self.matrix - np.eye(n))))

    def is_unitary(self, tol: float = 1e-10) -> bool:
        return self.unitarity_error() < tol

    def operator_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2)) if self.matrix.size else 0.0

    def to_dict(self) -> dict:
        return {
            "basis": [[m.fine_bin, m.coarse_ps, m.pol.name] for m in self.basis],
            "input_modes": [[m.fine_bin, m.coarse_ps, m.pol.name] for m in self.input_modes],
            "real": self.matrix.real.tolist(),
            "imag": self.matrix.imag.tolist(),
        }


def full_matrix(a, input_modes: Optional[Sequence[ModeLabel]] = None, mode_cap: int = DEFAULT_MODE_CAP) -> ChainMatrix:
    inputs = tuple(input_modes if input_modes is not None else a.input_modes())
    basis = mode_basis(a, inputs, mode_cap)
    total = np.eye(len(basis), dtype=complex)
    for e in a.elements:
        total = element_matrix(e, basis) @ total
    return ChainMatrix(tuple(basis), total, inputs)


def dump_diagnostics(cm: ChainMatrix, path=None) -> str:
    text = json.dumps(cm.to_dict(), indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# -- analytic confusion matrices -----------------------------------------------


def basis_vectors(d: int, basis: int) -> np.ndarray:
    """Rows are the ideal basis states over |t_0>..|t_{d-1}>."""
    if basis == 0:
        return np.eye(d, dtype=complex)
    return scipy.linalg.hadamard(d).astype(complex) / math.sqrt(d)


def _arrival_ps(basis: Sequence[ModeLabel], pitch: float) -> np.ndarray:
    return np.array([m.coarse_ps + m.fine_bin * pitch for m in basis], dtype=float)


def _coarse_of(basis: Sequence[ModeLabel]) -> np.ndarray:
    return np.array([m.coarse_ps for m in basis])


def oracle_window_centers(a_ideal, beta: int) -> np.ndarray:
    """Coarse slot (ps) for each outcome, from the ideal apparatus's matrix."""
    cm = full_matrix(a_ideal)
    coarse = _coarse_of(cm.basis)
    slots = np.unique(coarse)
    centers = []
    for i, vec in enumerate(basis_vectors(a_ideal.dimension, beta)):
        p = np.abs(cm.apply_vector(vec)) ** 2
        mass = np.array([p[coarse == c].sum() for c in slots])
        order = np.argsort(mass)[::-1]
        if len(order) > 1 and mass[order[0]] - mass[order[1]] < 1e-9:
            raise DegenerateRoutingError("ambiguous routing in oracle", state=i, basis=beta)
        centers.append(int(slots[order[0]]))
    if len(set(centers)) != len(centers):
        raise DegenerateRoutingError("two outcomes share a coarse slot", centers_ps=centers)
    return np.array(centers)


def landing_matrix(alpha: int, beta: int, hw=None, d: int = 4):
    """Per prepared state, output-mode probabilities and arrival times, plus window centres."""
    from .chain import HardwareParams, build_measurement_chain

    hw = hw or HardwareParams()
    a = build_measurement_chain(d, beta, hw)
    centers = oracle_window_centers(build_measurement_chain(d, beta, hw.ideal()), beta)
    cm = full_matrix(a)
    probs = np.array([np.abs(cm.apply_vector(v)) ** 2 for v in basis_vectors(d, alpha)])
    return probs, _arrival_ps(cm.basis, a.grid.fine_pitch_ps), centers


def confusion_matrix_analytic(
    alpha: int, beta: int, hw=None, d: int = 4, renormalize: bool = False, window_ps: float = 1000.0
) -> np.ndarray:
    """P[i, j]: probability that prepared state i arrives inside outcome j's window (no jitter)."""
    probs, times, centers = landing_matrix(alpha, beta, hw, d)
    inside = (times[None, :] >= centers[:, None] - window_ps / 2) & (times[None, :] < centers[:, None] + window_ps / 2)
    P = probs @ inside.T.astype(float)
    if renormalize:
        P = P / P.sum(axis=1, keepdims=True)
    return P


def detection_model_probabilities(
    alpha: int,
    beta: int,
    hw=None,
    d: int = 4,
    mu: float = 0.14,
    efficiency: float = 1.0,
    jitter_sigma_ps: float = 0.0,
    dark_count_rate_hz: float = 0.0,
    frame_ps: Optional[float] = None,
    frame_start_ps: Optional[float] = None,
    window_ps: float = 1000.0,
) -> np.ndarray:
    """Exact per-shot outcome probabilities of the weak-coherent detection model.

    Photon number is Poisson(mu) and photons are independent, so the events
    landing in each window form independent Poisson processes.  With first
    in-window event wins, outcome j occurs with probability
    exp(-sum of window means earlier than j) * (1 - exp(-mean_j)).  Returns a
    d x (d + 2) array: outcomes, no-window, and no event at all.
    """
    probs, times, centers = landing_matrix(alpha, beta, hw, d)
    order = np.argsort(centers)
    starts = centers - window_ps / 2
    stops = centers + window_ps / 2
    if frame_start_ps is None:
        frame_start_ps = float(starts.min() - window_ps)
    if frame_ps is None:
        frame_ps = 12500.0
    out = np.zeros((probs.shape[0], d + 2))
    for i, p in enumerate(probs):
        rate = mu * efficiency * p
        if jitter_sigma_ps > 0:
            with np.errstate(over="ignore"):  # tiny sigma: +-inf is the right limit for ndtr
                frac = ndtr((stops[:, None] - times[None, :]) / jitter_sigma_ps) - ndtr(
                    (starts[:, None] - times[None, :]) / jitter_sigma_ps
                )
        else:
            frac = ((times[None, :] >= starts[:, None]) & (times[None, :] < stops[:, None])).astype(float)
        lam = frac @ rate
        lam = lam + dark_count_rate_hz * window_ps * 1e-12
        total = rate.sum() + dark_count_rate_hz * frame_ps * 1e-12
        earlier = 0.0
        for j in order:
            out[i, j] = math.exp(-earlier) * -math.expm1(-lam[j])
            earlier += lam[j]
        outside = max(total - lam.sum(), 0.0)
        out[i, d] = math.exp(-lam.sum()) * -math.expm1(-outside)
        out[i, d + 1] = math.exp(-total)
    return out
