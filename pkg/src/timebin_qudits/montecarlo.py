"""Weak-coherent-pulse Monte Carlo of the single-detector experiment.

Per shot: Poisson photon number, independent Bernoulli loss per named
element, landing mode drawn from the propagated state, Gaussian detector
jitter, uniform dark counts over the repetition frame.  The detector is not
photon-number resolving: the earliest event inside any detection window sets
the outcome, otherwise a shot with events counts as "no window".

Random draws are made in fixed-size arrays so the stream consumed depends
only on the draws themselves, never on floating-point branching.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .chain import (
    Apparatus,
    BASES,
    DetectionWindows,
    HardwareParams,
    PreparationSetting,
    arrival_distribution,
    build_measurement_chain,
    prepare_state,
    propagate,
    routing_table,
)
from .errors import ConfigError

NO_WINDOW = "no_window"
BASIS_PAIRS = tuple((a, b) for a in BASES for b in BASES)

_NO_EVENT = -1

DEFAULT_TRANSMISSIONS = {"smf1_coupling": 0.80, "smf2_coupling": 0.76, "detector_efficiency": 1.0}


@dataclass(frozen=True)
class NoiseModel:
    mu: float = 0.14
    jitter_sigma_ps: float = 350.0  # not a measured value; the APD jitter is unreported
    dark_count_rate_hz: float = 0.0
    transmissions: dict = field(default_factory=lambda: dict(DEFAULT_TRANSMISSIONS))
    rep_rate_hz: float = 80e6

    def __post_init__(self):
        if self.mu < 0:
            raise ConfigError("mean photon number must be >= 0", mu=self.mu)
        if self.jitter_sigma_ps < 0:
            raise ConfigError("jitter must be >= 0", jitter_sigma_ps=self.jitter_sigma_ps)
        if self.dark_count_rate_hz < 0:
            raise ConfigError("dark count rate must be >= 0", dark_count_rate_hz=self.dark_count_rate_hz)
        if self.rep_rate_hz <= 0:
            raise ConfigError("repetition rate must be positive", rep_rate_hz=self.rep_rate_hz)
        for name, t in self.transmissions.items():
            if not 0.0 <= t <= 1.0:
                raise ConfigError(f"transmission {name!r} outside [0, 1]", name=name, value=t)

    @property
    def efficiency(self) -> float:
        return float(np.prod(list(self.transmissions.values()))) if self.transmissions else 1.0

    @property
    def frame_ps(self) -> float:
        return 1e12 / self.rep_rate_hz

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "jitter_sigma_ps": self.jitter_sigma_ps,
            "dark_count_rate_hz": self.dark_count_rate_hz,
            "transmissions": dict(self.transmissions),
            "rep_rate_hz": self.rep_rate_hz,
        }


def frame_start_ps(windows: DetectionWindows) -> float:
    """Dark counts are spread over one repetition period starting a window width before the first window."""
    first = min(windows, key=lambda w: w.start_ps)
    return first.start_ps - first.width_ps


@dataclass
class CountMatrix:
    """counts[i, j]: prepared state i, outcome j; column d is the no-window bucket."""

    alpha: int
    beta: int
    counts: np.ndarray
    shots: int
    seed: int

    @property
    def dimension(self) -> int:
        return self.counts.shape[0]

    def __add__(self, other: "CountMatrix") -> "CountMatrix":
        return CountMatrix(self.alpha, self.beta, self.counts + other.counts, self.shots + other.shots, self.seed)

    def in_window(self) -> np.ndarray:
        return self.counts[:, : self.dimension]

    def rows(self):
        d = self.dimension
        for i in range(d):
            for j in range(d + 1):
                yield self.alpha, self.beta, i, (j if j < d else NO_WINDOW), int(self.counts[i, j])

    def to_csv(self, header: Optional[dict] = None) -> str:
        buf = io.StringIO()
        if header:
            for key, value in header.items():
                buf.write(f"# {key}={value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["alpha", "beta", "i", "j", "count"])
        writer.writerows(self.rows())
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "shots": self.shots,
            "seed": self.seed,
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CountMatrix":
        return cls(data["alpha"], data["beta"], np.asarray(data["counts"], dtype=np.int64), data["shots"], data["seed"])


def _landing(state, apparatus: Apparatus):
    times, probs = arrival_distribution(propagate(state, apparatus))
    return times, probs


def sample_outcomes(
    times_ps: np.ndarray,
    probs: np.ndarray,
    windows: DetectionWindows,
    noise: NoiseModel,
    n_shots: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorised shots.  Returns outcome codes: 0..d-1, d for no-window, -1 for no event."""
    d = len(windows)
    n_photons = rng.poisson(noise.mu, n_shots)
    total = int(n_photons.sum())
    shot_of = np.repeat(np.arange(n_shots), n_photons)

    alive = np.ones(total, dtype=bool)
    for name in sorted(noise.transmissions):
        alive &= rng.random(total) < noise.transmissions[name]

    cdf = np.cumsum(probs)
    mode = np.searchsorted(cdf, rng.random(total), side="right")
    alive &= mode < len(probs)  # remaining mass was lost inside the apparatus
    jitter = rng.standard_normal(total) * noise.jitter_sigma_ps
    arrival = np.where(alive, times_ps[np.minimum(mode, len(probs) - 1)] + jitter, np.nan)

    n_dark = rng.poisson(noise.dark_count_rate_hz * noise.frame_ps * 1e-12, n_shots)
    dark_shot = np.repeat(np.arange(n_shots), n_dark)
    dark_time = frame_start_ps(windows) + noise.frame_ps * rng.random(int(n_dark.sum()))

    ev_shot = np.concatenate([shot_of[alive], dark_shot])
    ev_time = np.concatenate([arrival[alive], dark_time])

    outcome = np.full(n_shots, _NO_EVENT, dtype=np.int64)
    outcome[ev_shot] = d

    labels, starts, stops = windows.edges()
    k = np.searchsorted(starts, ev_time, side="right") - 1
    inside = (k >= 0) & (ev_time < stops[np.clip(k, 0, None)])
    if inside.any():
        s, t, lab = ev_shot[inside], ev_time[inside], labels[k[inside]]
        order = np.lexsort((t, s))
        s, lab = s[order], lab[order]
        first = np.ones(len(s), dtype=bool)
        first[1:] = s[1:] != s[:-1]
        outcome[s[first]] = lab[first]
    return outcome


def _prepared(setting: PreparationSetting, apparatus: Apparatus):
    # no phase compensation: the windows are calibrated on the uncompensated states
    return prepare_state(setting, apparatus.grid, apparatus.signal_pol).normalized()


def reference_windows(apparatus: Apparatus) -> DetectionWindows:
    """Windows from the ideal version of the apparatus's hardware."""
    hw = apparatus.hardware or HardwareParams()
    ideal = build_measurement_chain(apparatus.dimension, apparatus.basis, hw.ideal())
    return routing_table(ideal, apparatus.basis)


def sample_shot(setting: PreparationSetting, apparatus: Apparatus, noise: NoiseModel, rng: np.random.Generator):
    """One shot: an outcome label, ``NO_WINDOW``, or ``None`` when nothing clicked."""
    times, probs = _landing(_prepared(setting, apparatus), apparatus)
    code = int(sample_outcomes(times, probs, reference_windows(apparatus), noise, 1, rng)[0])
    if code == _NO_EVENT:
        return None
    if code == apparatus.dimension:
        return NO_WINDOW
    return code


def _split(shots: int, shards: int) -> list[int]:
    base, extra = divmod(shots, shards)
    return [base + (1 if k < extra else 0) for k in range(shards)]


def run_cell(
    d: int,
    alpha: int,
    beta: int,
    hw: HardwareParams,
    noise: NoiseModel,
    shots: int,
    seed: int,
    shards: int = 1,
    workers: int = 1,
) -> CountMatrix:
    apparatus = build_measurement_chain(d, beta, hw)
    windows = reference_windows(apparatus)
    landings = [_landing(_prepared(PreparationSetting.for_state(d, alpha, i), apparatus), apparatus) for i in range(d)]

    def shard_counts(job):
        i, k, n = job
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(alpha, beta, i, k))))
        codes = sample_outcomes(*landings[i], windows, noise, n, rng)
        row = np.bincount(codes[codes >= 0], minlength=d + 1)
        return i, row

    jobs = [(i, k, n) for i in range(d) for k, n in enumerate(_split(shots, shards))]
    counts = np.zeros((d, d + 1), dtype=np.int64)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(shard_counts, jobs))
    else:
        results = [shard_counts(job) for job in jobs]
    for i, row in results:
        counts[i] += row
    return CountMatrix(alpha, beta, counts, shots, seed)


def run_experiment(
    d: int = 4,
    hw: Optional[HardwareParams] = None,
    noise: Optional[NoiseModel] = None,
    shots: int = 100_000,
    seed: int = 0,
    basis_pairs=BASIS_PAIRS,
    shards: int = 1,
    workers: int = 1,
) -> dict:
    """Counts for every (alpha, beta) pair; ``shots`` pulses per prepared state."""
    if shots < 0 or int(shots) != shots:
        raise ConfigError("shots must be a non-negative integer", shots=shots)
    if shards < 1:
        raise ConfigError("shards must be >= 1", shards=shards)
    hw = hw or HardwareParams()
    noise = noise or NoiseModel()
    return {
        (a, b): run_cell(d, a, b, hw, noise, int(shots), seed, shards, workers)
        for a, b in (tuple(p) for p in basis_pairs)
    }


def counts_to_json(counts: dict, header: Optional[dict] = None) -> str:
    payload = dict(header or {})
    payload["counts"] = {f"{a}{b}": cm.to_dict() for (a, b), cm in sorted(counts.items())}
    return json.dumps(payload, indent=2, sort_keys=True)


def binomial_standard_error(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n) if n > 0 else math.inf
