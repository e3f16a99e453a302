"""Detection probabilities, fidelities, QBER and the d-dimensional BB84 key rate."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, InsufficientDataError, ShapeError


def probabilities(counts) -> np.ndarray:
    """Row-normalise in-window counts; a ``CountMatrix`` or a d x d / d x (d+1) array.

    The no-window column, when present, is dropped before normalising.
    """
    table = np.asarray(getattr(counts, "counts", counts), dtype=float)
    if table.ndim != 2 or table.shape[1] not in (table.shape[0], table.shape[0] + 1):
        raise ShapeError("expected a d x d or d x (d+1) count table", shape=list(table.shape))
    table = table[:, : table.shape[0]]
    sums = table.sum(axis=1)
    empty = np.flatnonzero(sums == 0)
    if empty.size:
        raise InsufficientDataError("rows without in-window counts", rows=empty.tolist())
    return table / sums[:, None]


def fidelities(p_matched) -> np.ndarray:
    return np.diag(np.asarray(p_matched, dtype=float)).copy()


def qber(fidelity_list: Sequence[float], d: int | None = None) -> float:
    """1 - mean fidelity over both bases; expects 2d values."""
    f = np.asarray(fidelity_list, dtype=float)
    if f.ndim != 1 or len(f) % 2 or (d is not None and len(f) != 2 * d):
        raise ShapeError("need 2d fidelities", length=int(f.size), d=d)
    if np.any((f < 0) | (f > 1)):
        raise DomainError("fidelities must lie in [0, 1]")
    return float(min(max(1.0 - math.fsum(f) / len(f), 0.0), 1.0))


def shannon_entropy_d(x: float, d: int) -> float:
    """h(x) = -x log2(x/(d-1)) - (1-x) log2(1-x), with 0 log 0 = 0."""
    if not 0.0 <= x <= 1.0:
        raise DomainError("argument must lie in [0, 1]", x=x)
    if d < 2:
        raise DomainError("dimension must be >= 2", d=d)
    h = 0.0
    if x > 0.0:
        h -= x * (math.log2(x) - math.log2(d - 1))
    if x < 1.0:
        h -= (1.0 - x) * math.log2(1.0 - x)
    return h


def secret_key_rate(d: int, q: float) -> float:
    """log2(d) - 2 h_d(q) bits per sifted photon; negative values are returned as-is."""
    return math.log2(d) - 2.0 * shannon_entropy_d(q, d)


def key_rate_threshold(d: int, tol: float = 1e-10) -> float:
    """QBER at which the key rate reaches zero, by bisection on [0, (d-1)/d]."""
    if d < 2:
        raise DomainError("dimension must be >= 2", d=d)
    lo, hi = 0.0, (d - 1) / d
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if secret_key_rate(d, mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class KeyRateReport:
    dimension: int
    fidelities: dict  # basis -> list of per-state fidelities
    qber: float
    rate: float
    threshold: float
    probabilities: dict = field(default_factory=dict)  # "ab" -> d x d nested list

    @property
    def fidelity_list(self) -> list[float]:
        return list(self.fidelities[0]) + list(self.fidelities[1])

    def check(self, tol: float = 1e-12) -> None:
        """Raise if the stored numbers are not mutually consistent."""
        if abs(self.qber - qber(self.fidelity_list)) > tol:
            raise DomainError("qber inconsistent with fidelities")
        if abs(self.rate - secret_key_rate(self.dimension, self.qber)) > tol:
            raise DomainError("rate inconsistent with qber")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["fidelities"] = {str(k): list(v) for k, v in self.fidelities.items()}
        return out

    def to_json(self, **extra) -> str:
        payload = dict(extra)
        payload.update(self.to_dict())
        return json.dumps(payload, indent=2, sort_keys=True)


def report_from_fidelities(d: int, computational: Sequence[float], superposition: Sequence[float]) -> KeyRateReport:
    f = {0: [float(x) for x in computational], 1: [float(x) for x in superposition]}
    q = qber(f[0] + f[1], d)
    return KeyRateReport(d, f, q, secret_key_rate(d, q), key_rate_threshold(d))


def build_report(tables: Mapping) -> KeyRateReport:
    """Report from count tables (or probability matrices) keyed by (alpha, beta).

    Fidelities are the diagonals of the matched-basis probability matrices.
    """
    missing = [p for p in ((0, 0), (1, 1)) if p not in tables]
    if missing:
        raise InsufficientDataError("matched-basis data missing", missing=[list(p) for p in missing])
    probs = {key: probabilities(value) for key, value in tables.items()}
    d = probs[(0, 0)].shape[0]
    report = report_from_fidelities(d, fidelities(probs[(0, 0)]), fidelities(probs[(1, 1)]))
    report.probabilities = {f"{a}{b}": p.tolist() for (a, b), p in sorted(probs.items())}
    return report


def rate_table(dims: Sequence[int], qbers: Sequence[float]) -> list[dict]:
    return [{"d": d, "qber": q, "rate": secret_key_rate(d, q)} for d in dims for q in qbers]
