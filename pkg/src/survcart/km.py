"""Product-limit (Kaplan-Meier) estimation for either flavor of time.

The "event" flavor estimates event-time survival treating censorings as
incomplete; the "censor" flavor flips the indicator and estimates the
censoring-time distribution the same way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError
from .families import CENSOR, EVENT


@dataclass(frozen=True)
class KMCurve:
    """Step survival curve on the grid of distinct (flavor-)event times."""

    flavor: str
    times: np.ndarray     # distinct event times, ascending
    survival: np.ndarray  # S at each grid time
    at_risk: np.ndarray
    n_events: np.ndarray
    n_total: int

    def survival_at(self, t: float) -> float:
        idx = np.searchsorted(self.times, t, side="right")
        return 1.0 if idx == 0 else float(self.survival[idx - 1])


def km_fit(times, events, flavor: str = EVENT) -> KMCurve:
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    if times.size == 0:
        raise EmptyInputError("km_fit needs at least one subject")
    if flavor not in (EVENT, CENSOR):
        raise ValueError(f"flavor must be {EVENT!r} or {CENSOR!r}")
    w = events if flavor == EVENT else ~events
    order = np.argsort(times, kind="stable")
    ts = times[order]
    grid, d = np.unique(ts[w[order]], return_counts=True)
    at_risk = times.size - np.searchsorted(ts, grid, side="left")
    surv = np.cumprod(1.0 - d / at_risk)
    return KMCurve(
        flavor=flavor,
        times=grid,
        survival=surv,
        at_risk=at_risk,
        n_events=d,
        n_total=times.size,
    )


def km_median(curve: KMCurve):
    """Smallest grid time with S(t) <= 0.5, or None when S never gets there."""
    hit = np.nonzero(curve.survival <= 0.5)[0]
    if hit.size == 0:
        return None
    return float(curve.times[hit[0]])
