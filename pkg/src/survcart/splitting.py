"""Maximally selected two-sample log-rank split search.

The split statistic is the standardized log-rank comparison of the two
sides of a candidate cutpoint.  Over the distinct event times tau_j
with d_j events, n_j subjects at risk and n_1j of them in group 1,

    LR = (O - E) / sqrt(V),   O = sum d_1j,   E = sum d_j n_1j / n_j,
    V  = sum d_j (n_1j/n_j)(1 - n_1j/n_j)(n_j - d_j)/(n_j - 1),

positive when group 1 carries more events than expected.  In "censor"
mode the indicator is flipped first so the comparison is between
censoring-time distributions.

For a continuous variable every midpoint between consecutive distinct
values is a candidate and the whole sweep is evaluated incrementally:
the numerator is the running sum of martingale residuals
d_i - H(t_i) in covariate order (H the Nelson-Aalen cumulative
hazard), and the variance reuses running at-risk counts per event
time.  For a factor with more than two levels the levels are ordered
by their within-level product-limit median and the k - 1 ordered
prefixes are scanned, mirroring the continuous case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import CATEGORICAL
from .errors import EmptyGroupError
from .families import EVENT
from .km import km_fit, km_median

__all__ = ["LogrankResult", "SplitCandidate", "logrank", "candidate_splits", "best_split"]


@dataclass(frozen=True)
class LogrankResult:
    statistic: float
    defined: bool  # False when there are no events or zero variance


@dataclass(frozen=True)
class SplitCandidate:
    """One admissible binary split, ranked by |statistic|."""

    variable: str
    kind: str
    cutpoint: object   # float threshold, or tuple of left-side levels
    mode: str
    statistic: float
    left_n: int
    right_n: int


def _risk_table(times, events):
    """Distinct event times with event counts and at-risk counts."""
    order = np.argsort(times, kind="stable")
    ts = times[order]
    grid, d = np.unique(ts[events[order]], return_counts=True)
    n_risk = times.size - np.searchsorted(ts, grid, side="left")
    return grid, d.astype(float), n_risk.astype(float)


def logrank(times, events, group) -> LogrankResult:
    """Standardized log-rank statistic; group is a boolean membership mask."""
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    group = np.asarray(group, dtype=bool)
    n1 = int(np.count_nonzero(group))
    if n1 == 0 or n1 == times.size:
        raise EmptyGroupError("both groups need at least one subject")
    if not events.any():
        return LogrankResult(0.0, False)
    grid, d, n_risk = _risk_table(times, events)
    t1 = np.sort(times[group])
    n1_risk = t1.size - np.searchsorted(t1, grid, side="left")
    vals1, c1 = np.unique(times[group & events], return_counts=True)
    d1 = np.zeros(grid.size)
    d1[np.searchsorted(grid, vals1)] = c1
    frac = n1_risk / n_risk
    expected = d * frac
    with np.errstate(invalid="ignore", divide="ignore"):
        var_terms = np.where(
            n_risk > 1, d * frac * (1.0 - frac) * (n_risk - d) / (n_risk - 1), 0.0
        )
    variance = float(var_terms.sum())
    if variance <= 0.0:
        return LogrankResult(0.0, False)
    return LogrankResult(
        float((d1.sum() - expected.sum()) / np.sqrt(variance)), True
    )


def _effective_events(events, mode):
    events = np.asarray(events, dtype=bool)
    return events if mode == EVENT else ~events


def _continuous_candidates(variable, times, events, x, mode, minbucket):
    ev = _effective_events(events, mode)
    n = times.size
    values, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    if values.size < 2 or not ev.any():
        return []
    bounds = np.cumsum(counts)[:-1]  # left sizes at each boundary
    admissible = (bounds >= minbucket) & (n - bounds >= minbucket)
    if not admissible.any():
        return []

    grid, d, n_risk = _risk_table(times, ev)
    cumhaz = np.cumsum(d / n_risk)
    pos = np.searchsorted(grid, times, side="right")
    haz_at = np.concatenate(([0.0], cumhaz))[pos]
    resid = ev.astype(float) - haz_at

    order = np.argsort(inverse, kind="stable")  # subjects in covariate order
    numer = np.cumsum(resid[order])[bounds - 1]

    # at-risk counts on the left of each boundary, per event time
    k = pos[order]  # subject at risk for grid[j] iff j < k
    at_risk_rows = np.arange(grid.size)[None, :] < k[:, None]
    n_left = np.cumsum(at_risk_rows, axis=0)[bounds - 1].astype(float)
    frac = n_left / n_risk
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(n_risk > 1, d * (n_risk - d) / (n_risk - 1), 0.0)
    variance = (a * frac * (1.0 - frac)).sum(axis=1)

    out = []
    for g in np.nonzero(admissible)[0]:
        if variance[g] <= 0.0:
            continue
        stat = numer[g] / np.sqrt(variance[g])
        cut = 0.5 * (values[g] + values[g + 1])
        out.append(
            SplitCandidate(
                variable=variable,
                kind="continuous",
                cutpoint=float(cut),
                mode=mode,
                statistic=float(stat),
                left_n=int(bounds[g]),
                right_n=int(n - bounds[g]),
            )
        )
    return out


def _ordered_levels(times, events, x, mode):
    """Levels sorted by within-level product-limit median (None sorts last)."""
    levels = np.unique(x)
    keyed = []
    for idx, level in enumerate(levels):
        mask = x == level
        med = km_median(km_fit(times[mask], events[mask], flavor=mode))
        keyed.append((np.inf if med is None else med, idx, level))
    keyed.sort(key=lambda item: (item[0], item[1]))
    return [item[2] for item in keyed]


def _categorical_candidates(variable, times, events, x, mode, minbucket):
    levels = np.unique(x)
    if levels.size < 2:
        return []
    if levels.size == 2:
        prefixes = [(levels[0],)]
    else:
        ordered = _ordered_levels(times, events, x, mode)
        prefixes = [tuple(ordered[: i + 1]) for i in range(len(ordered) - 1)]
    ev = _effective_events(events, mode)
    out = []
    for left_levels in prefixes:
        mask = np.isin(x, np.array(left_levels, dtype=object))
        left_n = int(np.count_nonzero(mask))
        right_n = times.size - left_n
        if left_n < minbucket or right_n < minbucket:
            continue
        res = logrank(times, ev, mask)
        if not res.defined:
            continue
        out.append(
            SplitCandidate(
                variable=variable,
                kind=CATEGORICAL,
                cutpoint=left_levels,
                mode=mode,
                statistic=res.statistic,
                left_n=left_n,
                right_n=right_n,
            )
        )
    return out


def candidate_splits(data, variable, mode, minbucket) -> list:
    """All admissible splits on one variable, best |statistic| first.

    Ties go to the smaller cutpoint (earlier prefix for factors).
    Subjects missing the variable are left out of the tally.
    """
    spec = data.spec_for(variable)
    include = ~data.missing_mask(variable)
    times = data.times[include]
    events = data.events[include]
    x = data.covariate(variable)[include]
    if times.size == 0:
        return []
    if spec.kind == CATEGORICAL:
        cands = _categorical_candidates(variable, times, events, x, mode, minbucket)
        return _tolerance_ranked(cands, lambda item: item[0])
    cands = _continuous_candidates(variable, times, events, x, mode, minbucket)
    return _tolerance_ranked(cands, lambda item: item[1].cutpoint)


# Exact |LR| ties are common (complementary partitions, or singletons at
# risk through every event time) while different evaluation routes can
# disagree in the last couple of ulps; a relative band makes the
# smaller-cutpoint tie-break independent of the computation path.
_TIE_RTOL = 1e-9


def _tolerance_ranked(cands, cluster_key):
    ranked = sorted(
        enumerate(cands), key=lambda item: (-abs(item[1].statistic), item[0])
    )
    out = []
    i = 0
    while i < len(ranked):
        scale = max(1.0, abs(ranked[i][1].statistic))
        j = i + 1
        while (
            j < len(ranked)
            and abs(ranked[j - 1][1].statistic) - abs(ranked[j][1].statistic)
            <= _TIE_RTOL * scale
        ):
            j += 1
        out.extend(sorted(ranked[i:j], key=cluster_key))
        i = j
    return [c for _, c in out]


def best_split(data, variable, mode, minbucket):
    """Admissible split maximizing |LR|, or None when no candidate exists."""
    cands = candidate_splits(data, variable, mode, minbucket)
    return cands[0] if cands else None
