"""Shared test fixtures and independent oracle implementations.

The oracles here are deliberately naive (per-risk-set tallies, explicit
product-limit recursion) so they share no code path with the package.
"""

import numpy as np
import pytest
from numpy.random import Generator, Philox

from survcart import CovariateSpec, SurvivalDataset


def rng_for(*key):
    return Generator(Philox(key=list(key)))


def brute_logrank(times, events, group):
    """(O - E)/sqrt(V) for the group-True side, tallied per risk set."""
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    group = np.asarray(group, dtype=bool)
    O = E = V = 0.0
    for tj in sorted(set(times[events])):
        at = times >= tj
        nj = at.sum()
        n1j = (at & group).sum()
        dj = (events & (times == tj)).sum()
        O += (events & (times == tj) & group).sum()
        E += dj * n1j / nj
        if nj > 1:
            V += dj * (n1j / nj) * (1.0 - n1j / nj) * (nj - dj) / (nj - 1)
    if V <= 0.0:
        return None
    return (O - E) / np.sqrt(V)


def brute_km(times, indicator):
    """Product-limit recursion over distinct indicator-True times."""
    times = np.asarray(times, dtype=float)
    indicator = np.asarray(indicator, dtype=bool)
    grid = sorted(set(times[indicator]))
    surv = []
    s = 1.0
    for tj in grid:
        nj = (times >= tj).sum()
        dj = ((times == tj) & indicator).sum()
        s *= 1.0 - dj / nj
        surv.append(s)
    return np.array(grid), np.array(surv)


def brute_km_median(grid, surv):
    for tj, sj in zip(grid, surv):
        if sj <= 0.5:
            return tj
    return None


# the tie band mirrors splitting._TIE_RTOL: exact |LR| ties computed by
# different routes can differ by a few ulps
TIE_RTOL = 1e-9


def brute_best_continuous(times, events, x, minbucket):
    vals = np.unique(x)
    entries = []
    for i in range(len(vals) - 1):
        c = (vals[i] + vals[i + 1]) / 2.0
        left = x <= c
        if left.sum() < minbucket or (~left).sum() < minbucket:
            continue
        r = brute_logrank(times, events, left)
        if r is None:
            continue
        entries.append((abs(r), c, r))
    if not entries:
        return None
    m = max(a for a, _, _ in entries)
    band = m - TIE_RTOL * max(1.0, m)
    ties = sorted((c, r) for a, c, r in entries if a >= band)
    return ties[0]


def brute_best_categorical(times, events, x, minbucket):
    levels = sorted(set(x))
    if len(levels) < 2:
        return None
    if len(levels) == 2:
        prefixes = [(levels[0],)]
    else:
        keyed = []
        for idx, lv in enumerate(levels):
            mask = np.array([xi == lv for xi in x])
            med = brute_km_median(*brute_km(times[mask], events[mask]))
            keyed.append((np.inf if med is None else med, idx, lv))
        keyed.sort(key=lambda item: (item[0], item[1]))
        ordered = [item[2] for item in keyed]
        prefixes = [tuple(ordered[: i + 1]) for i in range(len(ordered) - 1)]
    entries = []
    for scan, pref in enumerate(prefixes):
        mask = np.array([xi in pref for xi in x])
        if mask.sum() < minbucket or (~mask).sum() < minbucket:
            continue
        r = brute_logrank(times, events, mask)
        if r is None:
            continue
        entries.append((abs(r), scan, pref, r))
    if not entries:
        return None
    m = max(a for a, *_ in entries)
    band = m - TIE_RTOL * max(1.0, m)
    ties = sorted(
        (scan, pref, r) for a, scan, pref, r in entries if a >= band
    )
    return ties[0][1], ties[0][2]


def censored_exponential(rng, n, rate, censored_fraction):
    """Event/censor competing draw with the requested censored share."""
    t_event = rng.exponential(1.0 / rate, n)
    if censored_fraction <= 0.0:
        return t_event, np.ones(n, dtype=bool)
    rate_c = rate * censored_fraction / (1.0 - censored_fraction)
    t_cens = rng.exponential(1.0 / rate_c, n)
    t = np.minimum(t_event, t_cens)
    return t, t_event <= t_cens


def one_var_dataset(times, events, x, kind):
    return SurvivalDataset(
        np.asarray(times, dtype=float),
        np.asarray(events, dtype=bool),
        meta=(CovariateSpec("x", kind),),
        columns={"x": np.asarray(x, dtype=object if kind == "categorical" else float)},
    )


@pytest.fixture
def demo_csv(tmp_path):
    """Small four-column survival CSV with one missing cell per kind."""
    path = tmp_path / "demo.csv"
    path.write_text(
        "id,time,status,age,group\n"
        "1,5.5,1,60,a\n"
        "2,12.25,0,52,b\n"
        "3,3.0,1,,a\n"
        "4,8.125,1,47,NA\n"
        "5,20.0,0,71,b\n"
    )
    return str(path)
