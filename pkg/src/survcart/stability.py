"""Parameter instability tests for partitioning variables.

Both tests ask whether the per-subject score contributions of one
likelihood component drift with a covariate X.  Scores are evaluated at
the component MLE of the node being examined, so under homogeneity the
group sums below are centered.

Categorical X with G levels: with s_g the score sum over level g, m_g
the level size and J the average per-subject information,

    chi2 = sum_g s_g' [m_g J]^(-1) s_g

is asymptotically chi-square with dim(theta) * (G - 1) degrees of
freedom.

Continuous X: order subjects by X and standardize the running score sum
at each distinct-value boundary,

    M(t_g) = N^(-1/2) J^(-1/2) sum_{i <= M_g} u_i .

Under homogeneity each coordinate of M behaves like a Brownian bridge
in t_g = M_g / N, so D_q = max_g |M(t_g)_q| is compared to the
distribution of the bridge supremum,

    F(x) = 1 + 2 sum_{l>=1} (-1)^l exp(-2 l^2 x^2),

one raw p-value per parameter, combined within a component by
Hochberg's step-up adjustment.  A variable's overall p-value applies
the same adjustment once more across the tested components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .datasets import CATEGORICAL
from .errors import (
    EmptyInputError,
    SingularInformationError,
    TooFewGroupsError,
)
from .families import CENSOR, EVENT, get_family, inv_sqrt, score_contributions

__all__ = [
    "fd_cdf",
    "fd_sf",
    "fd_quantile",
    "hochberg",
    "GroupedScores",
    "CategoricalResult",
    "ContinuousResult",
    "ComponentTest",
    "StabilityReport",
    "categorical_test",
    "continuous_test",
    "variable_test",
]


def fd_cdf(x: float) -> float:
    """CDF of the supremum of the absolute standard Brownian bridge.

    Alternating series for x >= 0.2; below that the terms cancel to
    roundoff, so the equivalent theta-series form
    sqrt(2 pi)/x * sum exp(-(2l-1)^2 pi^2 / (8 x^2)) is used instead.
    """
    if x <= 0.0:
        return 0.0
    if x < 0.2:
        total = 0.0
        for el in range(1, 1001):
            term = math.exp(-((2 * el - 1) ** 2) * math.pi**2 / (8.0 * x * x))
            total += term
            if term < 1e-300:
                break
        return min(1.0, math.sqrt(2.0 * math.pi) / x * total)
    total = 0.0
    for el in range(1, 1001):
        term = 2.0 * (-1.0) ** (el + 1) * math.exp(-2.0 * el * el * x * x)
        total += term
        if abs(term) < 1e-12:
            break
    return min(1.0, max(0.0, 1.0 - total))


def fd_sf(x: float) -> float:
    """Upper tail 1 - fd_cdf(x), summed directly.

    Computing 1 - fd_cdf(x) loses everything below machine epsilon once
    x exceeds about 4.4, which would collapse all strongly significant
    continuous tests to an exact zero and make them incomparable with
    chi-square p-values.  The alternating series for the tail itself,

        2 sum_{l>=1} (-1)^(l+1) exp(-2 l^2 x^2),

    keeps full relative accuracy out to the underflow limit.
    """
    if x <= 0.0:
        return 1.0
    if x < 0.2:
        return min(1.0, 1.0 - fd_cdf(x))
    total = 0.0
    for el in range(1, 1001):
        term = 2.0 * (-1.0) ** (el + 1) * math.exp(-2.0 * el * el * x * x)
        total += term
        if abs(term) < 1e-12 * max(total, 1e-300):
            break
    return min(1.0, max(0.0, total))


def fd_quantile(p: float, tol: float = 1e-10) -> float:
    """Inverse of fd_cdf by bisection."""
    if not 0.0 < p < 1.0:
        raise ValueError("quantile level must be in (0, 1)")
    lo, hi = 0.0, 10.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fd_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hochberg(pvalues) -> np.ndarray:
    """Hochberg step-up adjusted p-values, in the input order.

    With ascending p_(1) <= ... <= p_(m): adj_(m) = p_(m) and
    adj_(i) = min(adj_(i+1), (m - i + 1) p_(i)), capped at 1.
    """
    p = np.asarray(pvalues, dtype=float)
    if p.size == 0:
        raise EmptyInputError("hochberg needs at least one p-value")
    order = np.argsort(p, kind="stable")
    sp = p[order]
    m = p.size
    adj = np.empty(m)
    adj[m - 1] = sp[m - 1]
    for i in range(m - 2, -1, -1):
        adj[i] = min(adj[i + 1], (m - i) * sp[i])
    np.minimum(adj, 1.0, out=adj)
    out = np.empty(m)
    out[order] = adj
    return out


@dataclass(frozen=True)
class GroupedScores:
    """Score sums grouped by the distinct values of one covariate."""

    values: np.ndarray      # distinct covariate values, ascending
    counts: np.ndarray      # group sizes m_g
    boundaries: np.ndarray  # cumulative sizes M_g
    sums: np.ndarray        # G x p per-group score sums
    cumsums: np.ndarray     # G x p running sums in value order

    @classmethod
    def from_values(cls, x, scores) -> "GroupedScores":
        scores = np.atleast_2d(np.asarray(scores, dtype=float))
        if scores.shape[0] == 1 and np.asarray(x).size != 1:
            scores = scores.T
        values, inverse, counts = np.unique(
            np.asarray(x), return_inverse=True, return_counts=True
        )
        sums = np.zeros((values.size, scores.shape[1]))
        np.add.at(sums, inverse, scores)
        return cls(
            values=values,
            counts=counts,
            boundaries=np.cumsum(counts),
            sums=sums,
            cumsums=np.cumsum(sums, axis=0),
        )

    @property
    def n_groups(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class CategoricalResult:
    statistic: float
    df: int
    p: float
    small_groups: bool


@dataclass(frozen=True)
class ContinuousResult:
    # one (parameter name, D statistic, raw p) triple per parameter
    entries: tuple


def _check_information(info):
    info = np.atleast_2d(np.asarray(info, dtype=float))
    vals = np.linalg.eigvalsh(info)
    if vals[0] <= 1e-12 * max(abs(vals[-1]), 1e-300):
        raise SingularInformationError("information matrix is singular")
    return info


def categorical_test(scores, info, labels) -> CategoricalResult:
    """Joint chi-square instability test over the levels of a factor."""
    grouped = GroupedScores.from_values(labels, scores)
    if grouped.n_groups < 2:
        raise TooFewGroupsError("categorical test needs at least 2 levels")
    info = _check_information(info)
    inv = np.linalg.inv(info)
    quad = np.einsum("gi,ij,gj->g", grouped.sums, inv, grouped.sums)
    stat = float(np.sum(quad / grouped.counts))
    df = info.shape[0] * (grouped.n_groups - 1)
    return CategoricalResult(
        statistic=stat,
        df=df,
        p=float(chi2.sf(stat, df)),
        small_groups=bool(grouped.counts.min() < 5),
    )


def continuous_test(scores, info, x, param_names=None) -> ContinuousResult:
    """Per-parameter bridge-supremum instability test along an ordering."""
    grouped = GroupedScores.from_values(x, scores)
    if grouped.n_groups < 2:
        raise TooFewGroupsError("continuous test needs at least 2 distinct values")
    info = _check_information(info)
    n = int(grouped.counts.sum())
    partial = grouped.cumsums[:-1]  # boundaries g = 1 .. G-1
    standardized = (partial @ inv_sqrt(info)) / math.sqrt(n)
    d_stats = np.max(np.abs(standardized), axis=0)
    if param_names is None:
        param_names = tuple(f"param{q}" for q in range(d_stats.size))
    entries = tuple(
        (name, float(d), fd_sf(float(d)))
        for name, d in zip(param_names, d_stats)
    )
    return ContinuousResult(entries=entries)


@dataclass(frozen=True)
class ComponentTest:
    """Instability evidence from one likelihood component."""

    component: str
    tested: bool
    component_p: float
    skip_reason: str = None      # "degenerate" | "disabled" when not tested
    entries: tuple = ()          # (label, statistic, raw p) per test
    adjusted: tuple = ()         # within-component Hochberg-adjusted ps
    df: int = None               # categorical only
    small_groups: bool = False


@dataclass(frozen=True)
class StabilityReport:
    """Combined instability verdict for one partitioning variable."""

    variable: str
    kind: str
    testable: bool
    n_used: int
    n_groups: int
    event: ComponentTest
    censor: ComponentTest
    cross_adjusted: tuple    # (event, censor) after the across-component step
    variable_p: float
    more_heterogeneous: str


def _skipped(component, reason):
    return ComponentTest(
        component=component, tested=False, component_p=1.0, skip_reason=reason
    )


def _component_test(component, model, scores, kind, x):
    names = get_family(model.family).param_names
    if kind == CATEGORICAL:
        res = categorical_test(scores, model.info, x)
        return ComponentTest(
            component=component,
            tested=True,
            component_p=res.p,
            entries=(("joint", res.statistic, res.p),),
            adjusted=(res.p,),
            df=res.df,
            small_groups=res.small_groups,
        )
    res = continuous_test(scores, model.info, x, param_names=names)
    raw = [e[2] for e in res.entries]
    adjusted = hochberg(raw)
    return ComponentTest(
        component=component,
        tested=True,
        component_p=float(adjusted.min()),
        entries=res.entries,
        adjusted=tuple(float(a) for a in adjusted),
    )


def variable_test(
    data,
    variable: str,
    event_model,
    censor_model,
    censor_enabled: bool = True,
) -> StabilityReport:
    """Run the instability tests of both components for one variable.

    Subjects with a missing value on ``variable`` are left out.  A
    component whose model is None is skipped (p = 1): "degenerate" when
    the node had no contributing observations, "disabled" when the
    censoring side is not modeled at all.  Skipped components do not
    enter the across-component Hochberg family.
    """
    spec = data.spec_for(variable)
    include = ~data.missing_mask(variable)
    x = data.covariate(variable)[include]
    n_used = int(np.count_nonzero(include))
    distinct = np.unique(x)

    event_ct = _skipped(EVENT, "degenerate")
    censor_ct = _skipped(CENSOR, "disabled" if not censor_enabled else "degenerate")

    if distinct.size < 2:
        return StabilityReport(
            variable=variable,
            kind=spec.kind,
            testable=False,
            n_used=n_used,
            n_groups=int(distinct.size),
            event=event_ct,
            censor=censor_ct,
            cross_adjusted=(1.0, 1.0),
            variable_p=1.0,
            more_heterogeneous=EVENT,
        )

    if event_model is not None:
        scores = score_contributions(event_model, data)[include]
        event_ct = _component_test(EVENT, event_model, scores, spec.kind, x)
    if censor_enabled and censor_model is not None:
        scores = score_contributions(censor_model, data)[include]
        censor_ct = _component_test(CENSOR, censor_model, scores, spec.kind, x)

    tested = [ct for ct in (event_ct, censor_ct) if ct.tested]
    cross = {EVENT: 1.0, CENSOR: 1.0}
    if tested:
        adj = hochberg([ct.component_p for ct in tested])
        for ct, a in zip(tested, adj):
            cross[ct.component] = float(a)
        variable_p = float(adj.min())
    else:
        variable_p = 1.0

    if event_ct.tested and censor_ct.tested:
        mode = EVENT if event_ct.component_p <= censor_ct.component_p else CENSOR
    elif censor_ct.tested:
        mode = CENSOR
    else:
        mode = EVENT

    return StabilityReport(
        variable=variable,
        kind=spec.kind,
        testable=bool(tested),
        n_used=n_used,
        n_groups=int(distinct.size),
        event=event_ct,
        censor=censor_ct,
        cross_adjusted=(cross[EVENT], cross[CENSOR]),
        variable_p=variable_p,
        more_heterogeneous=mode,
    )
