import numpy as np
import pytest

from survcart import (
    CENSOR,
    EVENT,
    MissingValueError,
    SchemaMismatchError,
    SurvTree,
    SurvivalDataset,
    TreeConfig,
    TreeMetrics,
    TruthMismatchError,
    TruthSpec,
    grow,
    predict_node,
    tree_metrics,
)
from survcart.datasets import CovariateSpec
from survcart.tree import (
    STOP_MAX_DEPTH,
    STOP_NO_SIGNIFICANT_VARIABLE,
    STOP_NO_TESTABLE_COMPONENT,
    STOP_TOO_SMALL,
)

from conftest import rng_for


def two_group_data(rng, n=300, rate_a=0.2, rate_b=0.02, censor_rate=0.05,
                   extra_noise=True):
    """Half the subjects get rate_a, half rate_b, via binary variable g."""
    g = np.repeat([0.0, 1.0], n // 2)
    rng.shuffle(g)
    rates = np.where(g > 0.5, rate_a, rate_b)
    ev_t = rng.exponential(1.0 / rates)
    ce_t = rng.exponential(1.0 / censor_rate, n)
    times = np.minimum(ev_t, ce_t)
    events = ev_t <= ce_t
    meta = [CovariateSpec("g", "continuous")]
    cols = {"g": g}
    if extra_noise:
        meta.append(CovariateSpec("noise", "continuous"))
        cols["noise"] = rng.uniform(0.0, 1.0, n)
    return SurvivalDataset(times, events, meta=tuple(meta), columns=cols), g


def test_config_validation():
    TreeConfig()  # defaults are consistent
    with pytest.raises(ValueError):
        TreeConfig(alpha=0.0)
    with pytest.raises(ValueError):
        TreeConfig(alpha=1.0)
    with pytest.raises(ValueError):
        TreeConfig(minbucket=0)
    with pytest.raises(ValueError):
        TreeConfig(minsplit=10, minbucket=6)
    with pytest.raises(ValueError):
        TreeConfig(event_dist="cauchy")
    with pytest.raises(ValueError):
        TreeConfig(max_depth=-1)


def test_two_group_structure_recovered():
    rng = rng_for(501, 0)
    data, g = two_group_data(rng)
    tree = grow(data, TreeConfig(minsplit=40, minbucket=20))
    assert not tree.root.is_leaf
    assert tree.root.split.variable == "g"
    assert tree.root.split.cutpoint == pytest.approx(0.5)
    left, right = (tree.nodes[c] for c in tree.root.children)
    assert left.n + right.n == data.n
    # leaf rate estimates straddle the true rates
    by_side = sorted(tree.leaves(), key=lambda nd: nd.event_model.params[0])
    assert by_side[0].event_model.params[0] < 0.1 < by_side[-1].event_model.params[0]


def test_homogeneous_data_stays_single_leaf():
    rng = rng_for(502, 0)
    n = 200
    times = rng.exponential(10.0, n)
    events = np.ones(n, bool)
    data = SurvivalDataset(
        times, events,
        meta=(CovariateSpec("x", "continuous"),),
        columns={"x": rng.uniform(0.0, 1.0, n)},
    )
    tree = grow(data, TreeConfig(alpha=0.01, minsplit=40, minbucket=20))
    assert tree.n_leaves == 1
    assert tree.root.stop_reason == STOP_NO_SIGNIFICANT_VARIABLE


def test_stop_reason_too_small():
    rng = rng_for(503, 0)
    data, _ = two_group_data(rng, n=40)
    tree = grow(data, TreeConfig(minsplit=50, minbucket=25))
    assert tree.n_leaves == 1
    assert tree.root.stop_reason == STOP_TOO_SMALL


def test_stop_reason_max_depth_zero():
    rng = rng_for(504, 0)
    data, _ = two_group_data(rng)
    tree = grow(data, TreeConfig(minsplit=40, minbucket=20, max_depth=0))
    assert tree.n_leaves == 1
    assert tree.root.stop_reason == STOP_MAX_DEPTH


def test_stop_reason_no_testable_component():
    # zero events and censoring disabled: nothing left to test
    n = 60
    data = SurvivalDataset(
        np.linspace(1.0, 6.0, n), np.zeros(n, bool),
        meta=(CovariateSpec("x", "continuous"),),
        columns={"x": np.arange(float(n))},
    )
    tree = grow(data, TreeConfig(minsplit=20, minbucket=10,
                                 censor_heterogeneity=False))
    assert tree.root.stop_reason == STOP_NO_TESTABLE_COMPONENT


def test_max_depth_one_limits_to_two_leaves():
    rng = rng_for(505, 0)
    data, _ = two_group_data(rng, n=400, rate_a=0.5, rate_b=0.02)
    tree = grow(data, TreeConfig(minsplit=30, minbucket=15, max_depth=1))
    assert tree.n_leaves <= 2
    for leaf in tree.leaves():
        assert leaf.depth <= 1


def test_node_ids_are_heap_ordered():
    rng = rng_for(506, 0)
    data, _ = two_group_data(rng)
    tree = grow(data, TreeConfig(minsplit=40, minbucket=20))
    for node in tree.nodes.values():
        if not node.is_leaf:
            assert node.children == (2 * node.node_id, 2 * node.node_id + 1)
            for cid in node.children:
                assert tree.nodes[cid].depth == node.depth + 1
    assert tree.root.node_id == SurvTree.ROOT


def test_split_improvements_nonnegative():
    rng = rng_for(507, 0)
    data, _ = two_group_data(rng)
    tree = grow(data, TreeConfig(minsplit=40, minbucket=20))
    assert tree.improvements
    for node_id, gain in tree.improvements:
        assert not tree.nodes[node_id].is_leaf
        assert gain >= -1e-8


def test_leaf_logliks_sum_to_tree_loglik():
    rng = rng_for(508, 0)
    data, _ = two_group_data(rng)
    tree = grow(data, TreeConfig(minsplit=40, minbucket=20))
    total = sum(leaf.loglik for leaf in tree.leaves())
    assert tree.loglik == pytest.approx(total, abs=1e-9)
    n_par = sum(m.params.size for leaf in tree.leaves()
                for m in (leaf.event_model, leaf.censor_model) if m is not None)
    assert tree.aic == pytest.approx(-2.0 * total + 2.0 * n_par, abs=1e-9)


# --- prediction -------------------------------------------------------------

def grown_two_level(rng):
    data, _ = two_group_data(rng)
    return grow(data, TreeConfig(minsplit=40, minbucket=20)), data


def test_predict_node_routes_every_training_subject_home():
    rng = rng_for(509, 0)
    tree, data = grown_two_level(rng)
    for i in range(data.n):
        cov = {m.name: data.covariate(m.name)[i] for m in data.meta}
        nid = predict_node(tree, cov)
        assert i in set(tree.nodes[nid].subject_index.tolist())


def test_predict_node_missing_key_raises_schema_error():
    rng = rng_for(510, 0)
    tree, _ = grown_two_level(rng)
    with pytest.raises(SchemaMismatchError):
        predict_node(tree, {"noise": 0.3})


def test_predict_node_none_and_nan_raise_missing_value():
    rng = rng_for(511, 0)
    tree, _ = grown_two_level(rng)
    with pytest.raises(MissingValueError):
        predict_node(tree, {"g": None, "noise": 0.1})
    with pytest.raises(MissingValueError):
        predict_node(tree, {"g": float("nan"), "noise": 0.1})


def test_predict_unseen_categorical_level_goes_right():
    rng = rng_for(512, 0)
    n = 300
    lv = np.array(list("ab") * (n // 2), object)
    rates = np.where(lv == "a", 0.5, 0.02)
    t = rng.exponential(1.0 / rates)
    data = SurvivalDataset(
        t, np.ones(n, bool),
        meta=(CovariateSpec("grp", "categorical"),),
        columns={"grp": lv},
    )
    tree = grow(data, TreeConfig(minsplit=40, minbucket=20,
                                 censor_heterogeneity=False))
    assert not tree.root.is_leaf
    nid = predict_node(tree, {"grp": "zz"})
    assert nid == tree.root.children[1]


# --- recovery metrics -------------------------------------------------------

def test_tree_metrics_perfect_partition_scores_zero_delta():
    rng = rng_for(513, 0)
    data, g = two_group_data(rng, n=400, censor_rate=0.03)
    tree = grow(data, TreeConfig(minsplit=40, minbucket=20))
    assert tree.root.split.variable == "g"
    labels = np.where(g > 0.5, "hi", "lo")
    truth = TruthSpec(subgroup=labels,
                      rates={"hi": (0.2, 0.03), "lo": (0.02, 0.03)})
    m = tree_metrics(tree, data, truth)
    assert isinstance(m, TreeMetrics)
    assert m.n_leaves == tree.n_leaves
    assert m.mad_event >= 0.0 and m.perfect_mad_event > 0.0
    if tree.n_leaves == 2:
        # the fitted partition is exactly the true one
        assert m.mad_event == pytest.approx(m.perfect_mad_event, abs=1e-12)
        assert m.delta_event_pct == pytest.approx(0.0, abs=1e-9)


def test_tree_metrics_single_leaf_never_beats_perfect():
    rng = rng_for(514, 0)
    data, g = two_group_data(rng, n=200)
    tree = grow(data, TreeConfig(minsplit=500, minbucket=25))
    labels = np.where(g > 0.5, "hi", "lo")
    truth = TruthSpec(subgroup=labels,
                      rates={"hi": (0.2, 0.05), "lo": (0.02, 0.05)})
    m = tree_metrics(tree, data, truth)
    assert m.n_leaves == 1
    assert m.mad_event > m.perfect_mad_event
    assert m.delta_event_pct > 0.0


def test_tree_metrics_shape_and_label_checks():
    rng = rng_for(515, 0)
    data, g = two_group_data(rng, n=100)
    tree = grow(data, TreeConfig(minsplit=500, minbucket=25))
    with pytest.raises(TruthMismatchError):
        tree_metrics(tree, data, TruthSpec(np.array(["a"]), {"a": (0.1, 0.1)}))
    labels = np.where(g > 0.5, "hi", "lo")
    with pytest.raises(TruthMismatchError):
        tree_metrics(tree, data, TruthSpec(labels, {"hi": (0.1, 0.1)}))


# --- invariances ------------------------------------------------------------

def partition_signature(tree):
    return frozenset(frozenset(leaf.subject_index.tolist())
                     for leaf in tree.leaves())


def test_subject_reorder_keeps_partition():
    rng = rng_for(516, 0)
    data, _ = two_group_data(rng)
    perm = rng.permutation(data.n)
    shuffled = data.subset(perm)
    cfg = TreeConfig(minsplit=40, minbucket=20)
    a = grow(data, cfg)
    b = grow(shuffled, cfg)
    sig_b = frozenset(frozenset(perm[list(s)].tolist())
                      for s in partition_signature(b))
    assert partition_signature(a) == sig_b
    assert a.loglik == pytest.approx(b.loglik, abs=1e-8)


def test_monotone_covariate_transform_keeps_partition():
    rng = rng_for(517, 0)
    data, g = two_group_data(rng)
    cfg = TreeConfig(minsplit=40, minbucket=20)
    a = grow(data, cfg)
    warped = SurvivalDataset(
        data.times, data.events, meta=data.meta,
        columns={"g": np.exp(data.covariate("g")),
                 "noise": data.covariate("noise") ** 3},
    )
    b = grow(warped, cfg)
    assert partition_signature(a) == partition_signature(b)


def test_time_rescaling_keeps_partition_for_exponential():
    rng = rng_for(518, 0)
    data, _ = two_group_data(rng)
    cfg = TreeConfig(minsplit=40, minbucket=20)
    a = grow(data, cfg)
    scaled = SurvivalDataset(
        3.7 * data.times, data.events, meta=data.meta,
        columns={m.name: data.covariate(m.name) for m in data.meta},
    )
    b = grow(scaled, cfg)
    assert partition_signature(a) == partition_signature(b)
    for nid in a.nodes:
        assert nid in b.nodes
        if not a.nodes[nid].is_leaf:
            assert a.nodes[nid].split.variable == b.nodes[nid].split.variable


def test_categorical_relabeling_keeps_partition():
    rng = rng_for(519, 0)
    n = 400
    lv = np.array([("a", "b", "c")[v] for v in rng.integers(0, 3, n)], object)
    rates = {"a": 0.4, "b": 0.05, "c": 0.05}
    t = np.array([rng.exponential(1.0 / rates[v]) for v in lv])
    e = np.ones(n, bool)
    meta = (CovariateSpec("grp", "categorical"),)
    data = SurvivalDataset(t, e, meta=meta, columns={"grp": lv})
    rename = {"a": "z9", "b": "k2", "c": "m5"}
    renamed = SurvivalDataset(
        t, e, meta=meta,
        columns={"grp": np.array([rename[v] for v in lv], object)},
    )
    cfg = TreeConfig(minsplit=40, minbucket=20, censor_heterogeneity=False)
    a = grow(data, cfg)
    b = grow(renamed, cfg)
    # partition is invariant; left/right orientation may swap with the labels
    assert partition_signature(a) == partition_signature(b)
    assert a.loglik == pytest.approx(b.loglik, abs=1e-8)
    assert a.n_leaves == b.n_leaves
