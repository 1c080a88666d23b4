import math

import numpy as np
import pytest

from treespan.graph import Graph, is_tree
from treespan.mst import ProjectionDiff
from treespan.pairs import EdgeLogits, EdgeProbabilities, EdgeTargets, complete_pairs, pair_count
from treespan.sfs import (
    CASE_DESCRIPTIONS,
    MINUS,
    PLUS,
    SfsConfig,
    case_for_pair,
    cross_entropy,
    edge_loss,
    gradient_case,
    pair_diagnostics,
    sfs_backward,
    sfs_forward,
    softmax_pair,
    suppress,
    suppressed_slot,
    threshold_edges,
)

EPS10 = math.exp(-10.0) / (1.0 + math.exp(-10.0))


def logits1(f_plus, f_minus):
    return EdgeLogits(2, [[f_plus, f_minus]])


def test_softmax_symmetric_pair():
    assert softmax_pair(logits1(0.0, 0.0)).values[0] == pytest.approx([0.5, 0.5], abs=0)


def test_softmax_suppressed_side_residual():
    y = softmax_pair(logits1(0.0, -10.0)).values[0]
    assert y[MINUS] == pytest.approx(EPS10, rel=1e-12)
    assert y[MINUS] == pytest.approx(4.54e-5, rel=1e-2)
    assert y[PLUS] == pytest.approx(1.0 - EPS10, rel=1e-12)


def test_softmax_shift_invariance():
    assert softmax_pair(logits1(3.0, 3.0)).values[0] == pytest.approx([0.5, 0.5], abs=0)
    rng = np.random.default_rng(0)
    vals = rng.uniform(-4, 4, (pair_count(5), 2))
    shifted = vals + rng.uniform(-100, 100, (pair_count(5), 1))
    a = softmax_pair(EdgeLogits(5, vals)).values
    b = softmax_pair(EdgeLogits(5, shifted)).values
    assert np.allclose(a, b, atol=1e-12)


def test_logits_reject_non_finite():
    with pytest.raises(ValueError):
        EdgeLogits(2, [[float("nan"), 0.0]])
    with pytest.raises(ValueError):
        EdgeLogits(2, [[float("inf"), 0.0]])


def test_threshold_strict_inequality():
    p = EdgeProbabilities(3, [[0.5, 0.5]] * 3)
    assert threshold_edges(p) == frozenset()


def test_threshold_single_winner():
    p = EdgeProbabilities(3, [[0.9, 0.1], [0.1, 0.9], [0.1, 0.9]])
    assert threshold_edges(p) == {(0, 1)}


def test_threshold_includes_soft_winner():
    p = softmax_pair(logits1(2.0, 0.0))
    assert p.values[0, PLUS] == pytest.approx(0.88, abs=0.005)
    assert threshold_edges(p) == {(0, 1)}


def test_suppress_added_pair_overwrites_non_existence():
    diff = ProjectionDiff(added=frozenset({(0, 1)}), removed=frozenset())
    out = suppress(logits1(2.0, 1.5), diff, SfsConfig(10.0))
    assert out.values[0].tolist() == [2.0, -10.0]


def test_suppress_removed_pair_overwrites_existence():
    diff = ProjectionDiff(added=frozenset(), removed=frozenset({(0, 1)}))
    out = suppress(logits1(1.5, 2.0), diff, SfsConfig(10.0))
    assert out.values[0].tolist() == [-10.0, 2.0]


def test_suppress_untouched_pair_unchanged():
    out = suppress(logits1(1.5, 2.0), ProjectionDiff.empty(), SfsConfig(10.0))
    assert out.values[0].tolist() == [1.5, 2.0]


def test_suppressed_slot_mapping():
    diff = ProjectionDiff(added=frozenset({(0, 1)}), removed=frozenset({(0, 2)}))
    assert suppressed_slot((0, 1), diff) == MINUS
    assert suppressed_slot((0, 2), diff) == PLUS
    assert suppressed_slot((1, 2), diff) is None


def test_config_rejects_bad_lambda():
    with pytest.raises(ValueError):
        SfsConfig(0.0)
    with pytest.raises(ValueError):
        SfsConfig(float("inf"))


def test_forward_agreeing_prediction_passes_through():
    # Thresholded edges {(0,1),(0,2)} already form the cheapest spanning tree,
    # so no suppression happens and both heads coincide.
    logits = EdgeLogits(3, [[2.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
    fwd = sfs_forward(logits)
    assert fwd.diff.added == frozenset() and fwd.diff.removed == frozenset()
    assert fwd.tree == {(0, 1), (0, 2)}
    assert np.array_equal(fwd.constrained.values, fwd.unconstrained.values)
    assert fwd.constrained_edges == fwd.unconstrained_edges == fwd.tree


def test_forward_single_node():
    fwd = sfs_forward(EdgeLogits(1, np.zeros((0, 2))))
    assert fwd.tree == frozenset()
    assert fwd.constrained_edges == frozenset()


def test_forward_constrained_output_is_tree():
    rng = np.random.default_rng(1)
    for _ in range(30):
        logits = EdgeLogits(10, rng.uniform(-5, 5, (pair_count(10), 2)))
        fwd = sfs_forward(logits)
        assert fwd.constrained_edges == fwd.tree
        positions = [(float(1 + k), 2.0) for k in range(10)]
        assert is_tree(Graph.build(positions, fwd.constrained_edges, (64, 64)))


def test_cross_entropy_symmetric_probability():
    ce = cross_entropy(EdgeProbabilities(2, [[0.5, 0.5]]), EdgeTargets(2, [[1.0, 0.0]]))
    assert ce[0] == pytest.approx(math.log(2.0), rel=1e-12)


def test_cross_entropy_confident_correct():
    ce = cross_entropy(
        EdgeProbabilities(2, [[1.0 - EPS10, EPS10]]), EdgeTargets(2, [[1.0, 0.0]])
    )
    assert ce[0] == pytest.approx(EPS10, rel=1e-3)


def test_cross_entropy_confident_wrong():
    ce = cross_entropy(
        EdgeProbabilities(2, [[EPS10, 1.0 - EPS10]]), EdgeTargets(2, [[1.0, 0.0]])
    )
    assert ce[0] == pytest.approx(10.0, abs=1e-3)


def test_cross_entropy_floor_guards_zero_probability():
    ce = cross_entropy(EdgeProbabilities(2, [[0.0, 1.0]]), EdgeTargets(2, [[1.0, 0.0]]))
    assert ce[0] == pytest.approx(50.0)


def test_edge_loss_doubles_when_diff_empty():
    u = softmax_pair(EdgeLogits(3, [[3.0, -3.0], [3.0, -3.0], [-3.0, 3.0]]))
    t = EdgeTargets(3, [[1, 0], [1, 0], [0, 1]])
    loss = edge_loss(u, u, t)
    assert loss.total == pytest.approx(2.0 * loss.unconstrained_total, rel=1e-12)


def test_edge_loss_symmetric_single_pair():
    u = EdgeProbabilities(2, [[0.5, 0.5]])
    loss = edge_loss(u, u, EdgeTargets(2, [[0.0, 1.0]]))
    assert loss.total == pytest.approx(2.0 * math.log(2.0), rel=1e-12)


def test_edge_loss_suppressed_wrong_side_is_lambda_scale():
    logits = logits1(1.0, 0.0)
    diff = ProjectionDiff(added=frozenset({(0, 1)}), removed=frozenset())
    constrained = softmax_pair(suppress(logits, diff, SfsConfig(10.0)))
    loss = edge_loss(constrained, softmax_pair(logits), EdgeTargets(2, [[0.0, 1.0]]))
    assert loss.constrained_total > 10.0
    assert loss.unconstrained_total < 2.0


def test_edge_loss_rejects_bad_reduce():
    u = EdgeProbabilities(2, [[0.5, 0.5]])
    with pytest.raises(ValueError):
        edge_loss(u, u, EdgeTargets(2, [[1.0, 0.0]]), reduce="median")


def frozen_loss(values, n, diff, targets, config):
    """Total loss with the projection diff held fixed."""
    logits = EdgeLogits(n, values)
    unconstrained = softmax_pair(logits)
    constrained = softmax_pair(suppress(logits, diff, config))
    return edge_loss(constrained, unconstrained, targets).total


def numeric_gradient(values, n, diff, targets, config, h=1e-6):
    fd = np.zeros_like(values)
    for k in range(values.shape[0]):
        for c in range(2):
            up = values.copy()
            dn = values.copy()
            up[k, c] += h
            dn[k, c] -= h
            fd[k, c] = (
                frozen_loss(up, n, diff, targets, config)
                - frozen_loss(dn, n, diff, targets, config)
            ) / (2.0 * h)
    return fd


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(2)
    config = SfsConfig(10.0)
    for _ in range(25):
        n = int(rng.integers(3, 7))
        m = pair_count(n)
        values = rng.uniform(-3.0, 3.0, (m, 2))
        logits = EdgeLogits(n, values)
        fwd = sfs_forward(logits, config)
        t = np.zeros((m, 2))
        t[np.arange(m), rng.integers(0, 2, m)] = 1.0
        targets = EdgeTargets(n, t)
        grad = sfs_backward(logits, fwd.diff, targets, config)
        fd = numeric_gradient(values, n, fwd.diff, targets, config)
        denom = max(1e-8, np.abs(grad).max(), np.abs(fd).max())
        assert np.abs(grad - fd).max() / denom <= 1e-5


def test_backward_mean_reduction_scales():
    logits = EdgeLogits(3, [[1.0, 0.0], [0.5, -0.5], [-1.0, 1.0]])
    fwd = sfs_forward(logits)
    targets = EdgeTargets(3, [[1, 0], [0, 1], [0, 1]])
    g_sum = sfs_backward(logits, fwd.diff, targets)
    g_mean = sfs_backward(logits, fwd.diff, targets, reduce="mean")
    assert np.allclose(g_sum / 3.0, g_mean)


def test_backward_suppressed_slot_only_carries_unconstrained_term():
    logits = logits1(1.0, 0.5)
    diff = ProjectionDiff(added=frozenset(), removed=frozenset({(0, 1)}))
    targets = EdgeTargets(2, [[1.0, 0.0]])
    grad = sfs_backward(logits, diff, targets)
    y = softmax_pair(logits).values[0]
    # Existence slot was overwritten: only the unconstrained head contributes.
    assert grad[0, PLUS] == pytest.approx(y[PLUS] - 1.0, rel=1e-12)


def all_case_table_rows():
    return [
        (("none", PLUS, PLUS), 1),
        (("none", PLUS, MINUS), 2),
        (("removed", PLUS, PLUS), 3),
        (("removed", PLUS, MINUS), 4),
        (("none", MINUS, PLUS), 5),
        (("none", MINUS, MINUS), 6),
        (("added", MINUS, PLUS), 7),
        (("added", MINUS, MINUS), 8),
    ]


def test_gradient_case_table():
    for (membership, predicted, target), case in all_case_table_rows():
        assert gradient_case(membership, predicted, target) == case
        assert case in CASE_DESCRIPTIONS


def test_gradient_case_rejects_inconsistent():
    with pytest.raises(ValueError):
        gradient_case("removed", MINUS, PLUS)
    with pytest.raises(ValueError):
        gradient_case("added", PLUS, PLUS)
    with pytest.raises(ValueError):
        gradient_case("sideways", PLUS, PLUS)


def triangle_all_positive(rng):
    """Logits on 3 nodes with every pair predicted existent."""
    vals = np.zeros((3, 2))
    vals[:, PLUS] = rng.uniform(0.5, 2.5, 3)
    vals[:, MINUS] = rng.uniform(-2.5, 0.0, 3)
    return EdgeLogits(3, vals)


def triangle_all_negative(rng):
    vals = np.zeros((3, 2))
    vals[:, PLUS] = rng.uniform(-2.5, 0.0, 3)
    vals[:, MINUS] = rng.uniform(0.5, 2.5, 3)
    return EdgeLogits(3, vals)


def test_case_assignment_on_forward_pass():
    rng = np.random.default_rng(5)
    fwd = sfs_forward(triangle_all_positive(rng))
    assert len(fwd.diff.removed) == 1
    removed = next(iter(fwd.diff.removed))
    kept = [p for p in complete_pairs(3) if p != removed]
    t = EdgeTargets.from_edges(3, kept)
    assert case_for_pair(fwd, removed, t) == 4
    assert all(case_for_pair(fwd, p, t) == 1 for p in kept)


def test_pair_diagnostics_fields_and_dominance():
    rng = np.random.default_rng(6)
    fwd = sfs_forward(triangle_all_negative(rng))
    assert fwd.diff.added == fwd.tree and len(fwd.diff.added) == 2
    # Mark every added pair as spurious: its constrained gradient is the
    # near-unit push away from the forced edge, dominating the unconstrained.
    targets = EdgeTargets.from_edges(3, [])
    records = pair_diagnostics(fwd, targets)
    assert len(records) == 3
    for rec in records:
        assert set(rec) >= {"pair", "case", "description", "grad_unconstrained",
                            "grad_constrained", "constrained_dominates"}
        if tuple(rec["pair"]) in fwd.diff.added:
            assert rec["case"] == 8
            assert rec["constrained_dominates"]
            assert rec["grad_constrained"][PLUS] == pytest.approx(1.0, abs=1e-3)
            assert rec["grad_constrained"][MINUS] == 0.0
        else:
            assert rec["case"] == 6
