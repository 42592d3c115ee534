import numpy as np
import pytest
from hypothesis import given, strategies as st

from speclocal.boxes import BBox
from speclocal.grouping import (
    Group,
    fuse_boxes,
    group_score,
    knn_groups,
    score_groups,
    select_and_fuse,
    top_groups,
)


def unit_rows(rng, n, d=12):
    f = rng.random((n, d))
    return f / np.linalg.norm(f, axis=1, keepdims=True)


def test_groups_clamped_to_set_size():
    groups = knn_groups(unit_rows(np.random.default_rng(0), 3), k=10)
    assert all(len(g.members) == 3 for g in groups)
    assert [g.seed for g in groups] == [0, 1, 2]
    assert all(g.members[0] == g.seed for g in groups)


def test_duplicate_is_first_neighbour():
    f = unit_rows(np.random.default_rng(1), 8)
    f[5] = f[2]
    assert knn_groups(f, k=4)[2].members[1] == 5


def test_neighbour_ties_break_by_index():
    f = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]])
    assert knn_groups(f, k=3)[0].members == (0, 1, 2)


def test_too_few_for_grouping():
    with pytest.raises(ValueError):
        knn_groups(np.ones((1, 3)))


def test_group_score_hand_example(frozen):
    f = np.array([[1.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(0.75)]])
    s = np.array([0.9, 0.5, 0.2])
    g = Group(0, (0, 1, 2))
    assert group_score(g, s, f) == pytest.approx(frozen["group_score_k3"], abs=1e-15)
    assert group_score(g, np.array([0.9, 0.0, 0.0]), f) == 0.0


def test_fuse_hand_example(frozen):
    assert fuse_boxes([(0, 0, 10, 10), (10, 10, 10, 10)]).as_tuple() == tuple(frozen["fuse_two_boxes"])
    assert fuse_boxes([(3, 4, 5, 6)] * 4).as_tuple() == (3, 4, 5, 6)


def test_fuse_rounds_half_up_and_clamps():
    assert fuse_boxes([(0, 0, 10, 10), (1, 1, 10, 10)]).as_tuple() == (1, 1, 10, 10)
    assert fuse_boxes([(90, 90, 20, 20)], image_size=(100, 100)).as_tuple() == (90, 90, 10, 10)


def test_c_larger_than_group_count():
    rng = np.random.default_rng(2)
    f = unit_rows(rng, 4)
    boxes = np.array([[0, 0, 10, 10], [2, 2, 10, 10], [4, 4, 10, 10], [6, 6, 10, 10]])
    groups = score_groups(knn_groups(f, 2), rng.random(4), f)
    b, chosen, union = select_and_fuse(groups, boxes, C=50)
    assert len(chosen) == 4 and union == [0, 1, 2, 3]
    assert b.as_tuple() == (3, 3, 10, 10)


def test_top_groups_tie_by_seed():
    gs = [Group(0, (0,), 1.0), Group(1, (1,), 2.0), Group(2, (2,), 2.0)]
    assert [g.seed for g in top_groups(gs, 2)] == [1, 2]


@st.composite
def instances(draw):
    seed = draw(st.integers(0, 100_000))
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    xy = rng.integers(0, 150, size=(n, 2))
    wh = rng.integers(1, 50, size=(n, 2))
    return unit_rows(rng, n), rng.random(n), np.hstack([xy, wh]), draw(st.integers(2, 12)), draw(st.integers(1, 6))


@given(instances(), st.floats(0.01, 100))
def test_score_scaling_argmax_invariance(inst, c):
    f, s, boxes, k, C = inst
    groups = knn_groups(f, k)
    base = score_groups(groups, s, f)
    scaled = score_groups(groups, c * s, f)
    for g0, g1 in zip(base, scaled):
        assert g0.score >= 0
        assert g1.score == pytest.approx(c * g0.score, rel=1e-12, abs=1e-300)
    b0, ch0, _ = select_and_fuse(base, boxes, C)
    b1, ch1, _ = select_and_fuse(scaled, boxes, C)
    assert [g.seed for g in ch0] == [g.seed for g in ch1]
    assert b0 == b1


@given(instances())
def test_fused_box_within_union_extremes(inst):
    f, s, boxes, k, C = inst
    b, _, union = select_and_fuse(score_groups(knn_groups(f, k), s, f), boxes, C)
    u = boxes[union]
    assert u[:, 0].min() <= b.x <= u[:, 0].max()
    assert u[:, 1].min() <= b.y <= u[:, 1].max()
    assert (u[:, 0] + u[:, 2]).min() <= b.x2 <= (u[:, 0] + u[:, 2]).max()
    assert (u[:, 1] + u[:, 3]).min() <= b.y2 <= (u[:, 1] + u[:, 3]).max()
