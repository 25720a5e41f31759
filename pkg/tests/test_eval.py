"""Intersection-over-union accounting and report formatting tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as npst

from mars.errors import EmptyInput, InvalidValue, ShapeMismatch
from mars.eval_harness import (
    EpisodeResult,
    episode_result,
    format_report,
    iou,
    miou,
    per_class_iou,
)


def mask(rows):
    return np.array(rows, dtype=np.uint8)


# -- iou ------------------------------------------------------------------------

def test_iou_identical_masks():
    m = mask([[1, 0], [1, 1]])
    assert iou(m, m) == 1.0


def test_iou_disjoint_masks():
    assert iou(mask([[1, 0]]), mask([[0, 1]])) == 0.0


def test_iou_half_overlap():
    # [DERIVED] pred covers half of gt exactly: I=1, U=2
    assert iou(mask([[1, 0]]), mask([[1, 1]])) == 0.5


def test_iou_empty_conventions():
    empty = mask([[0, 0]])
    full = mask([[1, 1]])
    assert iou(empty, empty) == 1.0
    assert iou(empty, full) == 0.0
    assert iou(full, empty) == 0.0


def test_iou_rejects_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        iou(mask([[1]]), mask([[1, 0]]))


@settings(max_examples=50)
@given(
    npst.arrays(dtype=np.uint8, shape=st.just((4, 5)), elements=st.integers(0, 1)),
    npst.arrays(dtype=np.uint8, shape=st.just((4, 5)), elements=st.integers(0, 1)),
)
def test_iou_symmetric_and_bounded(a, b):
    v = iou(a, b)
    assert 0.0 <= v <= 1.0
    assert iou(b, a) == v
    # permuting both masks the same way changes nothing
    perm = np.random.default_rng(0).permutation(20)
    assert iou(a.ravel()[perm].reshape(4, 5), b.ravel()[perm].reshape(4, 5)) == v


# -- episode accounting -----------------------------------------------------------

def test_episode_result_counts():
    ep = episode_result(mask([[1, 1], [0, 0]]), mask([[1, 0], [1, 0]]), class_id="cat")
    assert (ep.intersection, ep.union, ep.class_id) == (1, 3, "cat")


def test_episode_result_rejects_inverted_counts():
    with pytest.raises(InvalidValue):
        EpisodeResult(intersection=3, union=2, class_id="x")


def test_miou_single_perfect_episode():
    assert miou([EpisodeResult(intersection=4, union=4, class_id="a")]) == 1.0


def test_miou_mean_over_classes():
    eps = [
        EpisodeResult(intersection=1, union=5, class_id="a"),
        EpisodeResult(intersection=4, union=5, class_id="b"),
    ]
    assert miou(eps) == pytest.approx(0.5)


def test_miou_aggregates_within_class_before_averaging():
    # [DERIVED] hand sum: (1+3)/(2+4) = 4/6, not mean(0.5, 0.75) = 0.625
    eps = [
        EpisodeResult(intersection=1, union=2, class_id="a"),
        EpisodeResult(intersection=3, union=4, class_id="a"),
    ]
    assert miou(eps) == pytest.approx(4 / 6)
    assert miou(eps) != pytest.approx(0.625)


def test_miou_zero_union_class_counts_as_one():
    eps = [
        EpisodeResult(intersection=0, union=0, class_id="absent"),
        EpisodeResult(intersection=1, union=2, class_id="b"),
    ]
    assert miou(eps) == pytest.approx((1.0 + 0.5) / 2)


def test_miou_rejects_empty():
    with pytest.raises(EmptyInput):
        miou([])
    with pytest.raises(EmptyInput):
        per_class_iou([])


@settings(max_examples=40)
@given(
    st.lists(
        st.tuples(
            st.integers(0, 5),
            st.integers(0, 5),
            st.sampled_from(["a", "b", "c"]),
        ),
        min_size=1,
        max_size=10,
    ),
    st.randoms(use_true_random=False),
)
def test_miou_bounded_and_order_invariant(triples, rnd):
    eps = [
        EpisodeResult(intersection=min(i, u), union=u, class_id=c)
        for i, u, c in triples
    ]
    v = miou(eps)
    assert 0.0 <= v <= 1.0
    shuffled = list(eps)
    rnd.shuffle(shuffled)
    assert miou(shuffled) == pytest.approx(v, abs=1e-12)


# -- report ------------------------------------------------------------------------

def test_report_lines_and_machine_block():
    eps = [
        EpisodeResult(intersection=1, union=2, class_id="cat", fold="f0"),
        EpisodeResult(intersection=3, union=4, class_id="dog", fold="f1"),
    ]
    text = format_report(eps)
    assert "iou.cat=0.5" in text.replace("0.500000", "0.5")
    lines = text.splitlines()
    assert any(l.startswith("miou=") for l in lines)
    assert any("fold" in l for l in lines)
    # machine block parses as key=value floats
    kv = dict(
        l.split("=", 1) for l in lines if "=" in l and not l.startswith("#")
    )
    assert float(kv["miou"]) == pytest.approx((0.5 + 0.75) / 2)
    assert float(kv["iou.cat"]) == pytest.approx(0.5)
    assert float(kv["miou.fold.f1"]) == pytest.approx(0.75)
