import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from avseld.augment import augmentation_set, transform_metadata
from avseld.core import Doa
from avseld.labels import SeldEvent
from avseld.metrics import SeldEvaluator, assign_min_cost, evaluate, pool_segments


def brute_force(cost):
    """All injective assignments of min(R, P) pairs; lexicographically smallest optimum."""
    cost = np.asarray(cost, dtype=float)
    r, p = cost.shape
    k = min(r, p)
    best, best_pairs = None, None
    for rows in itertools.combinations(range(r), k):
        for cols in itertools.permutations(range(p), k):
            pairs = sorted(zip(rows, cols))
            total = sum(cost[i, j] for i, j in pairs)
            if best is None or total < best - 1e-9 or (abs(total - best) <= 1e-9 and pairs < best_pairs):
                best, best_pairs = total, pairs
    return best, best_pairs or []


def total(cost, pairs):
    return sum(cost[i][j] for i, j in pairs)


def ev(frame, cls, src, az, el=0.0):
    return SeldEvent(frame, cls, src, Doa(az, el))


def test_assign_examples():
    assert assign_min_cost([[7.0]]) == [(0, 0)]
    assert assign_min_cost([[0, 50], [50, 0]]) == [(0, 0), (1, 1)]
    assert assign_min_cost(np.zeros((0, 3))) == []


def test_assign_rejects_bad_costs():
    with pytest.raises(ValueError):
        assign_min_cost([[1.0, -1.0]])
    with pytest.raises(ValueError):
        assign_min_cost([[np.inf]])


def test_assign_tie_break_is_lexicographic():
    assert assign_min_cost(np.ones((2, 2))) == [(0, 0), (1, 1)]
    assert assign_min_cost(np.ones((3, 2))) == [(0, 0), (1, 1)]
    assert assign_min_cost([[5.0, 5.0, 1.0]]) == [(0, 2)]


@given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 2**32 - 1), st.booleans())
@settings(max_examples=150, deadline=None)
def test_assign_matches_brute_force(r, p, seed, integer):
    rng = np.random.default_rng(seed)
    cost = rng.integers(0, 5, (r, p)).astype(float) if integer else rng.uniform(0, 180, (r, p))
    pairs = assign_min_cost(cost)
    best, best_pairs = brute_force(cost)
    assert len(pairs) == min(r, p)
    assert len({i for i, _ in pairs}) == len({j for _, j in pairs}) == len(pairs)
    if pairs:
        assert total(cost, pairs) == pytest.approx(best, abs=1e-9)
    assert pairs == best_pairs


def test_hand_fixtures():
    ref = [ev(f, 3, 0, 40, 10) for f in range(10)]
    s = evaluate(ref, ref)
    assert (s.er20, s.f20, s.le, s.lr) == (0.0, 1.0, 0.0, 1.0)

    s = evaluate([ev(0, 1, 0, 0)], [])
    assert (s.er20, s.f20, s.le, s.lr) == (1.0, 0.0, None, 0.0)

    s = evaluate([ev(0, 1, 0, 0)], [ev(0, 1, 0, 25)])
    assert (s.er20, s.f20, s.lr) == (1.0, 0.0, 1.0)
    assert s.le == pytest.approx(25, abs=1e-12)


def test_wrong_class_is_insertion_plus_deletion():
    s = evaluate([ev(0, 1, 0, 0)], [ev(0, 2, 0, 0)])
    assert s.er20 == 1.0  # one substitution
    assert s.f20 == 0.0 and s.le is None and s.lr == 0.0


def test_empty_inputs():
    s = evaluate([], [])
    assert (s.er20, s.f20, s.le, s.lr) == (0.0, 1.0, None, 1.0)
    s = evaluate([], [ev(0, 0, 0, 0)])
    assert s.er20 == 1.0 and s.f20 == 0.0


def test_segment_pooling_mean_direction():
    pooled = pool_segments([ev(0, 0, 0, -10), ev(1, 0, 0, 10), ev(12, 0, 1, 0)])
    assert sorted(pooled) == [0, 1]
    np.testing.assert_allclose(pooled[0][0], [[1, 0, 0]], atol=1e-12)


def test_mixed_segment_counts():
    ref = [ev(0, 0, 0, 0), ev(0, 0, 1, 90), ev(0, 5, 0, 0), ev(10, 2, 0, 0)]
    pred = [ev(0, 0, 0, 5), ev(0, 0, 1, 150), ev(10, 2, 0, 10), ev(10, 7, 0, 0)]
    e = SeldEvaluator()
    e.update(ref, pred)
    c0, c2, c5, c7 = (e.classes[i] for i in (0, 2, 5, 7))
    assert (c0.tp, c0.fp, c0.fn, c0.matched) == (1, 1, 1, 2)
    assert (c5.tp, c5.fp, c5.fn) == (0, 0, 1)
    assert (c7.tp, c7.fp, c7.fn) == (0, 1, 0)
    assert c2.tp == 1
    # segment 0: FP=1, FN=2 -> S=1, D=1; segment 1: FP=1, FN=0 -> I=1
    assert (e.substitutions, e.deletions, e.insertions) == (1, 1, 1)
    s = e.scores()
    assert s.er20 == pytest.approx(3 / 4)
    assert s.f20 == pytest.approx(np.mean([2 / 4, 1.0, 0.0, 0.0]))
    assert s.lr == pytest.approx(np.mean([1.0, 1.0, 0.0]))
    assert s.le == pytest.approx(np.mean([(5 + 60) / 2, 10]))


def test_micro_average():
    ref = [ev(0, 0, 0, 0), ev(0, 1, 0, 0)]
    pred = [ev(0, 0, 0, 0)]
    s = evaluate(ref, pred, average="micro")
    assert s.f20 == pytest.approx(2 / 3) and s.lr == pytest.approx(0.5)


def test_evaluator_validates_args():
    with pytest.raises(ValueError):
        SeldEvaluator(segment=0)
    with pytest.raises(ValueError):
        SeldEvaluator(average="weighted")


@st.composite
def scored_lists(draw):
    def one():
        return [
            ev(draw(st.integers(0, 29)), draw(st.integers(0, 3)), draw(st.integers(0, 2)),
               draw(st.integers(-180, 179)), draw(st.integers(-90, 90)))
            for _ in range(draw(st.integers(0, 12)))
        ]
    return one(), one(), draw(st.randoms())


def scores_tuple(s):
    return (s.er20, s.f20, s.le, s.lr)


def exactly_equal(a, b):
    assert scores_tuple(a) == scores_tuple(b)


def approx_equal(a, b):
    for x, y in zip(scores_tuple(a), scores_tuple(b)):
        if x is None or y is None:
            assert x is y
        else:
            assert x == pytest.approx(y, abs=1e-9)


@given(scored_lists())
@settings(max_examples=100, deadline=None)
def test_permutation_invariant(data):
    ref, pred, rnd = data
    base = evaluate(ref, pred)
    ref2, pred2 = ref[:], pred[:]
    rnd.shuffle(ref2)
    rnd.shuffle(pred2)
    exactly_equal(evaluate(ref2, pred2), base)


@given(scored_lists())
@settings(max_examples=100, deadline=None)
def test_bounds(data):
    ref, pred, _ = data
    s = evaluate(ref, pred)
    assert s.er20 >= 0 and 0 <= s.f20 <= 1 and 0 <= s.lr <= 1
    assert s.le is None or 0 <= s.le <= 180 + 1e-9


@given(scored_lists(), st.sampled_from(augmentation_set()))
@settings(max_examples=100, deadline=None)
def test_invariant_under_acs(data, t):
    ref, pred, _ = data
    approx_equal(evaluate(transform_metadata(t, ref), transform_metadata(t, pred)), evaluate(ref, pred))


def test_corrupting_a_true_positive_is_monotone():
    rnd = random.Random(5)
    for _ in range(200):
        ref = [ev(rnd.randrange(20), rnd.randrange(3), rnd.randrange(2), rnd.randrange(-180, 180),
                  rnd.randrange(-60, 60)) for _ in range(rnd.randrange(1, 8))]
        ref = list({e.sort_key: e for e in ref}.values())
        pred = list(ref)
        before = evaluate(ref, pred)
        i = rnd.randrange(len(pred))
        e = pred[i]
        pred[i] = SeldEvent(e.frame, e.class_idx, e.source_idx,
                            Doa(e.doa.azimuth + 180, -e.doa.elevation))
        after = evaluate(ref, pred)
        assert after.er20 >= before.er20 - 1e-12
        assert after.f20 <= before.f20 + 1e-12
