"""Property-based checks over randomly generated inputs."""

from __future__ import annotations

import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from fridgepref.belief import (
    BeliefState,
    entropy,
    expected_disadvantage,
    expected_info_gain,
    posterior_update,
    should_terminate,
)
from fridgepref.catalog import DEFAULT_CATALOG, Category, Shelf, SpecificLocation
from fridgepref.oracle import NO, YES, AnswerModel, Question, enumerate_requirements, likelihood
from fridgepref.preference import Preference, SpecificLoc, canonicalize
from fridgepref.reward import reward
from fridgepref.world2d import (
    Action,
    FridgeGeometry,
    Placement,
    Plan,
    collides,
    empty_state,
    semantic_location,
)

L = list(SpecificLocation)
NAMES = sorted(DEFAULT_CATALOG)
FRUIT = Category.FRUITS

probs_st = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6).map(lambda v: np.array(v) / sum(v))
eta_st = st.sampled_from([0.0, 0.05, 0.1, 0.3])


def _belief(probs, R=None):
    n = len(probs)
    cands = tuple(Preference({FRUIT: SpecificLoc(L[i])}) for i in range(n))
    R = np.eye(n) if R is None else R
    return BeliefState(cands, np.asarray(probs), tuple(Plan(empty_state()) for _ in range(n)), R)


def _lik(eta):
    m = AnswerModel(eta)
    return lambda o, q, theta: likelihood(o, q, theta, m)


@given(probs_st)
def test_entropy_bounds(p):
    assert -1e-12 <= entropy(p) <= math.log(len(p)) + 1e-12


@given(probs_st, st.integers(0, 5), eta_st)
def test_info_gain_nonnegative_and_bounded(p, k, eta):
    b = _belief(p)
    q = Question(FRUIT, SpecificLoc(L[k]))
    gain = expected_info_gain(q, b, _lik(eta))
    assert gain >= -1e-12
    assert gain <= math.log(2) + 1e-12


@given(probs_st, st.lists(st.tuples(st.integers(0, 5), st.booleans()), max_size=30), st.sampled_from([0.05, 0.1, 0.3]))
def test_posterior_stays_normalized(p, steps, eta):
    b = _belief(p)
    for k, yes in steps:
        b = posterior_update(b, Question(FRUIT, SpecificLoc(L[k])), YES if yes else NO, _lik(eta), 1e-12)
        assert abs(b.probs.sum() - 1) <= 1e-9
        assert (b.probs >= 0).all()


@given(st.integers(2, 6), st.data(), st.sampled_from([0.0, 0.07, 0.2, 0.5]))
def test_termination_respects_bound(n, data, eps):
    """Stopping under a uniform belief means no candidate loses more than N * eps."""
    rows = data.draw(st.lists(st.lists(st.floats(0, 1), min_size=n, max_size=n), min_size=n, max_size=n))
    R = np.array(rows)
    b = _belief(np.full(n, 1.0 / n), R)
    j = should_terminate(b, eps)
    if j is None:
        assert expected_disadvantage(b).min() > eps
    else:
        D = R.max(axis=1) - R[:, j]
        assert expected_disadvantage(b)[j] <= eps
        assert D.max() <= n * eps + 1e-9


@given(st.integers(0, 5), st.integers(0, 5))
def test_gt_probability_never_drops_when_noiseless(gt, k):
    b = _belief(np.full(6, 1 / 6))
    q = Question(FRUIT, SpecificLoc(L[k]))
    truth = YES if k == gt else NO
    post = posterior_update(b, q, truth, _lik(0.0))
    assert post.probs[gt] >= b.probs[gt]


placement_st = st.builds(
    lambda name, shelf, frac: (name, shelf, frac),
    st.sampled_from(NAMES),
    st.sampled_from(list(Shelf)),
    st.floats(0, 1),
)


def _placement(name, shelf, frac, g=FridgeGeometry()):
    obj = DEFAULT_CATALOG.lookup(name)
    x = obj.width / 2 + frac * (g.shelf_width - obj.width)
    return Placement(obj, shelf, x)


@given(placement_st, placement_st)
def test_collision_symmetry(a, b):
    pa, pb = _placement(*a), _placement(*b)
    assume(pa.name != pb.name)
    sa = empty_state().with_placement(pa)
    sb = empty_state().with_placement(pb)
    assert collides(sa, pb) == collides(sb, pa)


@given(st.sampled_from(NAMES), st.sampled_from(L), st.floats(0, 1))
def test_region_sampling_consistency(name, loc, frac):
    g = FridgeGeometry()
    obj = DEFAULT_CATALOG.lookup(name)
    lo, hi = g.center_range(loc, obj.width)
    x = lo + frac * (hi - lo)
    assert semantic_location(Placement(obj, loc.shelf, x)) is loc


@given(st.lists(st.tuples(st.sampled_from(NAMES), st.sampled_from(L)), max_size=8, unique_by=lambda t: t[0]),
       st.lists(st.sampled_from(L), min_size=6, max_size=6))
@settings(max_examples=50)
def test_reward_bounds(actions, homes):
    theta = Preference({c: SpecificLoc(homes[i]) for i, c in enumerate(Category)})
    plan = Plan(empty_state(), tuple(Action(DEFAULT_CATALOG.lookup(n), loc) for n, loc in actions))
    r = reward(plan, theta)
    assert 0.0 <= r <= 1.0
    assert r * len(actions) == round(r * len(actions))


@given(st.data())
@settings(max_examples=60)
def test_canonicalize_idempotent(data):
    reqs = {c: data.draw(st.sampled_from(enumerate_requirements(c))) for c in Category}
    p = Preference(reqs)
    once = canonicalize(p)
    assert once == p and canonicalize(once) == once
    assert Preference.from_json(p.to_json()) == p
