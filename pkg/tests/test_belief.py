from __future__ import annotations

import math

import numpy as np
import pytest

from fridgepref.belief import (
    BeliefState,
    DegeneratePosteriorError,
    EmptyQuestionSetError,
    LearnerConfig,
    disadvantage,
    entropy,
    expected_disadvantage,
    expected_info_gain,
    posterior_update,
    run_active_learning,
    select_question,
    should_terminate,
)
from fridgepref.catalog import Category, SpecificLocation
from fridgepref.oracle import NO, YES, AnswerModel, Question, deterministic_answer, likelihood
from fridgepref.planner import plan_with_refinement
from fridgepref.preference import Preference, SpecificLoc
from fridgepref.world2d import Plan, empty_state

L = SpecificLocation
FRUIT = Category.FRUITS
LOCS = list(L)


def prefs(n):
    return [Preference({FRUIT: SpecificLoc(LOCS[i])}) for i in range(n)]


def belief(R, probs=None, pool=()):
    R = np.asarray(R, dtype=float)
    n = len(R)
    probs = np.full(n, 1.0 / n) if probs is None else np.asarray(probs, dtype=float)
    return BeliefState(tuple(prefs(n)), probs, tuple(Plan(empty_state()) for _ in range(n)), R, tuple(pool))


def lik_for(eta):
    model = AnswerModel(eta)
    return lambda o, q, theta: likelihood(o, q, theta, model)


def h_b(p):
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def test_entropy_examples():
    assert entropy(np.full(5, 0.2)) == pytest.approx(math.log(5), abs=1e-12)
    assert entropy([1, 0, 0, 0, 0]) == 0.0
    assert entropy([0.5, 0.5, 0, 0, 0]) == pytest.approx(math.log(2), abs=1e-12)


def test_disadvantage_examples():
    b = belief([[1.0, 0.6], [0.3, 0.3]])
    assert disadvantage(1, 0, b) == pytest.approx(0.4)
    assert disadvantage(0, 0, b) == 0.0
    assert disadvantage(0, 1, b) == disadvantage(1, 1, b) == 0.0


def test_terminate_dominating_plan():
    b = belief([[1, 0.5], [1, 1]])
    assert should_terminate(b, 0.0) == 0


def test_terminate_peaked_posterior():
    R = np.eye(5)
    b = belief(R, [0.98, 0.005, 0.005, 0.005, 0.005])
    assert should_terminate(b, 0.07) == 0


def _boundary_matrix(x):
    # plan j loses x under exactly one candidate (the next one, cyclically)
    R = np.ones((5, 5))
    for j in range(5):
        R[(j + 1) % 5, j] = 1 - x
    return R


def test_termination_boundary():
    assert should_terminate(belief(_boundary_matrix(0.35)), 0.07) == 0
    assert should_terminate(belief(_boundary_matrix(0.36)), 0.07) is None
    exp = expected_disadvantage(belief(_boundary_matrix(0.35)))
    assert exp[0] <= 0.07


def test_info_gain_binary():
    p = prefs(2)
    question = Question(FRUIT, p[0][FRUIT])
    b = belief(np.eye(2))
    assert expected_info_gain(question, b, lik_for(0.0)) == pytest.approx(math.log(2), abs=1e-12)
    assert expected_info_gain(question, b, lik_for(0.1)) == pytest.approx(math.log(2) - h_b(0.1), abs=1e-9)
    useless = Question(FRUIT, SpecificLoc(L.LEFT_OF_BOTTOM))
    assert expected_info_gain(useless, b, lik_for(0.0)) == pytest.approx(0.0, abs=1e-12)


def test_select_question():
    p = prefs(2)
    good = Question(FRUIT, p[0][FRUIT])
    useless = Question(FRUIT, SpecificLoc(L.LEFT_OF_BOTTOM))
    b = belief(np.eye(2))
    assert select_question([useless, good], b, lik_for(0.0)) == good
    assert select_question([good, useless], b, lik_for(0.0)) == good
    assert select_question([useless], b, lik_for(0.0)) == useless
    with pytest.raises(EmptyQuestionSetError):
        select_question([], b, lik_for(0.0))


def test_posterior_examples():
    p = prefs(2)
    question = Question(FRUIT, p[0][FRUIT])
    b = belief(np.eye(2), pool=[question])
    post = posterior_update(b, question, YES, lik_for(0.1))
    np.testing.assert_allclose(post.probs, [0.9, 0.1])
    assert post.pool == () and post.asked == ((question, YES),)
    flat = lambda o, q, theta: 0.5
    np.testing.assert_allclose(posterior_update(b, question, YES, flat).probs, b.probs)
    hard = posterior_update(b, question, NO, lik_for(0.0))
    assert hard.probs[0] == 0.0
    with pytest.raises(DegeneratePosteriorError):
        posterior_update(hard, question, YES, lik_for(0.0))
    with pytest.raises(ValueError):
        posterior_update(b, question, "maybe", lik_for(0.0))


def test_normalization_under_random_updates():
    rng = np.random.default_rng(0)
    cands = prefs(5)
    questions = [Question(FRUIT, c[FRUIT]) for c in cands]
    b = belief(np.eye(5))
    lik = lik_for(0.1)
    worst = 0.0
    for _ in range(10_000):
        q = questions[int(rng.integers(5))]
        o = YES if rng.random() < 0.5 else NO
        b = posterior_update(b, q, o, lik, floor=1e-12)
        worst = max(worst, abs(b.probs.sum() - 1))
    assert worst <= 1e-9


def _apple_plan(theta):
    return plan_with_refinement(empty_state(), ["apple"], theta)[0]


def test_run_active_learning_isolates_truth():
    cands = prefs(5)
    truth = cands[3]
    events = []
    res = run_active_learning(
        cands,
        empty_state(),
        ["apple"],
        lambda q: deterministic_answer(q, truth),
        _apple_plan,
        LearnerConfig(eta=0.0),
        on_event=events.append,
    )
    assert res.chosen_index == 3 and res.chosen_preference == truth
    assert 1 <= res.query_count <= 4
    gt = [p[3] for p in res.prob_history]
    assert all(b >= a for a, b in zip(gt, gt[1:]))
    kinds = [e["type"] for e in events]
    assert kinds[0] == "propose" and kinds[-1] == "terminate"
    assert kinds.count("question") == res.query_count == len(res.transcript)


def test_run_active_learning_zero_queries_when_plans_agree():
    cands = prefs(5)
    empty_plan = lambda theta: Plan(empty_state())
    res = run_active_learning(cands, empty_state(), [], lambda q: YES, empty_plan, LearnerConfig())
    assert res.query_count == 0 and res.chosen_index == 0 and not res.forced


def test_run_active_learning_budget_forces_choice():
    cands = prefs(5)
    res = run_active_learning(
        cands, empty_state(), ["apple"], lambda q: deterministic_answer(q, cands[2]),
        _apple_plan, LearnerConfig(eta=0.0, max_questions=0),
    )
    assert res.forced and res.query_count == 0


def test_exhaust_asks_every_question():
    cands = prefs(5)
    res = run_active_learning(
        cands, empty_state(), ["apple"], lambda q: deterministic_answer(q, cands[1]),
        _apple_plan, LearnerConfig(eta=0.1), selection="exhaust",
    )
    assert res.query_count == len(res.transcript) == 5
    assert res.chosen_index == 1


def test_learner_config_validation():
    with pytest.raises(ValueError):
        LearnerConfig(epsilon=-1)
    with pytest.raises(ValueError):
        LearnerConfig(eta=0.5)
    with pytest.raises(ValueError):
        LearnerConfig(n=0)
