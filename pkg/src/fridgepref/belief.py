"""Bayesian active preference learning over a finite candidate set.

The belief is a probability vector over ``N`` candidate preferences, each
paired with the plan the planner produced for it. ``R[i, j]`` is the reward
of candidate ``j``'s plan under candidate ``i``. Querying stops as soon as
some plan's expected disadvantage falls to ``epsilon``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .oracle import (
    ANSWERS,
    AnswerModel,
    Question,
    likelihood as answer_likelihood,
    question_pool,
)
from .preference import Preference
from .reward import reward
from .world2d import FridgeState, Plan

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-12
TIE_TOL = 1e-12

Likelihood = Callable[[str, Question, Preference], float]


class DegeneratePosteriorError(ValueError):
    """Every candidate gives the observed answer zero probability."""


class EmptyQuestionSetError(ValueError):
    pass


@dataclass(frozen=True)
class LearnerConfig:
    n: int = 5
    m: int = 2
    epsilon: float = 0.07
    eta: float = 0.1
    max_questions: int = 20

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.n < 1 or self.m < 1 or self.max_questions < 0:
            raise ValueError("n, m must be >= 1 and max_questions >= 0")
        AnswerModel(self.eta)


@dataclass(frozen=True)
class BeliefState:
    candidates: tuple[Preference, ...]
    probs: np.ndarray
    plan_library: tuple[Plan, ...]
    reward_matrix: np.ndarray
    pool: tuple[Question, ...] = ()
    asked: tuple[tuple[Question, str], ...] = ()

    def __post_init__(self):
        n = len(self.candidates)
        if len(self.plan_library) != n or self.probs.shape != (n,):
            raise ValueError("candidates, probs and plan library must have equal length")
        if self.reward_matrix.shape != (n, n):
            raise ValueError("reward matrix must be N x N")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1) > 1e-9:
            raise ValueError("probs must be a distribution")


def build_belief(
    candidates: Sequence[Preference],
    s0: FridgeState,
    task: Sequence,
    plan_fn: Callable[[Preference], Plan],
    m: int = 2,
) -> BeliefState:
    """Uniform prior, one plan per candidate, the reward matrix and the
    question pool."""
    plans = tuple(plan_fn(theta) for theta in candidates)
    n = len(candidates)
    R = np.array([[reward(plans[j], candidates[i]) for j in range(n)] for i in range(n)])
    return BeliefState(
        tuple(candidates),
        np.full(n, 1.0 / n),
        plans,
        R,
        tuple(question_pool(candidates, m)),
    )


def disadvantage(j: int, i: int, belief: BeliefState) -> float:
    row = belief.reward_matrix[i]
    return float(row.max() - row[j])


def expected_disadvantage(belief: BeliefState) -> np.ndarray:
    R = belief.reward_matrix
    D = R.max(axis=1, keepdims=True) - R
    return belief.probs @ D


def best_plan_index(belief: BeliefState) -> int:
    return int(np.argmin(expected_disadvantage(belief)))


def should_terminate(belief: BeliefState, epsilon: float) -> int | None:
    """Index of the plan with least expected disadvantage if that value is at
    most ``epsilon``; lowest index on ties."""
    exp = expected_disadvantage(belief)
    j = int(np.argmin(exp))
    return j if exp[j] <= epsilon else None


def entropy(probs) -> float:
    p = np.asarray(probs, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def _likelihoods(o: str, q: Question, belief: BeliefState, lik: Likelihood) -> np.ndarray:
    return np.array([lik(o, q, theta) for theta in belief.candidates], dtype=float)


def expected_info_gain(q: Question, belief: BeliefState, lik: Likelihood) -> float:
    """Prior entropy minus the answer-weighted posterior entropy, in nats."""
    p = belief.probs
    gain = entropy(p)
    for o in ANSWERS:
        joint = _likelihoods(o, q, belief, lik) * p
        p_o = joint.sum()
        if p_o > 0:
            gain -= p_o * entropy(joint / p_o)
    return gain


def select_question(pool: Sequence[Question], belief: BeliefState, lik: Likelihood) -> Question:
    """Highest expected information gain; ties go to the canonically first."""
    if not pool:
        raise EmptyQuestionSetError("no questions left to ask")
    ordered = sorted(pool, key=lambda q: q.key)
    gains = [expected_info_gain(q, belief, lik) for q in ordered]
    top = max(gains)
    return next(q for q, g in zip(ordered, gains) if g >= top - TIE_TOL)


def posterior_update(
    belief: BeliefState,
    q: Question,
    o: str,
    lik: Likelihood,
    floor: float | None = None,
) -> BeliefState:
    """Bayes update on answer ``o``; ``floor`` clamps tiny probabilities
    (used only with noisy answers)."""
    if o not in ANSWERS:
        raise ValueError(f"answer must be one of {ANSWERS}, got {o!r}")
    post = _likelihoods(o, q, belief, lik) * belief.probs
    if floor is not None:
        post = np.maximum(post, floor)
    total = post.sum()
    if total <= 0:
        raise DegeneratePosteriorError(f"no candidate explains answer {o!r} to {q.text!r}")
    pool = tuple(x for x in belief.pool if x != q)
    return replace(belief, probs=post / total, pool=pool, asked=belief.asked + ((q, o),))


@dataclass
class ActiveLearningResult:
    chosen_index: int
    chosen_plan: Plan
    chosen_preference: Preference
    query_count: int
    transcript: list[tuple[Question, str, list[float]]]
    events: list[dict]
    belief: BeliefState
    forced: bool = False
    prob_history: list[list[float]] = field(default_factory=list)

    def __post_init__(self):
        assert self.query_count == len(self.transcript)


def _event(kind: str, **payload) -> dict:
    return {"type": kind, "payload": payload}


def run_active_learning(
    candidates: Sequence[Preference],
    s0: FridgeState,
    task: Sequence,
    answer: Callable[[Question], str],
    plan_fn: Callable[[Preference], Plan],
    cfg: LearnerConfig | None = None,
    selection: str = "info-gain",
    rng: np.random.Generator | None = None,
    on_event: Callable[[dict], None] | None = None,
) -> ActiveLearningResult:
    """Query loop: terminate, or ask the best remaining question and update.

    ``selection`` is ``info-gain``, ``random`` (uniform over the remaining
    pool) or ``exhaust`` (ask every question, ignore the stopping rule).
    When the pool or question budget runs out the plan with least expected
    disadvantage is returned and the result is flagged ``forced``.
    """
    cfg = cfg or LearnerConfig()
    if selection not in ("info-gain", "random", "exhaust"):
        raise ValueError(f"unknown selection strategy {selection!r}")
    if selection == "random" and rng is None:
        raise ValueError("random selection needs an rng")
    model = AnswerModel(cfg.eta)
    lik: Likelihood = lambda o, q, theta: answer_likelihood(o, q, theta, model)
    floor = PROB_FLOOR if cfg.eta > 0 else None

    events: list[dict] = []

    def emit(ev: dict):
        events.append(ev)
        if on_event is not None:
            on_event(ev)

    belief = build_belief(candidates, s0, task, plan_fn, cfg.m)
    emit(
        _event(
            "propose",
            candidates=[c.to_json() for c in belief.candidates],
            plans=[p.to_json()["actions"] for p in belief.plan_library],
            rewardMatrix=belief.reward_matrix.tolist(),
            pool=[q.to_json() for q in belief.pool],
            config={"n": cfg.n, "m": cfg.m, "epsilon": cfg.epsilon, "eta": cfg.eta,
                    "maxQuestions": cfg.max_questions, "selection": selection},
        )
    )
    transcript: list[tuple[Question, str, list[float]]] = []
    history = [belief.probs.tolist()]
    forced = False
    while True:
        if selection != "exhaust":
            j = should_terminate(belief, cfg.epsilon)
            if j is not None:
                break
        if not belief.pool or len(transcript) >= cfg.max_questions:
            j = best_plan_index(belief)
            forced = selection != "exhaust"
            break
        if selection == "random":
            q = belief.pool[int(rng.integers(len(belief.pool)))]
        else:
            q = select_question(belief.pool, belief, lik)
        emit(_event("question", question=q.to_json()))
        o = answer(q)
        emit(_event("answer", answer=o))
        belief = posterior_update(belief, q, o, lik, floor)
        history.append(belief.probs.tolist())
        transcript.append((q, o, belief.probs.tolist()))
        emit(_event("update", probs=belief.probs.tolist()))
    exp = expected_disadvantage(belief)
    emit(
        _event(
            "terminate",
            chosen=j,
            expectedDisadvantage=float(exp[j]),
            forced=forced,
            queries=len(transcript),
        )
    )
    log.debug("terminated on plan %d after %d queries", j, len(transcript))
    return ActiveLearningResult(
        chosen_index=j,
        chosen_plan=belief.plan_library[j],
        chosen_preference=belief.candidates[j],
        query_count=len(transcript),
        transcript=transcript,
        events=events,
        belief=belief,
        forced=forced,
        prob_history=history,
    )
