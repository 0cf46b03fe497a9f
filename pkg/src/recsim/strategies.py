"""
Item selection strategies.

Every strategy assigns at most one never-consumed item to each agent per
timestep.  A slate is an integer array of length ``n`` holding the item for
each agent, or ``-1`` when the agent has no unseen items left.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from recsim.errors import ConfigError
from recsim.interactions import InteractionLog
from recsim.student import StudentModel
from recsim.teacher import TeacherModel

GREEDY = "greedy"
EPSILON_GREEDY = "epsilon_greedy"
RANDOM = "random"
ORACLE = "oracle"
STRATEGY_NAMES = (GREEDY, EPSILON_GREEDY, RANDOM, ORACLE)


@dataclass(frozen=True)
class StrategyKind:
    name: str = GREEDY
    epsilon: float = 0.0
    "Exploration probability; only meaningful for ``epsilon_greedy``."

    def __post_init__(self):
        if self.name not in STRATEGY_NAMES:
            raise ConfigError(f"unknown strategy {self.name!r}", "strategies")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must be in [0, 1], got {self.epsilon}", "epsilon")

    @classmethod
    def greedy(cls):
        return cls(GREEDY)

    @classmethod
    def epsilon_greedy(cls, epsilon: float = 0.1):
        return cls(EPSILON_GREEDY, float(epsilon))

    @classmethod
    def random(cls):
        return cls(RANDOM)

    @classmethod
    def oracle(cls):
        return cls(ORACLE)

    @property
    def uses_student(self) -> bool:
        return self.name != ORACLE


def _argmax_unseen(scores: np.ndarray, unseen: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # ties among the row maxima are broken by an independent uniform key
    masked = np.where(unseen, scores, -np.inf)
    best = masked.max(axis=1, keepdims=True)
    cand = unseen & (masked == best)
    keys = rng.random(scores.shape)
    keys[~cand] = -1.0
    choice = keys.argmax(axis=1)
    choice[~unseen.any(axis=1)] = -1
    return choice


def _uniform_unseen(unseen: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    keys = rng.random(unseen.shape)
    keys[~unseen] = -1.0
    choice = keys.argmax(axis=1)
    choice[~unseen.any(axis=1)] = -1
    return choice


def greedy_slate(scores: np.ndarray, history: InteractionLog, rng: np.random.Generator) -> np.ndarray:
    "Per-agent argmax of ``scores`` over unseen items, ties broken at random."
    return _argmax_unseen(scores, history.unseen(), rng)


def random_slate(history: InteractionLog, rng: np.random.Generator) -> np.ndarray:
    return _uniform_unseen(history.unseen(), rng)


def recommend(
    kind: StrategyKind,
    student: StudentModel | None,
    teacher: TeacherModel,
    history: InteractionLog,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Build one slate.

    The epsilon-greedy strategy computes the greedy slate first, then flips a
    coin per agent, then draws the exploratory picks, so with ``epsilon=0`` it
    returns exactly the greedy slate for the same stream state.
    """
    unseen = history.unseen()
    if kind.name == RANDOM:
        return _uniform_unseen(unseen, rng)
    if kind.name == ORACLE:
        return _argmax_unseen(teacher.probs, unseen, rng)

    slate = _argmax_unseen(student.scores(), unseen, rng)
    if kind.name == EPSILON_GREEDY:
        explore = rng.random(len(slate)) < kind.epsilon
        alt = _uniform_unseen(unseen, rng)
        slate = np.where(explore, alt, slate)
    return slate
