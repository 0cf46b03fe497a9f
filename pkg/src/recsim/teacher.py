"""
Ground-truth agent choice model.

Each agent ``i`` picks a recommended item ``j`` with probability

.. math::
   r_{ij} = \\beta_{ij} + (1 - \\beta_{ij}) (P Q^T)_{ij}

where ``P`` (n×k) and ``Q`` (m×k) hold non-negative latent preferences drawn
uniformly on ``[0, s]``.  With the default ``s = 1/sqrt(k)`` the latent product
lies in ``[0, 1]`` with mean 1/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from recsim.errors import ConfigError

UNIFORM_RANDOM = "uniform_random"


@dataclass(frozen=True)
class BetaCondition:
    """
    How the bias matrix is filled: a constant everywhere, or i.i.d. uniform
    on ``[0, 1]`` per (agent, item) pair.
    """

    value: float | None = 0.0
    "Constant bias value, or ``None`` for the uniform-random condition."

    def __post_init__(self):
        if self.value is not None and not 0.0 <= self.value <= 1.0:
            raise ConfigError(f"beta must be in [0, 1], got {self.value}", "beta")

    @classmethod
    def constant(cls, value: float) -> BetaCondition:
        return cls(float(value))

    @classmethod
    def uniform(cls) -> BetaCondition:
        return cls(None)

    @property
    def is_random(self) -> bool:
        return self.value is None

    @property
    def label(self) -> str:
        "Serialized form: the constant as a number string, or ``uniform_random``."
        return UNIFORM_RANDOM if self.value is None else repr(self.value)

    @classmethod
    def parse(cls, obj) -> BetaCondition:
        if isinstance(obj, BetaCondition):
            return obj
        if obj is None or obj == UNIFORM_RANDOM:
            return cls.uniform()
        if isinstance(obj, bool):
            raise ConfigError(f"invalid beta condition {obj!r}", "beta")
        try:
            return cls.constant(float(obj))
        except (TypeError, ValueError):
            raise ConfigError(f"invalid beta condition {obj!r}", "beta") from None

    def to_json(self):
        return UNIFORM_RANDOM if self.value is None else self.value


@dataclass(frozen=True, eq=False)
class TeacherModel:
    """
    Dense ground-truth choice probabilities.  Immutable after construction,
    so one instance can be shared freely between threads.
    """

    beta: np.ndarray
    p: np.ndarray
    q: np.ndarray
    probs: np.ndarray

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def m(self) -> int:
        return self.probs.shape[1]

    @property
    def k(self) -> int:
        return self.p.shape[1]

    @classmethod
    def from_factors(cls, beta, p, q) -> TeacherModel:
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        beta = np.broadcast_to(np.asarray(beta, dtype=np.float64), (p.shape[0], q.shape[0])).copy()
        probs = beta + (1.0 - beta) * (p @ q.T)
        for arr in (beta, p, q, probs):
            arr.setflags(write=False)
        return cls(beta, p, q, probs)


def default_latent_scale(k: int) -> float:
    return 1.0 / math.sqrt(k)


def generate_teacher(
    n: int,
    m: int,
    k: int,
    beta_cond: BetaCondition,
    rng: np.random.Generator,
    latent_scale: float | None = None,
) -> TeacherModel:
    """
    Draw a teacher model.

    The latent factors are drawn before the bias matrix, so two teachers built
    from equal streams share ``p`` and ``q`` whatever their beta condition.

    Args:
        n: number of agents.
        m: number of items.
        k: latent rank.
        beta_cond: bias condition.
        rng: random stream, consumed.
        latent_scale: upper bound of the latent entries; defaults to ``1/sqrt(k)``.
    """
    for name, val in (("n", n), ("m", m), ("k", k)):
        if val < 1:
            raise ConfigError(f"{name} must be >= 1, got {val}", name)
    s = default_latent_scale(k) if latent_scale is None else latent_scale
    if s < 0:
        raise ConfigError(f"latent_scale must be >= 0, got {s}", "latent_scale")

    p = rng.uniform(0.0, s, size=(n, k))
    q = rng.uniform(0.0, s, size=(m, k))
    if beta_cond.is_random:
        beta = rng.uniform(0.0, 1.0, size=(n, m))
    else:
        beta = np.full((n, m), beta_cond.value)
    return TeacherModel.from_factors(beta, p, q)


def sample_choice(teacher: TeacherModel, agent: int, item: int, rng: np.random.Generator) -> int:
    "Draw one Bernoulli decision of ``agent`` on ``item``."
    if not (0 <= agent < teacher.n and 0 <= item < teacher.m):
        raise IndexError(f"pair ({agent}, {item}) outside {teacher.n}x{teacher.m}")
    return int(rng.random() < teacher.probs[agent, item])


def sample_choices(teacher: TeacherModel, agents, items, rng: np.random.Generator) -> np.ndarray:
    """
    Vectorized :func:`sample_choice`; draws are consumed in the given pair
    order, one uniform per pair.
    """
    agents = np.asarray(agents, dtype=np.intp)
    items = np.asarray(items, dtype=np.intp)
    u = rng.random(len(agents))
    return (u < teacher.probs[agents, items]).astype(np.int8)


def expected_item_popularity(teacher: TeacherModel) -> np.ndarray:
    "Expected number of agents choosing each item if every pair were sampled."
    return teacher.probs.sum(axis=0)
