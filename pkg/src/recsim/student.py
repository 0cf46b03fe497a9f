"""
The recommender's matrix-factorization model.

Predictions are the raw inner products ``p_hat[i] . q_hat[j]``.  Training is
per-example SGD on squared error with a random train/validation split and
early stopping on validation Brier score; the best weights seen are kept.
Calling :func:`train` again on the same model continues from its current
weights, which is how the simulation warm-starts every timestep.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from recsim import _sgd
from recsim.errors import ConfigError, DivergenceError, TrainingError

_log = logging.getLogger(__name__)


@dataclass
class StudentModel:
    p_hat: np.ndarray
    q_hat: np.ndarray
    holdout: np.ndarray | None = None
    "Per-observation validation flags, only used with a fixed holdout."

    @property
    def n(self) -> int:
        return self.p_hat.shape[0]

    @property
    def m(self) -> int:
        return self.q_hat.shape[0]

    @property
    def k_prime(self) -> int:
        return self.p_hat.shape[1]

    def copy(self) -> StudentModel:
        holdout = None if self.holdout is None else self.holdout.copy()
        return StudentModel(self.p_hat.copy(), self.q_hat.copy(), holdout)

    def predict(self, agent: int, item: int) -> float:
        "Raw (unclipped) score of one pair."
        if not (0 <= agent < self.n and 0 <= item < self.m):
            raise IndexError(f"pair ({agent}, {item}) outside {self.n}x{self.m}")
        return float(self.p_hat[agent] @ self.q_hat[item])

    def predict_prob(self, agent: int, item: int) -> float:
        "Score clipped to [0, 1]."
        return min(max(self.predict(agent, item), 0.0), 1.0)

    def predict_pairs(self, agents, items) -> np.ndarray:
        return _sgd.pair_predictions(
            self.p_hat, self.q_hat, np.asarray(agents, np.int64), np.asarray(items, np.int64)
        )

    def predict_prob_pairs(self, agents, items) -> np.ndarray:
        return np.clip(self.predict_pairs(agents, items), 0.0, 1.0)

    def scores(self) -> np.ndarray:
        "Full n×m matrix of raw scores."
        return self.p_hat @ self.q_hat.T


def init_student(n: int, m: int, k_prime: int, init_scale: float, rng: np.random.Generator) -> StudentModel:
    "Fresh student with entries i.i.d. uniform on ``[0, init_scale]``."
    for name, val in (("n", n), ("m", m), ("k_prime", k_prime)):
        if val < 1:
            raise ConfigError(f"{name} must be >= 1, got {val}", name)
    if init_scale < 0:
        raise ConfigError(f"init_scale must be >= 0, got {init_scale}", "init_scale")
    p = rng.uniform(0.0, init_scale, size=(n, k_prime))
    q = rng.uniform(0.0, init_scale, size=(m, k_prime))
    return StudentModel(p, q)


@dataclass(frozen=True)
class TrainingDataset:
    """
    Observed (agent, item, label) triples.  Pairs are unique and labels are
    0 or 1; both are checked on construction.
    """

    agents: np.ndarray
    items: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        agents = np.asarray(self.agents, dtype=np.int64)
        items = np.asarray(self.items, dtype=np.int64)
        labels = np.asarray(self.labels, dtype=np.float64)
        if not (agents.shape == items.shape == labels.shape) or agents.ndim != 1:
            raise ValueError("agents, items and labels must be 1-D arrays of equal length")
        if np.any((labels != 0) & (labels != 1)):
            raise ValueError("labels must be binary")
        if len(agents):
            if agents.min() < 0 or items.min() < 0:
                raise ValueError("negative index in dataset")
            keys = agents * (int(items.max()) + 1) + items
            if len(np.unique(keys)) != len(keys):
                raise ValueError("duplicate (agent, item) pair in dataset")
        object.__setattr__(self, "agents", agents)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.labels)

    @classmethod
    def from_triples(cls, triples) -> TrainingDataset:
        arr = np.asarray(list(triples), dtype=np.int64).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])


@dataclass(frozen=True)
class TrainingHyperparams:
    learning_rate: float = 0.05
    max_epochs: int = 200
    patience: int = 5
    validation_fraction: float = 0.2
    init_scale: float | None = None
    "Fresh-weight scale; ``None`` means ``1/sqrt(k_prime)``."
    shuffle: bool = True
    fixed_holdout: bool = False
    "Draw the validation split once per model instead of on every call."

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive", "learning_rate")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1", "max_epochs")
        if self.patience < 0:
            raise ConfigError("patience must be >= 0", "patience")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must be in (0, 1)", "validation_fraction")
        if self.init_scale is not None and not self.init_scale > 0:
            raise ConfigError("init_scale must be positive", "init_scale")

    def resolved_init_scale(self, k_prime: int) -> float:
        return 1.0 / math.sqrt(k_prime) if self.init_scale is None else self.init_scale


@dataclass(frozen=True)
class TrainReport:
    epochs_run: int
    best_validation_brier: float
    train_brier: float
    stopped_early: bool
    validation_history: tuple[float, ...] = ()
    "Validation Brier of the starting weights followed by one entry per epoch."


def brier(predictions, labels) -> float:
    "Mean squared difference between probabilities and binary outcomes."
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if predictions.shape != labels.shape:
        raise ValueError(f"length mismatch: {predictions.shape} vs {labels.shape}")
    if predictions.size == 0:
        raise ValueError("brier score of empty input")
    return float(np.mean((predictions - labels) ** 2))


def example_gradient(p_row, q_row, label) -> tuple[np.ndarray, np.ndarray]:
    "Gradient of ``(p_row . q_row - label)**2`` with respect to both rows."
    err = float(np.dot(p_row, q_row)) - label
    return 2.0 * err * np.asarray(q_row), 2.0 * err * np.asarray(p_row)


def squared_loss(student: StudentModel, data: TrainingDataset) -> float:
    "Summed squared error of the raw predictions."
    err = student.predict_pairs(data.agents, data.items) - data.labels
    return float(err @ err)


def loss_gradient(student: StudentModel, data: TrainingDataset) -> tuple[np.ndarray, np.ndarray]:
    "Full gradient of :func:`squared_loss`, accumulated from per-example gradients."
    gp = np.zeros_like(student.p_hat)
    gq = np.zeros_like(student.q_hat)
    for i, j, y in zip(data.agents, data.items, data.labels):
        dp, dq = example_gradient(student.p_hat[i], student.q_hat[j], y)
        gp[i] += dp
        gq[j] += dq
    return gp, gq


def _split(student, n_obs, hp, rng):
    if hp.fixed_holdout:
        # flags are appended as the dataset grows; observations keep their side
        old = np.zeros(0, dtype=bool) if student.holdout is None else student.holdout[:n_obs]
        fresh = rng.random(n_obs - len(old)) < hp.validation_fraction
        student.holdout = np.concatenate([old, fresh])
        val = np.flatnonzero(student.holdout)
        trn = np.flatnonzero(~student.holdout)
        if len(trn) == 0:
            trn, val = val, np.zeros(0, dtype=np.intp)
        n_val = len(val)
    else:
        perm = rng.permutation(n_obs)
        n_val = min(int(round(hp.validation_fraction * n_obs)), n_obs - 1)
        val, trn = perm[:n_val], perm[n_val:]
    if n_val == 0:
        # too little data to hold anything out; validate on the training split
        val = trn
    return np.sort(trn), np.sort(val)


def train(
    student: StudentModel,
    data: TrainingDataset,
    hp: TrainingHyperparams,
    rng: np.random.Generator,
) -> TrainReport:
    """
    Fit ``student`` in place to ``data``.

    The data is split at random into training and validation parts, redrawn
    on every call unless ``hp.fixed_holdout`` is set.  Validation Brier of the incoming weights is the baseline;
    after each epoch the validation Brier is recomputed, and training stops
    once it has failed to improve for ``hp.patience`` consecutive epochs or
    ``hp.max_epochs`` is reached.  The best weights are restored, so the
    result is never worse on validation than the starting point.

    Raises:
        TrainingError: if ``data`` is empty.
        DivergenceError: if the loss or weights become non-finite.
    """
    n_obs = len(data)
    if n_obs == 0:
        raise TrainingError("cannot train on an empty dataset")
    if data.agents.max() >= student.n or data.items.max() >= student.m:
        raise IndexError("dataset index outside student dimensions")

    trn, val = _split(student, n_obs, hp, rng)
    a_val, i_val, y_val = data.agents[val], data.items[val], data.labels[val]

    def val_brier():
        return brier(student.predict_prob_pairs(a_val, i_val), y_val)

    best = val_brier()
    history = [best]
    best_p, best_q = student.p_hat.copy(), student.q_hat.copy()
    wait = 0
    epoch = 0
    stopped_early = False
    for epoch in range(1, hp.max_epochs + 1):
        order = rng.permutation(trn) if hp.shuffle else trn
        loss = _sgd.sgd_epoch(
            student.p_hat, student.q_hat, data.agents, data.items, data.labels, order, hp.learning_rate
        )
        if not math.isfinite(loss) or not (
            np.isfinite(student.p_hat).all() and np.isfinite(student.q_hat).all()
        ):
            student.p_hat[...] = best_p
            student.q_hat[...] = best_q
            raise DivergenceError(epoch)
        current = val_brier()
        history.append(current)
        if current < best:
            best = current
            best_p[...] = student.p_hat
            best_q[...] = student.q_hat
            wait = 0
        else:
            wait += 1
        if wait >= hp.patience:
            stopped_early = epoch < hp.max_epochs
            break

    student.p_hat[...] = best_p
    student.q_hat[...] = best_q
    train_brier = brier(student.predict_prob_pairs(data.agents[trn], data.items[trn]), data.labels[trn])
    _log.debug("trained %d epochs on %d examples, val brier %.4f", epoch, n_obs, best)
    return TrainReport(epoch, best, train_brier, stopped_early, tuple(history))
