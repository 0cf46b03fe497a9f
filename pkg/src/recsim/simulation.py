"""
Feedback-loop simulation: seed data, then for each timestep recommend,
sample agent choices, and retrain the student on everything observed.

Randomness is organized as a hierarchy of :class:`numpy.random.SeedSequence`
objects keyed by ``(master_seed, realization, stream)``, so a realization's
result depends only on the config and its index, never on scheduling.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from recsim import metrics
from recsim.errors import ConfigError, ExperimentError, SimulationError
from recsim.interactions import InteractionLog
from recsim.strategies import StrategyKind, recommend
from recsim.student import (
    StudentModel,
    TrainingHyperparams,
    TrainReport,
    brier,
    init_student,
    train,
)
from recsim.teacher import (
    BetaCondition,
    TeacherModel,
    expected_item_popularity,
    generate_teacher,
    sample_choices,
)

_log = logging.getLogger(__name__)

# stream codes under a realization's seed node
_TEACHER, _SEEDING, _STRATEGY, _CHOICES, _INIT, _TRAINING = range(6)
STREAM_NAMES = ("teacher", "seeding", "strategy", "choices", "student_init", "training")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 4000
    m: int = 200
    k: int = 4
    k_prime: int = 5
    beta: BetaCondition = field(default_factory=BetaCondition)
    strategy: StrategyKind = field(default_factory=StrategyKind)
    seed_fraction: float = 0.001
    realizations: int = 10
    regenerate_teacher: bool = True
    hyperparams: TrainingHyperparams = field(default_factory=TrainingHyperparams)
    master_seed: int = 0
    parallelism: int = 1
    latent_scale: float | None = None
    "Upper bound on teacher latent entries; ``None`` means ``1/sqrt(k)``."

    def __post_init__(self):
        for name in ("n", "m", "k", "k_prime", "realizations", "parallelism"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}", name)
        if not 0.0 <= self.seed_fraction < 1.0:
            raise ConfigError(f"seed_fraction must be in [0, 1), got {self.seed_fraction}", "seed_fraction")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be non-negative", "master_seed")
        if self.latent_scale is not None and self.latent_scale < 0:
            raise ConfigError("latent_scale must be non-negative", "latent_scale")

    def replace(self, **changes) -> ExperimentConfig:
        return replace(self, **changes)


def stream_key(config: ExperimentConfig, index: int, stream: int, *extra: int) -> tuple[int, ...]:
    "Spawn key of one named stream; the teacher key ignores ``index`` when shared."
    if stream == _TEACHER and not config.regenerate_teacher:
        index = 0
    return (index, stream, *extra)


def make_rng(config: ExperimentConfig, index: int, stream: int, *extra: int) -> np.random.Generator:
    seq = np.random.SeedSequence(config.master_seed, spawn_key=stream_key(config, index, stream, *extra))
    return np.random.default_rng(seq)


def realization_seeds(config: ExperimentConfig, index: int) -> dict:
    "Serializable description of every stream a realization draws from."
    keys = {name: list(stream_key(config, index, code)) for code, name in enumerate(STREAM_NAMES)}
    keys["training"].append("t")
    return {"entropy": config.master_seed, "spawn_keys": keys}


def build_teacher(config: ExperimentConfig, index: int) -> TeacherModel:
    return generate_teacher(
        config.n, config.m, config.k, config.beta, make_rng(config, index, _TEACHER), config.latent_scale
    )


@dataclass(eq=False)
class RealizationResult:
    """
    Everything recorded during one realization.  Series are indexed by
    timestep ``t = 1..m`` at position ``t - 1``.
    """

    index: int
    brier: np.ndarray
    "Brier score of each timestep's pre-retraining predictions (NaN if nothing was recommended)."
    cumulative_brier: np.ndarray
    gini: np.ndarray
    mean_popularity: np.ndarray
    popularity: np.ndarray
    "Shape ``(m, items)``; cumulative choices per item after each timestep."
    choices: np.ndarray
    "Positive outcomes made at each timestep."
    recommendations: np.ndarray
    "Number of agents served at each timestep."
    seeded_pairs: int
    seeded_choices: int
    expected_popularity: np.ndarray
    train_reports: list[TrainReport]
    seeds: dict
    log: InteractionLog
    student_snapshots: list[tuple[np.ndarray, np.ndarray]] | None = None
    wall_time: float = 0.0

    @property
    def timesteps(self) -> int:
        return len(self.brier)

    def popularity_at(self, t: int) -> np.ndarray:
        if not 0 <= t <= self.timesteps:
            raise ValueError(f"timestep {t} outside 0..{self.timesteps}")
        if t == 0:
            counts = np.zeros(self.popularity.shape[1], dtype=np.int64)
            seeded = (self.log.timestep == 0) & (self.log.label == 1)
            return counts + seeded.sum(axis=0)
        return self.popularity[t - 1]

    def same_as(self, other: RealizationResult) -> bool:
        "Exact equality of all recorded series."
        arrays = ("brier", "cumulative_brier", "gini", "mean_popularity", "popularity", "choices")
        return all(np.array_equal(getattr(self, a), getattr(other, a), equal_nan=True) for a in arrays) and (
            self.train_reports == other.train_reports
        )


def seed_initial_data(teacher: TeacherModel, fraction: float, rng: np.random.Generator) -> InteractionLog:
    """
    Sample ``round(fraction * n * m)`` distinct pairs uniformly, label each
    with a teacher draw, and log them as consumed at timestep 0.
    """
    if not 0.0 <= fraction < 1.0:
        raise ConfigError(f"seed fraction must be in [0, 1), got {fraction}", "seed_fraction")
    n, m = teacher.n, teacher.m
    log = InteractionLog(n, m)
    count = round(fraction * n * m)
    if count:
        flat = rng.choice(n * m, size=count, replace=False)
        agents, items = np.divmod(flat, m)
        log.record(agents, items, sample_choices(teacher, agents, items, rng), 0)
    return log


def run_realization(config: ExperimentConfig, index: int, record_student: bool = False) -> RealizationResult:
    """
    Run one realization for ``config.m`` timesteps.

    Under the oracle strategy the teacher stands in for the student, so no
    student is trained and predictions come from the teacher.

    Raises:
        SimulationError: wrapping any failure, with the realization index.
    """
    try:
        return _run_realization(config, index, record_student)
    except SimulationError:
        raise
    except Exception as exc:
        raise SimulationError(index, exc) from exc


def _run_realization(config: ExperimentConfig, index: int, record_student: bool) -> RealizationResult:
    start = time.perf_counter()
    hp = config.hyperparams
    teacher = build_teacher(config, index)
    log = seed_initial_data(teacher, config.seed_fraction, make_rng(config, index, _SEEDING))
    seeded_pairs = len(log)
    seeded_choices = log.total_choices()
    strategy_rng = make_rng(config, index, _STRATEGY)
    choice_rng = make_rng(config, index, _CHOICES)

    student: StudentModel | None = None
    reports: list[TrainReport] = []
    if config.strategy.uses_student:
        student = init_student(
            config.n, config.m, config.k_prime, hp.resolved_init_scale(config.k_prime),
            make_rng(config, index, _INIT),
        )
        if seeded_pairs:
            reports.append(train(student, log.dataset(), hp, make_rng(config, index, _TRAINING, 0)))

    steps = config.m
    brier_t = np.full(steps, np.nan)
    cum_brier = np.full(steps, np.nan)
    gini_t = np.zeros(steps)
    meanpop_t = np.zeros(steps)
    popularity = np.zeros((steps, config.m), dtype=np.int64)
    choices = np.zeros(steps, dtype=np.int64)
    served = np.zeros(steps, dtype=np.int64)
    snapshots = [] if record_student else None
    sq_err_total = 0.0
    n_scored = 0

    for t in range(1, steps + 1):
        slate = recommend(config.strategy, student, teacher, log, strategy_rng)
        agents = np.flatnonzero(slate >= 0)
        items = slate[agents]
        if student is not None:
            preds = student.predict_prob_pairs(agents, items)
        else:
            preds = teacher.probs[agents, items]
        outcomes = sample_choices(teacher, agents, items, choice_rng)
        log.record(agents, items, outcomes, t)

        if len(agents):
            brier_t[t - 1] = brier(preds, outcomes)
            sq_err_total += float(np.sum((preds - outcomes) ** 2))
            n_scored += len(agents)
        if n_scored:
            cum_brier[t - 1] = sq_err_total / n_scored

        if student is not None and len(agents):
            reports.append(train(student, log.dataset(), hp, make_rng(config, index, _TRAINING, t)))
        if snapshots is not None and student is not None:
            snapshots.append((student.p_hat.copy(), student.q_hat.copy()))

        pop = log.popularity()
        popularity[t - 1] = pop
        gini_t[t - 1] = metrics.gini(pop)
        meanpop_t[t - 1] = metrics.mean_popularity(pop)
        choices[t - 1] = int(outcomes.sum())
        served[t - 1] = len(agents)

    elapsed = time.perf_counter() - start
    _log.debug("realization %d finished in %.2fs", index, elapsed)
    return RealizationResult(
        index=index,
        brier=brier_t,
        cumulative_brier=cum_brier,
        gini=gini_t,
        mean_popularity=meanpop_t,
        popularity=popularity,
        choices=choices,
        recommendations=served,
        seeded_pairs=seeded_pairs,
        seeded_choices=seeded_choices,
        expected_popularity=expected_item_popularity(teacher),
        train_reports=reports,
        seeds=realization_seeds(config, index),
        log=log,
        student_snapshots=snapshots,
        wall_time=elapsed,
    )


def run_tasks(tasks, workers: int, record_student: bool = False) -> list:
    """
    Run ``(config, index)`` tasks, in a process pool when ``workers > 1``.
    Returns results (or the raised exception) in task order.
    """
    tasks = list(tasks)
    out: list = []
    if workers <= 1 or len(tasks) <= 1:
        for cfg, idx in tasks:
            try:
                out.append(run_realization(cfg, idx, record_student))
            except SimulationError as exc:
                out.append(exc)
        return out
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        futures = [pool.submit(run_realization, cfg, idx, record_student) for cfg, idx in tasks]
        for fut in futures:
            try:
                out.append(fut.result())
            except SimulationError as exc:
                out.append(exc)
    return out


def run_experiment(config: ExperimentConfig, record_student: bool = False) -> list[RealizationResult]:
    """
    Run all realizations of ``config`` on ``config.parallelism`` workers.

    Raises:
        ExperimentError: if any realization failed; ``partial`` holds the rest.
    """
    results = run_tasks([(config, i) for i in range(config.realizations)], config.parallelism, record_student)
    failed = [r for r in results if isinstance(r, BaseException)]
    if failed:
        partial = [None if isinstance(r, BaseException) else r for r in results]
        raise ExperimentError("; ".join(str(f) for f in failed), partial)
    return results


def default_workers() -> int:
    return os.cpu_count() or 1
