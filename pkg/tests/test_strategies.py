import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recsim.errors import ConfigError
from recsim.interactions import InteractionLog
from recsim.strategies import StrategyKind, recommend
from recsim.student import StudentModel, init_student
from recsim.teacher import BetaCondition, TeacherModel, generate_teacher


def _rng(seed=0):
    return np.random.default_rng(seed)


def _setup(n=30, m=12, k_prime=5, seed=0):
    rng = _rng(seed)
    teacher = generate_teacher(n, m, 4, BetaCondition(0.2), rng)
    student = init_student(n, m, k_prime, 0.5, rng)
    return teacher, student, InteractionLog(n, m)


def test_rank_one_greedy_is_homogeneous():
    teacher, student, log = _setup(k_prime=1)
    slate = recommend(StrategyKind.greedy(), student, teacher, log, _rng(1))
    assert len(set(slate)) == 1
    assert slate[0] == np.argmax(student.q_hat[:, 0])


def test_epsilon_zero_matches_greedy():
    teacher, student, log = _setup()
    log.record([0, 0, 1], [1, 2, 3], [1, 0, 1], 0)
    g = recommend(StrategyKind.greedy(), student, teacher, log, _rng(5))
    e = recommend(StrategyKind.epsilon_greedy(0.0), student, teacher, log, _rng(5))
    assert np.array_equal(g, e)


def test_epsilon_one_matches_random_distribution():
    teacher, student, log = _setup(n=1, m=6)
    rng_e, rng_r = _rng(1), _rng(2)
    trials = 6000
    ce = np.bincount([recommend(StrategyKind.epsilon_greedy(1.0), student, teacher, log, rng_e)[0] for _ in range(trials)], minlength=6)
    cr = np.bincount([recommend(StrategyKind.random(), student, teacher, log, rng_r)[0] for _ in range(trials)], minlength=6)
    sigma = np.sqrt(trials * (1 / 6) * (5 / 6))
    assert np.all(np.abs(ce - trials / 6) < 4 * sigma)
    assert np.all(np.abs(cr - trials / 6) < 4 * sigma)


def test_oracle_picks_teacher_argmax():
    t = TeacherModel.from_factors(np.array([[0.1, 0.9, 0.5]]), np.zeros((1, 1)), np.zeros((3, 1)))
    slate = recommend(StrategyKind.oracle(), None, t, InteractionLog(1, 3), _rng())
    assert slate.tolist() == [1]


def test_exhausted_agents_skipped():
    teacher, student, log = _setup(n=2, m=2)
    log.record([0, 0], [0, 1], [1, 1], 0)
    for kind in (StrategyKind.greedy(), StrategyKind.epsilon_greedy(0.5), StrategyKind.random(), StrategyKind.oracle()):
        slate = recommend(kind, student, teacher, log, _rng())
        assert slate[0] == -1 and slate[1] in (0, 1)


def test_ties_broken_uniformly():
    teacher, _, log = _setup(n=1, m=4)
    student = StudentModel(np.zeros((1, 2)), np.zeros((4, 2)))
    rng = _rng(3)
    picks = np.bincount([recommend(StrategyKind.greedy(), student, teacher, log, rng)[0] for _ in range(4000)], minlength=4)
    assert picks.min() > 850


def test_never_repeats_a_pair():
    teacher, student, log = _setup(n=5, m=6)
    rng = _rng(2)
    for t in range(1, 7):
        slate = recommend(StrategyKind.epsilon_greedy(0.3), student, teacher, log, rng)
        agents = np.flatnonzero(slate >= 0)
        assert not log.recommended[agents, slate[agents]].any()
        log.record(agents, slate[agents], np.ones(len(agents)), t)
    assert log.recommended.all()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["exp", "affine", "cube"]))
def test_greedy_invariant_under_increasing_transform(seed, transform):
    teacher, student, log = _setup(n=3, m=8, seed=seed)
    scores = student.scores()
    f = {"exp": np.exp, "affine": lambda x: 3 * x - 2, "cube": lambda x: x**3}[transform]
    transformed = scores.copy()
    transformed[1] = f(transformed[1])
    from recsim.strategies import _argmax_unseen

    a = _argmax_unseen(scores, log.unseen(), _rng(seed))
    b = _argmax_unseen(transformed, log.unseen(), _rng(seed))
    assert np.array_equal(a, b)


def test_exploration_frequency():
    teacher, student, log = _setup(n=1, m=10)
    log.record([0, 0], [3, 7], [0, 1], 0)
    eps = 0.3
    greedy_item = recommend(StrategyKind.greedy(), student, teacher, log, _rng())[0]
    rng = _rng(9)
    trials = 20_000
    picks = np.array([recommend(StrategyKind.epsilon_greedy(eps), student, teacher, log, rng)[0] for _ in range(trials)])
    u, g = 8, 1
    expected = eps * (u - g) / u
    sigma = np.sqrt(expected * (1 - expected) / trials)
    assert abs(np.mean(picks != greedy_item) - expected) < 3 * sigma
    assert not np.isin(picks, [3, 7]).any()


def test_strategy_validation():
    with pytest.raises(ConfigError):
        StrategyKind("softmax")
    with pytest.raises(ConfigError):
        StrategyKind.epsilon_greedy(1.5)
