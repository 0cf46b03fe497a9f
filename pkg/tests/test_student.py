import numpy as np
import pytest
from oracles import gradient_relative_error, random_dataset

from recsim.errors import ConfigError, DivergenceError, TrainingError
from recsim.student import (
    StudentModel,
    TrainingDataset,
    TrainingHyperparams,
    brier,
    example_gradient,
    init_student,
    train,
)


def _rng(seed=0):
    return np.random.default_rng(seed)


def test_zero_init_predicts_zero():
    s = init_student(4, 3, 5, 0.0, _rng())
    assert np.all(s.scores() == 0)
    assert s.predict(3, 2) == 0.0


def test_init_deterministic():
    a = init_student(3, 2, 5, 0.4, _rng(1))
    b = init_student(3, 2, 5, 0.4, _rng(1))
    assert np.array_equal(a.p_hat, b.p_hat) and np.array_equal(a.q_hat, b.q_hat)


def test_init_mean_quarter():
    s = init_student(1000, 200, 5, 1 / np.sqrt(5), _rng(2))
    assert s.scores().mean() == pytest.approx(0.25, abs=0.01)


def test_init_rejects_zero_dims():
    with pytest.raises(ConfigError):
        init_student(0, 3, 2, 0.1, _rng())


def test_predict():
    s = StudentModel(np.array([[1.0, 0.0], [0.5, 0.5]]), np.array([[1.0, 0.0], [0.2, 0.6], [0.0, 0.0]]))
    assert s.predict(0, 0) == 1.0
    assert s.predict(1, 2) == 0.0
    assert s.predict(1, 1) == pytest.approx(0.4)
    with pytest.raises(IndexError):
        s.predict(2, 0)


@pytest.mark.parametrize("raw,clipped", [(1.7, 1.0), (-0.3, 0.0), (0.42, 0.42)])
def test_predict_prob_clips(raw, clipped):
    s = StudentModel(np.array([[raw]]), np.array([[1.0]]))
    assert s.predict_prob(0, 0) == pytest.approx(clipped)
    assert s.predict_prob_pairs([0], [0])[0] == pytest.approx(clipped)


def test_brier_examples():
    assert brier([1, 0], [1, 0]) == 0.0
    assert brier([0.5], [1]) == 0.25
    assert brier([0.2, 0.9, 0.4], [0, 1, 1]) == pytest.approx((0.04 + 0.01 + 0.36) / 3)
    with pytest.raises(ValueError):
        brier([0.1, 0.2], [1])
    with pytest.raises(ValueError):
        brier([], [])


def test_dataset_validation():
    with pytest.raises(ValueError, match="duplicate"):
        TrainingDataset.from_triples([(0, 1, 1), (0, 1, 0)])
    with pytest.raises(ValueError, match="binary"):
        TrainingDataset([0], [1], [2])


def _single_example_oracle(p, q, label, lr, epochs):
    # plain-Python SGD on one example, independent of the compiled kernel
    p, q = list(p), list(q)
    for _ in range(epochs):
        err = sum(a * b for a, b in zip(p, q)) - label
        p, q = [a - lr * 2 * err * b for a, b in zip(p, q)], [b - lr * 2 * err * a for a, b in zip(p, q)]
    return sum(a * b for a, b in zip(p, q))


def test_single_example_interpolates():
    s = init_student(1, 1, 3, 0.3, _rng(4))
    p0, q0 = s.p_hat[0].copy(), s.q_hat[0].copy()
    hp = TrainingHyperparams(learning_rate=0.01, max_epochs=500, patience=500)
    rep = train(s, TrainingDataset([0], [0], [1]), hp, _rng(5))
    assert s.predict(0, 0) == pytest.approx(1.0, abs=0.05)
    # the weights kept are the best on the (training) validation set, i.e. the oracle after all epochs
    assert s.predict(0, 0) == pytest.approx(_single_example_oracle(p0, q0, 1.0, 0.01, rep.epochs_run), abs=1e-9)


def _planted_rank_one(n=30, m=20, seed=0):
    rng = _rng(seed)
    u = (rng.random(n) < 0.5).astype(float)
    v = (rng.random(m) < 0.5).astype(float)
    labels = np.outer(u, v)
    a, i = np.divmod(np.arange(n * m), m)
    return TrainingDataset(a, i, labels.ravel()), labels


def _full_batch_gd(n, m, data, steps=4000, lr=0.05, seed=3):
    # independent oracle: full-batch gradient descent on the dense squared loss
    rng = _rng(seed)
    p = rng.uniform(0, 1, (n, 1))
    q = rng.uniform(0, 1, (m, 1))
    y = np.zeros((n, m))
    y[data.agents, data.items] = data.labels
    for _ in range(steps):
        err = p @ q.T - y
        p, q = p - lr * err @ q / m, q - lr * err.T @ p / n
    return np.mean((np.clip(p @ q.T, 0, 1) - y) ** 2)


def test_planted_rank_one_realizable():
    data, labels = _planted_rank_one()
    assert _full_batch_gd(30, 20, data) < 0.01
    s = init_student(30, 20, 1, 1.0, _rng(1))
    hp = TrainingHyperparams(learning_rate=0.05, max_epochs=500, patience=20)
    rep = train(s, data, hp, _rng(2))
    assert rep.train_brier < 0.01


def test_epoch_bound():
    data, _ = _planted_rank_one()
    s = init_student(30, 20, 2, 0.5, _rng(1))
    rep = train(s, data, TrainingHyperparams(patience=0, max_epochs=1), _rng(0))
    assert rep.epochs_run == 1


def test_empty_dataset():
    s = init_student(3, 3, 2, 0.5, _rng())
    with pytest.raises(TrainingError):
        train(s, TrainingDataset([], [], []), TrainingHyperparams(), _rng())


def test_divergence_names_epoch():
    data, _ = _planted_rank_one()
    s = init_student(30, 20, 3, 1.0, _rng(1))
    with pytest.raises(DivergenceError) as info:
        train(s, data, TrainingHyperparams(learning_rate=50.0, patience=50), _rng(0))
    assert info.value.epoch >= 1
    assert "epoch" in str(info.value)
    assert np.isfinite(s.p_hat).all()


def test_early_stopping_keeps_best():
    rng = _rng(8)
    for trial in range(10):
        data = random_dataset(rng, 40, 30, 500)
        s = init_student(40, 30, 5, 1 / np.sqrt(5), rng)
        rep = train(s, data, TrainingHyperparams(patience=3), rng)
        assert rep.best_validation_brier == min(rep.validation_history)
        # never worse than the incoming weights on the same split
        assert rep.best_validation_brier <= rep.validation_history[0]
        assert 0 <= rep.best_validation_brier <= 1
        assert len(rep.validation_history) == rep.epochs_run + 1
        assert np.isfinite(s.p_hat).all() and np.isfinite(s.q_hat).all()


def test_train_deterministic():
    data = random_dataset(_rng(1), 20, 10, 80)
    runs = []
    for _ in range(2):
        s = init_student(20, 10, 3, 0.5, _rng(2))
        rep = train(s, data, TrainingHyperparams(), _rng(3))
        runs.append((s.p_hat.copy(), s.q_hat.copy(), rep))
    assert np.array_equal(runs[0][0], runs[1][0]) and np.array_equal(runs[0][1], runs[1][1])
    assert runs[0][2] == runs[1][2]


def test_warm_start_continues_from_current_weights():
    data = random_dataset(_rng(1), 20, 10, 80)
    s = init_student(20, 10, 3, 0.5, _rng(2))
    train(s, data, TrainingHyperparams(), _rng(3))
    p1 = s.p_hat.copy()
    rep = train(s, data, TrainingHyperparams(), _rng(4))
    # validation baseline of the second call is computed on the trained weights
    assert rep.best_validation_brier <= rep.validation_history[0]
    assert not np.array_equal(p1, init_student(20, 10, 3, 0.5, _rng(2)).p_hat)


def test_fixed_holdout_keeps_assignments():
    rng = _rng(5)
    data = random_dataset(rng, 30, 20, 300)
    s = init_student(30, 20, 3, 0.5, rng)
    hp = TrainingHyperparams(fixed_holdout=True)
    train(s, TrainingDataset(data.agents[:200], data.items[:200], data.labels[:200]), hp, rng)
    first = s.holdout.copy()
    train(s, data, hp, rng)
    assert np.array_equal(s.holdout[:200], first)
    assert len(s.holdout) == 300


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_finite_differences(seed):
    assert gradient_relative_error(seed) < 1e-5


def test_kernel_step_uses_analytic_gradient():
    rng = _rng(6)
    s = StudentModel(rng.normal(size=(2, 3)), rng.normal(size=(2, 3)))
    p0, q0 = s.p_hat[1].copy(), s.q_hat[0].copy()
    gp, gq = example_gradient(p0, q0, 1.0)
    from recsim import _sgd

    _sgd.sgd_epoch(s.p_hat, s.q_hat, np.array([1]), np.array([0]), np.array([1.0]), np.array([0]), 0.1)
    assert np.allclose(s.p_hat[1], p0 - 0.1 * gp, atol=1e-14)
    assert np.allclose(s.q_hat[0], q0 - 0.1 * gq, atol=1e-14)
