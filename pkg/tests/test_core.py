import numpy as np
import pytest

from driftopt import (DimensionError, IterateTrace, ProgramSpec, QueueState,
                      TraceSample, drift_identity_residual, lyapunov,
                      queue_update, sample_indices)


def make_program(**kw):
    defaults = dict(
        n=2, m=1,
        objective=lambda x: float(x @ x),
        constraints=lambda x: np.array([x[0] + x[1] - 1.0]),
        lower=[-1.0, -1.0], upper=[1.0, 1.0],
        alpha=2.0, beta=np.sqrt(2.0))
    defaults.update(kw)
    return ProgramSpec(**defaults)


def test_program_validates_dimensions():
    with pytest.raises(DimensionError):
        make_program(lower=[0.0])
    with pytest.raises(ValueError):
        make_program(alpha=0.0)
    with pytest.raises(ValueError):
        make_program(lower=[2.0, 2.0])  # lower > upper


def test_program_projection_and_evaluation():
    p = make_program()
    assert np.allclose(p.project(np.array([5.0, -3.0])), [1.0, -1.0])
    assert p.f(np.array([1.0, 2.0])) == 5.0
    assert np.allclose(p.g(np.array([1.0, 2.0])), [2.0])


def test_queue_state_rejects_negative():
    with pytest.raises(ValueError):
        QueueState(np.array([1.0, -0.1]))


def test_queue_update_clamps_at_zero():
    q = QueueState(np.array([1.0, 0.0]))
    q2 = queue_update(q, np.array([-5.0, 2.0]))
    assert np.allclose(q2.q, [0.0, 2.0])


def test_lyapunov_value():
    assert lyapunov(QueueState(np.array([3.0, 4.0]))) == 12.5


def test_drift_identity_exact_on_updates():
    # drift equals q_next.g - ||q_next - q||^2 / 2 whenever q_next is the
    # queue update of q under g
    rng = np.random.default_rng(0)
    for _ in range(1000):
        m = rng.integers(1, 6)
        q = QueueState(rng.uniform(0, 100, m))
        g = rng.uniform(-50, 50, m)
        q_next = queue_update(q, g)
        res = drift_identity_residual(q, q_next, g)
        assert res <= 1e-9 * (1.0 + lyapunov(q))


def test_drift_identity_nonzero_off_manifold():
    q = QueueState(np.array([1.0]))
    q_other = QueueState(np.array([10.0]))
    assert drift_identity_residual(q, q_other, np.array([1.0])) > 1.0


def sample(t, m=1, **kw):
    d = dict(t=t, x=np.zeros(2), xbar=np.zeros(2), queue=np.zeros(m),
             f_xbar=0.0, g_xbar=np.zeros(m), qnorm=0.0)
    d.update(kw)
    return TraceSample(**d)


def test_trace_requires_increasing_t():
    tr = IterateTrace()
    tr.append(sample(1))
    tr.append(sample(5))
    with pytest.raises(ValueError):
        tr.append(sample(5))
    with pytest.raises(ValueError):
        tr.append(sample(2))


def test_trace_rejects_negative_queue():
    tr = IterateTrace()
    with pytest.raises(ValueError):
        tr.append(sample(1, queue=np.array([-1.0])))


def test_trace_columns():
    tr = IterateTrace()
    tr.append(sample(1, f_xbar=2.0))
    tr.append(sample(3, f_xbar=4.0))
    assert list(tr.ts) == [1, 3]
    assert np.allclose(tr.column("f_xbar"), [2.0, 4.0])


def test_sample_indices_linear():
    assert sample_indices(10, "linear", stride=3) == [3, 6, 9, 10]
    assert sample_indices(5, "linear", stride=1) == [1, 2, 3, 4, 5]


def test_sample_indices_log():
    idx = sample_indices(100_000, "log")
    assert idx[0] == 1
    assert idx[-1] == 100_000
    assert all(a < b for a, b in zip(idx, idx[1:]))
    assert len(idx) < 2000  # stays bounded for long runs


def test_sample_indices_rejects_bad_input():
    with pytest.raises(ValueError):
        sample_indices(0)
    with pytest.raises(ValueError):
        sample_indices(10, "bogus")
