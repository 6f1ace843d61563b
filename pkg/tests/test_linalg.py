import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aoil.linalg import (
    AdamState,
    DimensionError,
    adam_step,
    cosine_similarity,
    relu,
    softmax,
    xavier_init,
)

finite = st.floats(-1e4, 1e4, allow_nan=False)


def test_xavier_deterministic():
    a = xavier_init(1, 1, np.random.default_rng(7))
    b = xavier_init(1, 1, np.random.default_rng(7))
    assert a.tobytes() == b.tobytes()


def test_xavier_moments():
    w = xavier_init(30, 30, np.random.default_rng(1))
    assert abs(w.mean()) < 0.02
    assert abs(w.var() - 2 / 60) < 0.2 * 2 / 60


@pytest.mark.parametrize("shape", [(0, 5), (5, 0)])
def test_xavier_empty_shape(shape):
    with pytest.raises(DimensionError):
        xavier_init(*shape, np.random.default_rng(0))


def test_relu_cases():
    np.testing.assert_array_equal(relu(np.array([-1.0, 2.0, 0.0])), [0.0, 2.0, 0.0])
    np.testing.assert_array_equal(relu(-np.arange(1.0, 4.0)), np.zeros(3))
    v = np.array([0.5, 3.0])
    np.testing.assert_array_equal(relu(v), v)


def test_softmax_examples():
    np.testing.assert_allclose(softmax(np.zeros(2)), [0.5, 0.5])
    np.testing.assert_allclose(softmax(np.full(3, 1000.0)), np.full(3, 1 / 3))
    np.testing.assert_allclose(softmax(np.log([1.0, 2.0, 3.0])), [1 / 6, 2 / 6, 3 / 6], rtol=1e-12)
    with pytest.raises(DimensionError):
        softmax(np.array([]))


@given(arrays(np.float64, st.integers(1, 20), elements=finite))
def test_softmax_on_simplex(v):
    p = softmax(v)
    assert (p >= 0).all()
    assert abs(p.sum() - 1.0) < 1e-9


def test_cosine_examples():
    a = np.array([1.0, 2.0, -3.0])
    assert cosine_similarity(a, a) == pytest.approx(1.0)
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    assert cosine_similarity(a, -a) == pytest.approx(-1.0)
    assert cosine_similarity(np.zeros(3), a) == 0.0


vec3 = arrays(np.float64, 3, elements=st.floats(-100, 100, allow_nan=False))


@given(vec3, vec3, st.floats(1e-3, 1e3))
def test_cosine_symmetric_scale_invariant(a, b, k):
    d = cosine_similarity(a, b)
    assert -1 - 1e-12 <= d <= 1 + 1e-12
    assert d == pytest.approx(cosine_similarity(b, a), abs=1e-12)
    if np.linalg.norm(a) > 1e-6:
        assert d == pytest.approx(cosine_similarity(k * a, b), abs=1e-9)


def test_adam_zero_gradient_is_noop():
    p = np.array([[1.0, -2.0]])
    st_ = AdamState.like(p)
    for _ in range(5):
        adam_step(p, np.zeros_like(p), st_, 0.01)
    np.testing.assert_array_equal(p, [[1.0, -2.0]])
    assert st_.step_count == 5


def test_adam_descends_against_gradient_sign():
    p = np.zeros(2)
    s = AdamState.like(p)
    for _ in range(100):
        adam_step(p, np.array([3.0, -0.5]), s, 0.01)
    assert p[0] < 0 < p[1]


def test_adam_first_step_by_hand():
    p = np.array([0.0])
    s = AdamState.like(p)
    adam_step(p, np.array([1.0]), s, 0.01)
    # t=1: m_hat = 1, v_hat = 1, step = lr * 1 / (1 + eps)
    assert p[0] == pytest.approx(-0.01 / (1 + 1e-8), rel=1e-12)
    assert s.second_moment[0] >= 0


def test_adam_shape_mismatch():
    p = np.zeros(3)
    with pytest.raises(DimensionError):
        adam_step(p, np.zeros(2), AdamState.like(p), 0.1)
