import math

import numpy as np
import pytest

from damlab.engine import (ActivationLayer, Dense, Network, SGD, Adam,
                           activation_backward, activation_forward,
                           finite_diff_grad, init_params, loss_bce,
                           loss_frobenius, loss_mse, loss_softmax_ce,
                           make_rng, spawn, step_decay_lr)
from damlab.errors import ConfigError, DimensionError, DomainError, StateError


# ---------------------------------------------------------------------------
# dense forward
# ---------------------------------------------------------------------------

def test_dense_identity_map():
    layer = Dense(2, 2, weights=np.eye(2), bias=np.zeros(2))
    out = layer.forward(np.array([[3.0, -1.0]]))
    np.testing.assert_array_equal(out, [[3.0, -1.0]])


def test_dense_hand_multiply():
    # [1,1] @ [[1,2],[0,1]].T + [1,0] = [1+2+1, 0+1+0] = [4, 1]
    layer = Dense(2, 2, weights=np.array([[1.0, 2.0], [0.0, 1.0]]), bias=np.array([1.0, 0.0]))
    out = layer.forward(np.array([[1.0, 1.0]]))
    np.testing.assert_allclose(out, [[4.0, 1.0]])


def test_dense_batch_consistency():
    # rows are independent; tolerance covers BLAS kernel differences by shape
    rng = make_rng(3)
    layer = Dense(4, 3, rng=rng)
    a = rng.standard_normal((1, 4))
    b = rng.standard_normal((1, 4))
    both = layer.forward(np.vstack([a, b]))
    np.testing.assert_allclose(both[0:1], layer.forward(a), rtol=1e-14, atol=1e-16)
    np.testing.assert_allclose(both[1:2], layer.forward(b), rtol=1e-14, atol=1e-16)


def test_dense_shape_mismatch_names_both_shapes():
    layer = Dense(3, 2, rng=make_rng(0))
    with pytest.raises(DimensionError, match=r"\(1, 4\).*\(2, 3\)"):
        layer.forward(np.zeros((1, 4)))


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

def test_relu_dead_region():
    assert activation_forward("relu", np.array([[-2.0]]))[0, 0] == 0.0
    back = activation_backward("relu", np.array([[-2.0]]), np.array([[5.0]]))
    assert back[0, 0] == 0.0


def test_tanh_origin():
    assert activation_forward("tanh", np.array([[0.0]]))[0, 0] == 0.0
    back = activation_backward("tanh", np.array([[0.0]]), np.array([[1.0]]))
    assert back[0, 0] == 1.0


def test_sine_derivative_finite_difference():
    x = np.array([0.7])
    analytic = activation_backward("sine", x, np.ones(1))[0]
    numeric = finite_diff_grad(lambda: activation_forward("sine", x)[0], x, 0, step=1e-6)
    assert abs(analytic - numeric) / abs(numeric) < 1e-6


@pytest.mark.parametrize("kind", ["identity", "relu", "leaky_relu", "elu", "tanh", "sigmoid", "sine"])
def test_activation_derivative_matches_fd(kind):
    rng = make_rng(11)
    x = rng.uniform(-2.0, 2.0, size=7)
    x = x[np.abs(x) > 1e-3]  # keep away from kinks
    analytic = activation_backward(kind, x, np.ones_like(x))
    for i in range(len(x)):
        xi = x.copy()
        numeric = finite_diff_grad(lambda: float(activation_forward(kind, xi)[i]), xi, i)
        assert abs(analytic[i] - numeric) < 1e-7 + 1e-6 * abs(numeric)


def test_activation_rejects_non_finite():
    with pytest.raises(DomainError):
        activation_forward("relu", np.array([[np.nan]]))


def test_sigmoid_extreme_inputs_stay_finite():
    out = activation_forward("sigmoid", np.array([[-800.0, 800.0]]))
    assert np.all(np.isfinite(out))


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("loss", [loss_mse, loss_frobenius])
def test_loss_zero_at_target(loss):
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    value, grad = loss(x, x.copy())
    assert value == 0.0
    np.testing.assert_array_equal(grad, np.zeros_like(x))


def test_frobenius_identity_vs_zero():
    value, grad = loss_frobenius(np.eye(2), np.zeros((2, 2)))
    assert value == 2.0
    np.testing.assert_array_equal(grad, 2.0 * np.eye(2))


def test_softmax_ce_grad_rows_sum_to_zero():
    rng = make_rng(5)
    logits = rng.standard_normal((6, 4))
    labels = rng.integers(0, 4, size=6)
    _, grad = loss_softmax_ce(logits, labels)
    np.testing.assert_allclose(grad.sum(axis=1), np.zeros(6), atol=1e-12)


def test_softmax_ce_value_against_log_probs():
    logits = np.array([[1.0, 2.0, 0.5]])
    labels = np.array([1])
    value, _ = loss_softmax_ce(logits, labels)
    probs = np.exp(logits[0]) / np.exp(logits[0]).sum()
    assert abs(value + math.log(probs[1])) < 1e-12


def test_bce_domain_error():
    with pytest.raises(DomainError):
        loss_bce(np.array([[1.0]]), np.array([[1.0]]))
    with pytest.raises(DomainError):
        loss_bce(np.array([[-0.1]]), np.array([[0.0]]))


def test_loss_shape_mismatch():
    with pytest.raises(DimensionError):
        loss_mse(np.zeros((2, 2)), np.zeros((2, 3)))


# ---------------------------------------------------------------------------
# backward
# ---------------------------------------------------------------------------

def test_single_dense_mse_closed_form():
    # one sample: d/dW of sum((x W^T + b - t)^2) = 2 (pred - t)^T outer x
    rng = make_rng(7)
    layer = Dense(3, 2, rng=rng)
    net = Network([layer])
    x = rng.standard_normal((1, 3))
    t = rng.standard_normal((1, 2))
    pred = net.forward(x, cache=True)
    _, grad = loss_mse(pred, t)
    net.backward(grad)
    expected = 2.0 * (pred - t).T @ x
    np.testing.assert_allclose(layer.w.grad, expected, rtol=1e-12)
    np.testing.assert_allclose(layer.b.grad, 2.0 * (pred - t)[0], rtol=1e-12)


def test_zero_upstream_gives_zero_grads():
    rng = make_rng(8)
    net = Network([Dense(3, 3, rng=rng), ActivationLayer("tanh"), Dense(3, 2, rng=rng)])
    net.forward(rng.standard_normal((4, 3)), cache=True)
    net.backward(np.zeros((4, 2)))
    for p in net.parameters():
        np.testing.assert_array_equal(p.grad, np.zeros_like(p.grad))


def test_backward_before_forward_raises():
    net = Network([Dense(2, 2, rng=make_rng(0))])
    with pytest.raises(StateError):
        net.backward(np.zeros((1, 2)))


def test_forward_preserves_parameter_values():
    rng = make_rng(9)
    layer = Dense(3, 3, rng=rng)
    net = Network([layer])
    before = layer.w.value.copy()
    x = rng.standard_normal((2, 3))
    net.forward(x, cache=True)
    _, grad = loss_mse(net.forward(x, cache=True), np.zeros((2, 3)))
    net.backward(grad)
    np.testing.assert_array_equal(layer.w.value, before)


# ---------------------------------------------------------------------------
# optimizers
# ---------------------------------------------------------------------------

def _single_param(value):
    from damlab.engine import Parameter
    return Parameter("p", np.array([float(value)]))


def test_sgd_plain_arithmetic():
    p = _single_param(1.0)
    p.grad[:] = 2.0
    p.grad_ready = True
    SGD([p], lr=0.1, momentum=0.9, weight_decay=0.0).step()
    assert p.value[0] == pytest.approx(0.8, abs=1e-15)


def test_zero_gradient_leaves_params_unchanged():
    p = _single_param(1.5)
    p.grad_ready = True
    for opt in (SGD([p], lr=0.1, weight_decay=0.0), Adam([p], lr=0.1)):
        opt.step()
        assert p.value[0] == 1.5


def test_adam_first_step_magnitude():
    p = _single_param(0.0)
    p.grad[:] = 1.0
    p.grad_ready = True
    Adam([p], lr=0.001).step()
    assert p.value[0] == pytest.approx(-0.001, rel=1e-6)


def test_step_before_gradients_raises():
    p = _single_param(0.0)
    with pytest.raises(StateError):
        SGD([p], lr=0.1).step()
    with pytest.raises(StateError):
        Adam([p], lr=0.1).step()


def test_weight_decay_skips_no_decay_params():
    from damlab.engine import Parameter
    decayed = Parameter("w", np.array([2.0]))
    exempt = Parameter("beta", np.array([2.0]), decay=False)
    for p in (decayed, exempt):
        p.grad_ready = True
    SGD([decayed, exempt], lr=0.1, momentum=0.0, weight_decay=0.5).step()
    assert decayed.value[0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0)
    assert exempt.value[0] == 2.0


def test_frozen_param_bit_identical_under_step():
    p = _single_param(1.25)
    p.grad[:] = 3.7
    p.grad_ready = True
    p.frozen = True
    before = p.value.tobytes()
    Adam([p], lr=0.1).step()
    SGD([p], lr=0.1).step()
    assert p.value.tobytes() == before


def test_step_decay_schedule():
    assert step_decay_lr(0.05, 0, 100) == 0.05
    assert step_decay_lr(0.05, 50, 100) == pytest.approx(0.005)
    assert step_decay_lr(0.05, 75, 100) == pytest.approx(0.0005)


# ---------------------------------------------------------------------------
# init + rng
# ---------------------------------------------------------------------------

def test_init_deterministic():
    a = init_params(make_rng(42), (8, 8))
    b = init_params(make_rng(42), (8, 8))
    assert a.tobytes() == b.tobytes()


def test_init_bounds():
    w = init_params(make_rng(1), (100, 64))
    assert np.all(np.abs(w) <= 1.0 / math.sqrt(64))


def test_init_sample_mean_near_zero():
    # mean of M uniform draws on [-b, b] has sd b / sqrt(3 M)
    draws = init_params(make_rng(2), (1000, 100))
    bound = 1.0 / math.sqrt(100)
    sigma_mean = bound / math.sqrt(3 * draws.size)
    assert abs(draws.mean()) < 3 * sigma_mean


def test_init_rejects_bad_shape_and_scheme():
    with pytest.raises(ConfigError):
        init_params(make_rng(0), (0, 3))
    with pytest.raises(ConfigError):
        init_params(make_rng(0), (2, 2), scheme="nope")


def test_spawn_streams_are_independent_and_stable():
    a1 = spawn(7, 0).standard_normal(4)
    a2 = spawn(7, 0).standard_normal(4)
    b = spawn(7, 1).standard_normal(4)
    np.testing.assert_array_equal(a1, a2)
    assert not np.array_equal(a1, b)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def test_finite_diff_exact_for_quadratic():
    theta = np.array([3.0])
    grad = finite_diff_grad(lambda: float(theta[0] ** 2), theta, 0, step=1e-5)
    assert abs(grad - 6.0) < 1e-6
    assert theta[0] == 3.0  # restored


def test_finite_diff_constant_loss():
    theta = np.array([1.0])
    assert finite_diff_grad(lambda: 4.2, theta, 0) == 0.0


def test_finite_diff_requires_positive_step():
    with pytest.raises(DomainError):
        finite_diff_grad(lambda: 0.0, np.array([1.0]), 0, step=0.0)
