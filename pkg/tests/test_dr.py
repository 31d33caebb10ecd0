import numpy as np
import pytest

from damlab.config import TrainConfig
from damlab.dr import (AblationPoint, DrModel, QuadraticLayer, SweepGrid, SyntheticSpec,
                       build_autoencoder, build_dr_model, generate_synthetic,
                       hyperparameter_sweep, l1_baseline_train, mean_pixel_mse,
                       offset_in_optimal_interval, optimal_offset_interval, train_dr)
from damlab.engine import Dense, Network, finite_diff_grad, loss_mse, make_rng, spawn
from damlab.errors import ConfigError, DivergenceError
from damlab.gate import DamGate, L1Mask


def _numeric_rank(X, tol=1e-8):
    sv = np.linalg.svd(X, compute_uv=False)
    return int(np.sum(sv > tol * sv[0]))


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------

def test_linear_synthetic_rank_matches_r():
    spec = SyntheticSpec(r=5, d=10, N=1000, psi_kind="linear", seed=0)
    data = generate_synthetic(spec)
    assert data.X.shape == (1000, 10)
    assert _numeric_rank(data.X) == 5


@pytest.mark.parametrize("r,d", [(2, 5), (4, 8)])
def test_linear_rank_never_exceeds_r(r, d):
    spec = SyntheticSpec(r=r, d=d, N=50, psi_kind="linear", seed=3)
    assert _numeric_rank(generate_synthetic(spec).X) <= r


def test_synthetic_deterministic():
    spec = SyntheticSpec(r=3, d=6, N=100, psi_kind="quadratic", seed=7)
    a = generate_synthetic(spec).X
    b = generate_synthetic(spec).X
    assert a.tobytes() == b.tobytes()


def test_spec_invariants():
    with pytest.raises(ConfigError):
        SyntheticSpec(r=5, d=5, N=100)
    with pytest.raises(ConfigError):
        SyntheticSpec(r=0, d=5, N=100)
    with pytest.raises(ConfigError):
        SyntheticSpec(r=2, d=5, N=3)
    with pytest.raises(ConfigError):
        SyntheticSpec(r=2, d=5, N=100, psi_kind="cubic")


# ---------------------------------------------------------------------------
# quadratic layer
# ---------------------------------------------------------------------------

def test_quadratic_layer_reduces_to_affine_when_wb_zero():
    layer = QuadraticLayer(3, 2, wa=make_rng(0).standard_normal((2, 3)),
                           wb=np.zeros((2, 3)), bias=np.array([0.5, -0.5]))
    x = make_rng(1).standard_normal((4, 3))
    np.testing.assert_allclose(layer.forward(x), x @ layer.wa.value.T + layer.b.value)


def test_quadratic_layer_scalar_case():
    layer = QuadraticLayer(1, 1, wa=np.array([[1.0]]), wb=np.array([[1.0]]),
                           bias=np.array([0.0]))
    assert layer.forward(np.array([[3.0]]))[0, 0] == 12.0  # 3*3 + 3


def test_quadratic_layer_gradient_check():
    rng = spawn(55, 0)
    layer = QuadraticLayer(4, 3, rng=rng)
    net = Network([layer])
    x = rng.standard_normal((5, 4))
    t = rng.standard_normal((5, 3))
    net.zero_grad()
    _, grad = loss_mse(net.forward(x, cache=True), t)
    net.backward(grad)

    def objective():
        v, _ = loss_mse(net.forward(x, cache=False), t)
        return v

    for p in layer.parameters():
        flat = p.value.reshape(-1)
        for i in range(0, flat.size, max(1, flat.size // 4)):
            numeric = finite_diff_grad(objective, flat, i)
            analytic = p.grad.reshape(-1)[i]
            assert abs(analytic - numeric) / max(abs(numeric), 1e-6) < 1e-4


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

def test_linear_model_composition():
    rng = make_rng(2)
    model = build_dr_model("linear", d=6, n=10, rng=rng, beta0=0.0)
    enc, dec = model.encoder.layers[0], model.decoder.layers[0]
    enc.b.value[:] = 0.0
    dec.b.value[:] = 0.0
    x = rng.standard_normal((20, 6))
    g = model.gate.gate_values()
    expected = (x @ enc.w.value.T * g) @ dec.w.value.T
    np.testing.assert_allclose(model.network().forward(x), expected, rtol=1e-12)


def test_model_output_shape_and_bias_only_when_fully_masked():
    rng = make_rng(3)
    model = build_dr_model("linear", d=6, n=10, rng=rng, k=5.0, beta0=-5.0)
    x = rng.standard_normal((7, 6))
    out = model.network().forward(x)
    assert out.shape == (7, 6)
    np.testing.assert_allclose(out, np.tile(model.decoder.layers[0].b.value, (7, 1)))


def test_build_dr_model_variants_roundtrip_shapes():
    rng = make_rng(4)
    for psi in ("quadratic", "neuralnet"):
        model = build_dr_model(psi, d=8, n=12, rng=rng)
        out = model.network().forward(make_rng(5).standard_normal((9, 8)))
        assert out.shape == (9, 8)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def _tiny_linear_case(seed=0, lam=0.01, epochs=400, beta0=1.0):
    spec = SyntheticSpec(r=2, d=4, N=64, psi_kind="linear", seed=seed)
    data = generate_synthetic(spec)
    model = build_dr_model("linear", spec.d, 8, spawn(seed, 0), beta0=beta0)
    cfg = TrainConfig(optimizer="adam", lr=0.01, weight_decay=1e-6, lam=lam,
                      epochs=epochs, seed=seed)
    return model, data, cfg


def test_train_dr_lambda_zero_keeps_gate_open():
    model, data, cfg = _tiny_linear_case(lam=0.0, epochs=150)
    trace = train_dr(model, data.X, cfg)
    assert trace.final_l0()[0] == 8
    assert trace.objective[-1] == pytest.approx(trace.task_loss[-1])


def test_train_dr_trace_shape_and_determinism():
    model, data, cfg = _tiny_linear_case(epochs=80)
    trace = train_dr(model, data.X, cfg)
    assert len(trace) == 80
    assert trace.epochs == list(range(80))
    model2, data2, cfg2 = _tiny_linear_case(epochs=80)
    trace2 = train_dr(model2, data2.X, cfg2)
    assert trace.mask_param == trace2.mask_param
    assert trace.task_loss == trace2.task_loss


def test_train_dr_divergence_carries_partial_trace():
    model, data, cfg = _tiny_linear_case(epochs=500)
    cfg.optimizer = "sgd"   # unbounded steps, compounds to overflow
    cfg.lr = 1e6
    with pytest.raises(DivergenceError) as err:
        train_dr(model, data.X, cfg)
    assert err.value.trace is not None
    assert len(err.value.trace) < 500


def test_train_dr_recovers_small_rank():
    # desk-scale end-to-end: r=2 in an 8-unit bottleneck (the tiny problem
    # needs a slightly stronger penalty to converge within 1500 epochs)
    model, data, cfg = _tiny_linear_case(lam=0.05, epochs=1500)
    trace = train_dr(model, data.X, cfg)
    assert trace.final_l0()[0] == 2
    assert offset_in_optimal_interval(8, 5.0, 2, trace.final_mask_param()[0])
    assert trace.final_task_loss() < 1e-3


# ---------------------------------------------------------------------------
# offset interval
# ---------------------------------------------------------------------------

def test_offset_interval_values():
    lo, hi = optimal_offset_interval(50, 5.0, 5)
    assert lo == pytest.approx(-4.6)
    assert hi == pytest.approx(-4.5)


def test_offset_interval_consistent_with_exact_count():
    # upper endpoint gives exactly m active units
    lo, hi = optimal_offset_interval(50, 5.0, 5)
    assert DamGate(50, k=5.0, beta0=hi).l0_exact() == 5
    assert DamGate(50, k=5.0, beta0=lo + 1e-9).l0_exact() == 5


def test_offset_interval_m_equals_n():
    lo, hi = optimal_offset_interval(10, 5.0, 10)
    assert hi == pytest.approx(0.0)
    assert offset_in_optimal_interval(10, 5.0, 10, 0.0)
    with pytest.raises(ConfigError):
        optimal_offset_interval(10, 5.0, 11)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def test_sweep_single_cell_matches_train_dr():
    spec = SyntheticSpec(r=2, d=4, N=64, psi_kind="linear", seed=1)
    grid = SweepGrid(lrs=[0.01], lams=[0.01], beta0s=[1.0])
    base = TrainConfig(optimizer="adam", lr=0.01, weight_decay=1e-6, lam=0.01,
                       epochs=300, seed=1)
    cells = hyperparameter_sweep(spec, grid, base, n=8)
    assert len(cells) == 1
    assert not cells[0].failed
    assert cells[0].final_l0 >= 0


def test_sweep_grid_validation():
    with pytest.raises(ConfigError):
        SweepGrid(lrs=[], lams=[0.1], beta0s=[1.0])


def test_sweep_records_divergent_cells_and_continues():
    spec = SyntheticSpec(r=2, d=4, N=64, psi_kind="linear", seed=1)
    grid = SweepGrid(lrs=[1e9, 0.01], lams=[0.01], beta0s=[1.0])
    base = TrainConfig(optimizer="sgd", epochs=200, seed=1, weight_decay=0.0, lam=0.01)
    cells = hyperparameter_sweep(spec, grid, base, n=8)
    assert [c.failed for c in cells] == [True, False]
    assert cells[0].final_l0 == -1


# ---------------------------------------------------------------------------
# autoencoder + L1 baseline
# ---------------------------------------------------------------------------

def test_build_autoencoder_shapes_and_masks():
    rng = make_rng(6)
    for mask, cls in (("dam", DamGate), ("l1", L1Mask)):
        net = build_autoencoder((20, 12), 8, rng, mask=mask)
        assert any(isinstance(l, cls) for l in net.layers)
        out = net.forward(make_rng(7).standard_normal((5, 20)))
        assert out.shape == (5, 20)
    plain = build_autoencoder((20, 12), 8, rng, mask="none")
    assert not plain.gates()


def test_l1_baseline_lambda_zero_keeps_dimension():
    rng = spawn(8, 0)
    X = make_rng(9).uniform(0, 1, size=(80, 20))
    net = build_autoencoder((20, 12), 8, rng, mask="l1")
    cfg = TrainConfig(optimizer="adam", lr=0.005, weight_decay=0.0, lam=0.0,
                      epochs=200, seed=8)
    trace = l1_baseline_train(net, X, cfg, loss_fn=mean_pixel_mse)
    assert trace.final_l0()[0] == 8
    assert trace.mask_label == "s_l1"


def test_l1_baseline_threshold_sensitivity():
    rng = spawn(10, 0)
    X = make_rng(11).uniform(0, 1, size=(120, 20))
    net = build_autoencoder((20, 12), 8, rng, mask="l1")
    cfg = TrainConfig(optimizer="adam", lr=0.01, weight_decay=0.0, lam=0.02,
                      epochs=400, seed=10)
    l1_baseline_train(net, X, cfg, loss_fn=mean_pixel_mse)
    mask = next(l for l in net.layers if isinstance(l, L1Mask))
    # counted dimension depends on the reporting threshold
    assert mask.dimension(1e-3) >= mask.dimension(1e-2)
    assert mask.dimension(1e-3) != mask.dimension(1e-1) or mask.dimension(1e-3) == 0


def test_l1_baseline_requires_l1_mask():
    rng = make_rng(12)
    net = build_autoencoder((20, 12), 8, rng, mask="dam")
    with pytest.raises(ConfigError):
        l1_baseline_train(net, np.zeros((10, 20)), TrainConfig(epochs=1))
