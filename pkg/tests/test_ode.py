import math

import numpy as np
import pytest

from ctxlab.autograd import Tensor, check_gradients
from ctxlab.errors import CheckpointError, InvalidArgumentError, NumericOverflowError
from ctxlab.ode import (
    PARAM_NAMES,
    OdeDynamics,
    basis_at,
    dynamics_eval,
    fit_schedule,
    integrate,
    integrate_tensor,
    param_gradients,
    sample_t,
)
from ctxlab.rope import AlphaSchedule, make_basis
from ctxlab.utils.enum import ScalingKind
from ctxlab.utils.validators import IntegratorConfig


def constant_dyn(d: int, c: float) -> OdeDynamics:
    half = d // 2
    return OdeDynamics(d, 1, np.zeros((d, half)), np.zeros((half, d)), time_w=0.0, time_b=c)


def test_zero_dynamics_evaluate_to_zero():
    np.testing.assert_array_equal(dynamics_eval(OdeDynamics.zeros(8), np.ones(4), 2.5), np.zeros(4))


def test_time_bias_passes_through_when_w_up_is_zero(rng):
    dyn = OdeDynamics(8, 2, np.zeros((16, 4)), rng.normal(size=(4, 16)), time_w=0.0, time_b=0.3)
    np.testing.assert_allclose(dynamics_eval(dyn, rng.normal(size=4), 3.0), [0.3] * 4)


def test_dynamics_silu_example():
    dyn = OdeDynamics(2, 1, [[1.0], [0.0]], [[1.0, 0.0]])
    out = dynamics_eval(dyn, [1.0], 1.0)
    assert out[0] == pytest.approx(1.0 / (1.0 + math.exp(-1.0)), rel=1e-12)
    assert out[0] == pytest.approx(0.731059, abs=1e-6)


def test_dynamics_shape_errors():
    with pytest.raises(InvalidArgumentError):
        OdeDynamics(8, 1, np.zeros((4, 4)), np.zeros((4, 8)))
    with pytest.raises(InvalidArgumentError):
        OdeDynamics(7, 1, np.zeros((7, 3)), np.zeros((3, 7)))
    with pytest.raises(InvalidArgumentError):
        dynamics_eval(OdeDynamics.zeros(8), np.ones(3), 1.0)


def test_initialize_shapes_and_zero_time_embedding(rng):
    dyn = OdeDynamics.initialize(16, 2, rng)
    assert dyn.w_up.shape == (32, 8)
    assert dyn.w_down.shape == (8, 32)
    assert dyn.params["time_w"].item() == 0.0
    assert dyn.params["time_b"].item() == 0.0
    assert np.std(dyn.w_up.data) == pytest.approx(0.02, rel=0.25)


def test_zero_dynamics_keep_state(rk4_cfg, rng):
    z1 = rng.normal(size=4)
    np.testing.assert_array_equal(integrate(OdeDynamics.zeros(8), z1, 7.0, rk4_cfg), z1)


def test_euler_constant_field(euler_cfg):
    z1 = np.array([0.5, -1.0, 2.0, 0.0])
    out = integrate(constant_dyn(8, 0.25), z1, 3.0, euler_cfg)
    np.testing.assert_allclose(out, z1 + 0.25 * 2.0, atol=1e-14)


def test_t_target_one_returns_input(small_dyn, rk4_cfg):
    z1 = np.array([0.1, 0.2, 0.3, 0.4])
    np.testing.assert_array_equal(integrate(small_dyn, z1, 1.0, rk4_cfg), z1)


def test_rk4_linear_field_against_closed_form():
    cfg = IntegratorConfig(method="rk4", steps_per_unit_t=64)
    out = integrate(None, [1.0], 2.0, cfg, field=lambda z, t: z)
    assert out[0] == pytest.approx(math.e, rel=1e-6)


def test_rk4_order_on_linear_field():
    def error(steps):
        cfg = IntegratorConfig(method="rk4", steps_per_unit_t=steps)
        return abs(integrate(None, [1.0], 2.0, cfg, field=lambda z, t: z)[0] - math.e)

    assert error(8) / error(16) >= 12.0


def test_integration_is_additive(small_dyn, rk4_cfg, rng):
    z1 = rng.normal(size=4)
    mid = integrate(small_dyn, z1, 2.0, rk4_cfg)
    split = integrate(small_dyn, mid, 3.0, rk4_cfg, t_start=2.0)
    direct = integrate(small_dyn, z1, 3.0, rk4_cfg)
    np.testing.assert_allclose(split, direct, atol=1e-9)


def test_overflow_names_the_step(rk4_cfg):
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NumericOverflowError) as excinfo:
            integrate(None, [1.0], 3.0, rk4_cfg, field=lambda z, t: z * 1e200)
    assert excinfo.value.step >= 1


def test_integrate_rejects_backwards_time(small_dyn, rk4_cfg):
    with pytest.raises(InvalidArgumentError):
        integrate(small_dyn, np.zeros(4), 0.5, rk4_cfg)


def test_basis_at_boundary_and_zero_dynamics(rk4_cfg, base8, small_dyn):
    assert basis_at(small_dyn, base8, 1.0, rk4_cfg) is base8
    np.testing.assert_allclose(basis_at(OdeDynamics.zeros(8), base8, 3.0, rk4_cfg).values, base8.values, rtol=1e-14)


def test_basis_at_is_positive(small_dyn, rk4_cfg, base8):
    assert np.all(basis_at(small_dyn, base8, 4.0, rk4_cfg).values > 0)


def test_sample_t():
    rng = np.random.default_rng(0)
    assert all(sample_t(rng, 1.0) == 1.0 for _ in range(10))
    draws = [sample_t(rng, 5.0) for _ in range(100_000)]
    assert min(draws) >= 1.0 and max(draws) <= 5.0
    assert np.mean(draws) == pytest.approx(3.0, abs=0.02)
    a = [sample_t(np.random.default_rng(9), 4.0) for _ in range(3)]
    b = [sample_t(np.random.default_rng(9), 4.0) for _ in range(3)]
    assert a == b
    with pytest.raises(InvalidArgumentError):
        sample_t(rng, 0.5)


def test_param_gradients_zero_upstream(small_dyn, rk4_cfg):
    grads = param_gradients(small_dyn, np.log(make_basis(8).values), 3.0, rk4_cfg, np.zeros(4))
    assert set(grads) == set(PARAM_NAMES)
    for g in grads.values():
        assert np.all(g == 0.0)


def test_param_gradients_time_bias_accumulates(euler_cfg):
    grads = param_gradients(OdeDynamics.zeros(8), np.zeros(4), 3.0, euler_cfg, np.ones(4))
    assert float(grads["time_b"]) == pytest.approx((3.0 - 1.0) * 4, rel=1e-12)
    assert np.all(grads["w_down"] == 0.0)


def test_param_gradients_match_finite_differences(rng):
    cfg = IntegratorConfig(method="rk4", steps_per_unit_t=4)
    dyn = OdeDynamics.initialize(8, 1, rng, std=0.3)
    dyn.params["time_w"].data = np.asarray(0.1)
    dyn.params["time_b"].data = np.asarray(-0.05)
    z1 = np.log(make_basis(8, 100.0).values)
    upstream = rng.normal(size=4)
    grads = param_gradients(dyn, z1, 3.0, cfg, upstream, through_exp=True)

    def loss():
        return (integrate_tensor(dyn, Tensor(z1), 3.0, cfg).exp() * upstream).sum()

    result = check_gradients(loss, dyn.params, analytic=grads)
    assert result.passed(1e-4), result


def test_param_gradients_leave_no_stale_grads(small_dyn, rk4_cfg):
    param_gradients(small_dyn, np.zeros(4), 2.0, rk4_cfg, np.ones(4))
    assert all(p.grad is None for p in small_dyn.params.values())


def test_dynamics_record_round_trip(small_dyn):
    restored = OdeDynamics.from_record(small_dyn.to_record())
    for name in PARAM_NAMES:
        np.testing.assert_array_equal(restored.params[name].data, small_dyn.params[name].data)
    with pytest.raises(CheckpointError):
        OdeDynamics.from_record({"d": 8, "amp": 1, "params": {}})


@pytest.mark.integration
def test_fit_schedule_reproduces_pi():
    cfg = IntegratorConfig(method="rk4", steps_per_unit_t=4)
    base = make_basis(8, 1e4)
    dyn = OdeDynamics.initialize(8, 1, np.random.default_rng(0))
    history = fit_schedule(dyn, base, AlphaSchedule(kind=ScalingKind.PI), [2.0], cfg, steps=2000, lr=0.02)
    assert history[-1] < history[0]
    fitted = basis_at(dyn, base, 2.0, cfg).values
    assert np.max(np.abs(fitted / (base.values / 2.0) - 1.0)) <= 1e-3
