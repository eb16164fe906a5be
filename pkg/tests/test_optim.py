import numpy as np
import numpy.testing as npt
import pytest

from deepconn.errors import ConfigError, NumericFault
from deepconn.layers import Parameter
from deepconn.optim import Adam, RMSprop, make_optimizer


def _param(values, name="p"):
    return Parameter(np.asarray(values, dtype=float), name)


class TestAdam:
    def test_zero_gradient_leaves_parameters_unchanged(self):
        p = _param([1.0, -2.0, 3.0])
        opt = Adam([p])
        opt.step()
        npt.assert_array_equal(p.value, [1.0, -2.0, 3.0])

    def test_first_step_moves_by_lr_times_sign(self):
        # Bias-corrected first step: mhat = g, vhat = g^2, so the update is
        # -lr * g / (|g| + eps) ~ -lr * sign(g).
        p = _param([10.0, -10.0])
        p.grad[:] = [4.0, -0.25]
        opt = Adam([p], learning_rate=0.001)
        opt.step()
        npt.assert_allclose(p.value, [10.0 - 0.001, -10.0 + 0.001], rtol=1e-6)

    def test_step_count_increments_and_grads_zeroed(self):
        p = _param([1.0])
        p.grad[:] = 1.0
        opt = Adam([p])
        opt.step()
        assert opt.step_count == 1
        npt.assert_array_equal(p.grad, [0.0])

    def test_identical_runs_identical_trajectories(self):
        def run():
            rng = np.random.default_rng(5)
            p = _param(rng.standard_normal(4))
            opt = Adam([p], learning_rate=0.01)
            for _ in range(20):
                p.grad[:] = np.sin(p.value)  # deterministic pseudo-gradient
                opt.step()
            return p.value
        npt.assert_array_equal(run(), run())

    def test_non_finite_gradient_names_parameter(self):
        p = _param([1.0], name="tower.dense.W")
        p.grad[:] = np.nan
        with pytest.raises(NumericFault, match="tower.dense.W"):
            Adam([p]).step()

    def test_invalid_hyperparameters(self):
        with pytest.raises(ConfigError):
            Adam([], learning_rate=0.0)
        with pytest.raises(ConfigError):
            Adam([], beta1=1.0)


class TestRMSprop:
    def test_zero_gradient_leaves_parameters_unchanged(self):
        p = _param([5.0])
        RMSprop([p]).step()
        npt.assert_array_equal(p.value, [5.0])

    def test_first_step_closed_form(self):
        # v = (1-rho) g^2, so the step is -lr * g / (sqrt(1-rho)|g| + eps).
        g = 3.0
        p = _param([1.0])
        p.grad[:] = g
        opt = RMSprop([p], learning_rate=0.001, rho=0.9)
        opt.step()
        expected = 1.0 - 0.001 * g / (np.sqrt(0.1) * g + 1e-8)
        npt.assert_allclose(p.value, [expected], rtol=1e-12)
        # magnitude ~ lr / sqrt(1-rho), independent of |g|
        assert abs(1.0 - p.value[0]) == pytest.approx(0.001 / np.sqrt(0.1), rel=1e-6)

    def test_rho_zero_degenerates_to_sign_update(self):
        p = _param([0.0, 0.0])
        p.grad[:] = [7.0, -0.002]
        opt = RMSprop([p], learning_rate=0.001, rho=0.0)
        opt.step()
        npt.assert_allclose(p.value, [-0.001, 0.001], rtol=1e-4)

    def test_grads_zeroed_after_step(self):
        p = _param([1.0])
        p.grad[:] = 2.0
        RMSprop([p]).step()
        npt.assert_array_equal(p.grad, [0.0])

    def test_non_finite_gradient_rejected(self):
        p = _param([1.0], name="w")
        p.grad[:] = np.inf
        with pytest.raises(NumericFault, match="w"):
            RMSprop([p]).step()


def test_make_optimizer_dispatch():
    p = _param([1.0])
    assert isinstance(make_optimizer("adam", [p]), Adam)
    assert isinstance(make_optimizer("rmsprop", [p]), RMSprop)
    with pytest.raises(ConfigError):
        make_optimizer("sgd", [p])
