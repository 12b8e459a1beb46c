"""
张量核心：算子、反向传播、Adam 与梯度检查
"""
import math

import numpy as np
import pytest

from src.services.tensor import (
    Adam, AdamState, Tensor, adam_step, grad_check, layer_norm, logistic_loss, matmul, no_grad,
    precision, softmax_rows
)
from src.utils.exceptions import (
    ContractError, DegenerateInputError, DegenerateMaskError, InputValidationError, NumericError, ShapeError
)


class TestMatmul:
    def test_known_product(self):
        out = matmul(Tensor([[1, 2], [3, 4]]), Tensor([[5, 6], [7, 8]]))
        np.testing.assert_array_equal(out.data, [[19, 22], [43, 50]])

    def test_identity(self):
        a = Tensor(np.arange(6).reshape(2, 3))
        np.testing.assert_array_equal(matmul(a, Tensor(np.eye(3))).data, a.data)

    def test_shape_mismatch_names_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\)"):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


class TestSoftmax:
    def test_uniform_row(self):
        np.testing.assert_allclose(softmax_rows(Tensor([[0, 0, 0, 0]])).data, [[0.25] * 4], atol=1e-7)

    def test_closed_form(self):
        np.testing.assert_allclose(softmax_rows(Tensor([[0.0, math.log(3)]])).data, [[0.25, 0.75]], atol=1e-6)

    def test_masked_column_is_exact_zero(self):
        out = softmax_rows(Tensor([[5.0, 9.0]]), mask=[True, False]).data
        assert out[0, 1] == 0.0
        assert out[0, 0] == 1.0

    def test_extreme_logits_stay_finite(self):
        out = softmax_rows(Tensor([[1000.0, -1000.0, 0.0]])).data
        assert np.all(np.isfinite(out))
        assert abs(out.sum() - 1.0) < 1e-6

    def test_fully_masked_row(self):
        with pytest.raises(DegenerateMaskError):
            softmax_rows(Tensor([[1.0, 2.0]]), mask=[False, False])


class TestLayerNorm:
    def test_constant_vector(self):
        out = layer_norm(Tensor([[3.0, 3.0, 3.0]]), Tensor(np.ones(3)), Tensor(np.zeros(3)))
        np.testing.assert_allclose(out.data, [[0, 0, 0]], atol=1e-6)

    def test_two_values(self):
        out = layer_norm(Tensor([[1.0, -1.0]]), Tensor(np.ones(2)), Tensor(np.zeros(2)))
        np.testing.assert_allclose(out.data, [[1, -1]], atol=1e-5)

    def test_zero_gain_gives_bias(self):
        out = layer_norm(Tensor([[1.0, 5.0, -2.0]]), Tensor(np.zeros(3)), Tensor([0.1, 0.2, 0.3]))
        np.testing.assert_allclose(out.data, [[0.1, 0.2, 0.3]], atol=1e-7)

    def test_moments(self):
        x = np.random.default_rng(1).normal(size=(4, 16)) * 3 + 2
        out = layer_norm(Tensor(x), Tensor(np.ones(16)), Tensor(np.zeros(16))).data
        assert np.all(np.abs(out.mean(axis=-1)) < 1e-5)
        assert np.all(np.abs(out.var(axis=-1) - 1) < 1e-3)

    def test_single_feature(self):
        with pytest.raises(DegenerateInputError):
            layer_norm(Tensor([[1.0]]), Tensor([1.0]), Tensor([0.0]))


class TestLogisticLoss:
    @pytest.mark.parametrize("label", [0, 1])
    def test_zero_logit(self, label):
        assert logistic_loss(Tensor(0.0), label).item() == pytest.approx(math.log(2), abs=1e-6)

    def test_gradient_at_zero(self):
        z = Tensor(0.0, requires_grad=True)
        logistic_loss(z, 1).backward()
        assert float(z.grad) == pytest.approx(-0.5)

    def test_known_value(self, f64):
        assert logistic_loss(Tensor(2.0), 1).item() == pytest.approx(0.1269280110429725, abs=1e-12)

    def test_large_logits(self):
        assert np.isfinite(logistic_loss(Tensor(100.0), 0).item())
        assert logistic_loss(Tensor(-100.0), 0).item() >= 0.0

    def test_bad_label(self):
        with pytest.raises(InputValidationError):
            logistic_loss(Tensor(0.0), 2)


class TestBackward:
    def test_sum_gives_ones(self):
        w = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        w.sum().backward()
        np.testing.assert_array_equal(w.grad, np.ones((2, 3)))

    def test_shared_subexpression_doubles(self):
        w = Tensor([1.0, 2.0], requires_grad=True)
        x = Tensor([3.0, 4.0])
        (w * x).sum().backward()
        single = w.grad.copy()
        w.zero_grad()
        term = (w * x).sum()
        (term + term).backward()
        np.testing.assert_allclose(w.grad, 2 * single)

    def test_repeated_backward_accumulates(self):
        w = Tensor([1.0], requires_grad=True)
        loss = (w * 3.0).sum()
        loss.backward()
        loss.backward()
        np.testing.assert_allclose(w.grad, [6.0])

    def test_linearity(self):
        w = Tensor([0.5, -1.0], requires_grad=True)
        a, b = Tensor([1.0, 2.0]), Tensor([-3.0, 0.5])
        (w * a).sum().backward()
        ga = w.grad.copy()
        w.zero_grad()
        (w * b).sum().backward()
        gb = w.grad.copy()
        w.zero_grad()
        ((w * a).sum() + (w * b).sum()).backward()
        np.testing.assert_allclose(w.grad, ga + gb)

    def test_non_scalar_loss(self):
        w = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(ContractError):
            (w * 2.0).backward()

    def test_no_grad_records_nothing(self):
        w = Tensor([1.0], requires_grad=True)
        with no_grad():
            out = w * 2.0
        assert not out.requires_grad


class TestAdam:
    def test_zero_gradient_is_fixed_point(self):
        p = Tensor([1.0, -2.0], requires_grad=True)
        p.grad = np.zeros(2, dtype=p.dtype)
        adam_step({"p": p}, AdamState(learning_rate=0.1))
        np.testing.assert_array_equal(p.data, [1.0, -2.0])

    def test_first_step_moves_by_learning_rate(self):
        p = Tensor([0.0], requires_grad=True)
        p.grad = np.ones(1, dtype=p.dtype)
        state = adam_step({"p": p}, AdamState(learning_rate=0.1))
        assert p.data[0] == pytest.approx(-0.1, abs=1e-6)
        assert state.step_count == 1

    def test_missing_gradient(self):
        p = Tensor([0.0], requires_grad=True)
        with pytest.raises(ContractError):
            adam_step({"p": p}, AdamState())

    def test_deterministic(self):
        def run():
            rng = np.random.default_rng(7)
            p = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
            opt = Adam({"p": p}, learning_rate=0.05)
            for _ in range(5):
                opt.zero_grad()
                (p * p).sum().backward()
                opt.step()
            return p.data.tobytes()

        assert run() == run()


class TestGradCheck:
    def test_square(self, f64):
        theta = Tensor([3.0], requires_grad=True)
        assert grad_check(lambda: (theta * theta).sum(), {"theta": theta}) < 1e-6
        np.testing.assert_allclose(theta.grad, [6.0])

    def test_wrong_rule_detected(self, f64):
        theta = Tensor([1.5, -0.7], requires_grad=True)

        def broken_square():
            data = theta.data * theta.data
            return Tensor.from_op(data, (theta,), lambda g: (g * 3.0 * theta.data,)).sum()

        assert grad_check(broken_square, {"theta": theta}) > 1e-2

    def test_non_finite_loss(self, f64):
        theta = Tensor([1.0], requires_grad=True)

        def exploding():
            return (theta * np.inf).sum()

        with pytest.raises(NumericError):
            grad_check(exploding, {"theta": theta})

    def test_precision_context_restores(self):
        with precision("f64"):
            assert Tensor(1.0).dtype == np.float64
        assert Tensor(1.0).dtype == np.float32

    def test_single_precision_uses_wide_reference(self):
        theta = Tensor([3.0, -1.25], requires_grad=True)
        report_error = grad_check(lambda: (theta * theta * theta).sum(), {"theta": theta})
        assert report_error < 1e-6
        assert theta.data.dtype == np.float32
        np.testing.assert_allclose(theta.grad, [27.0, 4.6875])
