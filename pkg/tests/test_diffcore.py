"""
自动微分模块测试
覆盖矩阵乘法、逐元素运算、归约、反向传播、梯度裁剪与 Adam
"""

import numpy as np
import pytest

from src.models.diffcore import (
    Tensor,
    AdamOptimizer,
    OptimizerState,
    adam_step,
    backward,
    clip_gradients,
    concat,
    cos,
    elementwise,
    gradient_check,
    matmul,
    mean,
    numerical_gradient,
    power,
    reduce_max,
    reduce_sum,
    reduction,
    relu,
    reshape,
    scale,
    scatter,
    sq_norm,
    square,
    take,
    tanh,
    transpose,
)
from src.models.utils.errors import ContractError, DimensionError, DomainError


def test_matmul_identity_and_hand_values():
    """单位矩阵乘法与手算结果"""
    identity = Tensor(np.eye(2))
    m = Tensor([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(matmul(identity, m).data, m.data)
    assert matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]])).data.tolist() == [[11.0]]


def test_matmul_shape_mismatch_names_both_shapes():
    with pytest.raises(DimensionError) as excinfo:
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    assert '(2, 3)' in str(excinfo.value)


def test_matmul_gradient_matches_finite_differences(rng):
    a = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
    b = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
    error = gradient_check(lambda: reduce_sum(matmul(a, b)), [a, b])
    assert error < 1e-5


def test_matrix_vector_gradient_is_outer_product(rng):
    """loss = sum(W·v) 时 W.grad = outer(1, v)"""
    w = Tensor(rng.normal(size=(2, 3)), requires_grad=True)
    v = rng.normal(size=3)
    backward(reduce_sum(matmul(w, Tensor(v))))
    np.testing.assert_allclose(w.grad, np.outer(np.ones(2), v))


def test_elementwise_values():
    assert tanh(Tensor(0.0)).item() == 0.0
    np.testing.assert_array_equal(square(Tensor([2.0, -3.0])).data, [4.0, 9.0])
    np.testing.assert_array_equal(relu(Tensor([-1.0, 2.0])).data, [0.0, 2.0])
    np.testing.assert_array_equal(elementwise('scale', Tensor([1.0, 2.0]), 3.0).data, [3.0, 6.0])
    with pytest.raises(DimensionError):
        elementwise('add', Tensor([1.0, 2.0]), Tensor([1.0, 2.0, 3.0]))
    with pytest.raises(DomainError):
        elementwise('softmax', Tensor([1.0]))


def test_tanh_derivative_at_point():
    x = Tensor(0.7, requires_grad=True)
    backward(tanh(x))
    numeric = numerical_gradient(lambda: tanh(x), x)
    assert abs(x.grad - numeric) < 1e-6


def test_reductions():
    assert sq_norm(Tensor([3.0, 4.0])).item() == 25.0
    assert mean(Tensor(np.full((3, 2), 1.5))).item() == 1.5
    assert reduction('sum', Tensor([1.0, 2.0])).item() == 3.0
    with pytest.raises(DomainError):
        reduction('sum', Tensor(np.zeros(0)))


def test_max_routes_gradient_to_first_maximum():
    x = Tensor([1.0, 5.0, 5.0], requires_grad=True)
    out = reduce_max(x)
    backward(out)
    assert out.item() == 5.0
    np.testing.assert_array_equal(x.grad, [0.0, 1.0, 0.0])


def test_max_along_axis_tie_rule():
    x = Tensor([[2.0, 2.0], [1.0, 3.0]], requires_grad=True)
    backward(reduce_sum(reduce_max(x, axis=1)))
    np.testing.assert_array_equal(x.grad, [[1.0, 0.0], [0.0, 1.0]])


def test_backward_polynomial_and_shared_input():
    x = Tensor(3.0, requires_grad=True)
    backward(square(x))
    assert x.grad == 6.0

    # x 同时流向两条路径，梯度为两条路径之和
    y = Tensor(2.0, requires_grad=True)
    backward(y * y + scale(y, 3.0))
    assert y.grad == 2 * 2.0 + 3.0


def test_backward_rejects_non_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(ContractError):
        backward(square(x))


def test_gradients_accumulate_across_backward_calls():
    x = Tensor(1.5, requires_grad=True)
    backward(square(x))
    backward(square(x))
    assert x.grad == pytest.approx(6.0)


def test_all_differentiable_ops_match_finite_differences(rng):
    """每种可微运算在 10 个随机点上与中心差分一致"""
    for _ in range(10):
        a = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        b = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        c = Tensor(rng.normal(size=(4, 2)), requires_grad=True)
        p = Tensor(rng.uniform(0.5, 2.0, size=(3,)), requires_grad=True)
        cases = [
            (lambda: sq_norm(matmul(a, c)), [a, c]),
            (lambda: reduce_sum(tanh(a) * b - a), [a, b]),
            (lambda: sq_norm(cos(a) + square(b)), [a, b]),
            (lambda: reduce_sum(relu(a + 0.1) * b), [a, b]),
            (lambda: mean(reduce_max(a * b, axis=0)), [a, b]),
            (lambda: reduce_sum(power(p, -0.5)), [p]),
            (lambda: sq_norm(transpose(a) - reshape(b, (4, 3))), [a, b]),
            (lambda: sq_norm(take(a, [2, 0, 2], axis=0)), [a]),
            (lambda: sq_norm(concat([a, b], axis=1)), [a, b]),
            (lambda: sq_norm(scatter(p, [0, 4, 8], (3, 3), signs=[1.0, -1.0, 2.0])), [p]),
        ]
        for fn, params in cases:
            assert gradient_check(fn, params) < 1e-4


def test_scatter_leaves_other_entries_zero():
    values = Tensor([1.0, 2.0], requires_grad=True)
    out = scatter(values, [1, 2], (2, 2), src_indices=[0, 1], signs=[1.0, -1.0])
    np.testing.assert_array_equal(out.data, [[0.0, 1.0], [-2.0, 0.0]])


def test_clip_gradients():
    small = Tensor([0.0, 0.0], requires_grad=True)
    small.grad = np.array([0.3, 0.4])
    assert clip_gradients([small], 1.0) == pytest.approx(0.5)
    np.testing.assert_array_equal(small.grad, [0.3, 0.4])

    big = Tensor([0.0, 0.0], requires_grad=True)
    big.grad = np.array([3.0, 4.0])
    assert clip_gradients([big], 1.0) == pytest.approx(5.0)
    np.testing.assert_allclose(big.grad, [0.6, 0.8])

    with pytest.raises(ContractError):
        clip_gradients([big], 0.0)


def test_clip_gradients_bounds_norm_and_is_idempotent(rng):
    for _ in range(20):
        params = [Tensor(np.zeros((3, 2)), requires_grad=True), Tensor(np.zeros(5), requires_grad=True)]
        for p in params:
            p.grad = rng.normal(scale=3.0, size=p.shape)
        clip_gradients(params, 1.0)
        once = [p.grad.copy() for p in params]
        total = np.sqrt(sum(np.sum(g * g) for g in once))
        assert total <= 1.0 * (1 + 1e-12)
        clip_gradients(params, 1.0)
        for before, p in zip(once, params):
            np.testing.assert_array_equal(before, p.grad)


def test_adam_zero_gradient_is_fixed_point():
    theta = Tensor([1.0, -2.0], requires_grad=True)
    theta.grad = np.zeros(2)
    adam_step(OptimizerState(), [theta])
    np.testing.assert_array_equal(theta.data, [1.0, -2.0])
    np.testing.assert_array_equal(theta.grad, [0.0, 0.0])


def test_adam_first_step_moves_by_learning_rate():
    theta = Tensor([0.0, 0.0], requires_grad=True)
    theta.grad = np.array([0.5, -3.0])
    state = OptimizerState(lr=1e-3)
    adam_step(state, [theta])
    np.testing.assert_allclose(theta.data, [-1e-3, 1e-3], rtol=1e-6)
    assert state.step == 1


def test_adam_requires_gradient():
    theta = Tensor([0.0], requires_grad=True)
    with pytest.raises(ContractError):
        adam_step(OptimizerState(), [theta])


def test_adam_converges_on_quadratic():
    theta = Tensor(0.0, requires_grad=True)
    optimizer = AdamOptimizer([theta], {'lr': 0.1, 'clip': None})
    for _ in range(200):
        backward(square(theta - 2.0))
        optimizer.step()
    assert abs(theta.item() - 2.0) < 0.05


def test_operations_are_deterministic(rng):
    a = rng.normal(size=(4, 4))
    first = sq_norm(tanh(matmul(Tensor(a), Tensor(a)))).item()
    second = sq_norm(tanh(matmul(Tensor(a), Tensor(a)))).item()
    assert first == second
