"""
Koopman 模型模块测试
"""

import numpy as np
import pytest

from src.models.diffcore import AdamOptimizer, Tensor, backward, gradient_check, sq_norm
from src.models.koopman import (
    OperatorForm,
    apply_operator,
    decode,
    encode,
    init_model,
    init_operator,
    jordan_eigenvalues,
    load_checkpoint,
    operator_matrix,
    rollout,
    save_checkpoint,
)
from src.models.utils.errors import ContractError, DimensionError


def _form(variant, dim, **values):
    return OperatorForm(variant, dim, {k: Tensor(v, requires_grad=True) for k, v in values.items()})


def test_encode_decode_widths():
    model = init_model(3, 8, 'dense', seed=1, config={'hidden_widths': [16, 16]})
    s = np.random.default_rng(0).normal(size=(5, 3))
    assert encode(model, s).shape == (5, 8)
    assert decode(model, encode(model, s)).shape == (5, 3)
    with pytest.raises(DimensionError):
        encode(model, np.zeros((5, 4)))


def test_zero_encoder_gives_zero_latent():
    model = init_model(2, 4, 'dense', seed=0)
    for p in model.encoder.parameters():
        p.data[...] = 0.0
    np.testing.assert_array_equal(encode(model, np.ones((3, 2))).data, np.zeros((3, 4)))


def test_gradient_flows_through_encode_decode():
    model = init_model(2, 4, 'dense', seed=3, config={'hidden_widths': [5, 5]})
    s = np.random.default_rng(1).normal(size=(3, 2))
    error = gradient_check(lambda: sq_norm(decode(model, encode(model, s))), model.encoder.parameters()
                           + model.decoder.parameters())
    assert error < 1e-4


def test_tridiagonal_identity():
    form = _form('tridiagonal', 3, a=np.ones(3), b=np.zeros(2), c=np.zeros(2))
    np.testing.assert_array_equal(operator_matrix(form).data, np.eye(3))


def test_jordan_rotation_block():
    form = _form('jordan', 2, a=[0.0], b=[1.0])
    np.testing.assert_array_equal(operator_matrix(form).data, [[0.0, 1.0], [-1.0, 0.0]])


def test_jordan_requires_even_dimension():
    with pytest.raises(ContractError):
        init_operator('jordan', 5, np.random.default_rng(0))


def test_random_tridiagonal_is_banded(rng):
    form = _form('tridiagonal', 7, a=rng.normal(size=7), b=rng.normal(size=6), c=rng.normal(size=6))
    k = operator_matrix(form).data
    i, j = np.indices(k.shape)
    assert np.all(k[np.abs(i - j) > 1] == 0.0)
    np.testing.assert_array_equal(np.diag(k, 1), form.params['b'].data)
    np.testing.assert_array_equal(np.diag(k, -1), form.params['c'].data)


def test_banded_apply_matches_dense_product(rng):
    form = init_operator('tridiagonal', 9, rng)
    z = rng.normal(size=(4, 9))
    dense = z @ operator_matrix(form).data.T
    np.testing.assert_allclose(apply_operator(form, Tensor(z)).data, dense, rtol=0, atol=1e-14)


def test_banded_apply_gradient(rng):
    form = init_operator('tridiagonal', 5, rng)
    z = Tensor(rng.normal(size=(3, 5)), requires_grad=True)
    error = gradient_check(lambda: sq_norm(apply_operator(form, z)), [z] + form.parameters())
    assert error < 1e-4


def test_parameter_counts():
    rng = np.random.default_rng(0)
    for d in (2, 8, 16):
        assert init_operator('dense', d, rng).parameter_count() == d * d
        assert init_operator('tridiagonal', d, rng).parameter_count() == 3 * d - 2
        assert init_operator('jordan', d, rng).parameter_count() == d


def test_rollout_latents_match_matrix_power():
    model = init_model(2, 6, 'tridiagonal', seed=5)
    s0 = np.random.default_rng(2).normal(size=(3, 2))
    result = rollout(model, s0, 5)
    k = operator_matrix(model.operator).data
    e0 = encode(model, s0).data
    assert len(result.predictions) == 5 and len(result.latents) == 6
    np.testing.assert_allclose(result.latents[5].data, e0 @ np.linalg.matrix_power(k, 5).T, atol=1e-10)
    for i in range(5):
        np.testing.assert_allclose(result.latents[i + 1].data, result.latents[i].data @ k.T, atol=1e-12)


def test_rollout_single_step_definition():
    model = init_model(2, 4, 'jordan', seed=6)
    s0 = np.array([[0.3, -0.2]])
    expected = decode(model, apply_operator(model.operator, encode(model, s0))).data
    np.testing.assert_array_equal(rollout(model, s0, 1).predictions[0].data, expected)


def test_identity_operator_gives_constant_predictions():
    model = init_model(2, 4, 'dense', seed=7)
    model.operator.params['K'].data[...] = np.eye(4)
    preds = rollout(model, np.array([[0.5, 0.1]]), 4).predictions
    for p in preds[1:]:
        np.testing.assert_array_equal(p.data, preds[0].data)


def test_rollout_requires_positive_steps():
    model = init_model(2, 4, 'dense', seed=0)
    with pytest.raises(ContractError):
        rollout(model, np.zeros((1, 2)), 0)


def test_jordan_eigenvalues():
    np.testing.assert_array_equal(jordan_eigenvalues(_form('jordan', 2, a=[1.0], b=[0.0])), [1.0, 1.0])
    np.testing.assert_array_equal(jordan_eigenvalues(_form('jordan', 2, a=[0.0], b=[1.0])), [1j, -1j])
    with pytest.raises(ContractError):
        jordan_eigenvalues(init_operator('dense', 2, np.random.default_rng(0)))


def test_jordan_eigenvalues_match_dense_solver(rng):
    for d in range(2, 34, 2):
        form = _form('jordan', d, a=rng.normal(size=d // 2), b=rng.normal(size=d // 2))
        ours = np.sort_complex(jordan_eigenvalues(form))
        dense = np.sort_complex(np.linalg.eigvals(operator_matrix(form).data))
        np.testing.assert_allclose(ours, dense, atol=1e-8)


@pytest.mark.parametrize('variant', ['dense', 'tridiagonal', 'jordan'])
def test_initialization_is_near_identity(variant):
    for d in (2, 16, 128):
        model = init_model(2, d, variant, seed=d)
        k = operator_matrix(model.operator).data
        assert np.linalg.norm(k - np.eye(d)) < 0.3 * np.sqrt(d)
        assert 0.5 < np.linalg.det(k) < 1.5


def test_same_seed_same_model():
    first = init_model(3, 8, 'tridiagonal', seed=42).state_dict()
    second = init_model(3, 8, 'tridiagonal', seed=42).state_dict()
    assert first.keys() == second.keys()
    for name in first:
        np.testing.assert_array_equal(first[name], second[name])


@pytest.mark.parametrize('variant', ['tridiagonal', 'jordan'])
def test_structural_zeros_survive_training(variant, rng):
    d = 6
    form = init_operator(variant, d, rng)
    target = rng.normal(size=(d, d))
    mask = operator_matrix(form).data == 0.0
    optimizer = AdamOptimizer(form.parameters(), {'lr': 0.05})
    for _ in range(100):
        backward(sq_norm(operator_matrix(form) - target))
        optimizer.step()
    assert np.all(operator_matrix(form).data[mask] == 0.0)


def test_checkpoint_round_trip(tmp_path):
    model = init_model(2, 6, 'jordan', seed=9, config={'hidden_widths': [12, 10], 'activation': 'relu'})
    path = tmp_path / 'model.ckpt'
    save_checkpoint(model, str(path))
    loaded = load_checkpoint(str(path))
    assert loaded.operator.variant == 'jordan' and loaded.activation == 'relu'
    assert loaded.hidden_widths == [12, 10]
    for name, value in model.state_dict().items():
        np.testing.assert_array_equal(loaded.state_dict()[name], value)
