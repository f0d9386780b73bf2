"""
网格搜索模块测试
覆盖组合枚举与约束、并行与恢复的确定性、发散记录以及三类分析的手算对照
"""

import logging

import numpy as np
import pandas as pd
import pytest

from src.models.dynamics import generate_dataset
from src.models.gridsearch import (
    NORM_TREND_COLUMNS,
    RunResult,
    RunSettings,
    SearchSpace,
    direct_comparison,
    load_results,
    mean_effect,
    mean_relative_times,
    norm_trend_check,
    norm_trend_vote,
    operator_study_space,
    operator_table,
    preset_space,
    run_search,
    top_k,
    write_results,
)
from src.models.gridsearch import search_runner
from src.models.utils.errors import ConfigurationError, ContractError, DomainError


# ---------------------------------------------------------------- 枚举

@pytest.mark.parametrize('equation, count', [
    ('shm', 216), ('pendulum', 288), ('lorenz', 144), ('heat', 288), ('wave', 288), ('burgers', 288),
])
def test_preset_space_sizes(equation, count):
    assert len(preset_space(equation).enumerate()) == count


def test_preset_space_constraints():
    combos = preset_space('shm').enumerate()
    pairs = {(c.form, c.operator) for c in combos}
    assert ('dense', 'determinant') not in pairs
    assert ('tridiagonal', 'none') not in pairs
    assert ('tridiagonal', 'determinant') in pairs and ('dense', 'none') in pairs
    assert [c.combo_id for c in combos] == list(range(216))
    assert {c.auxiliary for c in preset_space('pendulum').enumerate()} == {'none', 'energy'}


def test_operator_study_space_has_fourteen_combinations():
    combos = operator_study_space('pendulum').enumerate()
    assert len(combos) == 14
    pairs = [(c.form, c.operator) for c in combos]
    assert ('dense', 'determinant') not in pairs
    assert pairs[:5] == [('dense', 'none'), ('dense', 'isometry'), ('dense', 'norm'), ('dense', 'unitary'),
                         ('tridiagonal', 'none')]
    assert {(c.accuracy, c.embedding, c.auxiliary) for c in combos} == {('full', 'reconstruction', 'none')}


def test_enumeration_order_is_stable():
    space = SearchSpace('shm', encoding_dims=(8, 4), forms=('tridiagonal', 'dense'), accuracy=('max', 'full'),
                        operator=('unitary', 'norm'))
    first = space.enumerate()
    assert first == space.enumerate()
    assert (first[0].encoding_dim, first[0].form, first[0].accuracy, first[0].operator) == (8, 'tridiagonal', 'max', 'unitary')
    assert (first[1].operator, first[2].accuracy) == ('norm', 'full')
    assert first[-1].encoding_dim == 4


def test_single_option_space():
    combos = SearchSpace('lorenz', forms=('dense',)).enumerate()
    assert len(combos) == 1
    assert combos[0].mask == 'without'


def test_discount_factors_expand_discounted_accuracy():
    space = SearchSpace('shm', forms=('dense',), accuracy=('full', 'discounted'), discount_factors=(1.0, 0.975, 0.95))
    combos = space.enumerate()
    assert [(c.accuracy, c.discount) for c in combos] == [
        ('full', 1.0), ('discounted', 1.0), ('discounted', 0.975), ('discounted', 0.95)]


def test_invalid_spaces():
    with pytest.raises(ConfigurationError):
        SearchSpace('shm', forms=('dense',), operator=('determinant',)).enumerate()
    with pytest.raises(ConfigurationError):
        SearchSpace('shm', constraints=('no_such_rule',))
    with pytest.raises(ConfigurationError):
        SearchSpace('shm', forms=('jordan',), encoding_dims=(5,))
    with pytest.raises(ConfigurationError):
        SearchSpace('shm', embedding=())
    with pytest.raises(ConfigurationError) as excinfo:
        SearchSpace('shm', operator=('spectral',))
    assert excinfo.value.field == 'operator'
    with pytest.raises(ConfigurationError):
        preset_space('kdv')


def test_combination_seed_is_xor():
    combos = SearchSpace('shm', operator=('unitary', 'norm', 'isometry')).enumerate()
    assert [c.seed(6) for c in combos[:4]] == [6, 7, 4, 5]


# ---------------------------------------------------------------- 搜索执行

@pytest.fixture(scope='module')
def tiny_data():
    train = generate_dataset('shm', 8, 5, 0.1, seed=1, split='train')
    test = generate_dataset('shm', 4, 5, 0.1, seed=1, split='test')
    return train, test


def _tiny_space():
    return SearchSpace('shm', encoding_dims=(4,), forms=('dense', 'tridiagonal'), operator=('unitary', 'none'),
                       constraints=('determinant_requires_structure', 'none_only_dense'))


def _tiny_settings(**overrides):
    params = dict(epochs=2, batch_size=4, lr=5e-3, seed=3, hidden_widths=[8, 8], deterministic_clock=True)
    params.update(overrides)
    return RunSettings(**params)


def test_worker_count_does_not_change_results(tiny_data, tmp_path):
    train, test = tiny_data
    serial = tmp_path / 'serial.csv'
    parallel = tmp_path / 'parallel.csv'
    run_search(_tiny_space(), train, test, _tiny_settings(), workers=1, out_path=serial)
    run_search(_tiny_space(), train, test, _tiny_settings(), workers=4, out_path=parallel)
    assert serial.read_bytes() == parallel.read_bytes()
    frame = load_results(serial)
    assert len(frame) == 3 * 2
    assert list(frame.columns) == search_runner.RESULT_COLUMNS


def test_resume_recomputes_only_missing_runs(tiny_data, tmp_path, monkeypatch):
    train, test = tiny_data
    path = tmp_path / 'results.csv'
    run_search(_tiny_space(), train, test, _tiny_settings(), out_path=path)
    original = path.read_bytes()

    calls = []
    real = search_runner.run_combination

    def counting(combination, *args):
        calls.append(combination.combo_id)
        return real(combination, *args)

    monkeypatch.setattr(search_runner, 'run_combination', counting)

    run_search(_tiny_space(), train, test, _tiny_settings(), out_path=path, resume=True)
    assert calls == []
    assert path.read_bytes() == original

    lines = original.decode('utf-8').splitlines(keepends=True)
    path.write_text(''.join(lines[:-1]), encoding='utf-8')
    run_search(_tiny_space(), train, test, _tiny_settings(), out_path=path, resume=True)
    assert calls == [2]
    assert path.read_bytes() == original


def test_resume_rejects_foreign_results(tiny_data, tmp_path):
    train, test = tiny_data
    path = tmp_path / 'results.csv'
    run_search(_tiny_space(), train, test, _tiny_settings(), out_path=path)
    other = SearchSpace('shm', encoding_dims=(6,), forms=('dense', 'tridiagonal'), operator=('unitary', 'none'),
                        constraints=('determinant_requires_structure', 'none_only_dense'))
    with pytest.raises(ConfigurationError):
        run_search(other, train, test, _tiny_settings(), out_path=path, resume=True)


def test_divergent_combination_is_recorded(tiny_data, tmp_path):
    train, test = tiny_data
    path = tmp_path / 'results.csv'
    results = run_search(_tiny_space(), train, test, _tiny_settings(lr=1e300), out_path=path)
    assert all(r.status == 'diverged' for r in results)
    assert all(np.isinf(r.errors).all() for r in results)
    frame = load_results(path)
    assert (frame['status'] == 'diverged').all()
    assert np.isinf(frame['test_error']).all()
    assert 'inf' in path.read_text(encoding='utf-8')


def test_search_checks_inputs(tiny_data):
    train, test = tiny_data
    with pytest.raises(ConfigurationError):
        run_search(SearchSpace('lorenz'), train, test, _tiny_settings())
    with pytest.raises(ConfigurationError):
        run_search(SearchSpace('shm', auxiliary=('energy',)), train, test, _tiny_settings())
    with pytest.raises(ConfigurationError):
        run_search(_tiny_space(), train, test, _tiny_settings(), workers=0)


# ---------------------------------------------------------------- 分析

# 8 个组合: form × accuracy × operator，第 2 轮误差与耗时已知
ERRORS = [8.0, 2.0, 7.0, 3.0, 6.0, 1.0, 5.0, 4.0]
TIMES = [1.0, 1.0, 1.0, 1.0, 3.0, 3.0, 3.0, 3.0]


def _synthetic_results(errors=ERRORS, times=TIMES, diverged=()):
    space = SearchSpace('shm', encoding_dims=(16,), forms=('dense', 'tridiagonal'), accuracy=('full', 'max'),
                        operator=('norm', 'unitary'))
    results = []
    for combo, error, time in zip(space.enumerate(), errors, times):
        if combo.combo_id in diverged:
            results.append(RunResult(combo, [1, 2], [2 * error, float('inf')], [time / 2, time], 'diverged'))
        else:
            results.append(RunResult(combo, [1, 2], [2 * error, error], [time / 2, time]))
    return results


def test_mean_effect_hand_computed():
    table = mean_effect(_synthetic_results(), 'operator')
    at = table[table['epoch'] == 2].set_index('operator')
    assert at.loc['norm', 'mean_error'] == 6.5
    assert at.loc['unitary', 'mean_error'] == 2.5
    first = table[table['epoch'] == 1].set_index('operator')
    assert first.loc['norm', 'mean_error'] == 13.0
    mask = mean_effect(_synthetic_results(), 'mask')
    at = mask[mask['epoch'] == 2].set_index('mask')['mean_error']
    assert at['without'] == 5.0 and at['with'] == 4.0


def test_mean_effect_two_levels():
    results = _synthetic_results(errors=[1.0, 2.0, 3.0, 2.0, 1.0, 2.0, 3.0, 2.0])
    table = mean_effect(results, 'operator')
    at = table[table['epoch'] == 2].set_index('operator')['mean_error']
    assert at['norm'] == 2.0 and at['unitary'] == 2.0


def test_mean_effect_constant_errors():
    table = mean_effect(_synthetic_results(errors=[0.25] * 8), 'accuracy')
    assert set(table[table['epoch'] == 2]['mean_error']) == {0.25}
    assert (table['runs'] == 4).all()


def test_mean_effect_excludes_diverged_runs():
    table = mean_effect(_synthetic_results(diverged=(0,)), 'operator')
    at = table[table['epoch'] == 2].set_index('operator')
    assert at.loc['norm', 'mean_error'] == 6.0
    assert at.loc['norm', 'runs'] == 3 and at.loc['norm', 'diverged'] == 1
    assert at.loc['unitary', 'mean_error'] == 2.5
    assert at.loc['unitary', 'runs'] == 4 and at.loc['unitary', 'diverged'] == 0


def test_top_k_hand_computed():
    table = top_k(_synthetic_results(), epoch=2, k=3)
    assert list(table['combo_id']) == [5, 1, 3]
    assert list(table['rank']) == [1, 2, 3]
    assert list(table['test_error']) == [1.0, 2.0, 3.0]
    assert table.loc[0, 'mask'] == 'with' and table.loc[0, 'encoding_dim'] == 16
    assert len(top_k(_synthetic_results(), epoch=2, k=100)) == 8
    assert list(top_k(_synthetic_results(), epoch=1, k=1)['test_error']) == [2.0]


def test_top_k_ties_and_divergence():
    errors = list(ERRORS)
    errors[7] = 3.0
    table = top_k(_synthetic_results(errors=errors, diverged=(5,)), epoch=2, k=8)
    ids = list(table['combo_id'])
    assert ids.index(3) + 1 == ids.index(7)
    assert ids[-1] == 5
    # 发散运行在它仍有有限误差的轮次也排在最后
    assert list(top_k(_synthetic_results(diverged=(5,)), epoch=1, k=8)['combo_id'])[-1] == 5


def test_top_k_matches_sort_oracle():
    rng = np.random.default_rng(4)
    errors = list(rng.choice([0.5, 1.0, 1.5, 2.0], size=8))
    table = top_k(_synthetic_results(errors=errors), epoch=2, k=5)
    oracle = sorted(range(8), key=lambda i: (errors[i], i))[:5]
    assert list(table['combo_id']) == oracle


def test_top_k_contracts():
    with pytest.raises(ContractError):
        top_k(_synthetic_results(), epoch=2, k=0)
    with pytest.raises(DomainError):
        top_k(_synthetic_results(), epoch=3, k=1)


def test_mean_relative_times_hand_computed():
    table = mean_relative_times(_synthetic_results())
    by_mask = table[table['dimension'] == 'mask'].set_index('level')['relative_time']
    assert by_mask['without'] == 0.5 and by_mask['with'] == 1.5
    by_operator = table[table['dimension'] == 'operator'].set_index('level')['relative_time']
    assert by_operator['norm'] == 1.0 and by_operator['unitary'] == 1.0
    assert (table['relative_time'] > 0).all()


def test_mean_relative_times_equal_times():
    table = mean_relative_times(_synthetic_results(times=[2.0] * 8))
    np.testing.assert_array_equal(table['relative_time'], 1.0)


def test_mean_relative_times_balanced_average_to_one():
    rng = np.random.default_rng(9)
    results = _synthetic_results(times=list(rng.uniform(0.1, 10.0, size=8)))
    table = mean_relative_times(results, ['form', 'accuracy', 'operator', 'mask'])
    for _, group in table.groupby('dimension'):
        assert abs(group['relative_time'].mean() - 1.0) < 1e-12


def test_direct_comparison():
    table = direct_comparison(_synthetic_results(), 'operator', {'form': 'tridiagonal', 'accuracy': 'full'})
    assert list(table.index) == [1, 2]
    assert list(table['norm']) == [12.0, 6.0]
    assert list(table['unitary']) == [2.0, 1.0]
    with pytest.raises(ConfigurationError):
        direct_comparison(_synthetic_results(), 'operator', {'form': 'tridiagonal'})
    with pytest.raises(ConfigurationError):
        direct_comparison(_synthetic_results(), 'operator', {'operator': 'norm'})


def test_norm_trend_check(caplog):
    check = norm_trend_check(_synthetic_results(), epoch=2)
    assert check['passed'] is True
    assert check['norm'] == 6.5 and check['others'] == {'unitary': 2.5}
    swapped = [ERRORS[i ^ 1] for i in range(8)]
    with caplog.at_level(logging.WARNING):
        check = norm_trend_check(_synthetic_results(errors=swapped), epoch=2)
    assert check['passed'] is False
    assert 'norm' in caplog.text


def test_norm_trend_vote_two_of_three(caplog):
    swapped = [ERRORS[i ^ 1] for i in range(8)]
    seeds = [_synthetic_results(), _synthetic_results(errors=swapped), _synthetic_results()]
    passed, table = norm_trend_vote(seeds, epoch=2)
    assert passed is True
    assert list(table.columns) == NORM_TREND_COLUMNS
    assert list(table['passed']) == [True, False, True]
    assert list(table['norm']) == [6.5, 2.5, 6.5]
    assert table['isometry'].isna().all()
    with caplog.at_level(logging.WARNING):
        passed, _ = norm_trend_vote(seeds, epoch=2, required=3)
    assert passed is False
    assert '2/3' in caplog.text
    with pytest.raises(ContractError):
        norm_trend_vote(seeds, epoch=2, required=0)



def test_operator_table_columns():
    table = operator_table(_synthetic_results())
    assert list(table.columns) == ['error', 'operator form', 'operator loss']
    assert list(table['error']) == ERRORS
    assert list(table['operator form'][:2]) == ['dense', 'dense']


def test_results_file_round_trip(tmp_path):
    path = tmp_path / 'out' / 'results.csv'
    results = _synthetic_results(diverged=(2,))
    write_results(results, path)
    frame = load_results(path)
    assert len(frame) == 16
    assert frame.loc[frame['combo_id'] == 2, 'status'].tolist() == ['diverged', 'diverged']
    assert np.isinf(frame.loc[(frame['combo_id'] == 2) & (frame['epoch'] == 2), 'test_error']).all()
    assert mean_effect(frame, 'operator').equals(mean_effect(results, 'operator'))
    assert isinstance(frame, pd.DataFrame)
