"""
动力系统模块测试
覆盖右端项、RK4 精度与收敛阶、偏微分方程解析解、初始条件与数据集读写
"""

import numpy as np
import pytest

from src.models.dynamics import (
    DatasetGenerator,
    generate_dataset,
    get_equation,
    load_dataset,
    ode_rhs,
    rk4_step,
    sample_initial,
    save_dataset,
    solve_ode,
    solve_pde,
)
from src.models.utils.errors import ContractError, DatasetIOError, DomainError


def test_equation_boundaries():
    for name in ('heat', 'wave', 'burgers'):
        assert get_equation(name).boundary == 'dirichlet_zero'
    assert get_equation('kdv').boundary == 'periodic'
    for name in ('shm', 'pendulum', 'lorenz', 'fluid_attractor'):
        assert get_equation(name).boundary == 'none'
    with pytest.raises(DomainError):
        get_equation('navier_stokes')


def test_ode_right_hand_sides():
    np.testing.assert_array_equal(ode_rhs(get_equation('shm'), [1.0, 0.0]), [0.0, -1.0])
    np.testing.assert_array_equal(ode_rhs(get_equation('pendulum'), [0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_array_equal(ode_rhs(get_equation('lorenz'), [1.0, 1.0, 1.0]), [0.0, -1.0, 0.0])
    np.testing.assert_array_equal(ode_rhs(get_equation('fluid_attractor'), [1.0, 1.0, 1.0]), [1.0, 3.0, 3.0])


def test_lorenz_and_fluid_variants():
    classical = get_equation('lorenz', {'classical_lorenz': True})
    np.testing.assert_allclose(ode_rhs(classical, [1.0, 1.0, 1.0]), [0.0, 26.0, 1.0 - 8.0 / 3.0])
    stable = get_equation('fluid_attractor', {'stable_fluid': True})
    np.testing.assert_allclose(ode_rhs(stable, [0.0, 0.0, 1.0]), [0.0, 0.0, -1.0])


def test_rk4_constant_rhs_is_exact():
    c = np.array([0.5, -2.0])
    out = rk4_step(lambda s: c, np.array([1.0, 1.0]), 0.3)
    np.testing.assert_allclose(out, [1.0 + 0.15, 1.0 - 0.6], rtol=0, atol=1e-15)


def test_rk4_rejects_non_positive_step():
    with pytest.raises(ContractError):
        rk4_step(get_equation('shm'), np.zeros(2), 0.0)


def test_shm_returns_after_one_period():
    eq = get_equation('shm')
    dt = 0.01
    n = int(2 * np.pi / dt)
    s = np.array([1.0, 0.0])
    for i in range(n):
        s = rk4_step(eq, s, dt, i + 1)
    s = rk4_step(eq, s, 2 * np.pi - n * dt, n + 1)
    np.testing.assert_allclose(s, [1.0, 0.0], atol=1e-6)


def test_shm_conserves_energy_over_ten_periods():
    eq = get_equation('shm')
    traj = solve_ode(eq, np.array([1.0, 0.0]), 0.01, int(20 * np.pi / 0.01))
    energy = np.sum(traj.states ** 2, axis=1)
    assert np.max(np.abs(energy - energy[0])) / energy[0] < 1e-6


@pytest.mark.parametrize('name, s0', [('shm', [1.0, 0.0]), ('pendulum', [2.0, 0.0])])
def test_rk4_convergence_order(name, s0):
    """固定终止时刻，步长减半误差下降约 16 倍"""
    eq = get_equation(name)
    horizon = 2 * np.pi
    reference = solve_ode(eq, np.array(s0), horizon, 1, substeps=8192).states[-1]
    coarse = solve_ode(eq, np.array(s0), horizon, 1, substeps=128).states[-1]
    fine = solve_ode(eq, np.array(s0), horizon, 1, substeps=256).states[-1]
    order = np.log2(np.linalg.norm(coarse - reference) / np.linalg.norm(fine - reference))
    assert order >= 3.8


def test_heat_sine_mode_decay():
    eq = get_equation('heat')
    x = eq.grid()
    traj = solve_pde(eq, np.sin(np.pi * x), 0.01, 10)
    for i, row in enumerate(traj.states):
        exact = np.exp(-np.pi ** 2 * 0.01 * i) * np.sin(np.pi * x)
        assert np.max(np.abs(row - exact)) <= 1e-3 * np.max(np.abs(exact))


def test_wave_standing_mode():
    eq = get_equation('wave')
    x = eq.grid()
    traj = solve_pde(eq, np.sin(np.pi * x), 0.05, 20)
    for i, row in enumerate(traj.states):
        exact = np.cos(np.pi * 0.05 * i) * np.sin(np.pi * x)
        assert np.max(np.abs(row - exact)) < 1e-2


def test_kdv_zero_stays_zero():
    eq = get_equation('kdv')
    traj = solve_pde(eq, np.zeros(eq.state_dim), 0.01, 2)
    assert np.all(traj.states == 0.0)


def test_pde_rejects_boundary_violation():
    eq = get_equation('heat')
    with pytest.raises(ContractError):
        solve_pde(eq, np.ones(eq.state_dim), 0.01, 1)


def test_initial_conditions_respect_boundaries():
    heat = get_equation('heat')
    u = sample_initial(heat, np.random.default_rng(3))
    assert u[0] == 0.0 and u[-1] == 0.0
    kdv = get_equation('kdv')
    v = sample_initial(kdv, np.random.default_rng(3))
    assert v[0] == v[-1]
    np.testing.assert_array_equal(sample_initial(heat, np.random.default_rng(9)),
                                  sample_initial(heat, np.random.default_rng(9)))


def test_pendulum_initial_conditions_start_at_rest():
    eq = get_equation('pendulum')
    s = sample_initial(eq, np.random.default_rng(0))
    assert -2.5 <= s[0] <= 2.5 and s[1] == 0.0


def test_boundaries_hold_on_every_recorded_slice():
    for name in ('heat', 'wave', 'burgers'):
        dataset = generate_dataset(name, 2, 3, 0.002, seed=4)
        states = dataset.as_array()
        assert np.all(states[:, :, 0] == 0.0) and np.all(states[:, :, -1] == 0.0)
    kdv = generate_dataset('kdv', 1, 2, 0.001, seed=4)
    states = kdv.as_array()
    np.testing.assert_array_equal(states[:, :, 0], states[:, :, -1])


def test_heat_maximum_principle():
    states = generate_dataset('heat', 3, 10, 0.001, seed=5).as_array()
    sup = np.max(np.abs(states), axis=2)
    assert np.all(np.diff(sup, axis=1) <= 1e-10)


def test_dataset_shape_and_determinism():
    first = generate_dataset('shm', 100, 50, 0.1, seed=11)
    second = generate_dataset('shm', 100, 50, 0.1, seed=11)
    assert len(first) == 100
    assert first.trajectories[0].states.shape == (51, 2)
    np.testing.assert_array_equal(first.as_array(), second.as_array())


def test_train_and_test_splits_differ():
    train = generate_dataset('shm', 5, 3, 0.1, seed=1, split='train')
    test = generate_dataset('shm', 5, 3, 0.1, seed=1, split='test')
    assert not np.array_equal(train.as_array(), test.as_array())


def test_parallel_generation_matches_serial():
    serial = DatasetGenerator({'workers': 1}).generate('pendulum', 6, 5, 0.1, seed=2)
    parallel = DatasetGenerator({'workers': 2}).generate('pendulum', 6, 5, 0.1, seed=2)
    np.testing.assert_array_equal(serial.as_array(), parallel.as_array())


def test_dataset_round_trip(tmp_path):
    dataset = generate_dataset('lorenz', 4, 6, 0.05, seed=8, split='test')
    path = tmp_path / 'lorenz_test.kae'
    save_dataset(dataset, str(path))
    loaded = load_dataset(str(path))
    np.testing.assert_array_equal(loaded.as_array(), dataset.as_array())
    assert loaded.dt == dataset.dt
    assert loaded.split == 'test' and loaded.seed == 8 and loaded.equation == 'lorenz'


def test_load_missing_or_corrupt_file(tmp_path):
    with pytest.raises(DatasetIOError) as excinfo:
        load_dataset(str(tmp_path / 'missing.kae'))
    assert 'missing.kae' in str(excinfo.value)

    dataset = generate_dataset('shm', 2, 2, 0.1, seed=0)
    path = tmp_path / 'cut.kae'
    save_dataset(dataset, str(path))
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(DatasetIOError):
        load_dataset(str(path))
