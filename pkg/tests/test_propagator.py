import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekdisp import spectral as sp
from ekdisp.diagnostics import mass
from ekdisp.dispersion import symbol_H
from ekdisp.propagator import (
    IntegratorConfig,
    SolverError,
    evolve,
    evolve_linear,
    group_velocity_bound,
    linear_propagate,
    nonlinearity,
)


def packet(grid, amplitude, width=2.0, carrier=0.5):
    (x,) = grid.centered_coords()
    values = amplitude * np.exp(-(x**2) / (2 * width**2)) * np.exp(1j * carrier * x)
    return sp.to_fourier(sp.Field(grid, values))


@given(st.floats(-50, 50), st.floats(-50, 50))
@settings(max_examples=30, deadline=None)
def test_linear_group_is_unitary(t1, t2):
    grid = sp.make_grid(1, 64, 20.0)
    psi = packet(grid, 1.0)
    both = linear_propagate(linear_propagate(psi, t1), t2)
    once = linear_propagate(psi, t1 + t2)
    assert np.allclose(both.values, once.values, atol=1e-9)
    assert sp.hs_norm(once, 0) == pytest.approx(sp.hs_norm(psi, 0), rel=1e-12)


def test_linear_solution_of_one_mode():
    grid = sp.make_grid(1, 32, 2 * np.pi)
    (x,) = grid.coords()
    psi = sp.to_fourier(sp.Field(grid, np.exp(3j * x)))
    out = sp.to_physical(linear_propagate(psi, 0.7)).values
    assert np.allclose(out, np.exp(3j * x + 0.7j * 3 * np.sqrt(2 + 9)), atol=1e-12)
    assert symbol_H(np.array(3.0)) == pytest.approx(3 * np.sqrt(11))


def test_group_velocity_bound_uses_data():
    grid = sp.make_grid(1, 256, 32 * np.pi)
    narrow = group_velocity_bound(grid, packet(grid, 1.0, width=3.0, carrier=0.0))
    assert narrow < group_velocity_bound(grid)


def test_nonlinearity_is_quadratic_at_small_amplitude(constant_params):
    grid = sp.make_grid(1, 128, 32 * np.pi)
    small = sp.hs_norm(nonlinearity(constant_params, packet(grid, 1e-4)), 0)
    double = sp.hs_norm(nonlinearity(constant_params, packet(grid, 2e-4)), 0)
    assert double / small == pytest.approx(4.0, rel=1e-3)


def _endpoint(params, grid, scheme, dt, amplitude=0.05, t_end=1.0):
    cfg = IntegratorConfig(scheme=scheme, dt=dt, snapshot_times=(t_end,))
    return evolve(params, cfg, packet(grid, amplitude)).states[-1]


@pytest.mark.parametrize("scheme, order", [("strang_splitting", 2), ("exponential_rk4", 4)])
def test_convergence_order(quantum_params, scheme, order):
    grid = sp.make_grid(1, 64, 32 * np.pi)
    ref = _endpoint(quantum_params, grid, "exponential_rk4", 0.0125)
    errs = [np.linalg.norm(_endpoint(quantum_params, grid, scheme, dt) - ref) for dt in (0.2, 0.1)]
    observed = np.log2(errs[0] / errs[1])
    assert observed == pytest.approx(order, abs=0.35)


def test_small_data_follows_linear_flow(quantum_params):
    grid = sp.make_grid(1, 128, 32 * np.pi)
    psi0 = packet(grid, 1e-6)
    cfg = IntegratorConfig(dt=0.05, snapshot_times=(0.0, 2.0))
    nl = evolve(quantum_params, cfg, psi0).states[-1]
    lin = evolve_linear(psi0, [2.0]).states[-1]
    assert np.linalg.norm(nl - lin) / np.linalg.norm(lin) < 1e-5


def test_snapshots_hit_requested_times(quantum_params):
    grid = sp.make_grid(1, 64, 32 * np.pi)
    cfg = IntegratorConfig(dt=0.3, snapshot_times=(0.0, 0.5, 1.0))
    traj = evolve(quantum_params, cfg, packet(grid, 1e-3))
    assert len(traj) == 3
    assert np.array_equal(traj.states[0], packet(grid, 1e-3).values)


def test_mass_drift_is_time_discretization_error(quantum_params):
    # drift shrinks like dt^2 for the second-order splitting
    grid = sp.make_grid(1, 128, 32 * np.pi)
    drifts = []
    for dt in (0.04, 0.02):
        traj = evolve(quantum_params, IntegratorConfig(dt=dt, snapshot_times=(0.0, 2.0)), packet(grid, 0.05))
        drifts.append(abs(mass(quantum_params, traj.field(1)) - mass(quantum_params, traj.field(0))))
    assert drifts[0] / drifts[1] == pytest.approx(4.0, rel=0.1)
    assert drifts[1] < 1e-7


def test_amplitude_guard_aborts_with_snapshot(quantum_params):
    grid = sp.make_grid(1, 64, 32 * np.pi)
    cfg = IntegratorConfig(dt=0.1, snapshot_times=(1.0,), amplitude_guard=1e-3)
    with pytest.raises(SolverError) as info:
        evolve(quantum_params, cfg, packet(grid, 1e-2))
    assert info.value.snapshot is not None


def test_config_rejects_bad_values():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(snapshot_times=(1.0, 0.5))
    with pytest.raises(ValueError):
        IntegratorConfig(scheme="euler")
