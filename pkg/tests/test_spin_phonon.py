import numpy as np
import pytest
from scipy.integrate import solve_ivp

from daqsim.errors import ArgumentError, ResourceCapError
from daqsim.ion_chain import CouplingMatrix
from daqsim.spin_algebra import SpinState
from daqsim.spin_models import ModelKind, build_model
from daqsim.spin_phonon import (
    BlockParams,
    PhononSpace,
    analog_block_fidelity,
    bichromatic_hamiltonian,
    effective_com_block,
    effective_com_params,
    effective_com_space,
    effective_coupling_matrix,
    lamb_dicke_validity,
    propagate_block,
    xy_effective_terms,
)

TWO_PI = 2 * np.pi


def test_phonon_space_basics():
    sp = PhononSpace([1.0e6, 2.0e6], (3, 4), [1e4, 2e4])
    assert sp.num_modes == 2
    assert sp.fock_dim == 4 * 5
    up = sp.raised()
    assert up.fock_cutoffs == (4, 5)
    with pytest.raises(ArgumentError):
        PhononSpace([1.0e6], (1,), [1e4])  # cutoff below 2
    with pytest.raises(ArgumentError):
        PhononSpace([1.0e6, 2e6], (3,), [1e4])  # misaligned


def test_block_params_validation():
    eta = np.full((2, 1), 0.05)
    with pytest.raises(ArgumentError):
        BlockParams("xx", 1e4, 5e2, np.ones(2), eta)  # xx with asymmetry
    with pytest.raises(ArgumentError):
        BlockParams("xy", 1e4, 0.0, np.ones(2), eta)  # xy needs delta > 0
    with pytest.raises(ArgumentError):
        BlockParams("zz", 1e4, 0.0, np.ones(2), eta)
    with pytest.raises(ArgumentError):
        BlockParams("xx", 1e4, 0.0, np.ones(3), eta)  # eta rows mismatch


def test_effective_com_params_value():
    # sqrt(J Delta / 2) / Omega at J = 2pi 0.5 kHz, Delta = 2pi 60 kHz,
    # Omega = 2pi 62 kHz
    eta = effective_com_params(TWO_PI * 0.5e3, TWO_PI * 60e3, TWO_PI * 62e3)
    assert eta == pytest.approx(np.sqrt(0.5e3 * 60e3 / 2) / 62e3)
    assert eta == pytest.approx(0.06246, abs=1e-4)
    with pytest.raises(ArgumentError):
        effective_com_params(-1.0, 1.0, 1.0)


def test_effective_coupling_round_trip():
    # the single-mode block reproduces its own target J as a uniform matrix
    j_target = TWO_PI * 80.0
    params = effective_com_block("xx", j_target, TWO_PI * 60e3, TWO_PI * 62e3, 4)
    space = effective_com_space(TWO_PI * 2.65e6, TWO_PI * 60e3, n_max=3)
    cm = effective_coupling_matrix(params, space)
    off = cm.J[~np.eye(4, dtype=bool)]
    assert np.allclose(off, j_target, rtol=1e-12)


def test_hamiltonian_is_hermitian_and_periodic_phase():
    params = effective_com_block("xx", TWO_PI * 80.0, TWO_PI * 60e3,
                                 TWO_PI * 62e3, 2)
    space = effective_com_space(TWO_PI * 2.65e6, TWO_PI * 60e3, n_max=2)
    for t in (0.0, 1.3e-5):
        h = bichromatic_hamiltonian(params, space, t)
        assert np.max(np.abs(h - h.conj().T)) < 1e-12
    # the xx drive Hamiltonian is periodic at 2pi/Delta
    period = TWO_PI / params.detuning
    assert np.allclose(
        bichromatic_hamiltonian(params, space, 0.2 * period),
        bichromatic_hamiltonian(params, space, 1.2 * period),
        atol=1e-9 * TWO_PI * 62e3,
    )


def test_dimension_cap_enforced():
    params = effective_com_block("xx", TWO_PI * 80.0, TWO_PI * 60e3,
                                 TWO_PI * 62e3, 5)
    space = PhononSpace([TWO_PI * 2.65e6], (6,), [TWO_PI * 60e3], dim_cap=64)
    psi0 = np.zeros(2**5 * 7)
    psi0[0] = 1.0
    with pytest.raises(ResourceCapError):
        propagate_block(params, space, psi0, [1e-6])


def test_propagator_against_ode_oracle():
    # one ion, one mode, modest parameters: integrate the Schrodinger
    # equation directly with an independent ODE solver and compare states
    params = effective_com_block("xx", TWO_PI * 2e3, TWO_PI * 20e3,
                                 TWO_PI * 50e3, 1)
    space = effective_com_space(TWO_PI * 1e6, TWO_PI * 20e3, n_max=4)
    dim = 2 * space.fock_dim
    psi0 = np.zeros(dim, dtype=complex)
    psi0[space.fock_dim] = 1.0  # |down, vacuum>
    t_end = 3.0 / 20e3

    def rhs(t, y):
        return -1j * (bichromatic_hamiltonian(params, space, t) @ y)

    sol = solve_ivp(rhs, (0.0, t_end), psi0, rtol=1e-10, atol=1e-12,
                    dense_output=True)
    grid = np.linspace(t_end / 4, t_end, 5)
    states = propagate_block(params, space, psi0, grid)
    for k, t in enumerate(grid):
        overlap = abs(np.vdot(sol.sol(t), states[k])) ** 2
        assert overlap > 1 - 1e-8


def test_propagate_block_grid_validation():
    params = effective_com_block("xx", TWO_PI * 80.0, TWO_PI * 60e3,
                                 TWO_PI * 62e3, 2)
    space = effective_com_space(TWO_PI * 2.65e6, TWO_PI * 60e3, n_max=2)
    psi0 = np.zeros(2**2 * 3, dtype=complex)
    psi0[0] = 1.0
    with pytest.raises(ArgumentError):
        propagate_block(params, space, psi0, [])
    with pytest.raises(ArgumentError):
        propagate_block(params, space, psi0, [2e-6, 1e-6])
    with pytest.raises(ArgumentError):
        propagate_block(params, space, psi0, [-1e-6, 1e-6])
    with pytest.raises(ArgumentError):
        propagate_block(params, space, psi0[:-1], [1e-6])


def test_block_fidelity_high_at_loop_closure():
    # phonon trajectories close after each detuning period, so the block
    # fidelity returns close to 1 at multiples of 2 pi / Delta
    j = TWO_PI * 500.0
    delta_drive = TWO_PI * 60e3
    params = effective_com_block("xx", j, delta_drive, TWO_PI * 62e3, 3)
    space = effective_com_space(TWO_PI * 2.65e6, delta_drive, n_max=4)
    cm = CouplingMatrix.uniform(3, j)
    psi0 = SpinState.from_labels("dud")
    period = TWO_PI / delta_drive
    grid = period * np.array([1.0, 2.0, 5.0])
    res = analog_block_fidelity(params, space, cm, psi0, grid,
                                points_per_period=60)
    assert res.kind == "xx"
    assert res.rwa_applied
    assert np.all(res.fidelities > 0.995)
    assert np.all(res.fidelities <= 1.0)


def test_counter_rotating_terms_small_effect():
    j = TWO_PI * 500.0
    space = effective_com_space(TWO_PI * 2.65e6, TWO_PI * 60e3, n_max=3)
    cm = CouplingMatrix.uniform(2, j)
    psi0 = SpinState.from_labels("du")
    grid = np.array([0.05, 0.1]) / j
    fids = {}
    for keep in (False, True):
        params = effective_com_block("xx", j, TWO_PI * 60e3, TWO_PI * 62e3, 2,
                                     keep_counter_rotating=keep)
        res = analog_block_fidelity(params, space, cm, psi0, grid,
                                    points_per_period=40)
        fids[keep] = res.fidelities
    assert fids[True][0] != fids[False][0]  # the terms do enter
    assert np.max(np.abs(fids[True] - fids[False])) < 0.01


def test_xy_effective_terms_structure():
    params = effective_com_block("xy", TWO_PI * 500.0, TWO_PI * 60e3,
                                 TWO_PI * 62e3, 3, delta=TWO_PI * 3e3)
    space = effective_com_space(TWO_PI * 2.65e6, TWO_PI * 60e3, n_max=3)
    terms = xy_effective_terms(params, space)
    assert terms.z_prefactor == pytest.approx(3e3 / 60e3)
    assert np.all(terms.b_coefficients > 0)
    assert np.allclose(np.diag(terms.spin_spin), 0.0)
    # vacuum B_j = Delta Omega^2 (eta/Delta)^2 / 2 equals J/4 here
    assert np.allclose(terms.b_coefficients, TWO_PI * 500.0 / 4, rtol=1e-12)
    with pytest.raises(ArgumentError):
        xy_effective_terms(
            effective_com_block("xx", TWO_PI * 500.0, TWO_PI * 60e3,
                                TWO_PI * 62e3, 3),
            space,
        )


def test_lamb_dicke_validity_proxy():
    params = effective_com_block("xx", TWO_PI * 500.0, TWO_PI * 60e3,
                                 TWO_PI * 62e3, 2)
    v0 = lamb_dicke_validity(params)
    assert v0 == pytest.approx(np.max(np.abs(params.lamb_dicke)))
    assert lamb_dicke_validity(params, mean_phonons=3.0) == pytest.approx(2 * v0)
    assert v0 < 0.1  # comfortably within the Lamb-Dicke regime
