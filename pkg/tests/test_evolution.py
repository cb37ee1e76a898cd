import numpy as np
import pytest

from daqsim.errors import ArgumentError
from daqsim.evolution import (
    AnalogBlock,
    DigitalStep,
    ProtocolSchedule,
    TrajectoryRecord,
    daqs_evolve,
    daqs_schedule,
    daqs_step_unitary,
    default_gate_ordering,
    digital_evolve,
    exact_evolve,
    trotter_error_bound,
)
from daqsim.ion_chain import CouplingMatrix, fit_power_law_matrix
from daqsim.spin_algebra import SpinState, global_rotation, propagator, state_fidelity
from daqsim.spin_models import ModelKind, build_model


def random_coupling(n, seed=0):
    rng = np.random.default_rng(seed)
    mat = rng.uniform(0.5, 2.0, size=(n, n))
    mat = 0.5 * (mat + mat.T)
    np.fill_diagonal(mat, 0.0)
    return CouplingMatrix(mat, *fit_power_law_matrix(mat))


def test_schedule_structure():
    sched = daqs_schedule(1.0, 3)
    analog = [s for s in sched.steps if isinstance(s, AnalogBlock)]
    digital = [s for s in sched.steps if isinstance(s, DigitalStep)]
    assert len(analog) == 6 and len(digital) == 6
    assert sched.total_analog_duration == pytest.approx(2.0)
    assert {b.kind for b in analog} == {"xx", "xy"}


def test_schedule_xy_duration_factor():
    sched = daqs_schedule(1.0, 2, xy_duration_factor=2.0)
    xy = [b for b in sched.steps if isinstance(b, AnalogBlock) and b.kind == "xy"]
    assert all(b.duration == pytest.approx(1.0) for b in xy)
    assert sched.total_analog_duration == pytest.approx(3.0)


def test_schedule_invariant_enforced():
    with pytest.raises(ArgumentError):
        ProtocolSchedule((DigitalStep("y", 0.1),), 1, 1.0)
    with pytest.raises(ArgumentError):
        daqs_schedule(1.0, 0)


def test_trajectory_record_validation():
    with pytest.raises(ArgumentError):
        TrajectoryRecord([0.0], [1.0, 0.5], [[0.0]], "exact")
    with pytest.raises(ArgumentError):
        TrajectoryRecord([0.0], [1.5], [[0.0]], "exact")


# R_y(pi/4) exp(-i H_XX tau) R_y(pi/4)^dag must equal exp(-i H_ZZ tau),
# which is what lets the step synthesize the missing ZZ term.
def test_conjugated_block_is_zz_propagator():
    for n in (2, 3, 4):
        cm = random_coupling(n, seed=n)
        tau = 0.21
        r = global_rotation("y", np.pi / 4, n)
        u_xx = propagator(build_model(ModelKind.XX, cm), tau)
        u_zz = propagator(build_model(ModelKind.ZZ, cm), tau)
        conj = r @ u_xx @ r.dagger()
        assert np.max(np.abs(conj.matrix - u_zz.matrix)) < 1e-12


def test_uniform_coupling_step_is_exact():
    # for J_ij = J0 the two analog blocks commute and one step is exact
    for n in (2, 3, 4, 5):
        cm = CouplingMatrix.uniform(n, 0.8)
        t = 1.0 / cm.fit_J
        step = daqs_step_unitary(cm, t, 1)
        u_exact = propagator(build_model(ModelKind.HEISENBERG, cm), t)
        psi = SpinState.from_labels("du" * (n // 2) + "d" * (n % 2))
        a = step.apply(psi)
        b = u_exact.apply(psi)
        assert state_fidelity(a, b) > 1 - 1e-10


def test_exact_two_spin_oracle():
    # H = J sigma.sigma on |du>: <sigma_z^(0)>(t) = cos(4 J t)
    j0 = 1.3
    cm = CouplingMatrix.uniform(2, j0)
    psi0 = SpinState.from_labels("du")
    times = np.linspace(0.0, 2.0, 40)
    rec = exact_evolve(build_model(ModelKind.HEISENBERG, cm), psi0, times)
    assert np.allclose(rec.site_magnetizations[:, 0], -np.cos(4 * j0 * times),
                       atol=1e-10)
    assert np.allclose(rec.site_magnetizations[:, 1], np.cos(4 * j0 * times),
                       atol=1e-10)
    assert np.allclose(rec.fidelities, 1.0)


def test_exact_evolve_reference_fidelity():
    cm = random_coupling(3, seed=5)
    psi0 = SpinState.from_labels("dud")
    times = [0.0, 0.4, 0.9]
    base = exact_evolve(build_model(ModelKind.HEISENBERG, cm), psi0, times)
    again = exact_evolve(build_model(ModelKind.HEISENBERG, cm), psi0, times,
                         reference=base)
    assert np.allclose(again.fidelities, 1.0)


def test_trotter_limit_both_protocols():
    cm = CouplingMatrix.power_law(4, 1.0, 0.6)
    times = [1.0 / cm.fit_J]
    psi0 = SpinState.from_labels("dudu")
    for evolve in (daqs_evolve, digital_evolve):
        rec = evolve(cm, psi0, times, 64)
        assert rec.fidelities[0] > 0.999


def test_trotter_order_slope():
    cm = random_coupling(4, seed=2)
    t = 1.0 / cm.fit_J
    u_exact = propagator(build_model(ModelKind.HEISENBERG, cm), t).matrix
    errs = []
    ls = [4, 8, 16, 32]
    for l in ls:
        u = np.linalg.matrix_power(daqs_step_unitary(cm, t, l).matrix, l)
        errs.append(np.linalg.norm(u - u_exact, 2))
    slope = np.polyfit(np.log(ls), np.log(errs), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.1)


def test_error_bound_dominates():
    cm = random_coupling(3, seed=9)
    psi_dim = 2**3
    u_len = np.linalg.norm
    h = build_model(ModelKind.HEISENBERG, cm)
    rng = np.random.default_rng(42)
    checked = 0
    while checked < 20:
        t = rng.uniform(0.01, 0.5)
        l = int(rng.integers(1, 6))
        bound = trotter_error_bound(cm, t, l)
        if bound >= 1.0:
            continue
        u = np.linalg.matrix_power(daqs_step_unitary(cm, t, l).matrix, l)
        measured = u_len(u - propagator(h, t).matrix, 2)
        assert measured <= bound + 1e-12
        checked += 1


def test_error_bound_validation():
    cm = random_coupling(3)
    with pytest.raises(ArgumentError):
        trotter_error_bound(cm, -1.0, 2)
    with pytest.raises(ArgumentError):
        trotter_error_bound(cm, 1.0, 0)


def test_default_ordering_covers_all_pairs():
    cm = random_coupling(4)
    ordering = default_gate_ordering(cm)
    assert len(ordering) == 6 * 3
    assert ordering[0] == (0, 1, "x")


def test_digital_ordering_validated():
    cm = random_coupling(3)
    psi0 = SpinState.from_labels("dud")
    bad = default_gate_ordering(cm)[:-1]
    with pytest.raises(ArgumentError):
        digital_evolve(cm, psi0, [0.1], 1, ordering=bad)


def test_digital_gate_error_factor():
    cm = random_coupling(3, seed=1)
    psi0 = SpinState.from_labels("dud")
    clean = digital_evolve(cm, psi0, [0.05], 2)
    eps = 0.01
    noisy = digital_evolve(cm, psi0, [0.05], 2, gate_error=eps)
    # 3 pairs x 3 axes x l=2 gates
    assert noisy.fidelities[0] == pytest.approx(
        clean.fidelities[0] * (1 - eps) ** 18
    )


def test_daqs_block_error_forms_agree():
    cm = random_coupling(3, seed=4)
    psi0 = SpinState.from_labels("dud")
    eps = 0.02
    scalar = daqs_evolve(cm, psi0, [0.1], 2, block_error=eps)
    called = daqs_evolve(cm, psi0, [0.1], 2, block_error=lambda kind, tau: eps)
    assert scalar.fidelities[0] == pytest.approx(called.fidelities[0])
    clean = daqs_evolve(cm, psi0, [0.1], 2)
    assert scalar.fidelities[0] == pytest.approx(
        clean.fidelities[0] * (1 - eps) ** 4
    )


def test_step_unitary_validation():
    cm = random_coupling(2)
    with pytest.raises(ArgumentError):
        daqs_step_unitary(cm, 1.0, 0)
    with pytest.raises(ArgumentError):
        daqs_step_unitary(cm, -1.0, 1)
