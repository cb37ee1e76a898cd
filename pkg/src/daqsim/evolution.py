"""Exact, fully digital, and digital-analog time evolution.

The digital-analog Trotter step is
U(t/l) = exp(-i H_XY t/l) R_y exp(-i H_XX t/l) R_y^dagger
with R_y the global pi/4 rotation about y, whose conjugation turns the
XX block into the missing ZZ term. The purely digital reference splits
the Heisenberg Hamiltonian into one two-qubit gate per pair and axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .ion_chain import CouplingMatrix
from .spin_algebra import (
    SpinOperator,
    SpinState,
    global_rotation,
    magnetizations,
    pauli_embed,
    propagator,
    state_fidelity,
)
from .spin_models import ModelKind, build_model, sup_norm_bound


@dataclass(frozen=True)
class DigitalStep:
    axis: str
    angle: float


@dataclass(frozen=True)
class AnalogBlock:
    kind: str  # "xx" | "xy"
    duration: float  # s


@dataclass(frozen=True)
class ProtocolSchedule:
    """Ordered digital steps and analog blocks realizing a DAQS run."""

    steps: tuple
    trotter_steps: int
    target_time: float

    def __post_init__(self):
        if self.trotter_steps < 1:
            raise ArgumentError("trotter_steps must be >= 1")
        analog = [s for s in self.steps if isinstance(s, AnalogBlock)]
        digital = [s for s in self.steps if isinstance(s, DigitalStep)]
        if len(analog) != 2 * self.trotter_steps or len(digital) != 2 * self.trotter_steps:
            raise ArgumentError(
                "DAQS schedule needs exactly 2l analog blocks and 2l digital steps"
            )

    @property
    def total_analog_duration(self) -> float:
        return sum(s.duration for s in self.steps if isinstance(s, AnalogBlock))


def daqs_schedule(t: float, l: int, xy_duration_factor: float = 1.0) -> ProtocolSchedule:
    """Schedule for l repetitions of the digital-analog Trotter step.

    xy_duration_factor scales the physical XY block length (2.0 when the
    hardware implements half the XY Hamiltonian and the duration is
    doubled in compensation).
    """
    if l < 1:
        raise ArgumentError("l must be >= 1")
    tau = t / l
    steps = []
    for _ in range(l):
        steps += [
            DigitalStep("y", -np.pi / 4),
            AnalogBlock("xx", tau),
            DigitalStep("y", np.pi / 4),
            AnalogBlock("xy", xy_duration_factor * tau),
        ]
    return ProtocolSchedule(tuple(steps), l, t)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Time-sampled observables of one evolution run."""

    times: np.ndarray
    fidelities: np.ndarray
    site_magnetizations: np.ndarray  # (n_times, num_sites)
    generator: str  # "exact" | "digital" | "daqs"
    states: np.ndarray | None = None  # (n_times, dim), optional

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        f = np.asarray(self.fidelities, dtype=float)
        m = np.asarray(self.site_magnetizations, dtype=float)
        for name, arr in (("times", t), ("fidelities", f), ("site_magnetizations", m)):
            object.__setattr__(self, name, arr)
        if not (len(t) == len(f) == m.shape[0]):
            raise ArgumentError("trajectory arrays must share length")
        if np.any(f < 0) or np.any(f > 1 + 1e-12):
            raise ArgumentError("fidelities must lie in [0, 1]")


def exact_evolve(hamiltonian: SpinOperator, psi0: SpinState, times,
                 reference: TrajectoryRecord | None = None) -> TrajectoryRecord:
    """psi(t) = exp(-i H t) psi0 on a time grid, via one eigendecomposition."""
    times = np.asarray(times, dtype=float)
    evals, evecs = np.linalg.eigh(hamiltonian.matrix)
    coeff = evecs.conj().T @ psi0.amplitudes
    states = (evecs @ (np.exp(-1j * np.outer(evals, times)) * coeff[:, None])).T
    mags = np.empty((len(times), psi0.num_sites))
    fids = np.ones(len(times))
    for k, amps in enumerate(states):
        psi = SpinState(amps, psi0.num_sites)
        mags[k] = magnetizations(psi)
        if reference is not None:
            ref = SpinState(reference.states[k], psi0.num_sites)
            fids[k] = state_fidelity(ref, psi)
    return TrajectoryRecord(times, fids, mags, "exact", states=states)


def daqs_step_unitary(coupling: CouplingMatrix, t: float, l: int) -> SpinOperator:
    """One digital-analog Trotter step, exp(-iH_XY t/l) R_y exp(-iH_XX t/l) R_y^dag."""
    if l < 1:
        raise ArgumentError("l must be >= 1")
    if t < 0:
        raise ArgumentError("t must be >= 0")
    n = coupling.num_sites
    tau = t / l
    r_y = global_rotation("y", np.pi / 4, n)
    u_xx = propagator(build_model(ModelKind.XX, coupling), tau)
    u_xy = propagator(build_model(ModelKind.XY, coupling), tau)
    return u_xy @ r_y @ u_xx @ r_y.dagger()


def _block_error_factor(block_error, l: int, tau: float) -> float:
    """Scalar fidelity factor for 2l analog blocks of simulated length tau."""
    if block_error is None:
        return 1.0
    if callable(block_error):
        per_step = (1.0 - block_error("xx", tau)) * (1.0 - block_error("xy", tau))
        return per_step**l
    return (1.0 - float(block_error)) ** (2 * l)


def daqs_evolve(coupling: CouplingMatrix, psi0: SpinState, times, l: int,
                block_error=None) -> TrajectoryRecord:
    """Digital-analog evolution [U_step(t/l)]^l at every grid time.

    Fidelity is recorded against exact Heisenberg evolution; a supplied
    block_error (scalar infidelity, or callable (kind, tau) -> epsilon)
    multiplies it once per analog block.
    """
    times = np.asarray(times, dtype=float)
    n = psi0.num_sites
    h_exact = build_model(ModelKind.HEISENBERG, coupling)
    exact = exact_evolve(h_exact, psi0, times)
    fids = np.empty(len(times))
    mags = np.empty((len(times), n))
    states = np.empty((len(times), psi0.dim), dtype=complex)
    for k, t in enumerate(times):
        step = daqs_step_unitary(coupling, t, l)
        u = np.linalg.matrix_power(step.matrix, l)
        psi = SpinState(u @ psi0.amplitudes, n)
        states[k] = psi.amplitudes
        mags[k] = magnetizations(psi)
        ref = SpinState(exact.states[k], n)
        fids[k] = state_fidelity(ref, psi) * _block_error_factor(block_error, l, t / l)
    return TrajectoryRecord(times, fids, mags, "daqs", states=states)


def default_gate_ordering(coupling: CouplingMatrix):
    """Pairs in lexicographic order, axes x, y, z within each pair."""
    n = coupling.num_sites
    return tuple(
        (i, j, axis)
        for i in range(n)
        for j in range(i + 1, n)
        if coupling.J[i, j] != 0.0
        for axis in ("x", "y", "z")
    )


def _validate_ordering(coupling: CouplingMatrix, ordering):
    n = coupling.num_sites
    required = {
        (i, j, axis)
        for i in range(n)
        for j in range(i + 1, n)
        if coupling.J[i, j] != 0.0
        for axis in ("x", "y", "z")
    }
    seen = list(ordering)
    if len(seen) != len(set(seen)) or set(seen) != required:
        raise ArgumentError(
            "gate ordering must cover every coupled pair and axis exactly once"
        )


def digital_evolve(coupling: CouplingMatrix, psi0: SpinState, times, l: int,
                   ordering=None, gate_error: float | None = None) -> TrajectoryRecord:
    """Fully digital Trotter evolution, one two-qubit gate per pair and axis.

    Each Trotter step applies exp(-i J_ij (t/l) sigma_i^a sigma_j^a) for
    every entry of `ordering`; gate_error (two-qubit infidelity eps_T)
    multiplies the recorded fidelity once per gate.
    """
    times = np.asarray(times, dtype=float)
    n = psi0.num_sites
    if ordering is None:
        ordering = default_gate_ordering(coupling)
    _validate_ordering(coupling, ordering)
    h_exact = build_model(ModelKind.HEISENBERG, coupling)
    exact = exact_evolve(h_exact, psi0, times)
    dim = psi0.dim
    eye = np.eye(dim)
    pair_ops = {
        (i, j, axis): (pauli_embed(axis, i, n) @ pauli_embed(axis, j, n)).matrix
        for (i, j, axis) in ordering
    }
    fids = np.empty(len(times))
    mags = np.empty((len(times), n))
    states = np.empty((len(times), dim), dtype=complex)
    for k, t in enumerate(times):
        tau = t / l
        step = eye.astype(complex)
        for (i, j, axis) in ordering:
            theta = coupling.J[i, j] * tau
            # (sigma sigma)^2 = 1 gives the closed-form gate exponential
            gate = np.cos(theta) * eye - 1j * np.sin(theta) * pair_ops[(i, j, axis)]
            step = gate @ step
        u = np.linalg.matrix_power(step, l)
        psi = SpinState(u @ psi0.amplitudes, n)
        states[k] = psi.amplitudes
        mags[k] = magnetizations(psi)
        fid = state_fidelity(SpinState(exact.states[k], n), psi)
        if gate_error is not None:
            fid *= (1.0 - gate_error) ** (len(ordering) * l)
        fids[k] = fid
    return TrajectoryRecord(times, fids, mags, "digital", states=states)


def trotter_error_bound(coupling: CouplingMatrix, t: float, l: int) -> float:
    """Closed-form series bound l (e^x - 1 - x), x = sup-norm * t / l."""
    if t < 0:
        raise ArgumentError("t must be >= 0")
    if l < 1:
        raise ArgumentError("l must be >= 1")
    x = sup_norm_bound(coupling) * t / l
    return float(l * (np.expm1(x) - x))
