"""Dense complex linear algebra on the 2^N spin-1/2 Hilbert space.

Conventions used everywhere in the package:

* site 0 is the leftmost tensor factor, i.e. the most significant bit of
  the computational-basis index;
* |up> is the +1 eigenstate of sigma_z and is basis index 0 on each site.

All operators are dense complex matrices; at the chain sizes targeted
here (N <= ~10) this beats any sparse machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

HERMITICITY_TOL = 1e-10
UNITARITY_TOL = 1e-10
NORM_TOL = 1e-12

PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}
IDENTITY_2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class SpinState:
    """Normalized pure state of N spin-1/2 sites."""

    amplitudes: np.ndarray
    num_sites: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.ndim != 1 or amps.size != 2**self.num_sites:
            raise ArgumentError(
                f"state vector has length {amps.size}, expected 2^{self.num_sites}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-9:
            raise ArgumentError(f"state vector norm {norm!r} is not 1")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def from_labels(cls, labels: str) -> "SpinState":
        """Computational-basis state from a per-site label string.

        Accepted per-site characters: up = one of "u", "0", an up arrow;
        down = one of "d", "1", a down arrow.
        """
        up, down = {"u", "0", "↑"}, {"d", "1", "↓"}
        index = 0
        n = 0
        for ch in labels:
            if ch.isspace():
                continue
            if ch in up:
                bit = 0
            elif ch in down:
                bit = 1
            else:
                raise ArgumentError(f"unrecognized spin label {ch!r}")
            index = (index << 1) | bit
            n += 1
        if n == 0:
            raise ArgumentError("empty state label")
        amps = np.zeros(2**n, dtype=complex)
        amps[index] = 1.0
        return cls(amps, n)


@dataclass(frozen=True)
class SpinOperator:
    """Dense operator on the spin space, tagged Hermitian or unitary."""

    matrix: np.ndarray
    num_sites: int
    kind: str  # "hamiltonian" | "unitary"

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        d = 2**self.num_sites
        if mat.shape != (d, d):
            raise ArgumentError(f"matrix shape {mat.shape} != ({d}, {d})")
        if self.kind == "hamiltonian":
            if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_TOL:
                raise ArgumentError("hamiltonian matrix is not Hermitian")
        elif self.kind == "unitary":
            dev = np.max(np.abs(mat.conj().T @ mat - np.eye(d)))
            if dev > UNITARITY_TOL:
                raise ArgumentError(f"matrix is not unitary (deviation {dev:.2e})")
        else:
            raise ArgumentError(f"unknown operator kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other):
        if isinstance(other, SpinOperator):
            kind = "unitary" if self.kind == other.kind == "unitary" else "hamiltonian"
            return SpinOperator(self.matrix @ other.matrix, self.num_sites, kind)
        return NotImplemented

    def apply(self, psi: SpinState) -> SpinState:
        if psi.dim != self.dim:
            raise ArgumentError("operator/state dimension mismatch")
        return SpinState(self.matrix @ psi.amplitudes, psi.num_sites)

    def dagger(self) -> "SpinOperator":
        return SpinOperator(self.matrix.conj().T, self.num_sites, self.kind)


def pauli_embed(axis: str, site: int, num_sites: int) -> SpinOperator:
    """Single-site Pauli operator embedded in the N-site space."""
    if num_sites < 1:
        raise ArgumentError("num_sites must be >= 1")
    if not 0 <= site < num_sites:
        raise ArgumentError(f"site {site} out of range for {num_sites} sites")
    if axis not in PAULI:
        raise ArgumentError(f"unknown Pauli axis {axis!r}")
    mat = np.ones((1, 1), dtype=complex)
    for j in range(num_sites):
        mat = np.kron(mat, PAULI[axis] if j == site else IDENTITY_2)
    return SpinOperator(mat, num_sites, "hamiltonian")


def global_rotation(axis: str, theta: float, num_sites: int) -> SpinOperator:
    """Collective rotation exp(-i theta sum_j sigma_j^axis).

    Factorizes as the N-fold tensor power of the one-site rotation, so it
    is built without any matrix exponential.
    """
    if num_sites < 1:
        raise ArgumentError("num_sites must be >= 1")
    if axis not in ("x", "y"):
        raise ArgumentError(f"global rotation axis must be x or y, got {axis!r}")
    single = np.cos(theta) * IDENTITY_2 - 1j * np.sin(theta) * PAULI[axis]
    mat = np.ones((1, 1), dtype=complex)
    for _ in range(num_sites):
        mat = np.kron(mat, single)
    return SpinOperator(mat, num_sites, "unitary")


def propagator(hamiltonian: SpinOperator, t: float) -> SpinOperator:
    """Unitary exp(-i H t), via eigendecomposition of the Hermitian H."""
    if hamiltonian.kind != "hamiltonian":
        raise ArgumentError("propagator requires a Hermitian operator")
    evals, evecs = np.linalg.eigh(hamiltonian.matrix)
    mat = (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T
    return SpinOperator(mat, hamiltonian.num_sites, "unitary")


def expectation(op: SpinOperator, psi: SpinState) -> float:
    """Real expectation value <psi|op|psi> of a Hermitian operator."""
    if op.dim != psi.dim:
        raise ArgumentError("operator/state dimension mismatch")
    if op.kind != "hamiltonian":
        raise ArgumentError("expectation requires a Hermitian operator")
    val = np.vdot(psi.amplitudes, op.matrix @ psi.amplitudes)
    return float(val.real)


def state_fidelity(a: SpinState, b: SpinState) -> float:
    """|<a|b>|^2, clipped into [0, 1] against rounding overshoot."""
    if a.dim != b.dim:
        raise ArgumentError("state dimension mismatch")
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(f, 1.0))


def magnetizations(psi: SpinState) -> np.ndarray:
    """Vector of <sigma_j^z> for every site j.

    sigma_z is diagonal in the computational basis, so this is a weighted
    sum over |amplitude|^2 with weights +-1 read off the basis-index bits.
    """
    n = psi.num_sites
    probs = np.abs(psi.amplitudes) ** 2
    idx = np.arange(psi.dim)
    out = np.empty(n)
    for j in range(n):
        bit = (idx >> (n - 1 - j)) & 1  # site 0 = most significant bit
        out[j] = np.sum(probs * (1.0 - 2.0 * bit))
    return out
