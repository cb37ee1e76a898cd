"""Spin Hamiltonians built from a coupling matrix.

Provides the Heisenberg model, the XX / YY / ZZ components, and the
symmetric XY combination used as analog blocks. All Hamiltonians carry
angular-frequency units; products J*t are the dimensionless protocol
clock.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import ArgumentError
from .ion_chain import CouplingMatrix
from .spin_algebra import SpinOperator, pauli_embed


class ModelKind(str, Enum):
    HEISENBERG = "heisenberg"
    XX = "xx"
    YY = "yy"
    ZZ = "zz"
    XY = "xy"  # symmetric XX + YY combination


_AXES = {
    ModelKind.XX: ("x",),
    ModelKind.YY: ("y",),
    ModelKind.ZZ: ("z",),
    ModelKind.XY: ("x", "y"),
    ModelKind.HEISENBERG: ("x", "y", "z"),
}


def build_model(kind: ModelKind, coupling: CouplingMatrix) -> SpinOperator:
    """H = sum_{i<j} J_ij sum_a sigma_i^a sigma_j^a over the kind's axes."""
    kind = ModelKind(kind)
    n = coupling.num_sites
    if n < 2:
        raise ArgumentError("spin models need at least 2 sites")
    dim = 2**n
    mat = np.zeros((dim, dim), dtype=complex)
    paulis = {
        axis: [pauli_embed(axis, j, n).matrix for j in range(n)]
        for axis in _AXES[kind]
    }
    for i in range(n):
        for j in range(i + 1, n):
            if coupling.J[i, j] == 0.0:
                continue
            for axis in _AXES[kind]:
                mat += coupling.J[i, j] * (paulis[axis][i] @ paulis[axis][j])
    return SpinOperator(mat, n, "hamiltonian")


def sup_norm_bound(coupling: CouplingMatrix) -> float:
    """Coupling-sum norm bound sum_{i<j} J_ij for antiferromagnetic J."""
    iu, ju = np.triu_indices(coupling.num_sites, k=1)
    vals = coupling.J[iu, ju]
    if np.any(vals < 0):
        raise ArgumentError("norm bound requires non-negative couplings")
    return float(np.sum(vals))
