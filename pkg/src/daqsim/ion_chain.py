"""Trapped-ion chain physics.

Equilibrium positions of the linear crystal, transverse normal modes on
both radial axes, Lamb-Dicke parameters, and the phonon-mediated
spin-spin coupling matrix with its power-law characterization.

Angular frequencies (rad/s) are the canonical unit throughout; config
ingestion in `daqsim.runner` converts from Hz.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ConvergenceError, StabilityError

# CODATA physical constants (SI)
HBAR = 1.054571817e-34
E_CHARGE = 1.602176634e-19
EPSILON_0 = 8.8541878128e-12
ATOMIC_MASS = 1.66053906660e-27

CA40_MASS = 39.9625909 * ATOMIC_MASS  # 40Ca+ (electron mass negligible here)


@dataclass(frozen=True)
class ChainConfig:
    """Physical description of the ion chain and its bichromatic drive."""

    num_ions: int
    trap_frequencies: tuple  # (omega_x, omega_y, omega_z), rad/s
    laser_wavelength: float  # m
    rabi_frequencies: np.ndarray  # rad/s, one per ion
    detuning: float  # Delta, rad/s
    ion_mass: float = CA40_MASS  # kg
    xy_asymmetry: float = 0.0  # delta, rad/s (0 => XX blocks only)
    laser_phase: float = 0.0  # phi_L, rad
    radial_axes: tuple = ("x", "y")  # mode sum restriction switch

    def __post_init__(self):
        if self.num_ions < 1:
            raise ArgumentError("num_ions must be >= 1")
        wx, wy, wz = self.trap_frequencies
        if not (wx > wy > wz > 0):
            raise ArgumentError(
                "trap frequencies must satisfy omega_x > omega_y > omega_z > 0"
            )
        rabi = np.atleast_1d(np.asarray(self.rabi_frequencies, dtype=float))
        if rabi.size == 1:
            rabi = np.full(self.num_ions, rabi[0])
        if rabi.size != self.num_ions:
            raise ArgumentError("need one Rabi frequency per ion")
        if np.any(rabi <= 0):
            raise ArgumentError("all Rabi frequencies must be positive")
        object.__setattr__(self, "rabi_frequencies", rabi)
        if self.detuning <= 0:
            raise ArgumentError("detuning must be positive")
        if self.xy_asymmetry < 0:
            raise ArgumentError("xy_asymmetry must be >= 0")
        if self.xy_asymmetry >= self.detuning:
            raise ArgumentError("xy_asymmetry must be small compared to detuning")
        if not set(self.radial_axes) <= {"x", "y"} or not self.radial_axes:
            raise ArgumentError("radial_axes must be a nonempty subset of (x, y)")


@dataclass(frozen=True)
class ModeData:
    """Transverse normal modes, merged over radial axes.

    frequencies are sorted descending; vectors[:, m] is the orthonormal
    displacement pattern of mode m over the ions.
    """

    frequencies: np.ndarray  # rad/s, length n_modes
    vectors: np.ndarray  # (num_ions, n_modes)
    axes: tuple  # per-mode radial axis tag
    num_ions: int

    @property
    def com_frequency(self) -> float:
        return float(self.frequencies[0])


@dataclass(frozen=True)
class CouplingMatrix:
    """Symmetric spin-spin coupling matrix with power-law fit metadata."""

    J: np.ndarray  # rad/s, symmetric, zero diagonal
    fit_J: float = 0.0  # nearest-neighbour average, rad/s
    fit_alpha: float = 0.0
    alpha_defined: bool = True

    def __post_init__(self):
        mat = np.asarray(self.J, dtype=float)
        object.__setattr__(self, "J", mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ArgumentError("coupling matrix must be square")
        if np.max(np.abs(mat - mat.T)) > 1e-12 * max(1.0, np.max(np.abs(mat))):
            raise ArgumentError("coupling matrix must be symmetric")
        if np.any(np.abs(np.diag(mat)) > 0):
            raise ArgumentError("coupling matrix must have zero diagonal")

    @property
    def num_sites(self) -> int:
        return self.J.shape[0]

    @classmethod
    def uniform(cls, num_sites: int, j0: float) -> "CouplingMatrix":
        mat = np.full((num_sites, num_sites), j0)
        np.fill_diagonal(mat, 0.0)
        fj, alpha, defined = fit_power_law_matrix(mat)
        return cls(mat, fj, alpha, defined)

    @classmethod
    def power_law(cls, num_sites: int, j0: float, alpha: float) -> "CouplingMatrix":
        idx = np.arange(num_sites)
        dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
        with np.errstate(divide="ignore"):
            mat = j0 / dist**alpha
        np.fill_diagonal(mat, 0.0)
        fj, a, defined = fit_power_law_matrix(mat)
        return cls(mat, fj, a, defined)


def length_scale(config: ChainConfig) -> float:
    """Characteristic Coulomb length l = (e^2 / (4 pi eps0 M wz^2))^(1/3)."""
    wz = config.trap_frequencies[2]
    return (E_CHARGE**2 / (4 * np.pi * EPSILON_0 * config.ion_mass * wz**2)) ** (1 / 3)


def _potential_gradient(u: np.ndarray) -> np.ndarray:
    """Gradient of the dimensionless axial potential sum(u^2)/2 + sum 1/|u_i-u_j|."""
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    return u - np.sum(np.sign(diff) / diff**2, axis=1)


def _potential_hessian(u: np.ndarray) -> np.ndarray:
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    inv3 = 1.0 / np.abs(diff) ** 3
    hess = -2.0 * inv3
    np.fill_diagonal(hess, 1.0 + 2.0 * np.sum(inv3, axis=1))
    return hess


def equilibrium_positions(config: ChainConfig, tol: float = 1e-12,
                          max_iter: int = 200) -> np.ndarray:
    """Dimensionless equilibrium positions (units of `length_scale`).

    Damped Newton iteration on the axial potential, started from a
    uniform spread of width N^0.56. Multiply by `length_scale(config)`
    for meters.
    """
    n = config.num_ions
    if n == 1:
        return np.zeros(1)
    width = n**0.56
    u = np.linspace(-width / 2, width / 2, n)
    grad = _potential_gradient(u)
    for _ in range(max_iter):
        gnorm = np.linalg.norm(grad)
        if gnorm < tol:
            break
        step = np.linalg.solve(_potential_hessian(u), grad)
        lam = 1.0
        while lam > 1e-6:
            trial = u - lam * step
            if np.all(np.diff(trial) > 0):
                tgrad = _potential_gradient(trial)
                if np.linalg.norm(tgrad) < gnorm:
                    u, grad = trial, tgrad
                    break
            lam /= 2
        else:
            raise ConvergenceError(
                "equilibrium Newton step stalled", residual=gnorm
            )
    else:
        raise ConvergenceError(
            "equilibrium positions did not converge "
            f"(gradient norm {np.linalg.norm(grad):.3e})",
            residual=float(np.linalg.norm(grad)),
        )
    u -= np.mean(u)  # center exactly (translation of a symmetric chain)
    return u


def transverse_modes(config: ChainConfig, positions: np.ndarray) -> ModeData:
    """Normal modes on the requested radial axes.

    Diagonalizes, per axis a, the dimensionless Hessian
    A_ij = delta_ij [(w_a/w_z)^2 - sum_k 1/|u_i-u_k|^3] + (1-delta_ij)/|u_i-u_j|^3
    with mode frequency nu_m = w_z sqrt(eigenvalue).
    """
    wx, wy, wz = config.trap_frequencies
    u = np.asarray(positions, dtype=float)
    n = config.num_ions
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    inv3 = 1.0 / np.abs(diff) ** 3

    freqs, vecs, axes = [], [], []
    for axis, w_a in (("x", wx), ("y", wy)):
        if axis not in config.radial_axes:
            continue
        a_mat = inv3.copy()
        np.fill_diagonal(a_mat, (w_a / wz) ** 2 - np.sum(inv3, axis=1))
        evals, evecs = np.linalg.eigh(a_mat)
        if np.any(evals <= 0):
            raise StabilityError(
                f"transverse instability on the {axis} axis "
                f"(lowest eigenvalue {evals.min():.3e})",
                axis=axis,
            )
        for k in range(n):
            vec = evecs[:, k]
            if np.sum(vec) < 0 or (abs(np.sum(vec)) < 1e-12 and vec[0] < 0):
                vec = -vec  # deterministic sign convention
            freqs.append(wz * np.sqrt(evals[k]))
            vecs.append(vec)
            axes.append(axis)
    order = np.argsort(freqs)[::-1]
    return ModeData(
        frequencies=np.array(freqs)[order],
        vectors=np.column_stack([vecs[k] for k in order]),
        axes=tuple(axes[k] for k in order),
        num_ions=n,
    )


def lamb_dicke_params(config: ChainConfig, modes: ModeData) -> np.ndarray:
    """Lamb-Dicke matrix eta[j, m] = (k/sqrt2) b_jm sqrt(hbar / (2 M nu_m)).

    The 1/sqrt2 projects the laser wavevector onto each radial axis (the
    beams sit at 45 degrees to both).
    """
    k = 2 * np.pi / config.laser_wavelength
    zpf = np.sqrt(HBAR / (2 * config.ion_mass * modes.frequencies))
    return (k / np.sqrt(2)) * modes.vectors * zpf[None, :]


def mode_detunings(delta: float, modes: ModeData) -> np.ndarray:
    """Per-mode detuning Delta_m = Delta + (nu_COM - nu_m)."""
    if delta <= 0:
        raise ArgumentError("detuning must be positive")
    return delta + (modes.com_frequency - modes.frequencies)


def fit_power_law_matrix(j_matrix: np.ndarray):
    """Power-law fit of a raw coupling matrix.

    Returns (fit_J, fit_alpha, alpha_defined) where fit_J is the
    nearest-neighbour average and fit_alpha the least-squares slope of
    log J_ij versus log |i-j| over every pair i<j. For N=2 the exponent
    is undefined and reported as 0 with alpha_defined=False.
    """
    mat = np.asarray(j_matrix, dtype=float)
    n = mat.shape[0]
    if n < 2:
        raise ArgumentError("need at least 2 sites to fit couplings")
    off = mat[~np.eye(n, dtype=bool)]
    if np.any(off <= 0):
        raise ArgumentError("power-law fit requires all J_ij > 0")
    fit_j = float(np.mean(np.diag(mat, 1)))
    if n == 2:
        return fit_j, 0.0, False
    iu, ju = np.triu_indices(n, k=1)
    dists = (ju - iu).astype(float)
    slope = np.polyfit(np.log(dists), np.log(mat[iu, ju]), 1)[0]
    return fit_j, float(-slope), True


def fit_power_law(coupling: CouplingMatrix):
    """(fit_J, fit_alpha) for an existing CouplingMatrix."""
    fit_j, alpha, _ = fit_power_law_matrix(coupling.J)
    return fit_j, alpha


def coupling_matrix(config: ChainConfig) -> CouplingMatrix:
    """Phonon-mediated coupling J_ij = 2 W_i W_j sum_m eta_im eta_jm / Delta_m.

    Sums over all modes of the configured radial axes (both by default).
    """
    positions = equilibrium_positions(config)
    modes = transverse_modes(config, positions)
    eta = lamb_dicke_params(config, modes)
    delta_m = mode_detunings(config.detuning, modes)
    rabi = config.rabi_frequencies
    weighted = eta / delta_m[None, :]
    mat = 2.0 * np.outer(rabi, rabi) * (weighted @ eta.T)
    mat = 0.5 * (mat + mat.T)  # symmetrize away rounding noise
    np.fill_diagonal(mat, 0.0)
    fit_j, alpha, defined = fit_power_law_matrix(mat)
    return CouplingMatrix(mat, fit_j, alpha, defined)
