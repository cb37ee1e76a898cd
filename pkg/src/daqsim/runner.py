"""Experiment orchestration: config files, protocol optimization, artifacts.

Config files are INI-style key/value text with one section per concern.
Frequencies are accepted in Hz when `frequencies_in_hz = true` (the
default) and converted to angular rad/s internally; set the flag to
false to supply angular values directly.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ArgumentError, ConfigError
from .ion_chain import (
    ATOMIC_MASS,
    ChainConfig,
    CouplingMatrix,
    coupling_matrix,
    equilibrium_positions,
    length_scale,
    transverse_modes,
)
from .spin_algebra import SpinState, magnetizations
from .spin_models import ModelKind, build_model
from .evolution import (
    TrajectoryRecord,
    daqs_evolve,
    digital_evolve,
    exact_evolve,
)
from .spin_phonon import (
    analog_block_fidelity,
    effective_com_block,
    effective_com_params,
    effective_com_space,
)

XY_DURATION_FACTOR = 2.0  # hardware implements half H_XY; block time is doubled


def crossover_threshold(num_ions: int, eps_t: float) -> float:
    """Analog-block infidelity below which DAQS beats the digital protocol."""
    if num_ions < 2:
        raise ArgumentError("crossover threshold needs at least 2 ions")
    if not 0.0 <= eps_t <= 1.0:
        raise ArgumentError("two-qubit infidelity must lie in [0, 1]")
    return num_ions * (num_ions - 1) * eps_t / 4.0


def gate_count(num_ions: int, interaction_range: str, l: int, protocol: str) -> dict:
    """Gate budget of one protocol run with l Trotter steps."""
    if num_ions < 2:
        raise ArgumentError("gate counts need at least 2 ions")
    if l < 1:
        raise ArgumentError("l must be >= 1")
    if interaction_range == "nearest":
        pairs = num_ions - 1
    elif interaction_range == "full":
        pairs = num_ions * (num_ions - 1) // 2
    else:
        raise ArgumentError(f"unknown interaction range {interaction_range!r}")
    if protocol == "digital":
        return {"two_qubit": 3 * l * pairs, "analog_blocks": 0, "single_qubit": 0}
    if protocol == "daqs":
        return {"two_qubit": 0, "analog_blocks": 2 * l, "single_qubit": 2 * l}
    raise ArgumentError(f"unknown protocol {protocol!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    chain: ChainConfig
    model: ModelKind = ModelKind.HEISENBERG
    initial_state: str = "ddudd"
    jt_start: float = 0.0
    jt_stop: float = 2 * np.pi / 3
    grid_points: int = 13
    protocol: str = "daqs"  # exact | digital | daqs
    fixed_l: int = 1
    optimize: bool = False
    l_max: int = 4
    regions: int = 6
    eps_t: float = 0.0
    eps_ab: str = "none"  # none | simulated | fixed float (as string)
    n_max: int = 6
    points_per_period: int = 100
    apply_rwa: bool = True
    output_dir: str = "out"

    def __post_init__(self):
        if self.jt_stop <= self.jt_start:
            raise ConfigError("time grid must be strictly increasing")
        if self.grid_points < 2:
            raise ConfigError("time grid needs at least 2 points")
        if self.l_max < 1 or self.fixed_l < 1:
            raise ConfigError("Trotter step counts must be >= 1")
        if self.regions < 1:
            raise ConfigError("region count must be >= 1")
        if len(self._state_labels()) != self.chain.num_ions:
            raise ConfigError("initial state length must equal the ion count")
        if self.eps_ab not in ("none", "simulated"):
            try:
                float(self.eps_ab)
            except ValueError:
                raise ConfigError(
                    f"eps_AB must be 'none', 'simulated' or a number, "
                    f"got {self.eps_ab!r}"
                ) from None

    def _state_labels(self) -> str:
        return "".join(ch for ch in self.initial_state if not ch.isspace())

    def initial_spin_state(self) -> SpinState:
        return SpinState.from_labels(self.initial_state)


def _parse_bool(raw: str) -> bool:
    val = raw.strip().lower()
    if val in ("true", "yes", "1", "on"):
        return True
    if val in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def load_config(path, overrides=()) -> ExperimentConfig:
    """Read an experiment config file, applying `section.key=value` overrides."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        text = Path(path).read_text()
        parser.read_string(text, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value: {item!r}")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section.strip(), key.strip(), value.strip())
    return _build_config(parser)


def _build_config(parser: configparser.ConfigParser) -> ExperimentConfig:
    def get(section, key, default=None, cast=str):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                if cast is bool:
                    return _parse_bool(raw)
                return cast(raw)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(
                    f"config field [{section}] {key}: bad value {raw!r} ({exc})"
                ) from None
        if default is None:
            raise ConfigError(f"missing required config field [{section}] {key}")
        return default

    in_hz = get("chain", "frequencies_in_hz", True, bool)
    to_angular = 2 * np.pi if in_hz else 1.0
    axes_raw = get("chain", "radial_axes", "x,y")
    axes = tuple(a.strip() for a in axes_raw.split(",") if a.strip())
    try:
        chain = ChainConfig(
            num_ions=get("chain", "num_ions", cast=int),
            trap_frequencies=(
                to_angular * get("chain", "trap_frequency_x", cast=float),
                to_angular * get("chain", "trap_frequency_y", cast=float),
                to_angular * get("chain", "trap_frequency_z", cast=float),
            ),
            laser_wavelength=get("chain", "laser_wavelength_m", cast=float),
            rabi_frequencies=to_angular * get("chain", "rabi_frequency", cast=float),
            detuning=to_angular * get("chain", "detuning", cast=float),
            ion_mass=get("chain", "ion_mass_amu", 39.9625909, float) * ATOMIC_MASS,
            xy_asymmetry=to_angular * get("chain", "xy_asymmetry", 0.0, float),
            laser_phase=get("chain", "laser_phase_rad", 0.0, float),
            radial_axes=axes,
        )
        return ExperimentConfig(
            chain=chain,
            model=ModelKind(get("model", "kind", "heisenberg")),
            initial_state=get("model", "initial_state", cast=str),
            jt_start=get("grid", "jt_start", 0.0, float),
            jt_stop=get("grid", "jt_stop", 2 * np.pi / 3, float),
            grid_points=get("grid", "points", 13, int),
            protocol=get("protocol", "protocol", "daqs"),
            fixed_l=get("protocol", "l", 1, int),
            optimize=get("protocol", "optimize", False, bool),
            l_max=get("protocol", "l_max", 4, int),
            regions=get("protocol", "regions", 6, int),
            eps_t=get("protocol", "eps_T", 0.0, float),
            eps_ab=str(get("protocol", "eps_AB", "none")),
            n_max=get("spin_phonon", "n_max", 6, int),
            points_per_period=get("spin_phonon", "points_per_period", 100, int),
            apply_rwa=get("spin_phonon", "apply_rwa", True, bool),
            output_dir=get("output", "directory", "out"),
        )
    except ArgumentError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


class SimulatedBlockError:
    """Interpolated analog-block infidelity from spin-phonon simulation.

    Curves are precomputed over a duration grid for both block kinds with
    the single-COM-mode motional model; xy blocks run for twice the
    simulated duration (half-H_XY compensation), which the lookup folds
    in so callers pass the simulated step length t/l directly.
    """

    def __init__(self, config: ExperimentConfig, coupling: CouplingMatrix,
                 max_tau: float, samples: int = 192):
        self.j_scale = coupling.fit_J
        rabi = float(np.mean(config.chain.rabi_frequencies))
        delta_drive = config.chain.detuning
        delta_xy = config.chain.xy_asymmetry
        if delta_xy <= 0:
            raise ConfigError("simulated eps_AB needs a nonzero xy_asymmetry")
        n = config.chain.num_ions
        uniform = CouplingMatrix.uniform(n, 2 * rabi**2
                                         * effective_com_params(self.j_scale,
                                                                delta_drive,
                                                                rabi) ** 2
                                         / delta_drive)
        space = effective_com_space(config.chain.trap_frequencies[0], delta_drive,
                                    n_max=config.n_max)
        psi0 = config.initial_spin_state()
        rwa = config.apply_rwa
        self._grids = {}
        for kind, horizon in (("xx", max_tau), ("xy", XY_DURATION_FACTOR * max_tau)):
            params = effective_com_block(
                kind, self.j_scale, delta_drive, rabi, n,
                delta=delta_xy if kind == "xy" else 0.0,
                keep_counter_rotating=not rwa,
            )
            grid = np.linspace(0.0, horizon, samples)
            res = analog_block_fidelity(params, space, uniform, psi0, grid,
                                        points_per_period=config.points_per_period)
            self._grids[kind] = (grid, 1.0 - res.fidelities)

    def __call__(self, kind: str, tau: float) -> float:
        grid, infid = self._grids[kind]
        physical = tau * (XY_DURATION_FACTOR if kind == "xy" else 1.0)
        return float(np.interp(physical, grid, infid))


def make_block_error(config: ExperimentConfig, coupling: CouplingMatrix,
                     max_tau: float):
    """Resolve the configured eps_AB source into a (kind, tau) callable or None."""
    if config.eps_ab == "none":
        return None
    if config.eps_ab == "simulated":
        return SimulatedBlockError(config, coupling, max_tau)
    eps = float(config.eps_ab)
    return lambda kind, tau: eps


@dataclass(frozen=True)
class OptimizedProtocol:
    region_edges_jt: np.ndarray  # len regions + 1, starting at 0
    region_l: tuple
    times_jt: np.ndarray  # per-Trotter-step sample points
    fidelities: np.ndarray  # cumulative protocol fidelity at samples
    site_magnetizations: np.ndarray
    exact_magnetizations: np.ndarray
    final_fidelity: float
    total_analog_time: float  # s, xy doubling included


def optimize_trotter_steps(coupling: CouplingMatrix, psi0: SpinState,
                           jt_stop: float, regions: int, l_max: int,
                           block_error=None,
                           samples_per_region: int = 4) -> OptimizedProtocol:
    """Region-wise choice of the Trotter step count.

    Each region assigns the l in [1, l_max] that maximizes the simulated
    fidelity of the full protocol [U_step(t_r/l)]^l at the region's end
    time t_r: the Trotterized-vs-exact state fidelity times the
    (1 - eps)^(2l) analog-block factor, ties broken toward smaller l.
    Sample points inside a region rerun the protocol from t = 0 with
    that region's l, so the optimized trace dominates every fixed-l
    trace at the region boundaries by construction.
    """
    if l_max < 1 or regions < 1:
        raise ArgumentError("l_max and regions must be >= 1")
    j_scale = coupling.fit_J
    if j_scale <= 0:
        raise ArgumentError("coupling matrix must have a positive fit_J")
    t_stop = jt_stop / j_scale
    edges = np.linspace(0.0, t_stop, regions + 1)
    h_exact = build_model(ModelKind.HEISENBERG, coupling)

    region_l = []
    times, fids = [0.0], [1.0]
    mags, exact_mags = [magnetizations(psi0)], [magnetizations(psi0)]
    for r in range(regions):
        t_end = edges[r + 1]
        best = None
        for l in range(1, l_max + 1):
            score = daqs_evolve(coupling, psi0, [t_end], l,
                                block_error=block_error).fidelities[0]
            if best is None or score > best[0] + 1e-15:
                best = (score, l)
        l = best[1]
        region_l.append(l)
        sample_times = np.linspace(edges[r], t_end, samples_per_region + 1)[1:]
        rec = daqs_evolve(coupling, psi0, sample_times, l,
                          block_error=block_error)
        exact_rec = exact_evolve(h_exact, psi0, sample_times)
        times.extend(sample_times)
        fids.extend(rec.fidelities)
        mags.extend(rec.site_magnetizations)
        exact_mags.extend(exact_rec.site_magnetizations)
    total_analog = (1.0 + XY_DURATION_FACTOR) * t_stop
    return OptimizedProtocol(
        region_edges_jt=edges * j_scale,
        region_l=tuple(region_l),
        times_jt=np.array(times) * j_scale,
        fidelities=np.array(fids),
        site_magnetizations=np.array(mags),
        exact_magnetizations=np.array(exact_mags),
        final_fidelity=float(fids[-1]),
        total_analog_time=total_analog,
    )


@dataclass(frozen=True)
class RunArtifact:
    output_dir: Path
    files: tuple
    metadata: dict


def _write_csv(path: Path, header, rows):
    with io.StringIO() as buf:
        buf.write(",".join(header) + "\n")
        for row in rows:
            buf.write(",".join(
                format(v, ".12g") if isinstance(v, float) else str(v) for v in row
            ) + "\n")
        path.write_text(buf.getvalue())


def _write_metadata(path: Path, metadata: dict):
    lines = [f"{k} = {v}" for k, v in metadata.items()]
    path.write_text("\n".join(lines) + "\n")


def _base_metadata(config: ExperimentConfig, command: str) -> dict:
    chain = config.chain
    return {
        "daqsim_version": __version__,
        "command": command,
        "num_ions": chain.num_ions,
        "trap_frequencies_rad_s": tuple(chain.trap_frequencies),
        "laser_wavelength_m": chain.laser_wavelength,
        "rabi_frequencies_rad_s": tuple(chain.rabi_frequencies),
        "detuning_rad_s": chain.detuning,
        "xy_asymmetry_rad_s": chain.xy_asymmetry,
        "laser_phase_rad": chain.laser_phase,
        "ion_mass_kg": chain.ion_mass,
        "radial_axes": ",".join(chain.radial_axes),
        "model": config.model.value,
        "initial_state": config.initial_state,
        "jt_grid": (config.jt_start, config.jt_stop, config.grid_points),
        "protocol": config.protocol,
        "eps_T": config.eps_t,
        "eps_AB_source": config.eps_ab,
        "fock_cutoff": config.n_max,
        "apply_rwa": config.apply_rwa,
        "xy_duration_factor": XY_DURATION_FACTOR,
        "motional_model": "effective_com",
        "absolute_J_caveat": (
            "absolute coupling magnitude depends on the unspecified beam "
            "geometry factor; gate times in seconds inherit this ambiguity"
        ),
    }


def run_experiment(config: ExperimentConfig, command: str,
                   out_dir=None) -> RunArtifact:
    """Execute one CLI pipeline and write its CSV + metadata artifacts."""
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    metadata = _base_metadata(config, command)
    files = []

    if config.chain.num_ions < 2 and command != "modes":
        raise ConfigError("spin-model pipelines need at least 2 ions")

    if command == "couplings":
        cm = coupling_matrix(config.chain)
        rows = [(i, j, float(cm.J[i, j]))
                for i in range(cm.num_sites) for j in range(cm.num_sites)]
        _write_csv(out / "couplings.csv", ("i", "j", "J_ij_rad_s"), rows)
        _write_csv(out / "fit.csv", ("J_rad_s", "alpha"),
                   [(float(cm.fit_J), float(cm.fit_alpha))])
        files += ["couplings.csv", "fit.csv"]
        metadata["fit_J_rad_s"] = cm.fit_J
        metadata["fit_alpha"] = cm.fit_alpha

    elif command == "modes":
        u = equilibrium_positions(config.chain)
        ell = length_scale(config.chain)
        modes = transverse_modes(config.chain, u)
        _write_csv(out / "positions.csv", ("i", "u_dimensionless", "z_m"),
                   [(i, float(u[i]), float(u[i] * ell)) for i in range(len(u))])
        _write_csv(out / "modes.csv", ("mode", "axis", "frequency_rad_s"),
                   [(m, modes.axes[m], float(modes.frequencies[m]))
                    for m in range(len(modes.frequencies))])
        files += ["positions.csv", "modes.csv"]
        metadata["length_scale_m"] = ell
        metadata["com_frequency_rad_s"] = modes.com_frequency

    elif command == "block-fidelity":
        cm = coupling_matrix(config.chain)
        rabi = float(np.mean(config.chain.rabi_frequencies))
        eta_eff = effective_com_params(cm.fit_J, config.chain.detuning, rabi)
        uniform = CouplingMatrix.uniform(
            config.chain.num_ions,
            2 * rabi**2 * eta_eff**2 / config.chain.detuning,
        )
        space = effective_com_space(config.chain.trap_frequencies[0],
                                    config.chain.detuning, n_max=config.n_max)
        psi0 = config.initial_spin_state()
        t_grid = np.linspace(config.jt_start, config.jt_stop,
                             config.grid_points) / cm.fit_J
        if t_grid[0] == 0.0 and len(t_grid) > 1:
            t_grid = t_grid[1:]
        rows = []
        kinds = ["xx"]
        if config.chain.xy_asymmetry > 0:
            kinds.append("xy")
        for kind in kinds:
            params = effective_com_block(
                kind, cm.fit_J, config.chain.detuning, rabi,
                config.chain.num_ions,
                delta=config.chain.xy_asymmetry if kind == "xy" else 0.0,
                keep_counter_rotating=not config.apply_rwa,
            )
            res = analog_block_fidelity(params, space, uniform, psi0, t_grid,
                                        points_per_period=config.points_per_period)
            rows += [
                (float(t), float(t * cm.fit_J), float(f), kind,
                 "rwa" if res.rwa_applied else "pre_rwa")
                for t, f in zip(res.times, res.fidelities)
            ]
        _write_csv(out / "blockfid.csv",
                   ("t_s", "Jt", "fidelity", "block_kind", "rwa_flag"), rows)
        files.append("blockfid.csv")
        metadata["eta_eff"] = eta_eff
        metadata["fit_J_rad_s"] = cm.fit_J

    elif command == "compare":
        cm = coupling_matrix(config.chain)
        psi0 = config.initial_spin_state()
        jt = np.linspace(config.jt_start, config.jt_stop, config.grid_points)
        if jt[0] == 0.0:
            jt = jt[1:]
        times = jt / cm.fit_J
        rows = []
        for l in range(1, config.l_max + 1):
            rec_daqs = daqs_evolve(cm, psi0, times, l)
            rec_dig = digital_evolve(
                cm, psi0, times, l,
                gate_error=config.eps_t if config.eps_t > 0 else None,
            )
            for k in range(len(times)):
                rows.append((float(jt[k]), float(rec_daqs.fidelities[k]), "daqs", l))
                rows.append((float(jt[k]), float(rec_dig.fidelities[k]), "digital", l))
        _write_csv(out / "fidelity.csv", ("Jt", "fidelity", "protocol", "l"), rows)
        files.append("fidelity.csv")
        metadata["fit_J_rad_s"] = cm.fit_J
        metadata["fit_alpha"] = cm.fit_alpha

    elif command == "protocol":
        cm = coupling_matrix(config.chain)
        psi0 = config.initial_spin_state()
        max_tau = config.jt_stop / cm.fit_J
        block_error = make_block_error(config, cm, max_tau)
        opt = optimize_trotter_steps(cm, psi0, config.jt_stop, config.regions,
                                     config.l_max, block_error)
        fid_rows, mag_rows = [], []
        edges = opt.region_edges_jt
        for k, t_jt in enumerate(opt.times_jt):
            region = max(0, int(np.searchsorted(edges[1:], t_jt - 1e-12)))
            region = min(region, len(opt.region_l) - 1)
            fid_rows.append((float(t_jt), float(opt.fidelities[k]),
                             "daqs_optimized", opt.region_l[region]))
            for site in range(psi0.num_sites):
                mag_rows.append((float(t_jt), site,
                                 float(opt.site_magnetizations[k, site]), "daqs"))
                mag_rows.append((float(t_jt), site,
                                 float(opt.exact_magnetizations[k, site]), "exact"))
        _write_csv(out / "fidelity.csv", ("Jt", "fidelity", "protocol", "l"),
                   fid_rows)
        _write_csv(out / "magnetization.csv",
                   ("Jt", "site", "sigma_z_expectation", "generator"), mag_rows)
        files += ["fidelity.csv", "magnetization.csv"]
        metadata["fit_J_rad_s"] = cm.fit_J
        metadata["fit_alpha"] = cm.fit_alpha
        metadata["region_l"] = opt.region_l
        metadata["final_fidelity"] = opt.final_fidelity
        metadata["total_analog_time_s"] = opt.total_analog_time
        if config.eps_ab == "simulated":
            rabi = float(np.mean(config.chain.rabi_frequencies))
            metadata["eta_eff"] = effective_com_params(
                cm.fit_J, config.chain.detuning, rabi)

    else:
        raise ConfigError(f"unknown command {command!r}")

    _write_metadata(out / "metadata.txt", metadata)
    files.append("metadata.txt")
    return RunArtifact(out, tuple(files), metadata)
