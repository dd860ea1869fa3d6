"""
Command-line entry point for the TTW toolkit.

Every subcommand reads a RunConfig (JSON file plus flag overrides), writes
its data files and the effective config.json into the output directory, and
exits with the code of the error that stopped it:

    0 ok, 2 config, 3 numeric, 4 infeasible charges, 5 integrator,
    6 inconclusive arbitration
"""
import argparse
import datetime
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError
from scipy.integrate import trapezoid

import ttw
from common.exceptions import ConfigError, InconclusiveArbitrationError, InfeasibleChargesError, TTWError
from common.models import NormalizationConstant, SpectrumConvention
from common.utils import deserialize_from_json, write_csv, write_json
from ttw.config import config
from ttw.models import (
    ClassicalState,
    GridSpec,
    PotentialParams,
    QuantumNumbers,
    RunConfig,
    SeriesTruncation,
)
from ttw.services import classical, coherent, oracle, specfun, spectrum

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
PARAM_FLAGS = ("omega", "alpha", "beta", "k")


def _global_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", default=None, help="RunConfig JSON file")
    parent.add_argument("--out", default=None, help="Output directory")
    parent.add_argument("--omega", type=float, default=None)
    parent.add_argument("--alpha", type=float, default=None)
    parent.add_argument("--beta", type=float, default=None)
    parent.add_argument("--k", default=None, help="Rational k as p/q")
    parent.add_argument("--log-level", default=None, help="Overrides TTW_LOG_LEVEL")
    return parent


def build_parser() -> argparse.ArgumentParser:
    """
    Build the argument parser.

    Subcommand options use dotted destinations ("section.field") that map
    straight onto RunConfig.
    """
    parent = _global_options()
    parser = argparse.ArgumentParser(prog="ttw", description="TTW potential: spectra, coherent states and orbits")
    commands = parser.add_subparsers(dest="command", required=True)

    sp = commands.add_parser("spectrum", parents=[parent], help="Enumerate levels and degeneracy classes")
    sp.add_argument("--emax", dest="spectrum.e_max", type=float)
    sp.add_argument("--convention", dest="spectrum.convention", choices=[c.value for c in SpectrumConvention])

    ep = commands.add_parser("eigenstate", parents=[parent], help="Sample a normalized eigenstate on a grid")
    ep.add_argument("--n-r", dest="eigenstate.n_r", type=int)
    ep.add_argument("--l1", dest="eigenstate.l1", type=int)
    ep.add_argument("--r-max", dest="eigenstate.r_max", type=float)
    ep.add_argument("--n-r-points", dest="eigenstate.n_r_points", type=int)
    ep.add_argument("--n-theta-points", dest="eigenstate.n_theta_points", type=int)

    cp = commands.add_parser("coherent", parents=[parent], help="Coherent-state expectations and snapshots")
    cp.add_argument("--energy", dest="coherent.energy", type=float)
    cp.add_argument("--split", dest="coherent.split", type=float)
    cp.add_argument("--phase-u", dest="coherent.phase_u", type=float)
    cp.add_argument("--phase-v", dest="coherent.phase_v", type=float)
    cp.add_argument("--t-end", dest="coherent.t_end", type=float)
    cp.add_argument("--n-times", dest="coherent.n_times", type=int)
    cp.add_argument("--l1-max", dest="coherent.l1_max", type=int)
    cp.add_argument("--nr-max", dest="coherent.nr_max", type=int)
    cp.add_argument("--tail-tol", dest="coherent.tail_tol", type=float)
    cp.add_argument("--snapshots", dest="coherent.snapshots", type=int)
    cp.add_argument("--snapshot-points", dest="coherent.snapshot_points", type=int)

    kp = commands.add_parser("classical", parents=[parent], help="Integrate an orbit and search for closure")
    kp.add_argument("--r0", dest="classical.r0", type=float)
    kp.add_argument("--theta0", dest="classical.theta0", type=float)
    kp.add_argument("--p-r0", dest="classical.p_r0", type=float)
    kp.add_argument("--p-theta0", dest="classical.p_theta0", type=float)
    kp.add_argument("--periods", dest="classical.periods", type=float)
    kp.add_argument("--n-samples", dest="classical.n_samples", type=int)
    kp.add_argument("--tol", dest="classical.tol", type=float)
    kp.add_argument("--max-radial-periods", dest="classical.max_radial_periods", type=int)
    kp.add_argument("--closure-tol", dest="classical.closure_tol", type=float)

    vp = commands.add_parser("validate", parents=[parent], help="Run the oracle arbitrations")
    vp.add_argument("--l1-max", dest="validation.l1_max", type=int)
    vp.add_argument("--n-levels", dest="validation.n_levels", type=int)
    vp.add_argument("--angular-levels", dest="validation.angular_levels", type=int)
    vp.add_argument("--p-phi", dest="validation.p_phi", type=float)
    vp.add_argument("--p-psi", dest="validation.p_psi", type=float)
    vp.add_argument("--identity-l1-max", dest="validation.identity_l1_max", type=int)
    vp.add_argument("--angular-points", dest="validation.angular_points", type=int)
    vp.add_argument("--radial-points", dest="validation.radial_points", type=int)
    vp.add_argument("--refinement-levels", dest="validation.refinement_levels", type=int)

    pp = commands.add_parser("specfun-probe", parents=[parent], help=argparse.SUPPRESS)
    pp.add_argument("--fn", required=True, choices=sorted(SPECFUN_COMMANDS))
    pp.add_argument("--args", action="append", default=[], help="Repeat once per argument")
    return parser


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """
    Merge the --config file with command-line overrides.

    Raises:
        ConfigError: If the file cannot be read
        ValidationError: If the merged values are invalid
    """
    data: Dict[str, Any] = {}
    if args.config:
        try:
            data = deserialize_from_json(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read config file {args.config}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config file {args.config} must hold a JSON object")
    params = dict(data.get("params") or {})
    for name in PARAM_FLAGS:
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    data["params"] = params
    if args.out is not None:
        data["out"] = args.out
    for dest, value in vars(args).items():
        if "." in dest and value is not None:
            section, field = dest.split(".", 1)
            data.setdefault(section, {})
            data[section] = dict(data[section], **{field: value})
    return RunConfig.model_validate(data)


def write_run_files(run: RunConfig, command: str, argv: Sequence[str]) -> Path:
    """
    Write config.json and the meta.json sidecar; return the output directory.
    """
    out = Path(run.out)
    write_json(out / "config.json", run.model_dump(mode="json"))
    write_json(out / "meta.json", {
        "command": command,
        "version": ttw.__version__,
        "argv": list(argv),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    })
    return out


def cmd_spectrum(run: RunConfig, out: Path) -> None:
    classes = spectrum.enumerate_levels(run.params, run.spectrum.e_max, run.spectrum.convention)
    rows = []
    for cls in classes:
        for level in cls.levels:
            rows.append((level.qn.n_r, level.qn.l1, level.energy, cls.class_id, cls.size))
    write_csv(out / "levels.csv", ("n_r", "l1", "energy", "degeneracy_class_id", "class_size"), rows)
    largest = max((cls.size for cls in classes), default=0)
    logger.info("%s levels in %s classes (largest class %s)", len(rows), len(classes), largest)


def _eigenstate_r_max(run: RunConfig) -> float:
    options = run.eigenstate
    if options.r_max is not None:
        return options.r_max
    lam = spectrum.radial_index(options.l1, run.params)
    return math.sqrt((4.0 * (2 * options.n_r + lam + 1.0) + 10.0) / run.params.omega)


def cmd_eigenstate(run: RunConfig, out: Path) -> None:
    options = run.eigenstate
    qn = QuantumNumbers(n_r=options.n_r, l1=options.l1)
    r = np.linspace(0.0, _eigenstate_r_max(run), options.n_r_points)
    theta = np.linspace(0.0, run.params.theta_max, options.n_theta_points)
    psi = spectrum.normalized_eigenstate(qn, run.params, r[:, None], theta[None, :])
    rows = [(r[i], theta[j], psi[i, j]) for i in range(len(r)) for j in range(len(theta))]
    write_csv(out / "eigenstate.csv", ("r", "theta", "psi"), rows)
    grid_norm = trapezoid(trapezoid(psi ** 2 * r[:, None], theta, axis=1), r)
    logger.info("Eigenstate %s sampled; grid norm %s", qn.model_dump(), grid_norm)


def _truncation(run: RunConfig) -> SeriesTruncation:
    options = run.coherent
    return SeriesTruncation(
        l1_max=options.l1_max or config.SERIES.L1_MAX,
        nr_max=options.nr_max or config.SERIES.NR_MAX,
        tail_tol=options.tail_tol or config.SERIES.TAIL_TOL,
    )


def cmd_coherent(run: RunConfig, out: Path) -> None:
    options = run.coherent
    params = run.params
    amplitudes = coherent.constrain_amplitudes(options.energy, params, options.phase_u, options.phase_v, options.split)
    charges = coherent.charges_from_amplitudes(amplitudes)
    state = coherent.CoherentState(amplitudes, params, _truncation(run))
    E, A, t0 = coherent.radial_parameters_from_amplitudes(amplitudes)
    t_end = options.t_end if options.t_end is not None else classical.radial_period(params.omega)
    times = np.linspace(0.0, t_end, options.n_times)
    k = params.k_float

    rows = []
    for t in times:
        rows.append((
            t,
            coherent.expectation_r2(E, A, params.omega, t, t0),
            state.expectation_r2_series(t),
            coherent.expectation_u2(amplitudes, t, params.alpha, k),
            coherent.expectation_sin2_theta(amplitudes, params, t),
        ))
    write_csv(
        out / "expectations.csv",
        ("t", "exp_r2_analytic", "exp_r2_series", "exp_u2", "exp_sin2theta"),
        rows,
    )
    write_csv(out / "coefficients.csv", ("l1", "n_r", "coeff_re", "coeff_im"), state.coefficient_rows())
    write_json(out / "charges.json", {
        "amplitudes": amplitudes.model_dump(mode="json"),
        "charges": charges.model_dump(mode="json"),
        "E": E,
        "A": A,
        "t0": t0,
        "normalization": state.normalization,
        "last_shell_magnitude": state.last_shell_magnitude,
        "last_radial_magnitude": state.last_radial_magnitude,
    })

    if options.snapshots:
        mean = E / (2.0 * params.omega ** 2)
        r = np.linspace(0.0, 2.0 * math.sqrt(2.0 * mean), options.snapshot_points)
        theta = np.linspace(0.0, params.theta_max, options.snapshot_points)
        frames = np.linspace(0.0, t_end, options.snapshots) if options.snapshots > 1 else np.zeros(1)
        for frame, t in enumerate(frames):
            density = state.density(float(t), r[:, None], theta[None, :])
            snapshot = [(t, r[i], theta[j], density[i, j]) for i in range(len(r)) for j in range(len(theta))]
            write_csv(out / f"snapshot_{frame:04d}.csv", ("t", "r", "theta", "density"), snapshot)


def cmd_classical(run: RunConfig, out: Path) -> None:
    options = run.classical
    params = run.params
    theta0 = options.theta0 if options.theta0 is not None else params.theta_max / 2.0
    s0 = ClassicalState(r=options.r0, theta=theta0, p_r=options.p_r0, p_theta=options.p_theta0)
    t_end = options.periods * classical.radial_period(params.omega)
    traj = classical.integrate(s0, params, t_end, options.tol, n_samples=options.n_samples)
    rows = [
        (t, *state, e, a)
        for t, state, e, a in zip(traj.times, traj.states, traj.energies, traj.angular_charges)
    ]
    write_csv(out / "trajectory.csv", ("t", "r", "theta", "p_r", "p_theta", "energy", "angular_charge"), rows)

    closure = classical.closure_detect(s0, params, options.max_radial_periods, options.closure_tol, options.tol)
    report = closure.model_dump(mode="json")
    report.update({
        "energy0": traj.energy0,
        "angular_charge0": traj.angular_charge0,
        "energy_drift": traj.energy_drift(),
        "r2_harmonicity_residual": (
            classical.r2_harmonicity_residual(traj, params.omega) if len(traj.times) >= 5 else None
        ),
    })
    write_json(out / "closure.json", report)


def cmd_validate(run: RunConfig, out: Path) -> None:
    options = run.validation
    exponents = (options.p_phi, options.p_psi) if options.p_phi is not None and options.p_psi is not None else None
    angular_grid = None
    if options.angular_points or options.refinement_levels:
        angular_grid = GridSpec(
            n_points=options.angular_points or config.ORACLE.ANGULAR_POINTS,
            domain=(0.0, math.pi / 2.0),
            refinement_levels=options.refinement_levels or config.ORACLE.REFINEMENT_LEVELS,
        )
    report = oracle.validation_report(
        run.params,
        l1_max=options.l1_max,
        n_levels=options.n_levels,
        angular_levels=options.angular_levels,
        exponents=exponents,
        identity_pairs=options.identity_pairs,
        identity_l1_max=options.identity_l1_max,
        angular_grid=angular_grid,
        radial_points=options.radial_points,
        refinement_levels=options.refinement_levels,
    )
    write_json(out / "validation.json", report.model_dump(mode="json"))
    undecided = report.inconclusive()
    if undecided:
        raise InconclusiveArbitrationError(f"arbitration undecided for: {', '.join(undecided)}")
    logger.info(
        "Winners: spectrum=%s, jacobi=%s, constant=%s",
        report.spectrum_convention_winner, report.jacobi_argument_winner, report.n_constant_winner,
    )


def _eval_bessel(nu: str, z: str) -> complex:
    return specfun.bessel_j(float(nu), complex(z.replace(" ", "")))


SPECFUN_COMMANDS = {
    "gamma": lambda x: specfun.gamma_real(float(x)),
    "log_gamma": lambda x: specfun.log_gamma_real(float(x)),
    "laguerre": lambda n, a, x: specfun.laguerre(int(n), float(a), float(x)),
    "jacobi": lambda l, a, b, x: specfun.jacobi(int(l), float(a), float(b), float(x)),
    "bessel_j": _eval_bessel,
    "product_constant": lambda l, a, b, conv="symmetric": specfun.bessel_product_constant(
        int(l), float(a), float(b), NormalizationConstant(conv)
    ),
}


def cmd_specfun(args: argparse.Namespace) -> List[str]:
    """
    Evaluate one kernel and return the printed lines (complex values as re, im).
    """
    try:
        value = SPECFUN_COMMANDS[args.fn](*args.args)
    except (TypeError, ValueError) as e:
        if isinstance(e, TTWError):
            raise
        raise ConfigError(f"bad arguments for {args.fn}: {args.args} ({e})") from e
    if isinstance(value, complex):
        return [repr(value.real), repr(value.imag)]
    return [repr(float(value))]


COMMANDS = {
    "spectrum": cmd_spectrum,
    "eigenstate": cmd_eigenstate,
    "coherent": cmd_coherent,
    "classical": cmd_classical,
    "validate": cmd_validate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point for the CLI.

    Returns:
        Process exit code
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    level = (args.log_level or config.LOGGING.LEVEL).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT)

    try:
        if args.command == "specfun-probe":
            for line in cmd_specfun(args):
                print(line)
            return 0
        run = load_run_config(args)
        out = write_run_files(run, args.command, argv)
        logger.info("Running %s into %s", args.command, out)
        COMMANDS[args.command](run, out)
        return 0
    except ValidationError as e:
        logger.error("Invalid configuration: %s", e)
        return ConfigError.exit_code
    except InfeasibleChargesError as e:
        logger.error("%s (minimal feasible energy %s)", e, e.minimal_energy)
        return e.exit_code
    except TTWError as e:
        logger.error("%s failed: %s", args.command, e)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
