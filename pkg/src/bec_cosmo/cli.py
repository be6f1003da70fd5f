"""Command line entry point: simulate, solve, map, roots, verify, specfun-eval.

Exit codes: 0 ok, 1 verification failure, 2 usage or domain error,
3 numeric failure. Every subcommand accepts ``--config FILE``: an INI file
whose ``[common]`` and ``[<subcommand>]`` sections hold ``flag = value``
lines named after the long flags. Explicit flags override the file.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io as bio
from . import special_functions as sf
from .closed_form import FamilyKind, GammaFamily, Model, solve_family
from .cosmology_map import (
    CosmologyConfig,
    anisotropy_recover,
    bianchi_residuals,
    continuity_residual,
    flrw_residuals,
    map_bianchi,
    map_flrw,
)
from .cubic_analysis import EmpCoefficients, classify_and_solve, derive_invariants
from .moment_dynamics import (
    ClosureTrap,
    ConstantTrap,
    MomentState,
    TabulatedTrap,
    closure_initial_state,
    evolve,
)
from .ode_engine import IntegrationError
from .special_functions import ConvergenceError
from .verify import check_trajectory, run_battery

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

FAMILIES = {
    "stiff": FamilyKind.STIFF,
    "matter": FamilyKind.MATTER,
    "radiation": FamilyKind.RADIATION,
    "bianchi-g2": FamilyKind.BIANCHI_GAMMA2,
    "bianchi-gn": FamilyKind.BIANCHI_GAMMA_N,
    "custom": FamilyKind.CUSTOM,
}
MODELS = {"flrw": Model.FLRW, "bianchi": Model.BIANCHI_I}
COMMAND_NAMES = ("simulate", "solve", "map", "roots", "verify", "specfun-eval")

SPECFUN = {
    "ellip_f": (sf.ellip_f, ("x", "k")),
    "ellip_e_of_sn": (sf.ellip_e_of_sn, ("x", "k")),
    "ellip_e_incomplete": (sf.ellip_e_incomplete, ("x", "k")),
    "legendre_f": (sf.legendre_f, ("x", "k")),
    "legendre_e": (sf.legendre_e, ("x", "k")),
    "complete_k": (sf.complete_k, ("k",)),
    "complete_e": (sf.complete_e, ("k",)),
    "inverse_cn": (sf.inverse_cn, ("x", "k")),
    "jacobi": (sf.jacobi, ("x", "k")),
    "hyp2f1": (sf.hyp2f1, ("a", "b", "c", "z")),
}


class UsageError(ValueError):
    """Bad flag combination or configuration file."""


# ---------------------------------------------------------------------------
# parser


def _closure_flags(p: argparse.ArgumentParser, family_required: bool) -> None:
    p.add_argument("--family", choices=sorted(FAMILIES), required=family_required,
                   default=None, help="closure family")
    p.add_argument("--model", choices=sorted(MODELS), default=None,
                   help="flrw or bianchi (default: the family's own model)")
    p.add_argument("--gamma", type=float, default=None, help="gamma for --family custom")
    p.add_argument("--n", type=int, default=1, help="index of the bianchi-gn family (default 1)")
    p.add_argument("--d", type=int, default=4, help="spacetime dimension (default 4)")
    p.add_argument("--alpha", type=float, default=1.0, help="closure amplitude (default 1)")
    p.add_argument("--Lambda", type=float, default=0.0, help="cosmological constant (default 0)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="INI file with flag defaults")

    parser = argparse.ArgumentParser(prog="bec-cosmo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="integrate the moment system")
    p.add_argument("--trap", required=True,
                   help="constant:W (omega = W) | closure | table:FILE")
    _closure_flags(p, family_required=False)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="invariant used for a default closure I3 (default 1)")
    p.add_argument("--sign", type=int, choices=(-1, 1), default=1,
                   help="sign of the default closure I3 (default +1)")
    p.add_argument("--t0", type=float, default=0.0, help="initial time (default 0)")
    p.add_argument("--i1", type=float, default=1.0, help="I1 (default 1)")
    p.add_argument("--i2", type=float, default=1.0, help="I2 (default 1)")
    p.add_argument("--i3", type=float, default=None,
                   help="I3 (default 0, or the closure value for --trap closure)")
    p.add_argument("--i4", type=float, default=None,
                   help="I4 (default W^2 I2/2 for constant:W, the closure value for closure, else 0.5)")
    p.add_argument("--t-end", type=float, default=10.0, help="final time (default 10)")
    p.add_argument("--rtol", type=float, default=1e-10, help="relative tolerance (default 1e-10)")
    p.add_argument("--samples", type=int, default=2001, help="output rows (default 2001)")
    p.add_argument("--out", type=Path, default=None, help="CSV path (default stdout)")

    p = sub.add_parser("solve", parents=[common], help="sample a closed-form family relation")
    _closure_flags(p, family_required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="invariant (default 1)")
    p.add_argument("--i2-0", type=float, default=1.0, help="I2 at the start time (default 1)")
    p.add_argument("--t-start", type=float, default=0.0, help="start time (default 0)")
    p.add_argument("--t-end", type=float, default=1.0, help="final time (default 1)")
    p.add_argument("--sign", type=int, choices=(-1, 1), default=None,
                   help="initial direction of I2 (default: expanding unless at a turning point)")
    p.add_argument("--samples", type=int, default=2001, help="output rows (default 2001)")
    p.add_argument("--rtol", type=float, default=1e-11,
                   help="tolerance of the numeric fallback route (default 1e-11)")
    p.add_argument("--out", type=Path, required=True, help="CSV path; metadata goes to OUT.json")

    p = sub.add_parser("map", parents=[common], help="map a trajectory to cosmological variables")
    p.add_argument("--input", type=Path, required=True, help="simulate- or solve-format CSV")
    p.add_argument("--model", choices=sorted(MODELS), required=True)
    p.add_argument("--d", type=int, default=4, help="spacetime dimension (default 4)")
    p.add_argument("--Lambda", type=float, default=0.0, help="cosmological constant (default 0)")
    p.add_argument("--K", type=float, default=1.0, help="gravitational coupling (default 1)")
    p.add_argument("--gamma", type=float, default=None,
                   help="gamma; needed for solve-format input when no sidecar is present")
    p.add_argument("--curvature", type=int, choices=(-1, 0, 1), default=None,
                   help="FLRW curvature (default: lambda of the run)")
    p.add_argument("--shear", type=str, default=None, help="Bianchi shear constants c1,c2,...")
    p.add_argument("--samples", type=int, default=None, help="output rows (default: input rows)")
    p.add_argument("--out", type=Path, required=True, help="CSV path")
    p.add_argument("--residuals", type=Path, default=None,
                   help="residual report (default residuals.json beside --out)")

    p = sub.add_parser("roots", parents=[common], help="classify the reduced cubic")
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--C", type=float, required=True)

    p = sub.add_parser("verify", parents=[common], help="run invariant checks")
    p.add_argument("--input", type=Path, default=None,
                   help="trajectory CSV to check (default: the built-in scenarios)")
    p.add_argument("--model", choices=sorted(MODELS), default=None,
                   help="model of a solve-format input")
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--Lambda", type=float, default=0.0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the scenarios")
    p.add_argument("--report", type=Path, default=None, help="also write the JSON report here")

    p = sub.add_parser("specfun-eval", parents=[common])
    p.add_argument("fn", choices=sorted(SPECFUN))
    for name in ("x", "k", "a", "b", "c", "z"):
        p.add_argument(f"--{name}", type=float, default=None)
    # hidden debugging command: keep it out of the top-level listing
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "specfun-eval"]
    sub.metavar = "{" + ",".join(COMMAND_NAMES[:-1]) + "}"
    return parser


# ---------------------------------------------------------------------------
# configuration files


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _config_tokens(sub: argparse.ArgumentParser, path: Path, command: str) -> list[str]:
    """Flag tokens from the [common] and [command] sections of an INI file."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep Lambda distinct from lambda
    if not cp.read(path):
        raise UsageError(f"--config: cannot read {path}")
    flags = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--") and opt != "--config":
                flags[opt[2:]] = opt
    tokens = []
    for section in ("common", command):
        if not cp.has_section(section):
            continue
        for key, value in cp.items(section):
            opt = flags.get(key) or flags.get(key.replace("_", "-"))
            if opt is None:
                raise UsageError(f"--config: unknown key {key!r} in [{section}]")
            tokens += [opt, value]
    unknown = set(cp.sections()) - {"common", *COMMAND_NAMES}
    if unknown:
        raise UsageError(f"--config: unknown section(s) {sorted(unknown)}")
    return tokens


def _config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    path = _config_path(argv)
    command = next((tok for tok in argv if tok in COMMAND_NAMES), None)
    if path is not None and command is not None:
        i = argv.index(command)
        # file tokens go first so explicit flags win
        tokens = _config_tokens(_subparser(parser, command), Path(path), command)
        argv = argv[: i + 1] + tokens + argv[i + 1:]
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# helpers


def _family(args, lam: float) -> GammaFamily:
    kind = FAMILIES[args.family]
    if kind is FamilyKind.CUSTOM and args.gamma is None:
        raise UsageError("--family custom needs --gamma")
    return GammaFamily(kind, d=args.d, alpha=args.alpha, lam=lam, Lambda=args.Lambda, n=args.n,
                       gamma_value=args.gamma if kind is FamilyKind.CUSTOM else None)


def _model_arg(args) -> Model | None:
    return MODELS[args.model] if args.model else None


def _emit_warnings(caught) -> list[str]:
    msgs = []
    for w in caught:
        msg = str(w.message)
        if msg not in msgs:
            msgs.append(msg)
            print(f"warning: {msg}", file=sys.stderr)
    return msgs


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    trap_spec = args.trap
    i3, i4 = args.i3, args.i4
    if trap_spec.startswith("constant:"):
        try:
            omega0 = float(trap_spec.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"--trap: bad constant value in {trap_spec!r}") from None
        trap = ConstantTrap(omega0)
        # default I4 makes (I2, 0, I4) a fixed point
        i4 = 0.5 * omega0**2 * args.i2 if i4 is None else i4
    elif trap_spec == "closure":
        if args.family is None:
            raise UsageError("--trap closure needs --family")
        fam = _family(args, args.lam)
        model = _model_arg(args)
        trap = ClosureTrap(fam, model) if model else ClosureTrap(fam)
        s_ref = closure_initial_state(fam, args.i2, model, sign=args.sign, t0=args.t0)
        i3 = s_ref.I3 if i3 is None else i3
        if i4 is None:
            i4 = s_ref.I4
        elif abs(i4 - s_ref.I4) > 1e-12 * max(1.0, abs(i4)):
            print(f"warning: --i4 {i4!r} differs from the closure value {s_ref.I4!r}",
                  file=sys.stderr)
    elif trap_spec.startswith("table:"):
        times, values = bio.read_trap_table(trap_spec.split(":", 1)[1])
        trap = TabulatedTrap(times, values)
        i4 = 0.5 if i4 is None else i4
    else:
        raise UsageError(f"--trap: expected constant:W, closure or table:FILE, got {trap_spec!r}")
    s0 = MomentState(args.t0, args.i1, args.i2, 0.0 if i3 is None else i3, i4)
    traj = evolve(s0, trap, args.t_end, rtol=args.rtol, samples=args.samples)
    if traj.halted:
        print(f"warning: integration halted ({traj.halted}) at t = {traj.halt_time!r}",
              file=sys.stderr)
    bio.write_csv(args.out or sys.stdout, bio.SIMULATE_HEADER, bio.trajectory_columns(traj))
    return EXIT_OK


def cmd_solve(args) -> int:
    fam = _family(args, args.lam)
    sol = solve_family(fam, args.i2_0, (args.t_start, args.t_end), model=_model_arg(args),
                       sign=args.sign, samples=args.samples, rtol=args.rtol)
    bio.write_csv(args.out, bio.SOLVE_HEADER, [sol.t, sol.I2, sol.omega_sq])
    bio.write_json(_sidecar(args.out), sol.metadata)
    if sol.metadata.get("halted"):
        print(f"warning: I2 halted ({sol.metadata['halted']}); later rows are NaN", file=sys.stderr)
    return EXIT_OK


def _load_trajectory(path: Path, model: Model | None, d: int, gamma: float | None,
                     Lambda: float):
    header, _ = bio.read_csv(path)
    if header == bio.SOLVE_HEADER:
        side = _sidecar(path)
        if side.exists():
            meta = json.loads(side.read_text())
            gamma = meta.get("gamma") if gamma is None else gamma
            d = int(meta.get("d", d))
            Lambda = float(meta.get("Lambda", Lambda))
            if model is None and meta.get("model"):
                model = Model(meta["model"])
        if gamma is None or model is None:
            raise UsageError(f"{path}: solve-format input needs --gamma and --model "
                             "(or the JSON sidecar)")
    return bio.read_trajectory(path, model, d, gamma, Lambda)


def cmd_map(args) -> int:
    model = MODELS[args.model]
    shear = None
    if args.shear:
        try:
            shear = tuple(float(v) for v in args.shear.split(","))
        except ValueError:
            raise UsageError(f"--shear: expected comma-separated numbers, got {args.shear!r}") from None
    cfg = CosmologyConfig(model, d=args.d, Lambda=args.Lambda, K=args.K,
                          curvature_k=args.curvature, gamma=args.gamma, shear_constants=shear)
    report: dict = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        traj = _load_trajectory(args.input, model, args.d, args.gamma, args.Lambda)
        samples = args.samples or len(traj.t)
        if model is Model.FLRW:
            series = map_flrw(traj, cfg, samples)
            fried, cont = flrw_residuals(series, cfg)
            report.update(friedmann_max=fried, continuity_max=cont, D=None,
                          curvature_k=series.metadata["curvature_k"])
        else:
            series = map_bianchi(traj, cfg, samples)
            eq10, eq11 = bianchi_residuals(series, cfg)
            report.update(eq10_max=eq10, eq11_max=eq11, continuity_max=continuity_residual(series, args.d),
                          D=series.metadata["D"])
            if shear is not None:
                an = anisotropy_recover(series, cfg, traj)
                report["D_shear"] = an.D_shear
        report["lambda"] = traj.lam
    report["warnings"] = _emit_warnings(caught)
    bio.write_csv(args.out, bio.MAP_HEADER,
                  [series.tau, series.t, series.scale, series.H, series.rho_phi, series.p_phi])
    bio.write_json(args.residuals or args.out.with_name("residuals.json"), report)
    return EXIT_OK


def cmd_roots(args) -> int:
    inv = derive_invariants(EmpCoefficients(args.A, args.B, args.C))
    rd = classify_and_solve(inv)
    bio.write_json(sys.stdout, {
        "delta": rd.delta, "class": rd.cls.value, "roots": rd.roots, "sigma": rd.sigma,
        "rho": rd.rho, "g": rd.g, "t1": rd.t1, "t2": rd.t2, "modulus": rd.modulus,
    })
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if args.input is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj = _load_trajectory(args.input, _model_arg(args), args.d, args.gamma, args.Lambda)
        checks = check_trajectory(traj)
    else:
        checks = run_battery(args.jobs)
    failed = [c.name for c in checks if not c.passed]
    report = {"checks": [c.as_dict() for c in checks], "pass": not failed}
    bio.write_json(sys.stdout, report)
    if args.report:
        bio.write_json(args.report, report)
    if failed:
        print(f"verification failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_specfun(args) -> int:
    fn, names = SPECFUN[args.fn]
    values = []
    for name in names:
        v = getattr(args, name)
        if v is None:
            raise UsageError(f"{args.fn} needs --{name}")
        values.append(v)
    result = fn(*values)
    if isinstance(result, tuple):
        for field, v in zip(result._fields, result):
            print(f"{field} {bio.fmt(v)}")
    else:
        print(bio.fmt(result))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "solve": cmd_solve,
    "map": cmd_map,
    "roots": cmd_roots,
    "verify": cmd_verify,
    "specfun-eval": cmd_specfun,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return EXIT_USAGE if exc.code else EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    np.seterr(all="ignore")
    try:
        return COMMANDS[args.command](args)
    except (IntegrationError, ConvergenceError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
