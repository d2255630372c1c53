"""Command-line entry point: ``dampwave <subcommand> [options]``.

Every option can also come from a JSON file given with ``--config``; flags on
the command line win.  Exit codes: 0 success, 1 invalid input, 2 numerical
failure, 3 file-system error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DampWaveError, InputError, InsufficientData, InvalidParams, NumericalError
from .exponents import ProblemClass, exponent_table

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

SIM_DEFAULTS = {"r0": 0.5, "amp_f": 1.0, "amp_g": 0.0, "T_max": 5.0, "dr": None, "cfl": 0.9,
                "blow_threshold": 1e6, "snapshot_every": 0, "levels": 2}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _parse_range(text: str) -> np.ndarray:
    """'a:b:n' -> n log-spaced values from a to b."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise InvalidParams(f"range must look like a:b:n, got {text!r}") from exc
    if a <= 0 or b <= 0 or n < 1:
        raise InvalidParams("range endpoints must be positive and n >= 1")
    return np.geomspace(a, b, n)


class Settings:
    """Flag values layered over the config file over built-in defaults."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self.args, self.config = args, config

    def get(self, key: str, default=None, required: bool = False):
        val = getattr(self.args, key, None)
        if val is None:
            val = self.config.get(key)
        if val is None:
            val = default
        if val is None and required:
            raise InvalidParams(f"missing required setting {key!r} (flag or config)")
        return val


def _load_config(path) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidParams(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidParams("config must be a JSON object")
    return data


def _emit(args, payload: dict, lines=None) -> None:
    from .sweep import dumps

    if args.quiet:
        return
    if args.json:
        sys.stdout.write(dumps(payload))
        return
    for key, val in (lines or payload).items():
        if isinstance(val, float):
            val = repr(val)
        elif isinstance(val, (dict, list)):
            val = json.dumps(val, default=str)
        print(f"{key:>20}: {val}")


def _problem(s: Settings) -> ProblemClass:
    return ProblemClass(int(s.get("N", required=True)), float(s.get("mu", required=True)),
                        float(s.get("p", required=True)))


def _output_dir(s: Settings) -> Path:
    out = Path(s.get("output", "."))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc}") from exc
    return out


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


# --- subcommands ---------------------------------------------------------


def cmd_exponents(args, s: Settings) -> int:
    pc = _problem(s)
    _emit(args, exponent_table(pc, float(s.get("tol", 1e-9))))
    return EXIT_OK


def cmd_hyp2f1(args, s: Settings) -> int:
    from .hypergeom import HypergeomParams, hyp2f1, ode_residual_values

    prm = HypergeomParams(float(s.get("a", required=True)), float(s.get("b", required=True)),
                          float(s.get("c", required=True)),
                          series_tol=float(s.get("series_tol", 1e-15)),
                          max_terms=int(s.get("max_terms", 10_000)))
    z = float(s.get("z", required=True))
    res = hyp2f1(prm, z)
    _emit(args, {"value": res.value, "method": res.method.value, "terms_used": res.terms_used,
                 "truncation_estimate": res.truncation_estimate,
                 "ode_residual": float(ode_residual_values(prm, z)), "b_shift": res.b_shift})
    return EXIT_OK


def cmd_verify(args, s: Settings) -> int:
    from .testfunc import TestFunctionFamily, identity_report

    fam = TestFunctionFamily(float(s.get("beta", required=True)), float(s.get("mu", required=True)),
                             int(s.get("N", required=True)))
    report = identity_report(fam, seed=int(s.get("seed", 0)), n_samples=int(s.get("samples", 20)))
    _emit(args, report)
    return EXIT_OK


def _model_params(s: Settings, eps=None):
    from .wavesolver import ModelParams

    return ModelParams(_problem(s), float(eps if eps is not None else s.get("eps", required=True)),
                       r0=float(s.get("r0", SIM_DEFAULTS["r0"])),
                       amp_f=float(s.get("amp_f", SIM_DEFAULTS["amp_f"])),
                       amp_g=float(s.get("amp_g", SIM_DEFAULTS["amp_g"])))


def cmd_simulate(args, s: Settings) -> int:
    from .sweep import dumps
    from .wavesolver import Status, integrate

    mp = _model_params(s)
    resolved = {"N": mp.pc.N, "mu": mp.pc.mu, "p": mp.pc.p, "eps": mp.eps, "r0": mp.r0,
                "amp_f": mp.amp_f, "amp_g": mp.amp_g}
    for key in ("T_max", "dr", "cfl", "blow_threshold", "snapshot_every", "levels"):
        resolved[key] = s.get(key, SIM_DEFAULTS[key])
    rep = integrate(mp, float(resolved["T_max"]),
                    dr=None if resolved["dr"] is None else float(resolved["dr"]),
                    cfl=float(resolved["cfl"]), blow_threshold=float(resolved["blow_threshold"]),
                    levels=int(resolved["levels"]),
                    snapshot_every=int(resolved["snapshot_every"]))
    resolved["dr"] = rep.diagnostics.get("dr", resolved["dr"])
    out = _output_dir(s)
    _write_text(out / "config.json", dumps(resolved))
    payload = rep.to_dict()
    payload["diagnostics"] = {k: v for k, v in payload["diagnostics"].items() if k != "wall_time"}
    _write_text(out / "report.json", dumps(payload))
    if int(resolved["snapshot_every"]) > 0 and rep.runs:
        write_snapshots(out / "snapshots.csv", rep.runs[0].snapshots)
    _emit(args, payload, {"status": rep.status.value, "T_est": rep.T_est,
                          "T_refined": rep.T_refined, "peak_amplitude": rep.peak_amplitude,
                          "output": str(out)})
    return EXIT_NUMERIC if rep.status is Status.DIVERGED else EXIT_OK


def write_snapshots(path: Path, snaps) -> None:
    """Long-format rows t, r, u (full precision)."""
    nt, nr = snaps.u.shape
    rows = np.column_stack([np.repeat(snaps.t, nr), np.tile(snaps.r, nt), snaps.u.ravel()])
    try:
        np.savetxt(path, rows, fmt="%.17g", delimiter=",", header="t,r,u", comments="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_snapshots(path: Path):
    from .wavesolver import Snapshots

    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    t_all, r_all = data[:, 0], data[:, 1]
    nr = int(np.argmax(r_all[1:] <= r_all[:-1]) + 1) if len(r_all) > 1 and np.any(
        np.diff(r_all) <= 0) else len(r_all)
    return Snapshots(t_all[::nr].copy(), r_all[:nr].copy(), data[:, 2].reshape(-1, nr))


def cmd_functionals(args, s: Settings) -> int:
    from .functionals import (base_identity_sides, check_base2_inequalities,
                              check_trick_identity, compute_data_moments, compute_G,
                              compute_H_J, default_beta)
    from .sweep import dumps
    from .testfunc import TestFunctionFamily, bound_regime
    from .wavesolver import ModelParams, RadialGrid, RunResult, Status

    run_dir = Path(s.get("run", required=True))
    cfg = _load_config(run_dir / "config.json")
    snap_path = run_dir / "snapshots.csv"
    if not snap_path.exists():
        raise InvalidParams(f"{snap_path} missing; rerun simulate with snapshot_every > 0")
    snaps = read_snapshots(snap_path)
    mp = ModelParams(ProblemClass(int(cfg["N"]), float(cfg["mu"]), float(cfg["p"])),
                     float(cfg["eps"]), r0=float(cfg["r0"]), amp_f=float(cfg["amp_f"]),
                     amp_g=float(cfg["amp_g"]))
    beta = s.get("beta")
    beta = default_beta(mp) if beta is None else float(beta)
    fam = TestFunctionFamily(beta, mp.pc.mu, mp.pc.N)
    trace = compute_H_J(compute_G(snaps, fam, mp.pc.p, mp.r0))
    moments = compute_data_moments(mp, fam, snaps.r)
    base = base_identity_sides(trace, moments, snaps, fam, mp.eps, mp.r0)
    out = _output_dir(s) if getattr(args, "output", None) else run_dir
    rows = np.column_stack([trace.times, trace.G, trace.H, trace.J])
    try:
        np.savetxt(out / "functionals.csv", rows, fmt="%.17g", delimiter=",",
                   header="t,G,H,J", comments="")
    except OSError as exc:
        raise OSError(f"cannot write {out / 'functionals.csv'}: {exc}") from exc
    try:
        regime = bound_regime(fam)
    except DampWaveError as exc:
        regime = f"none ({exc})"
    report = {"beta": beta, "trick_gap": check_trick_identity(trace), "base_gap": base.gap,
              "base_gap_t0": base.gap_t0, "E0": moments.E0, "E1": moments.E1,
              "bound_regime": regime, "J_final": float(trace.J[-1])}
    q = s.get("q")
    if q is not None:
        run = RunResult(mp, RadialGrid(float(snaps.r[1] - snaps.r[0]), len(snaps.r)),
                        Status.COMPLETED, math.inf, float(snaps.t[-1]), math.nan, math.nan, 0,
                        math.nan, 0, snaps)
        report["fitted_constants"] = check_base2_inequalities(run, float(q))
    _write_text(out / "identity_report.json", dumps(report))
    _emit(args, report)
    return EXIT_OK


def cmd_blowup_ode(args, s: Settings) -> int:
    from .functionals import BlowupOdeProblem, OdeKind, blowup_ode_demo, default_eps_range

    case = str(s.get("case", required=True))
    kinds = {"i": OdeKind.POWER, "ii": OdeKind.LOG}
    if case not in kinds:
        raise InvalidParams("--case must be i or ii")
    p = float(s.get("p", required=True))
    prob = BlowupOdeProblem(kinds[case], p, C=float(s.get("C", 1.0)), c=float(s.get("c", 1.0)))
    rng = s.get("eps_range")
    eps = default_eps_range(prob.kind, p) if rng is None else _parse_range(str(rng))
    res = blowup_ode_demo(prob, eps)
    payload = res.to_dict()
    if getattr(args, "output", None) or s.config.get("output"):
        from .sweep import dumps

        _write_text(_output_dir(s) / "blowup_ode.json", dumps(payload))
    _emit(args, payload, {"kind": res.kind.value, "p": p, "slope": res.slope,
                          "expected_slope": res.expected_slope,
                          "relative_error": res.relative_error, "residual": res.residual})
    return EXIT_OK


def cmd_sweep(args, s: Settings) -> int:
    from .sweep import MIN_DECADES, SweepConfig, emit_report, fit_lifespan, run_sweep

    rng = s.get("eps_range")
    if rng is not None:
        eps = np.sort(_parse_range(str(rng)))[::-1]
    else:
        eps = np.asarray(s.get("eps_values", required=True), dtype=float)
    mp = _model_params(s, eps=float(eps[0]))
    out = _output_dir(s)
    dr = s.get("dr")
    cfg = SweepConfig(mp, tuple(float(e) for e in eps), float(s.get("T_cap", required=True)),
                      grid_levels=int(s.get("grid_levels", 2)), output_dir=str(out),
                      seed=int(s.get("seed", 0)), dr=None if dr is None else float(dr),
                      cfl=float(s.get("cfl", 0.9)),
                      blow_threshold=float(s.get("blow_threshold", 1e6)))

    def progress(rec):
        if not args.quiet and not args.json:
            print(f"eps={rec.eps!r} status={rec.status} T_refined={rec.T_refined!r}",
                  file=sys.stderr)

    records = run_sweep(cfg, threads=int(s.get("threads", 1)), progress=progress)
    fit, note = None, None
    try:
        fit = fit_lifespan(records, mp.pc, float(s.get("min_decades", MIN_DECADES)))
    except InsufficientData as exc:
        note = str(exc)
    payload = emit_report(records, fit, mp.pc, out, note)
    _emit(args, payload, {k: payload.get(k) for k in
                          ("model", "slope", "r_squared", "theory_exponent", "consistent")})
    return EXIT_OK


def cmd_fit(args, s: Settings) -> int:
    from .sweep import MIN_DECADES, emit_report, fit_lifespan, read_sweep_csv

    src = s.get("sweep_csv")
    out = _output_dir(s)
    records = read_sweep_csv(Path(src) if src else out / "sweep.csv")
    pc = _problem(s)
    fit, note = None, None
    try:
        fit = fit_lifespan(records, pc, float(s.get("min_decades", MIN_DECADES)))
    except InsufficientData as exc:
        note = str(exc)
    payload = emit_report(records, fit, pc, out, note)
    _emit(args, payload, {k: payload.get(k) for k in
                          ("model", "slope", "r_squared", "theory_exponent", "consistent")})
    return EXIT_OK


# --- parser --------------------------------------------------------------


def _globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="JSON file with default settings")
    p.add_argument("--output", default=d, help="output directory")
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS if suppress else False,
                   help="print machine-readable JSON")
    p.add_argument("--quiet", action="store_true",
                   default=argparse.SUPPRESS if suppress else False, help="print nothing")
    p.add_argument("--threads", type=int, default=d, help="worker processes for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dampwave", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        _globals(sp, suppress=True)
        sp.set_defaults(func=func)
        return sp

    def problem(sp):
        sp.add_argument("--N", type=int)
        sp.add_argument("--mu", type=float)
        sp.add_argument("--p", type=float)

    sp = add("exponents", cmd_exponents, "critical exponents, S_N and theta")
    problem(sp)
    sp.add_argument("--tol", type=float)

    sp = add("hyp2f1", cmd_hyp2f1, "evaluate 2F1(a,b;c;z)")
    for name in ("a", "b", "c", "z"):
        sp.add_argument(f"--{name}", type=float)
    sp.add_argument("--series-tol", dest="series_tol", type=float)
    sp.add_argument("--max-terms", dest="max_terms", type=int)

    sp = add("verify-identities", cmd_verify, "check the test-function identities")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--mu", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--samples", type=int)

    sp = add("simulate", cmd_simulate, "integrate one solution and detect blowup")
    problem(sp)
    for name, typ in (("eps", float), ("r0", float), ("amp_f", float), ("amp_g", float),
                      ("T_max", float), ("dr", float), ("cfl", float),
                      ("blow_threshold", float), ("snapshot_every", int), ("levels", int)):
        sp.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ)

    sp = add("functionals", cmd_functionals, "integral functionals of a saved run")
    sp.add_argument("--run")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--q", type=float, help="also fit the a-priori inequality constants")

    sp = add("blowup-ode", cmd_blowup_ode, "scaling of the ODE blowup criteria")
    sp.add_argument("--case", choices=["i", "ii"])
    sp.add_argument("--p", type=float)
    sp.add_argument("--C", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--eps-range", dest="eps_range")

    sp = add("sweep", cmd_sweep, "lifespan sweep over eps with fit and report")
    problem(sp)
    for name, typ in (("r0", float), ("amp_f", float), ("amp_g", float), ("T_cap", float),
                      ("dr", float), ("cfl", float), ("blow_threshold", float),
                      ("grid_levels", int), ("seed", int)):
        sp.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ)
    sp.add_argument("--eps-range", dest="eps_range", help="a:b:n, log-spaced")
    sp.add_argument("--min-decades", dest="min_decades", type=float,
                    help="smallest eps span (decades) accepted by the fit")

    sp = add("fit", cmd_fit, "refit a sweep.csv")
    problem(sp)
    sp.add_argument("--sweep-csv", dest="sweep_csv")
    sp.add_argument("--min-decades", dest="min_decades", type=float)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = _load_config(args.config)
        for flag in ("json", "quiet"):
            if not getattr(args, flag) and config.get(flag):
                setattr(args, flag, True)
        return args.func(args, Settings(args, config))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
