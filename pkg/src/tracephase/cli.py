"""Experiment runner: one subcommand per workflow, CSV artifacts plus a run manifest.

Exit codes: 0 all configured checks pass, 1 a check failed, 2 the config
does not parse, 3 numerical failure (partial artifacts are kept).
"""

import argparse
import datetime
import json
import platform
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig
from .domain import HalfSpaceGrid, ScalarField
from .energy import BREAKDOWN_CSV_HEADER, energy, lipschitz_constant
from .estimates import (RecursionParams, calibrate_recursion, epsilon_bound, proof_quantities,
                        recursion_check, scan)
from .model import well_by_name
from .solver import (NumericalFailure, Regularization, SolveOptions, heteroclinic_1d, minimize,
                     planar_interface, q_minimality_audit)

COMMANDS = ("minimize", "profile-1d", "scan", "audit-q", "proof-quantities", "check-recursion",
            "full-verify")


class Run:
    """Owns one output directory; records every file it writes."""

    def __init__(self, cfg: ExperimentConfig, command: str, config_text: str):
        self.cfg = cfg
        self.command = command
        self.config_text = config_text
        self.out = Path(cfg.run.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.summary = []
        self.ok = True

    def write(self, name: str, text: str):
        (self.out / name).write_text(text)
        if name not in self.files:
            self.files.append(name)

    def check(self, key: str, value, passed: bool):
        self.summary.append((key, value, passed))
        self.ok &= bool(passed)

    def note(self, key: str, value):
        self.summary.append((key, value, None))

    def finish(self, status: str):
        if self.summary:
            lines = []
            for key, value, passed in self.summary:
                lines.append(f"{key}={_fmt(value)}")
                if passed is not None:
                    lines.append(f"{key}_pass={'true' if passed else 'false'}")
            lines.append(f"overall={'pass' if self.ok else 'fail'}")
            self.write("summary.txt", "\n".join(lines) + "\n")
        manifest = {
            "command": self.command,
            "status": status,
            "seed": self.cfg.solver.seed,
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "versions": {"tracephase": __version__, "numpy": np.__version__,
                         "python": platform.python_version()},
            "config": self.cfg.to_text(),
            "files": sorted(self.files) + ["manifest.json"],
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    return repr(v) if isinstance(v, float) else str(v)


def build_grid(cfg) -> HalfSpaceGrid:
    g = cfg.grid
    return HalfSpaceGrid(g.dim, g.h, g.counts, g.origin_offset)


def build_well(cfg):
    w = cfg.well
    return well_by_name(w.name, w.p, w.C_o)


def build_options(cfg) -> SolveOptions:
    s = cfg.solver
    return SolveOptions(max_iters=s.max_iters, tol=s.tol, step0=s.step0, backtrack=s.backtrack,
                        pinned=s.pinned, delta=Regularization(s.delta), seed=s.seed)


def initial_field(cfg, grid) -> ScalarField:
    s = cfg.solver
    if s.init == "planar":
        f = planar_interface(grid, s.init_width)
    elif s.init.startswith("constant:"):
        f = ScalarField.constant(grid, float(s.init.split(":", 1)[1]))
    elif s.init == "noise":
        rng = np.random.default_rng(s.seed)
        f = ScalarField(grid, rng.uniform(-1.0, 1.0, grid.shape))
    elif s.init.startswith("file:"):
        f = ScalarField.from_csv(Path(s.init.split(":", 1)[1]).read_text())
        if f.grid != grid:
            raise ConfigError("initial field grid differs from [grid]")
    else:
        raise ConfigError(f"unknown solver.init {s.init!r}")
    if s.noise > 0:
        rng = np.random.default_rng(s.seed)
        f = ScalarField(grid, np.clip(f.values + s.noise * rng.standard_normal(grid.shape), -1, 1))
    return f


def do_minimize(run: Run, grid, well):
    f0 = initial_field(run.cfg, grid)
    try:
        f, log = minimize(grid, f0, well, build_options(run.cfg))
    except NumericalFailure as exc:
        if exc.last_field is not None:
            run.write("field.csv", exc.last_field.to_csv())
        raise
    run.write("field.csv", f.to_csv())
    run.write("iterations.csv", log.to_csv())
    e = energy(grid, f, well)
    run.write("energy.csv", BREAKDOWN_CSV_HEADER + "\n" + e.csv_row("full") + "\n")
    return f, log


def obtain_field(run: Run, grid, well):
    if run.cfg.scan.field:
        f = ScalarField.from_csv(Path(run.cfg.scan.field).read_text())
        if f.grid != grid:
            raise ConfigError("scan.field grid differs from [grid]")
        return f
    return do_minimize(run, grid, well)[0]


def do_scan(run: Run, grid, well, f):
    sc = run.cfg.scan
    sides = ("above", "below") if sc.side == "both" else (sc.side,)
    reports = {}
    for side in sides:
        rep = scan(grid, f, well, sc.theta, sc.x_o, sc.radii, side=side)
        run.write("density.csv" if side == "above" else "density_below.csv", rep.to_csv())
        reports[side] = rep
    return reports


def do_audit(run: Run, grid, well, f):
    a = run.cfg.audit
    rep = q_minimality_audit(grid, f, well, a.Q, a.trials, a.perturb_scale, run.cfg.solver.seed,
                             pinned=run.cfg.solver.pinned,
                             radius_range=(a.radius_min, a.radius_max), delta=run.cfg.solver.delta)
    run.write("audit.csv", rep.to_csv())
    return rep


def recursion_sequences(run: Run, grid=None, well=None, f=None):
    rc = run.cfg.recursion
    n = rc.n
    if rc.source == "fixture:power":
        k = np.arange(1, rc.length + 1, dtype=float)
        return np.zeros_like(k), k ** n, float(n)
    if rc.source == "fixture:constant":
        C = rc.C if rc.C >= 1 else 2.0
        return np.zeros(rc.length), np.full(rc.length, 1.0 / C), C
    if rc.source.startswith("file:"):
        data = np.loadtxt(rc.source.split(":", 1)[1], delimiter=",", skiprows=1, ndmin=2)
        return data[:, 1], data[:, 2], None
    if rc.source == "scan":
        radii = [rc.T * k for k in range(1, rc.K + 1)]
        rep = scan(grid, f, well, run.cfg.scan.theta, run.cfg.scan.x_o, radii)
        lines = ["k,A,V"] + [f"{k},{a!r},{v!r}" for k, a, v in zip(range(1, rc.K + 1), rep.A, rep.V)]
        run.write("recursion_sequences.csv", "\n".join(lines) + "\n")
        return np.array(rep.A), np.array(rep.V), None
    raise ConfigError(f"unknown recursion.source {rc.source!r}")


def do_recursion(run: Run, A, V, C_hint):
    rc = run.cfg.recursion
    C = rc.C if rc.C >= 1 else C_hint
    if C is None:
        params = calibrate_recursion(A, V, rc.n)
        if params is None:
            run.write("recursion.txt", "calibrated=false\n")
            return None
    else:
        eps = rc.epsilon if rc.epsilon > 0 else epsilon_bound(C, rc.n) * (1 - 1e-9)
        params = RecursionParams(C, eps, rc.n, tuple(A), tuple(V))
    verdict = recursion_check(params)
    run.write("recursion.txt", f"C={params.C!r}\nepsilon={params.epsilon!r}\nn={params.n}\n"
              + verdict.to_text())
    return verdict


def cmd_minimize(run, grid, well):
    f, log = do_minimize(run, grid, well)
    run.note("converged", log.converged)
    run.note("iterations", len(log.rows) - 1)
    run.note("energy", float(log.rows[-1][1]))
    run.note("lipschitz", lipschitz_constant(f))


def cmd_profile(run, grid, well):
    s = run.cfg.solver
    prof = heteroclinic_1d(well.p, well, s.profile_half_length, s.profile_h)
    lines = ["t,u"] + [f"{t!r},{u!r}" for t, u in zip(prof.t.tolist(), prof.u.tolist())]
    run.write("profile.csv", "\n".join(lines) + "\n")
    run.note("energy", prof.energy)
    run.note("center_value", float(prof.u[len(prof.u) // 2]))


def cmd_scan(run, grid, well):
    f = obtain_field(run, grid, well)
    for side, rep in do_scan(run, grid, well, f).items():
        run.check(f"v_exponent_{side}", rep.fitted_exponent_V, rep.fitted_exponent_V is not None)
        run.check(f"e_exponent_{side}", rep.fitted_exponent_E, rep.fitted_exponent_E is not None)


def cmd_audit(run, grid, well):
    f = obtain_field(run, grid, well)
    rep = do_audit(run, grid, well, f)
    run.check("audit_violations", len(rep.violations), not rep.violations)


def cmd_proof(run, grid, well):
    f = obtain_field(run, grid, well)
    sc = run.cfg.scan
    lines = ["k,T,l1,l2,l3,lhs,ratio"]
    for k in sc.k_list:
        q = proof_quantities(grid, f, well, sc.x_o, k, sc.T, sc.theta)
        lines.append(f"{q.k},{q.T!r},{q.l1!r},{q.l2!r},{q.l3!r},{q.lhs!r},{q.ratio!r}")
    run.write("proof.csv", "\n".join(lines) + "\n")


def cmd_recursion(run, grid, well):
    f = None
    if run.cfg.recursion.source == "scan":
        f = obtain_field(run, grid, well)
    A, V, C_hint = recursion_sequences(run, grid, well, f)
    verdict = do_recursion(run, A, V, C_hint)
    run.check("recursion_conclusion",
              None if verdict is None else verdict.conclusion_holds,
              verdict is not None and verdict.conclusion_holds is not False)


def cmd_full_verify(run, grid, well):
    cfg, v = run.cfg, run.cfg.verify
    f, log = do_minimize(run, grid, well)
    run.note("converged", log.converged)
    run.note("lipschitz", lipschitz_constant(f))
    n = grid.dim
    for side, rep in do_scan(run, grid, well, f).items():
        aV, aE, aA = rep.fitted_exponent_V, rep.fitted_exponent_E, rep.fitted_exponent_A
        run.check(f"v_exponent_{side}", aV,
                  aV is not None and v.v_exponent_min <= aV <= v.v_exponent_max)
        dr = rep.density_ratio(v.density_r_min)
        run.check(f"density_ratio_{side}", dr, dr is not None and dr >= v.density_ratio_min)
        run.check(f"a_exponent_{side}", aA, aA is not None and aA <= n - 1 + v.a_exponent_slack)
        if side == "above":
            run.check("e_exponent", aE,
                      aE is not None and v.e_exponent_min <= aE <= v.e_exponent_max)
    if v.audit:
        rep = do_audit(run, grid, well, f)
        run.check("audit_violations", len(rep.violations), not rep.violations)
        run.check("audit_worst_ratio", rep.worst_ratio, rep.worst_ratio <= cfg.audit.Q)
    if v.recursion:
        A, V, C_hint = recursion_sequences(run, grid, well, f)
        verdict = do_recursion(run, A, V, C_hint)
        run.check("recursion_hypotheses", verdict is not None and verdict.hypotheses_hold,
                  verdict is not None and verdict.hypotheses_hold)
        run.check("recursion_conclusion", None if verdict is None else verdict.conclusion_holds,
                  verdict is not None and verdict.conclusion_holds is True)


HANDLERS = {
    "minimize": cmd_minimize, "profile-1d": cmd_profile, "scan": cmd_scan, "audit-q": cmd_audit,
    "proof-quantities": cmd_proof, "check-recursion": cmd_recursion, "full-verify": cmd_full_verify,
}


def bundled_config(name: str) -> str:
    return resources.files("tracephase").joinpath("configs", f"{name}.ini").read_text()


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tracephase", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="INI file, or bundled:<name> for a shipped config")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override section.key=value (repeatable)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int)
    return ap


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.out is not None:
        overrides.append(f"run.out_dir={args.out}")
    if args.seed is not None:
        overrides.append(f"solver.seed={args.seed}")
    try:
        if args.config is None:
            text, source = "", "<defaults>"
        elif args.config.startswith("bundled:"):
            name = args.config.split(":", 1)[1]
            text, source = bundled_config(name), args.config
        else:
            text, source = Path(args.config).read_text(), args.config
        cfg = ExperimentConfig.from_text(text, overrides, source=source)
        grid = build_grid(cfg) if args.command != "profile-1d" else None
        well = build_well(cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {source}:0:0: {exc}", file=sys.stderr)
        return 2
    run = Run(cfg, args.command, text)
    try:
        HANDLERS[args.command](run, grid, well)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        run.finish("numerical-failure")
        return 3
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        run.finish("config-error")
        return 2
    run.finish("pass" if run.ok else "fail")
    for key, value, passed in run.summary:
        tag = "" if passed is None else (" [pass]" if passed else " [FAIL]")
        print(f"{key}={_fmt(value)}{tag}")
    return 0 if run.ok else 1


if __name__ == "__main__":
    sys.exit(main())
