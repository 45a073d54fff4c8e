"""
Command-line driver: ``friedrichs {simulate,choi,poles,duality,kernel}``.

Exit status is 0 on success, 1 when a numerical gate fails and 2 for
usage, model-file or configuration errors.  Every file goes to
``--output-dir``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import dynmap, heisenberg, kernel, oracle, propagator, resolvent
from .kernel import ClosedForm, ClosedFormUnavailable, Quadrature
from .model import (InvalidModelError, ModelSpec, default_omega_max, hermitian_basis,
                    make_grid, probe_states, validate)
from .modelfile import PRESETS, GridConfig, ModelFileError, load_model, preset

__all__ = ["main", "build_parser", "RunConfig"]

EXIT_OK, EXIT_GATE, EXIT_USAGE = 0, 1, 2
MODES = ("grid", "physical", "extended", "auto")
DEFAULT_GRID_N = {"simulate": 400, "choi": 400, "kernel": 400, "poles": 400, "duality": 100}
DEFAULT_MODE = {"simulate": "grid", "choi": "auto", "kernel": "grid", "duality": "grid",
                "poles": "extended"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    spec: ModelSpec
    grid_cfg: GridConfig | None
    dt: float
    steps: int
    grid_n: int | None
    grid_scheme: str | None
    omega_max: float | None
    output_dir: str
    fmt: str
    oracle: bool
    kernel_mode: str | None
    args: argparse.Namespace

    @property
    def t_max(self):
        return self.dt * self.steps

    def grid(self):
        cfg = self.grid_cfg or GridConfig()
        n = self.grid_n or cfg.n or DEFAULT_GRID_N[self.command]
        scheme = self.grid_scheme or cfg.scheme
        om = self.omega_max or cfg.omega_max or default_omega_max(self.spec, n, self.t_max)
        try:
            return make_grid(scheme, n, om)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def mode(self, grid=None):
        name = self.kernel_mode or DEFAULT_MODE[self.command]
        if name == "grid":
            return Quadrature(grid if grid is not None else self.grid())
        if name == "auto":
            try:
                for c in self.spec.channels:
                    kernel.correlation(c, c, 0.0, ClosedForm("physical"))
                return ClosedForm("physical")
            except ClosedFormUnavailable:
                return Quadrature(grid if grid is not None else self.grid())
        return ClosedForm(name)

    def path(self, name):
        return os.path.join(self.output_dir, name)


def _fmt(x):
    return f"{x:.16e}"


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _kernel_table(cfg: RunConfig, mode):
    try:
        return kernel.tabulate_kernel(cfg.spec, cfg.dt, cfg.steps, mode)
    except ClosedFormUnavailable as exc:
        raise UsageError(f"kernel mode {cfg.kernel_mode or 'default'}: {exc}") from None


def _mode_name(mode):
    return "grid" if isinstance(mode, Quadrature) else mode.support


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.oracle:
        # before building the grid: a huge Gauss-Legendre rule is itself costly
        oracle.check_dimension(cfg.spec.n, cfg.grid_n or (cfg.grid_cfg and cfg.grid_cfg.n)
                               or DEFAULT_GRID_N["simulate"])
    grid = cfg.grid()
    mode = cfg.mode(grid)
    table = _kernel_table(cfg, mode)
    traj = propagator.solve_amplitude(cfg.spec, table, cfg.dt, cfg.steps)
    stride = max(1, cfg.args.stride)
    exc = propagator.reconstruct_excitation(cfg.spec, traj, grid, stride=stride)
    nd = propagator.norm_defect(traj, exc)
    excess = traj.contraction_excess()
    summary = {"command": "simulate", "kernel_mode": _mode_name(mode), "dt": cfg.dt,
               "steps": cfg.steps, "grid": {"scheme": grid.scheme, "n": grid.n_nodes,
                                            "omega_max": grid.omega_max},
               "max_norm_defect": float(nd.max()), "contraction_excess": excess,
               "tolerance": cfg.args.tp_tol}
    if cfg.fmt == "csv":
        propagator.write_amplitude_csv(traj, cfg.path("amplitude.csv"))
        _write_rows(cfg.path("norm_defect.csv"), ["t", "norm_defect"],
                    [[_fmt(t), _fmt(d)] for t, d in zip(exc.times, nd)])
    else:
        with open(cfg.path("amplitude.json"), "w") as fh:
            fh.write(propagator.trajectory_dump(traj))
            fh.write("\n")
        _write_json(cfg.path("norm_defect.json"),
                    [{"t": float(t), "norm_defect": float(d)} for t, d in zip(exc.times, nd)])
    if cfg.oracle:
        H = oracle.build(cfg.spec, grid)
        ts = exc.times
        ex = oracle.exact_amplitude(H, ts)
        err = [float(np.linalg.norm(traj.at(t) - e, 2)) for t, e in zip(ts, ex)]
        summary["max_oracle_error"] = max(err)
        if cfg.fmt == "csv":
            _write_rows(cfg.path("oracle_comparison.csv"), ["t", "oracle_error"],
                        [[_fmt(t), _fmt(e)] for t, e in zip(ts, err)])
        else:
            _write_json(cfg.path("oracle_comparison.json"),
                        [{"t": float(t), "oracle_error": e} for t, e in zip(ts, err)])
    passed = excess <= cfg.args.tp_tol and float(nd.max()) <= cfg.args.tp_tol
    summary["passed"] = passed
    _write_json(cfg.path("simulate.json"), summary)
    print(f"max norm defect {nd.max():.3e}, contraction excess {excess:.3e}")
    if "max_oracle_error" in summary:
        print(f"max oracle error {summary['max_oracle_error']:.3e}")
    if not passed:
        print("gate failed: norm defect or contraction above tolerance", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def _sample_times(cfg, count):
    k = np.unique(np.rint(np.linspace(0, cfg.steps, count + 1)[1:]).astype(int))
    return [float(j * cfg.dt) for j in k]


def cmd_choi(cfg: RunConfig) -> int:
    grid = cfg.grid()
    mode = cfg.mode(grid)
    table = _kernel_table(cfg, mode)
    traj = propagator.solve_amplitude(cfg.spec, table, cfg.dt, cfg.steps)
    exc = propagator.reconstruct_excitation(cfg.spec, traj, grid)
    times = _sample_times(cfg, cfg.args.samples)
    report = dynmap.certify(traj, exc, times, cp_tol=cfg.args.cp_tol, tp_tol=cfg.args.tp_tol)
    if cfg.fmt == "csv":
        report.write_csv(cfg.path("certification.csv"))
    else:
        with open(cfg.path("certification.json"), "w") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    print(f"min Choi eigenvalue {report.min_choi_eig:.3e}, "
          f"max trace defect {report.max_trace_defect:.3e}")
    if not report.passed:
        bad = ", ".join(f"{t:.6g}" for t in report.failing_times)
        print(f"certification failed at t = {bad}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_poles(cfg: RunConfig) -> int:
    name = cfg.kernel_mode or DEFAULT_MODE["poles"]
    if name not in ("extended", "auto"):
        raise UsageError("pole search needs the continued closed form (--kernel-mode extended)")
    try:
        poles = resolvent.find_poles(cfg.spec, seed_count=cfg.args.seeds)
    except resolvent.NotContinuable as exc:
        raise UsageError(str(exc)) from None
    if cfg.fmt == "csv":
        _write_rows(cfg.path("poles.csv"), ["re", "im", "residual"],
                    [[_fmt(p.location.real), _fmt(p.location.imag), _fmt(p.residual)]
                     for p in poles])
    else:
        with open(cfg.path("poles.json"), "w") as fh:
            fh.write(resolvent.poles_to_json(poles))
            fh.write("\n")
    for p in poles:
        print(f"pole {p.location.real:.12g} {p.location.imag:+.12g}i")
    if not poles:
        print("no pole converged in the search box", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def _select(spec_text, items, label):
    if spec_text in (None, "", "all"):
        return list(range(len(items)))
    out = []
    for part in spec_text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            rng = range(int(lo), int(hi) + 1)
        else:
            rng = [int(part)]
        for k in rng:
            if not 1 <= k <= len(items):
                raise UsageError(f"{label} index {k} outside 1..{len(items)}")
            out.append(k - 1)
    return out


def cmd_duality(cfg: RunConfig) -> int:
    if (cfg.kernel_mode or "grid") != "grid":
        raise UsageError("duality compares both pictures on the shared grid (--kernel-mode grid)")
    try:
        times = [float(x) for x in cfg.args.times.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse --times {cfg.args.times!r}") from None
    if any(t < 0 for t in times):
        raise UsageError("times must be non-negative")
    n = cfg.spec.n
    basis, states = hermitian_basis(n), probe_states(n)
    try:
        oi = _select(cfg.args.observables, basis, "observable")
        si = _select(cfg.args.states, states, "state")
    except ValueError:
        raise UsageError("index patterns look like '1,3-4'") from None
    cfg.steps = max(cfg.steps, int(np.ceil(max(times) / cfg.dt - 1e-9)))
    grid = cfg.grid()
    try:
        rows = heisenberg.duality_table(cfg.spec, grid, [basis[k] for k in oi],
                                        [states[k] for k in si], times, cfg.dt,
                                        heisenberg_dt=cfg.args.heisenberg_dt)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for r in rows:
        r["observable"] = oi[r["observable"]] + 1
        r["state"] = si[r["state"]] + 1
    if cfg.fmt == "csv":
        _write_rows(cfg.path("duality.csv"),
                    ["t", "observable", "state", "heisenberg_value", "schrodinger_value", "defect"],
                    [[_fmt(r["t"]), r["observable"], r["state"], _fmt(r["heisenberg_value"].real),
                      _fmt(r["schrodinger_value"].real), _fmt(r["defect"])] for r in rows])
    else:
        _write_json(cfg.path("duality.json"),
                    [{"t": r["t"], "observable": r["observable"], "state": r["state"],
                      "heisenberg_value": [r["heisenberg_value"].real, r["heisenberg_value"].imag],
                      "schrodinger_value": [r["schrodinger_value"].real,
                                            r["schrodinger_value"].imag],
                      "defect": r["defect"]} for r in rows])
    worst = max((r["defect"] for r in rows), default=0.0)
    print(f"max duality defect {worst:.3e}")
    if worst > cfg.args.duality_tol:
        print(f"duality gate failed: {worst:.3e} > {cfg.args.duality_tol:.3e}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_kernel(cfg: RunConfig) -> int:
    mode = cfg.mode()
    table = _kernel_table(cfg, mode)
    if cfg.fmt == "csv":
        kernel.write_kernel_csv(table, cfg.path("kernel.csv"))
    else:
        _write_json(cfg.path("kernel.json"),
                    {"dt": table.dt, "mode": _mode_name(mode),
                     "samples": [[[[float(z.real), float(z.imag)] for z in row] for row in K]
                                 for K in table.samples]})
    print(f"wrote {table.n_steps + 1} kernel samples")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "choi": cmd_choi, "poles": cmd_poles,
            "duality": cmd_duality, "kernel": cmd_kernel}


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _positive(kind):
    def conv(text):
        try:
            x = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}") from None
        if not x > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return x
    return conv


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="model file (JSON)")
    src.add_argument("--preset", choices=sorted(PRESETS), help="shipped acceptance model")
    common.add_argument("--dt", type=_positive(float), default=1e-3, help="time step")
    common.add_argument("--steps", type=_positive(int), default=5000, help="number of steps M")
    common.add_argument("--grid-n", type=_positive(int), help="reservoir nodes N")
    common.add_argument("--grid-scheme", choices=["gauss_legendre", "uniform_trapezoid"])
    common.add_argument("--omega-max", type=_positive(float), help="reservoir cutoff")
    common.add_argument("--output-dir", default=".", help="directory for all output files")
    common.add_argument("--format", choices=["csv", "json"], default="csv", dest="fmt")
    common.add_argument("--oracle", action="store_true",
                        help="compare against exact diagonalization (simulate)")
    common.add_argument("--kernel-mode", choices=MODES,
                        help="grid quadrature, physical or extended closed form")
    common.add_argument("--cp-tol", type=_positive(float), default=1e-8)
    common.add_argument("--tp-tol", type=_positive(float), default=1e-4)

    p = argparse.ArgumentParser(prog="friedrichs",
                                description="Reduced dynamics of an n-level system in a vacuum field.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", parents=[common], help="amplitude trajectory and norm defect")
    s.add_argument("--stride", type=_positive(int), default=100,
                   help="sample spacing (in steps) of the norm-defect and oracle files")
    c = sub.add_parser("choi", parents=[common], help="complete-positivity certificate")
    c.add_argument("--samples", type=_positive(int), default=50, help="number of sample times")
    q = sub.add_parser("poles", parents=[common], help="second-sheet resonance poles")
    q.add_argument("--seeds", type=_positive(int), default=5, help="Newton seeds per axis")
    d = sub.add_parser("duality", parents=[common], help="Heisenberg/Schrodinger duality check")
    d.add_argument("--times", default="0.5,1,2", help="comma-separated sample times")
    d.add_argument("--observables", help="1-based indices into the Hermitian basis, e.g. '1,3-4'")
    d.add_argument("--states", help="1-based indices into the probe states")
    d.add_argument("--heisenberg-dt", type=_positive(float), default=1e-2,
                   help="largest step of the Heisenberg integration")
    d.add_argument("--duality-tol", type=_positive(float), default=1e-4)
    sub.add_parser("kernel", parents=[common], help="tabulated memory kernel")
    return p


def _config(args) -> RunConfig:
    if args.preset:
        spec, grid_cfg = preset(args.preset)
    else:
        spec, grid_cfg = load_model(args.model)
    report = validate(spec)
    if not report.ok:
        raise UsageError("invalid model: " + "; ".join(report.violations))
    return RunConfig(args.command, spec, grid_cfg, args.dt, args.steps, args.grid_n,
                     args.grid_scheme, args.omega_max, args.output_dir, args.fmt, args.oracle,
                     args.kernel_mode, args)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        os.makedirs(cfg.output_dir, exist_ok=True)
        return COMMANDS[args.command](cfg)
    except (UsageError, ModelFileError, InvalidModelError, oracle.OracleDimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (heisenberg.StepTooLargeError, resolvent.ContourConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GATE


if __name__ == "__main__":
    sys.exit(main())
