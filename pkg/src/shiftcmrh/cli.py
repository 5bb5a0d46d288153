"""Benchmark command line: ``shiftcmrh run`` and ``shiftcmrh compare``.

Problems come from a Matrix Market file or the built-in 3D
convection-diffusion-reaction generator. ``run`` writes a JSON report and an
optional CSV residual history; ``compare`` runs several solvers on the same
problem and prints one CSV row per solver.

Shift lists start with a minus sign more often than not, so pass them as
``--shifts=-0.1,-0.2`` to keep argparse from reading them as options.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, MatrixMarketError
from .mmio import read_matrix_market
from .nested import NESTED_SOLVERS, nested_solve
from .problems import Cdr3dSpec, generate_cdr3d
from .seed import SolverConfig, cmrh, gmres
from .shifted import ShiftedProblem, shifted_cmrh, shifted_gmres
from .sparse import CostCounters, SparseMatrix

__all__ = ["RunConfig", "SOLVERS", "compare", "main", "parse_shift", "run"]

SOLVERS = ("cmrh", "gmres", "scmrh", "sgmres") + NESTED_SOLVERS

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


class ConfigError(ValueError):
    pass


def parse_shift(text: str):
    """Parse ``"-0.5"``, ``"1e-3"``, ``"2i"`` or ``"0.1-2.5i"`` into a number."""
    t = text.strip().replace(" ", "")
    if not t:
        raise ConfigError("empty shift literal")
    try:
        if t.endswith(("i", "j")):
            v = complex(t[:-1] + "j")
        else:
            v = float(t)
    except ValueError:
        raise ConfigError(f"cannot parse shift {text!r}") from None
    if isinstance(v, complex) and v.imag == 0:
        return v.real
    return v


def _shift_repr(s):
    if isinstance(s, complex):
        return f"{s.real:.17g}{s.imag:+.17g}i"
    return float(s)


@dataclass
class RunConfig:
    solver: str
    shifts: list
    matrix: str | None = None
    cdr3d: tuple | None = None
    negate: bool = False
    rhs: str = "ones"
    seed: str = "first"
    restart: int = 40
    tol: float = 1e-8
    max_mvps: int = 6000
    inner_it: int = 10
    outer_max: int = 100
    report: str | None = None
    history: str | None = None

    def validate(self):
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {', '.join(SOLVERS)}")
        if (self.matrix is None) == (self.cdr3d is None):
            raise ConfigError("give exactly one of --matrix and --gen-cdr3d")
        if not self.shifts:
            raise ConfigError("shift list must not be empty")
        if self.seed not in ("first", "zero"):
            raise ConfigError(f"seed policy must be 'first' or 'zero', got {self.seed!r}")
        return self


def load_problem(cfg: RunConfig):
    if cfg.matrix is not None:
        try:
            A = read_matrix_market(cfg.matrix)
        except OSError as exc:
            raise ConfigError(f"cannot read matrix {cfg.matrix}: {exc.strerror or exc}") from None
        except MatrixMarketError as exc:
            raise ConfigError(f"{cfg.matrix}: {exc}") from None
        if cfg.negate:
            A = A.negated()
    else:
        h, eps, bx, by, bz, r = cfg.cdr3d
        A = generate_cdr3d(Cdr3dSpec(h=h, eps=eps, beta=(bx, by, bz), react=r), negate=cfg.negate)
    if cfg.rhs == "ones":
        b = np.ones(A.n)
    else:
        try:
            b = np.loadtxt(cfg.rhs, dtype=complex, ndmin=1)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read right-hand side {cfg.rhs}: {exc}") from None
        if not np.any(b.imag):
            b = b.real.copy()
        if b.shape != (A.n,):
            raise ConfigError(f"right-hand side {cfg.rhs} has {b.size} entries, matrix has n = {A.n}")
    return A, b


def _solve(cfg: RunConfig, A: SparseMatrix, b):
    """Dispatch to a solver; returns (per-shift results, counters)."""
    scfg = SolverConfig(restart=cfg.restart, tol=cfg.tol, max_mvps=cfg.max_mvps)
    if cfg.solver in ("cmrh", "gmres"):
        fn = cmrh if cfg.solver == "cmrh" else gmres
        total = CostCounters()
        rows = []
        for s in cfg.shifts:
            rep = fn(A, b, cfg=scfg, sigma=s)
            for name, value in rep.counters.as_dict().items():
                total.add(name, value)
            rows.append(dict(shift=s, x=rep.x, converged=rep.converged, cycles=rep.cycles,
                             history=list(zip(rep.history_mvps, rep.residual_history))))
        return rows, total
    problem = ShiftedProblem(A, b, cfg.shifts, seed=cfg.seed)
    if cfg.solver in ("scmrh", "sgmres"):
        fn = shifted_cmrh if cfg.solver == "scmrh" else shifted_gmres
        rep = fn(problem, scfg)
    else:
        inner, outer = cfg.solver.split("-")
        ncfg = SolverConfig(restart=cfg.outer_max, tol=cfg.tol, max_mvps=max(cfg.max_mvps, cfg.outer_max))
        rep = nested_solve(problem, outer, inner, cfg.inner_it, ncfg)
    rows = [dict(shift=r.shift, x=r.x, converged=r.converged, cycles=r.cycles,
                 history=list(zip(r.history_mvps, r.residual_history))) for r in rep.results]
    return rows, rep.counters


def run(cfg: RunConfig):
    """Run one configuration; returns ``(exit_code, report_dict)``.

    Configuration and I/O problems raise :class:`ConfigError`; :func:`main`
    turns them into exit code 1.
    """
    cfg.validate()
    A, b = load_problem(cfg)
    start = time.perf_counter()
    try:
        rows, counters = _solve(cfg, A, b)
    except DimensionMismatch as exc:
        raise ConfigError(str(exc)) from None
    wall = time.perf_counter() - start

    bnorm = float(np.linalg.norm(b))
    shifts = []
    for row in rows:
        r = b - (A @ row["x"] - row["shift"] * row["x"])
        shifts.append({
            "shift": _shift_repr(row["shift"]),
            "converged": bool(row["converged"]),
            "cycles_or_outer_steps": int(row["cycles"]),
            "final_true_relative_residual": float(np.linalg.norm(r)) / bnorm,
        })
    echo = asdict(cfg)
    echo["shifts"] = [_shift_repr(s) for s in cfg.shifts]
    report = {
        "solver": cfg.solver,
        "config": echo,
        "n": A.n,
        "nnz": A.nnz,
        "shifts": shifts,
        "global": {
            "mvps": counters.mvps,
            "inner_mvps": counters.inner_mvps,
            "residual_check_mvps": counters.residual_check_mvps,
            "wall_seconds": wall,
        },
    }
    if cfg.report:
        _write(cfg.report, json.dumps(report, indent=2) + "\n")
    if cfg.history:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mvps", "shift_index", "relative_residual"])
        for i, row in enumerate(rows):
            for mv, rel in row["history"]:
                w.writerow([mv, i, repr(float(rel))])
        _write(cfg.history, buf.getvalue())
    n_conv = sum(s["converged"] for s in shifts)
    code = EXIT_OK if n_conv == len(shifts) else EXIT_PARTIAL
    return code, report


def _write(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror or exc}") from None


COMPARE_COLUMNS = ["solver", "n", "mvps", "inner_mvps", "residual_check_mvps", "converged",
                   "max_relative_residual", "wall_seconds"]


def compare(base: RunConfig, solvers) -> str:
    """Run ``solvers`` on ``base``'s problem and return an aligned CSV table."""
    solvers = list(solvers)
    if not solvers:
        raise ConfigError("compare needs at least one solver")
    out = []
    for sid in solvers:
        cfg = RunConfig(**{**asdict(base), "solver": sid, "report": None, "history": None})
        _, rep = run(cfg)
        out.append([
            sid, rep["n"], rep["global"]["mvps"], rep["global"]["inner_mvps"],
            rep["global"]["residual_check_mvps"],
            f"{sum(s['converged'] for s in rep['shifts'])}/{len(rep['shifts'])}",
            f"{max(s['final_true_relative_residual'] for s in rep['shifts']):.3e}",
            f"{rep['global']['wall_seconds']:.3f}",
        ])
    table = [COMPARE_COLUMNS] + [[str(c) for c in row] for row in out]
    widths = [max(len(r[k]) for r in table) for k in range(len(COMPARE_COLUMNS))]
    return "\n".join(",".join(c.rjust(w) for c, w in zip(r, widths)) for r in table) + "\n"


def _cdr3d_arg(text):
    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError("expected H,EPS,BX,BY,BZ,R")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric value in {text!r}") from None


def _add_problem_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", metavar="PATH", help="Matrix Market coordinate file")
    src.add_argument("--gen-cdr3d", metavar="H,EPS,BX,BY,BZ,R", type=_cdr3d_arg,
                     help="generate the 3D convection-diffusion-reaction matrix")
    p.add_argument("--negate", action="store_true", help="use -A instead of A")
    sh = p.add_mutually_exclusive_group(required=True)
    sh.add_argument("--shifts", metavar="LIST", help="comma separated, e.g. --shifts=-0.1,0.2+1i")
    sh.add_argument("--shifts-file", metavar="PATH", help="whitespace or comma separated shifts")
    p.add_argument("--seed", choices=("first", "zero"), default="first")
    p.add_argument("--rhs", default="ones", metavar="{ones|PATH}")
    p.add_argument("--restart", type=int, default=40, metavar="M")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-mvps", type=int, default=6000, metavar="N")
    p.add_argument("--inner-it", type=int, default=10, metavar="K")
    p.add_argument("--outer-max", type=int, default=100, metavar="J")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shiftcmrh", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="solve one configuration")
    _add_problem_args(p_run)
    p_run.add_argument("--solver", required=True, choices=SOLVERS)
    p_run.add_argument("--report", metavar="PATH.json", help="JSON report (default: stdout)")
    p_run.add_argument("--history", metavar="PATH.csv", help="residual history table")
    p_cmp = sub.add_parser("compare", help="run several solvers on one problem")
    _add_problem_args(p_cmp)
    p_cmp.add_argument("--solvers", required=True, help="comma separated solver ids")
    p_cmp.add_argument("--output", metavar="PATH.csv", help="write the table here (default: stdout)")
    return parser


def _read_shifts(args):
    if args.shifts is not None:
        text = args.shifts
    else:
        try:
            text = Path(args.shifts_file).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read shifts file {args.shifts_file}: {exc.strerror or exc}") from None
    tokens = [t for t in text.replace(",", " ").split() if t]
    return [parse_shift(t) for t in tokens]


def _config(args, solver) -> RunConfig:
    return RunConfig(
        solver=solver, shifts=_read_shifts(args), matrix=args.matrix, cdr3d=args.gen_cdr3d,
        negate=args.negate, rhs=args.rhs, seed=args.seed, restart=args.restart, tol=args.tol,
        max_mvps=args.max_mvps, inner_it=args.inner_it, outer_max=args.outer_max,
        report=getattr(args, "report", None), history=getattr(args, "history", None),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _config(args, args.solver)
            code, report = run(cfg)
            if not cfg.report:
                sys.stdout.write(json.dumps(report, indent=2) + "\n")
            return code
        solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
        table = compare(_config(args, solvers[0] if solvers else "scmrh"), solvers)
        if args.output:
            _write(args.output, table)
        else:
            sys.stdout.write(table)
        return EXIT_OK
    except (ConfigError, DimensionMismatch, ValueError) as exc:
        print(f"shiftcmrh: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
