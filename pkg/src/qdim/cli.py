"""Command-line driver for the toolkit.

Subcommands: pressure, beta, qdim, dimh, sweep, sample, quantize,
verify, figure1.  Exit codes: 0 success, 1 malformed spec or flags,
2 numerical failure, 3 verification gap above tolerance.

Every artifact embeds the input digest, the seed and the tolerances, so
re-running a command reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalFailure, SpecFormatError
from .measure import sample_measure, save_sample
from .pressure import (beta_of_q, estimate_pressure, hausdorff_dim,
                       legendre_and_figure_data, solve_quantization_dim,
                       truncation_sweep)
from .quantizer import estimate_Dr, lloyd_optimize
from .specio import load_spec

_EXIT_OK = 0
_EXIT_SPEC = 1
_EXIT_NUMERIC = 2
_EXIT_VERIFY = 3


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


def _emit_csv(rows, header, out: str | None) -> None:
    if not out:
        raise SpecFormatError("CSV-producing commands need --out")
    with Path(out).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def _depths(args) -> tuple[int, int] | None:
    # --depth N steers tree-summed estimates to the pair (N//2, N)
    if args.depth is None:
        return None
    if args.depth < 2:
        raise SpecFormatError("--depth must be >= 2")
    return max(1, args.depth // 2), args.depth


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdim",
                                     description="quantization dimensions of conformal measures")
    parser.add_argument("--version", action="version", version=f"qdim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, seed=False, tol=False):
        p.add_argument("--system", required=True, help="system spec JSON")
        p.add_argument("--out", default=None, help="artifact path")
        p.add_argument("--m", type=int, default=None, help="alphabet truncation")
        p.add_argument("--depth", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        if seed:
            p.add_argument("--seed", type=int, default=2024)
        if tol:
            p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("pressure", help="two-parameter pressure estimate")
    common(p)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--t", type=float, required=True)

    p = sub.add_parser("beta", help="temperature function")
    common(p, tol=True)
    p.add_argument("--q", type=float, default=None,
                   help="single value; omit with --out for a 21-point grid CSV")

    p = sub.add_parser("qdim", help="quantization dimension fixed point")
    common(p, tol=True)
    p.add_argument("--r", type=float, required=True)

    p = sub.add_parser("dimh", help="Hausdorff dimension of the limit set")
    common(p, tol=True)

    p = sub.add_parser("sweep", help="truncation sweep of kappa_{r,M}")
    common(p, tol=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--m-list", type=_int_list, required=True)

    p = sub.add_parser("sample", help="draw an empirical measure to CSV")
    common(p, seed=True)
    p.add_argument("--samples", type=int, required=True)

    p = sub.add_parser("quantize", help="Lloyd runs over codebook sizes")
    common(p, seed=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--n-list", type=_int_list, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--restarts", type=int, default=8)

    p = sub.add_parser("verify", help="theoretical kappa_r against the empirical slope")
    common(p, seed=True, tol=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--n-list", type=_int_list, default=[4, 8, 16, 32, 64, 128, 256, 512])
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--restarts", type=int, default=8)

    p = sub.add_parser("figure1", help="temperature curve, chord and spectrum dataset")
    common(p, tol=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--grid", type=int, default=21)

    return parser


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_pressure(args, system, family, meta) -> int:
    est = estimate_pressure(system, family, args.q, args.t, depths=_depths(args),
                            truncation=args.m)
    _emit_json({
        "command": "pressure", "q": est.q, "t": est.t,
        "truncation": est.truncation,
        "depth_values": [[n, v] for n, v in est.depth_values],
        "value": est.value, "error": est.error, "finite": est.finite,
        "tail_bound": est.tail_bound,
        **meta,
    }, args.out)
    return _EXIT_OK


def _cmd_beta(args, system, family, meta) -> int:
    if args.q is None:
        qs = np.linspace(0.0, 1.0, 21)
        rows = [(float(q), beta_of_q(system, family, float(q), args.m, args.tol,
                                     _depths(args)))
                for q in qs]
        _emit_csv(rows, ["q", "beta_q"], args.out)
        return _EXIT_OK
    value = beta_of_q(system, family, args.q, args.m, args.tol, _depths(args))
    _emit_json({"command": "beta", "q": args.q, "beta": value,
                "truncation": args.m, "tolerance": args.tol, **meta}, args.out)
    return _EXIT_OK


def _cmd_qdim(args, system, family, meta) -> int:
    sol = solve_quantization_dim(system, family, args.r, args.m, args.tol,
                                 _depths(args))
    _emit_json({"command": "qdim", "r": sol.r, "q_r": sol.q_r,
                "kappa_r": sol.kappa_r, "D_r": sol.D_r,
                "truncation": sol.truncation, "iterations": len(sol.trace),
                "tolerance": args.tol, **meta}, args.out)
    return _EXIT_OK


def _cmd_dimh(args, system, family, meta) -> int:
    value = hausdorff_dim(system, family, args.m, args.tol, _depths(args))
    _emit_json({"command": "dimh", "dim_h": value, "truncation": args.m,
                "tolerance": args.tol, **meta}, args.out)
    return _EXIT_OK


def _cmd_sweep(args, system, family, meta) -> int:
    result = truncation_sweep(system, family, args.r, args.m_list, args.tol,
                              _depths(args))
    rows = [(e.M, e.kappa) for e in result.entries]
    _emit_csv(rows, ["M", "kappa_rM"], args.out)
    summary = {
        "command": "sweep", "r": result.r,
        "entries": [{"M": e.M, "kappa": e.kappa, "degenerate": e.degenerate}
                    for e in result.entries],
        "kappa_ref": result.kappa_ref, "final_gap": result.final_gap, **meta,
    }
    sys.stdout.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return _EXIT_OK


def _cmd_sample(args, system, family, meta) -> int:
    sample = sample_measure(system, family, args.samples, depth=args.depth,
                            truncation=args.m, seed=args.seed)
    if not args.out:
        raise SpecFormatError("sample needs --out for the CSV artifact")
    save_sample(sample, args.out)
    sys.stdout.write(json.dumps({
        "command": "sample", "count": len(sample), "seed": sample.seed,
        "depth": sample.depth, "truncation": sample.truncation,
        "deficit": sample.deficit, **meta,
    }, sort_keys=True, indent=2) + "\n")
    return _EXIT_OK


def _run_quantize(args, system, family):
    sample = sample_measure(system, family, args.samples, depth=args.depth,
                            truncation=args.m, seed=args.seed)
    runs = []
    for n in args.n_list:
        runs.append(lloyd_optimize(sample, n, args.r, restarts=args.restarts,
                                   seed=args.seed, threads=args.threads))
    return sample, runs


def _cmd_quantize(args, system, family, meta) -> int:
    sample, runs = _run_quantize(args, system, family)
    rows = []
    for k, run in enumerate(runs):
        if k >= 1:
            d_running, _ = estimate_Dr(runs[: k + 1])
        else:
            d_running = float("nan")
        rows.append((run.n, run.r, run.V_hat, run.e_hat, d_running))
    _emit_csv(rows, ["n", "r", "V_hat", "e_hat", "D_running"], args.out)
    manifest = {
        "command": "quantize", "r": args.r, "seed": args.seed,
        "samples": len(sample), "truncation": sample.truncation,
        "runs": [{"n": run.n, "V_hat": run.V_hat, "iterations": run.iterations,
                  "restarts": run.restarts, "converged": run.converged}
                 for run in runs],
        **meta,
    }
    sys.stdout.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return _EXIT_OK


def _cmd_verify(args, system, family, meta) -> int:
    tol = 0.15 if args.tol is None else args.tol
    sol = solve_quantization_dim(system, family, args.r, truncation=args.m)
    sample, runs = _run_quantize(args, system, family)
    d_hat, diagnostics = estimate_Dr(runs, kappa_hint=sol.kappa_r)
    gap = abs(d_hat - sol.kappa_r) / sol.kappa_r
    report = {
        "command": "verify", "r": args.r, "seed": args.seed,
        "samples": len(sample), "n_list": list(args.n_list),
        "kappa_r": sol.kappa_r, "q_r": sol.q_r, "D_hat": d_hat,
        "relative_gap": gap, "tolerance": tol, "passed": bool(gap <= tol),
        "diagnostics": diagnostics, **meta,
    }
    _emit_json(report, args.out)
    return _EXIT_OK if gap <= tol else _EXIT_VERIFY


def _cmd_figure1(args, system, family, meta) -> int:
    data = legendre_and_figure_data(system, family, args.r,
                                    q_grid=np.linspace(0.0, 1.0, args.grid),
                                    truncation=args.m, tolerance=args.tol,
                                    depths=_depths(args))
    _emit_csv(data.rows(), ["q", "beta", "line", "legendre_alpha", "legendre_f"],
              args.out)
    summary = {
        "command": "figure1", "r": data.r, "q_r": data.q_r,
        "intersection": list(data.intersection), "intercept": data.intercept,
        **meta,
    }
    sys.stdout.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return _EXIT_OK


_COMMANDS = {
    "pressure": _cmd_pressure,
    "beta": _cmd_beta,
    "qdim": _cmd_qdim,
    "dimh": _cmd_dimh,
    "sweep": _cmd_sweep,
    "sample": _cmd_sample,
    "quantize": _cmd_quantize,
    "verify": _cmd_verify,
    "figure1": _cmd_figure1,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return _EXIT_SPEC if exc.code not in (0, None) else 0
    try:
        system, family, meta = load_spec(args.system)
        return _COMMANDS[args.command](args, system, family, meta)
    except SpecFormatError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return _EXIT_SPEC
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC
    except ValueError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return _EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
