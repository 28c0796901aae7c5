"""Command-line interface.

Exit status: 0 on success, 1 on usage errors (bad flags, out-of-range
parameters), 2 on numerical failures (invalid state files, annihilating
postselection, eigensolver trouble).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, chsh, collective, optimizer, separability, states
from .densemat import ConvergenceError, NonHermitianError

FAMILIES = ("werner", "gisin", "singlet-polarized", "singlet", "file")


class UsageError(Exception):
    pass


class NumericalError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- state files -------------------------------------------------------------

def _fmt_complex(z: complex) -> str:
    return f"{float(z.real)!r},{float(z.imag)!r}"


def format_state(rho: states.Bipartite) -> str:
    lines = [f"{rho.d_a} {rho.d_b}"]
    for row in rho.mat:
        lines.append(" ".join(_fmt_complex(z) for z in row))
    return "\n".join(lines) + "\n"


def parse_state(text: str) -> states.BipartiteDensity:
    """Read the ``d_A d_B`` header plus one line of ``re,im`` tokens per row."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise NumericalError("empty state file")
    try:
        d_a, d_b = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise NumericalError(f"bad header {lines[0]!r}: expected 'd_A d_B'") from exc
    dim = d_a * d_b
    if len(lines) != dim + 1:
        raise NumericalError(f"expected {dim} matrix rows, found {len(lines) - 1}")
    mat = np.zeros((dim, dim), dtype=complex)
    for r, line in enumerate(lines[1:]):
        tokens = line.split()
        if len(tokens) != dim:
            raise NumericalError(f"row {r} has {len(tokens)} entries, expected {dim}")
        for c, tok in enumerate(tokens):
            try:
                re, im = tok.split(",")
                mat[r, c] = complex(float(re), float(im))
            except ValueError as exc:
                raise NumericalError(f"row {r}, column {c}: bad entry {tok!r}") from exc
    try:
        return states.BipartiteDensity(mat, d_a, d_b)
    except (ValueError, NonHermitianError) as exc:
        raise NumericalError(f"invalid state: {exc}") from exc


# --- argument handling ---------------------------------------------------------

def _add_state_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=FAMILIES, default="werner")
    p.add_argument("--x", type=float, default=None, help="mixing fraction")
    p.add_argument("--a-re", type=float, default=1 / math.sqrt(2))
    p.add_argument("--a-im", type=float, default=0.0)
    p.add_argument("--b-re", type=float, default=1 / math.sqrt(2))
    p.add_argument("--b-im", type=float, default=0.0)
    p.add_argument("--path", type=Path, default=None, help="state file (family 'file')")


def _add_optimizer_flags(p: argparse.ArgumentParser) -> None:
    defaults = optimizer.OptimizerConfig()
    p.add_argument("--mode", choices=("mirrored", "independent"), default="mirrored")
    p.add_argument("--restarts", type=int, default=defaults.restarts)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--no-xor-start", action="store_true", help="random starts only")


def _amplitudes(args) -> tuple[complex, complex]:
    a = complex(args.a_re, args.a_im)
    b = complex(args.b_re, args.b_im)
    norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    if abs(norm - 1.0) > 1e-9:
        raise UsageError(f"|a|^2 + |b|^2 must be 1 (got {norm ** 2:.6g})")
    # absorb parse-level rounding so the constructors' 1e-12 check holds
    return a / norm, b / norm


def _need_x(args) -> float:
    if args.x is None:
        raise UsageError(f"--x is required for family {args.family!r}")
    if not 0.0 <= args.x <= 1.0:
        raise UsageError(f"--x {args.x} outside [0, 1]")
    return args.x


def build_state(args) -> states.BipartiteDensity:
    family = args.family
    if family == "singlet":
        return states.singlet()
    if family == "werner":
        return states.werner(_need_x(args))
    if family == "singlet-polarized":
        return states.singlet_plus_polarized(_need_x(args))
    if family == "gisin":
        a, b = _amplitudes(args)
        return states.gisin_family(a, b, _need_x(args))
    if args.path is None:
        raise UsageError("--path is required for family 'file'")
    try:
        text = args.path.read_text()
    except OSError as exc:
        raise NumericalError(f"cannot read {args.path}: {exc}") from exc
    return parse_state(text)


def _state_inputs(args) -> dict:
    out = {"family": args.family}
    if args.family in ("werner", "gisin", "singlet-polarized"):
        out["x"] = args.x
    if args.family == "gisin":
        out.update(a=[args.a_re, args.a_im], b=[args.b_re, args.b_im])
    if args.family == "file":
        out["path"] = str(args.path)
    return out


def _config(args) -> optimizer.OptimizerConfig:
    if args.restarts < 1:
        raise UsageError("--restarts must be >= 1")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    return optimizer.OptimizerConfig(
        restarts=args.restarts,
        seed=args.seed,
        mode=args.mode,
        start_set="random" if args.no_xor_start else "random+xor",
        threads=args.threads,
    )


def _report(command: str, args, inputs: dict, results: dict, tolerances: dict) -> dict:
    return {
        "command": command,
        "inputs": inputs,
        "results": results,
        "tolerances": tolerances,
        "seed": args.seed,
        "version": __version__,
    }


def _rows_json(rows: collective.LocalRows) -> list[list[float]]:
    return rows.matrix().real.tolist()


# --- subcommands ---------------------------------------------------------------

def cmd_ppt(args) -> dict:
    rho = build_state(args)
    verdict = separability.ppt_check(rho, args.tol)
    results = {
        "min_eigenvalue": verdict.min_eigenvalue,
        "is_ppt": verdict.is_ppt,
        "spectrum": verdict.spectrum.values.tolist(),
    }
    return _report("ppt", args, _state_inputs(args), results, {"ppt": args.tol})


def cmd_chsh(args) -> dict:
    rho = build_state(args)
    t = chsh.t_matrix(rho)
    value = chsh.chsh_max(rho)
    results = {"t_matrix": t.tolist(), "m": chsh.m_value(t), "max": value, "violated": value > 2.0}
    if args.oracle:
        oracle, settings = chsh.brute_force_chsh(rho, restarts=32, seed=args.seed)
        results["oracle_max"] = oracle
        results["oracle_settings"] = {
            k: getattr(settings, k).tolist() for k in ("a", "a_prime", "b", "b_prime")
        }
    return _report("chsh", args, _state_inputs(args), results, {"imag": chsh.IMAG_TOL})


def cmd_thresholds(args) -> dict:
    a, b = _amplitudes(args)
    polarized = chsh.violation_threshold(states.singlet_plus_polarized, 0.5, 1.0)
    results = {
        "mixture_ppt": {
            "value": separability.gisin_ppt_threshold(a, b),
            "formula": "1/(1 + 2|ab|)",
            "provenance": "closed form, matches eigensolver bisection",
        },
        "mixture_filtered_bell": {
            "value": chsh.gisin_filter_threshold(a, b),
            "formula": "1/(1 + 2|ab|(sqrt(2) - 1))",
            "provenance": "reference constant (local filtering); not derived here",
        },
        "werner_ppt": {"value": 1 / 3, "provenance": "closed form (1 - 3x)/4 = 0"},
        "werner_bell": {
            "value": chsh.violation_threshold(states.werner, 0.5, 1.0),
            "closed_form": 1 / math.sqrt(2),
            "provenance": "computed by bisection on 2 sqrt(M)",
        },
        "werner_alpha_entropic": {"value": 1 / math.sqrt(3), "provenance": "quoted reference value, annotation only"},
        "polarized_bell": {
            "value": polarized,
            "quoted": 0.8,
            "provenance": "computed by bisection on 2 sqrt(M)",
            "note": "the quoted 0.8 solves x^2 + (1-2x)^2 = 1, i.e. pairs the z-correlation "
            "with one transverse one instead of the two largest eigenvalues",
        },
    }
    inputs = {"a": [args.a_re, args.a_im], "b": [args.b_re, args.b_im]}
    return _report("thresholds", args, inputs, results, {"bisection": 1e-12})


def cmd_collective(args) -> dict:
    if not 1 <= args.pairs <= collective.MAX_PAIRS:
        raise UsageError(f"--pairs must lie in 1..{collective.MAX_PAIRS}")
    rho = build_state(args)
    inputs = {**_state_inputs(args), "pairs": args.pairs, "rows": args.rows, "mode": args.mode}
    if args.rows == "xor":
        u = collective.xor_rows(args.pairs)
        v = collective.mirror_rows(u)
    else:
        if args.family != "werner":
            raise UsageError("--rows optimize is only defined for Werner pairs")
        if args.pairs > optimizer.MAX_OPTIMIZE_PAIRS:
            raise UsageError(f"--rows optimize supports at most {optimizer.MAX_OPTIMIZE_PAIRS} pairs")
        report = optimizer.optimize(args.x, args.pairs, _config(args))
        u, v = report.best_rows, report.best_bob_rows
    outcome = collective.postselect(rho, args.pairs, u, v)
    value = chsh.chsh_max(outcome.rho_new)
    results = {
        "c_max": value,
        "violated": value > 2.0,
        "success_probability": outcome.success_probability,
        "t_matrix": chsh.t_matrix(outcome.rho_new).tolist(),
        "alice_rows": _rows_json(u),
        "bob_rows": _rows_json(v),
    }
    return _report("collective", args, inputs, results, {"postselection": collective.MIN_SUCCESS})


def cmd_optimize(args) -> dict:
    x = _need_x(args)
    if not 1 <= args.pairs <= optimizer.MAX_OPTIMIZE_PAIRS:
        raise UsageError(f"--pairs must lie in 1..{optimizer.MAX_OPTIMIZE_PAIRS}")
    cfg = _config(args)
    report = optimizer.optimize(x, args.pairs, cfg)
    results = {
        "best_value": report.best_value,
        "xor_value": report.xor_value,
        "violated": report.best_value > 2.0,
        "success_probability": report.success_probability,
        "alice_rows": _rows_json(report.best_rows),
        "bob_rows": _rows_json(report.best_bob_rows),
        "per_restart": [
            {"start_id": r.start_id, "start": r.start, "value": r.value, "iterations": r.iterations, "converged": r.converged}
            for r in report.per_restart
        ],
    }
    inputs = {"x": x, "pairs": args.pairs, "mode": cfg.mode, "restarts": cfg.restarts, "start_set": cfg.start_set}
    tolerances = {"step": cfg.step_tol, "objective": cfg.objective_tol, "gradient_step": cfg.gradient_step}
    return _report("optimize", args, inputs, results, tolerances)


def _grid(args) -> list[float]:
    if args.grid <= 0 or not 0.0 <= args.x_min <= args.x_max <= 1.0:
        raise UsageError("need --grid > 0 and 0 <= --x-min <= --x-max <= 1")
    count = int(math.floor((args.x_max - args.x_min) / args.grid + 1e-9)) + 1
    digits = max(0, -math.floor(math.log10(args.grid)) + 2)
    return [round(args.x_min + i * args.grid, digits) for i in range(count)]


SCAN_COLUMNS = ("x", "c_max", "xor_value", "success_probability", "pairs", "mode")


def cmd_scan(args):
    if not 1 <= args.pairs <= optimizer.MAX_OPTIMIZE_PAIRS:
        raise UsageError(f"--pairs must lie in 1..{optimizer.MAX_OPTIMIZE_PAIRS}")
    cfg = _config(args)
    points = optimizer.scan_curve(args.pairs, _grid(args), cfg)
    rows = [
        {"x": p.x, "c_max": p.best_value, "xor_value": p.xor_value,
         "success_probability": p.success_probability, "pairs": args.pairs, "mode": cfg.mode}
        for p in points
    ]
    if args.format == "csv":
        return rows
    inputs = {"pairs": args.pairs, "grid": args.grid, "x_min": args.x_min, "x_max": args.x_max,
              "mode": cfg.mode, "restarts": cfg.restarts}
    results = {"points": rows, "transition": optimizer.transition_point(points)}
    return _report("scan", args, inputs, results, {"transition_margin": optimizer.TRANSITION_MARGIN})


def cmd_emit_state(args):
    text = format_state(build_state(args))
    if args.out is None:
        return text
    args.out.write_text(text)
    return _report("emit-state", args, _state_inputs(args), {"written": str(args.out)}, {})


def cmd_selftest(args) -> dict:
    from . import acceptance

    results = acceptance.run_all(skip_slow=args.skip_slow, echo=lambda line: print(line, file=sys.stderr))
    summary = {str(r.number): {"passed": r.passed, "detail": r.detail, "seconds": r.seconds} for r in results}
    report = _report("selftest", args, {"skip_slow": args.skip_slow}, summary, {})
    report["all_passed"] = all(r.passed for r in results)
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nonlocality", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text, state=False, opt=False, pairs=False):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("json", "csv"), default="csv" if name == "scan" else "json")
        if state:
            _add_state_flags(p)
        if opt:
            _add_optimizer_flags(p)
        if pairs:
            p.add_argument("--pairs", type=int, required=True)
        return p

    p = add("ppt", cmd_ppt, "partial-transpose test", state=True)
    p.add_argument("--tol", type=float, default=separability.PPT_TOL)
    p = add("chsh", cmd_chsh, "exact CHSH maximum", state=True)
    p.add_argument("--oracle", action="store_true", help="also run the brute-force settings search")
    add("thresholds", cmd_thresholds, "reference thresholds", state=True)
    p = add("collective", cmd_collective, "postselected collective test", state=True, opt=True, pairs=True)
    p.add_argument("--rows", choices=("xor", "optimize"), default="xor")
    add("optimize", cmd_optimize, "optimize local rows for Werner pairs", state=True, opt=True, pairs=True)
    p = add("scan", cmd_scan, "CHSH maximum versus singlet fraction", opt=True, pairs=True)
    p.add_argument("--grid", type=float, default=0.01, help="grid spacing")
    p.add_argument("--x-min", type=float, default=0.0)
    p.add_argument("--x-max", type=float, default=1.0)
    p = add("emit-state", cmd_emit_state, "write a state in the text format", state=True)
    p.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    p = add("selftest", cmd_selftest, "run the acceptance checks")
    p.add_argument("--skip-slow", action="store_true", help="skip the optimizer criteria")
    return parser


def _emit(result, fmt: str, out) -> None:
    if isinstance(result, str):
        out.write(result)
    elif isinstance(result, list):
        writer = csv.DictWriter(out, fieldnames=SCAN_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in result:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    else:
        json.dump(result, out, indent=2)
        out.write("\n")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        result = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, collective.PostselectionError, ConvergenceError, NonHermitianError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except states.InvalidStateError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    _emit(result, args.format, sys.stdout)
    if args.command == "selftest" and not result["all_passed"]:
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
