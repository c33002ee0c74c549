"""Command-line front end: ``planar-contact <command> [flags]``.

Commands and their fixed CSV columns (JSON output mirrors them as a list of
records under ``"rows"`` plus a ``"summary"`` object):

``two-body``
    ``lambda,E,probe,error,slope,cutoff_energy``
``potential``
    ``record,E,value`` with records ``scan`` (denominator), ``root`` and ``e0``
``three-body``
    ``record,grid_nodes,index,E,value`` with records ``scan`` (smallest
    eigenvalue), ``energy`` (value = E/(-mu^2)), ``extrapolated``, ``drift``
    and ``scaling`` (value = energies(2 mu)/energies(mu))
``fock-check``
    ``instance,M,n_max,lam,mu,E,sqrt_identity_residual,resolvent_residual,phi_inverse_residual,block_inverse_residual,pass``

Exit status: 0 success, 1 numerical or acceptance failure, 2 usage or
configuration error.  A ``--config`` file holds ``key = value`` lines using
the long flag names; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from .exceptions import (
    AtEigenvalueError,
    BracketError,
    DomainError,
    InsufficientDataError,
    NumericalError,
    PlanarContactError,
)

MAX_MODES = 16
MAX_PARTICLES = 4

COLUMNS = {
    "two-body": ["lambda", "E", "probe", "error", "slope", "cutoff_energy"],
    "potential": ["record", "E", "value"],
    "three-body": ["record", "grid_nodes", "index", "E", "value"],
    "fock-check": [
        "instance", "M", "n_max", "lam", "mu", "E", "sqrt_identity_residual",
        "resolvent_residual", "phi_inverse_residual", "block_inverse_residual", "pass",
    ],
}

DEFAULTS = {
    "two-body": {"lambdas": "25,50,100,200,400", "energies": "-2,-5"},
    "potential": {"mu": 2.0, "scan_panels": 64},
    "three-body": {"mu": 1.0, "grid": "200,400,800", "scan_points": 25, "ell": 0},
    "fock-check": {"instances": 20, "max_modes": 9, "n_max": 4, "corrupt_g": 1.0},
}
COMMON_DEFAULTS = {"format": "csv", "seed": 0}


class UsageError(Exception):
    """Bad flags or configuration (exit status 2)."""


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _float_list(text):
    try:
        return [float(x) for x in str(text).replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _int_list(text):
    try:
        return [int(x) for x in str(text).replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="planar-contact", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        # every default is None so that config-file values can fill the gaps
        p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("--out", default=None, help="output path (written atomically); stdout if absent")
        p.add_argument("--config", default=None, help="key = value file merged under explicit flags")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None, help="worker threads (default: CPU count)")

    p = sub.add_parser("two-body", help="dimer energy, AGHH parameter and cutoff convergence table")
    common(p)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None, help="boundary parameter; sets mu")
    p.add_argument("--lambdas", default=None, help="comma-separated cutoffs")
    p.add_argument("--lambda", dest="lam", type=float, action="append", default=None, help="add one cutoff")
    p.add_argument("--energies", default=None, help="comma-separated negative energies")

    p = sub.add_parser("potential", help="bound states with an extra radial potential")
    common(p)
    p.add_argument("--potential", default=None, help="two-column 'radius value' text file")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--bracket", default=None, help="E_lo,E_hi below -||v||_inf (write --bracket=-20,-3); default -2 e0 up to -||v||_inf - 1")
    p.add_argument("--scan-panels", dest="scan_panels", type=int, default=None)

    p = sub.add_parser("three-body", help="trimer energies from the reduced Phi(E)")
    common(p)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--bracket", default=None, help="E_lo,E_hi, written --bracket=-30,-1.01 (default -30 mu^2,-1.01 mu^2)")
    p.add_argument("--grid", default=None, help="comma-separated node counts of the grid schedule")
    p.add_argument("--scan-points", dest="scan_points", type=int, default=None)
    p.add_argument("--ell", type=int, default=None, help="angular harmonic (default 0)")
    p.add_argument("--check-scaling", dest="check_scaling", action="store_true", default=None)

    p = sub.add_parser("fock-check", help="randomized Fock-sector identity suite")
    common(p)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--max-modes", dest="max_modes", type=int, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--corrupt-g", dest="corrupt_g", type=float, default=None,
                   help="multiply g in the square-root check (sensitivity test)")
    return parser


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        out["lam" if key == "lambda" else key] = value
    return out


def resolve(args):
    """Fill unset flags from the config file, then from defaults."""
    config = read_config(args.config) if args.config else {}
    defaults = {**COMMON_DEFAULTS, **DEFAULTS[args.command]}
    known = set(vars(args))
    for key in config:
        if key not in known or key in ("command", "config"):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
    for key in known:
        if getattr(args, key) is not None:
            continue
        if key in config:
            setattr(args, key, _coerce(config[key], key))
        elif key in defaults:
            setattr(args, key, defaults[key])
    if args.jobs is None:
        args.jobs = os.cpu_count() or 1
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    if args.format not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    return args


KEY_TYPES = {
    "mu": float, "alpha": float, "corrupt_g": float,
    "seed": int, "jobs": int, "instances": int, "max_modes": int, "n_max": int,
    "scan_points": int, "scan_panels": int, "ell": int,
}


def _coerce(text, key):
    if key == "check_scaling":
        return text.lower() in ("1", "true", "yes", "on")
    if key == "lam":
        return _float_list(text)
    kind = KEY_TYPES.get(key, str)
    try:
        return kind(text)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {text!r}") from exc


def _positive(name, value):
    if value is None or not value > 0 or not math.isfinite(value):
        raise UsageError(f"--{name} must be a positive number")


def _bracket(text):
    vals = _float_list(text)
    if len(vals) != 2 or vals[0] == vals[1]:
        raise UsageError("--bracket needs two distinct numbers E_lo,E_hi")
    return min(vals), max(vals)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _clean(x):
    if isinstance(x, (np.floating, float)):
        return float(f"{float(x):.12g}")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def render(command, rows, summary, fmt):
    cols = COLUMNS[command]
    rows = [{c: _clean(r.get(c, "")) for c in cols} for r in rows]
    if fmt == "json":
        body = {"command": command, "columns": cols, "rows": rows,
                "summary": {k: _clean_deep(v) for k, v in summary.items()}}
        return json.dumps(body, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _clean_deep(v):
    if isinstance(v, dict):
        return {k: _clean_deep(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean_deep(x) for x in v]
    return _clean(v)


def write_output(text, path):
    """Write to ``path`` through a temporary file and an atomic rename."""
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_two_body(args):
    from .two_body import aghh_alpha_from_mu, aghh_mu_from_alpha, convergence_report

    if args.alpha is not None and args.mu is not None:
        raise UsageError("give either --mu or --alpha, not both")
    if args.alpha is not None:
        mu = aghh_mu_from_alpha(args.alpha)
    else:
        mu = 1.0 if args.mu is None else args.mu
    _positive("mu", mu)
    lambdas = list(args.lam) if args.lam else _float_list(args.lambdas)
    if any(not l > 0 for l in lambdas):
        raise UsageError("cutoffs must be positive")
    energies = _float_list(args.energies)
    if not energies or any(not E < 0 for E in energies):
        raise UsageError("--energies must be negative")
    try:
        report = convergence_report(mu, energies, lambdas)
    except InsufficientDataError as exc:
        raise UsageError(str(exc)) from exc
    rows = []
    for E in energies:
        table = report.errors[float(E)]
        kept = [j for j in range(table.shape[1]) if np.all(table[:, j] > 0)]
        slopes = dict(zip(kept, report.rates[float(E)]))
        for i, lam in enumerate(report.lambda_schedule):
            for j in range(table.shape[1]):
                rows.append({
                    "lambda": lam, "E": E, "probe": j, "error": table[i, j],
                    "slope": slopes.get(j, ""), "cutoff_energy": report.cutoff_energies[i],
                })
    summary = {
        "mu": mu,
        "alpha": aghh_alpha_from_mu(mu),
        "bound_state_energy": report.energies[0],
        "slopes": {str(E): report.rates[float(E)] for E in energies},
    }
    return rows, summary, 0


def cmd_potential(args):
    from .two_body_potential import (
        TabulatedPotential,
        denominator_sharp,
        e0_bound,
        find_bound_states_sharp,
        potential_grid,
    )

    if not args.potential:
        raise UsageError("--potential <file> is required")
    if not os.path.isfile(args.potential):
        raise UsageError(f"potential file not found: {args.potential}")
    _positive("mu", args.mu)
    try:
        pot = TabulatedPotential.from_file(args.potential)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    e0 = e0_bound(pot, args.mu)
    top = -pot.sup_norm - 1.0
    if args.bracket:
        lo, hi = _bracket(args.bracket)
    else:
        lo, hi = -2.0 * e0, top * (1.0 + 1e-9) - 1e-9
    if not hi < -pot.sup_norm:
        raise UsageError(f"bracket must lie below -||v||_inf = {-pot.sup_norm:.6g}")
    grid = potential_grid(pot)
    report = find_bound_states_sharp(pot, args.mu, (lo, hi), grid, scan_panels=args.scan_panels)
    rows = []
    for t in np.linspace(math.log(-hi), math.log(-lo), args.scan_panels + 1):
        E = -math.exp(t)
        rows.append({"record": "scan", "E": E, "value": denominator_sharp(pot, args.mu, E, grid)})
    for E in report.energies:
        rows.append({"record": "root", "E": E, "value": E / -(args.mu**2)})
    rows.append({"record": "e0", "E": -e0, "value": e0})
    summary = {
        "mu": args.mu,
        "sup_norm": pot.sup_norm,
        "e0": e0,
        "bracket": [lo, hi],
        "roots": report.energies,
        "roots_within_bound": all(-e0 <= E < -args.mu**2 or pot.sup_norm == 0 for E in report.energies),
    }
    return rows, summary, 0


def cmd_three_body(args):
    from .stm_three_body import default_schedule, find_trimer_energies

    _positive("mu", args.mu)
    mu = args.mu
    sizes = _int_list(args.grid)
    if not sizes or any(n < 8 for n in sizes):
        raise UsageError("--grid needs node counts >= 8")
    bracket = _bracket(args.bracket) if args.bracket else (-30.0 * mu**2, -1.01 * mu**2)
    if not bracket[1] < -(mu**2):
        raise UsageError("bracket must lie below the dimer energy -mu^2")
    schedule = default_schedule(mu, sizes=sizes)
    result = find_trimer_energies(mu, bracket, schedule, ell=args.ell, scan_points=args.scan_points, jobs=args.jobs)
    rows = []
    for grid, scan in zip(schedule, result.scans):
        for k, (E, lam0) in enumerate(scan):
            rows.append({"record": "scan", "grid_nodes": len(grid), "index": k, "E": E, "value": lam0})
    for grid, energies in zip(schedule, result.per_grid):
        for k, E in enumerate(energies):
            rows.append({"record": "energy", "grid_nodes": len(grid), "index": k, "E": E, "value": E / -(mu**2)})
    for k, (E, d) in enumerate(zip(result.extrapolated, result.drift)):
        rows.append({"record": "extrapolated", "grid_nodes": "", "index": k, "E": E, "value": E / -(mu**2)})
        rows.append({"record": "drift", "grid_nodes": "", "index": k, "E": result.energies[k], "value": d})
    summary = {
        "mu": mu,
        "bracket": list(bracket),
        "energies": result.energies,
        "ratios": result.ratios,
        "drift": result.drift,
        "log_e3": result.log_e3,
        "within_e3": result.within_energy_bound,
    }
    status = 0
    if args.check_scaling:
        doubled = find_trimer_energies(2 * mu, (4 * bracket[0], 4 * bracket[1]),
                                       default_schedule(2 * mu, sizes=sizes), ell=args.ell, jobs=args.jobs)
        ratios = [b / a for a, b in zip(result.energies, doubled.energies)]
        for k, r in enumerate(ratios):
            rows.append({"record": "scaling", "grid_nodes": len(schedule[-1]), "index": k,
                         "E": doubled.energies[k], "value": r})
        summary["scaling"] = ratios
        ok = len(doubled.energies) == len(result.energies) and all(abs(r - 4.0) <= 4e-6 for r in ratios)
        status = 0 if ok else 1
    if not result.energies:
        sys.stderr.write(
            "no crossing inside the bracket; widen it, e.g. --bracket="
            f"{-100 * mu**2:g},{-1.001 * mu**2:g}\n"
        )
        status = 1
    return rows, summary, status


def cmd_fock_check(args):
    from .fock import run_fuzz_suite

    if not 1 <= args.instances <= 10_000:
        raise UsageError("--instances must be in 1..10000")
    if not 3 <= args.max_modes <= MAX_MODES:
        raise UsageError(f"--max-modes must be in 3..{MAX_MODES}")
    if not 2 <= args.n_max <= MAX_PARTICLES:
        raise UsageError(f"--n-max must be in 2..{MAX_PARTICLES}")
    if not args.corrupt_g > 0:
        raise UsageError("--corrupt-g must be positive")
    report = run_fuzz_suite(args.instances, args.seed, corrupt_g=args.corrupt_g, jobs=args.jobs,
                            max_modes=args.max_modes, max_particles=args.n_max)
    rows = [{"instance": k, **inst} for k, inst in enumerate(report.instances)]
    summary = {
        "seed": args.seed,
        "instances": len(report.instances),
        "passed": report.passed,
        "failures": [k for k, inst in enumerate(report.instances) if not inst["pass"]],
        "corrupt_g": args.corrupt_g,
    }
    return rows, summary, 0 if report.passed else 1


COMMANDS = {
    "two-body": cmd_two_body,
    "potential": cmd_potential,
    "three-body": cmd_three_body,
    "fock-check": cmd_fock_check,
}


def main(argv=None):
    try:
        args = resolve(build_parser().parse_args(argv))
        rows, summary, status = COMMANDS[args.command](args)
        write_output(render(args.command, rows, summary, args.format), args.out)
        return status
    except UsageError as exc:
        sys.stderr.write(f"planar-contact: usage error: {exc}\n")
        return 2
    except (BracketError, NumericalError, AtEigenvalueError) as exc:
        sys.stderr.write(f"planar-contact: numerical failure: {exc}\n")
        return 1
    except (DomainError, PlanarContactError) as exc:
        sys.stderr.write(f"planar-contact: invalid input: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"planar-contact: I/O error: {exc}\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
