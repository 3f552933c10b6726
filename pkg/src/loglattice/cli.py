"""Command-line front end.

Commands: construct | wce | bounds | tract | points | demo.
Exit codes: 0 ok, 2 invalid input, 3 work budget exceeded,
4 tolerance unreachable, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

from . import bounds as bd
from .cbc import cbc_construct, construct_json
from .emsum import FourierTable, cached_fourier_table, default_cache_dir, is_prime
from .errors import LatticeError, NonPrimeModulus, ValidationError
from .points import figure_samples, lattice_points, nonholder_drop, tent_transform, write_points
from .wce import (
    LatticeRule,
    Method,
    wce_bruteforce,
    wce_cosine_tent,
    wce_spectral,
    write_error_csv,
)
from .weights import KAPPA_MIN, WeightParams

EXIT_OK, EXIT_IO = 0, 5
DEFAULT_TOL = 1e-10
RATE_PRIMES = (101, 211, 401, 809, 1009, 2003, 4001, 8009, 10007)


class IOFailure(Exception):
    pass


def _load_params(source: str | None) -> WeightParams:
    if source is None:
        raise ValidationError("--params is required for this command")
    text = source
    if not source.lstrip().startswith("{"):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise IOFailure(f"cannot read params file {source}: {exc}") from exc
    return WeightParams.from_json(text)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise ValidationError(f"bad integer list {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise ValidationError(f"bad number list {text!r}") from exc


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise IOFailure(f"cannot write {out}: {exc}") from exc


def _table(args, params: WeightParams, N: int) -> FourierTable:
    if getattr(args, "table", None):
        try:
            text = Path(args.table).read_text()
        except OSError as exc:
            raise IOFailure(f"cannot read table {args.table}: {exc}") from exc
        return FourierTable.from_json(text)
    cache = Path(args.cache_dir) if args.cache_dir else default_cache_dir()
    try:
        return cached_fourier_table(N, params.mu, params.kappa, args.tol, cache)
    except OSError as exc:
        raise IOFailure(f"table cache failure: {exc}") from exc


def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise ValidationError(f"--{n.replace('_', '-')} is required")


# -- commands --------------------------------------------------------------


def cmd_construct(args) -> int:
    _need(args, "N", "s")
    params = _load_params(args.params)
    lams = _float_list(args.lambdas) if args.lambdas else []
    if not is_prime(args.N):
        raise NonPrimeModulus(args.N)
    table = _table(args, params, args.N)
    rule, trace = cbc_construct(
        args.s, args.N, params, table, lams=lams, method=args.method or "naive", threads=args.threads
    )
    _emit(construct_json(rule, trace, params) + "\n", args.out)
    return EXIT_OK


def cmd_wce(args) -> int:
    _need(args, "N", "g")
    params = _load_params(args.params)
    rule = LatticeRule(args.N, tuple(_int_list(args.g)))
    method = args.method or "spectral"
    if method == Method.SPECTRAL.value:
        res = wce_spectral(rule, params, _table(args, params, rule.N))
    elif method == Method.BRUTEFORCE.value:
        res = wce_bruteforce(rule, params, args.K or max(rule.N, 200))
    elif method == Method.COSINE_TENT.value:
        res = wce_cosine_tent(rule, params, args.K or 2000)
    else:
        raise ValidationError(f"unknown method {method!r}; use spectral, bruteforce or cosine_tent")
    if args.format == "csv":
        buf = io.StringIO()
        write_error_csv([(rule, res)], buf)
        _emit(buf.getvalue(), args.out)
    else:
        _emit(res.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    _need(args, "N", "s")
    params = _load_params(args.params)
    lams = _float_list(args.lambdas) if args.lambdas else [0.6, 0.7, 0.8, 0.9, 1.0]
    lams = [l for l in lams if 1.0 / params.mu < l <= 1.0] or lams
    reports, best = bd.lambda_sweep(args.N, args.s, params, lams)
    doc = {
        "N": args.N,
        "d": args.s,
        "reports": [r.to_dict() for r in reports],
        "tightest_lambda": None if best is None else reports[best].lam,
        "tightest_bound": None if best is None else reports[best].thm1_rhs,
    }
    if args.alpha is not None:
        lam2 = args.lambda2
        t = bd.tau(params.mu, args.alpha, params.kappa, lam2)
        g = params.gammas_upto(args.s)
        cor = None if best is None else bd.thm2_transfer(reports[best].thm1_rhs, lam2)
        doc["transfer"] = {
            "alpha": args.alpha,
            "lambda2": lam2,
            "tau": t,
            "scaled_weights": list(bd.scaled_weights(g, lam2, t)),
            "classical_weights": list(bd.corollary_weights(g, lam2, t)),
            "classical_error_bound": cor,
        }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_tract(args) -> int:
    params = _load_params(args.params)
    grid = _int_list(args.s_grid) if args.s_grid else ([args.s] if args.s else [1, 2, 5, 10, 100, 1000])
    bp = None
    if args.lambdas:
        bp = bd.BoundParams.for_params(_float_list(args.lambdas)[0], params)
    rep = bd.tractability_report(params, grid, bp=bp, N=args.N)
    if args.format == "json":
        _emit(rep.to_json() + "\n", args.out)
    else:
        buf = io.StringIO()
        rep.write_csv(buf)
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_points(args) -> int:
    _need(args, "N", "g")
    rule = LatticeRule(args.N, tuple(_int_list(args.g)))
    ps = lattice_points(rule)
    if args.tent:
        ps = tent_transform(ps)
    buf = io.StringIO()
    write_points(ps, buf)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _demo_nonholder(args) -> str:
    mu = args.mu if args.mu is not None else 1.5
    kappa = args.kappa if args.kappa is not None else KAPPA_MIN
    x, v, b = figure_samples(args.rows, mu, kappa, args.tol if args.tol_set else 1e-8)
    lines = ["x,f,bound"]
    lines += [f"{xi!r},{vi!r},{bi!r}" for xi, vi, bi in zip(x.tolist(), v.tolist(), b.tolist())]
    return "\n".join(lines) + "\n"


def _demo_witness(args) -> str:
    mu = args.mu if args.mu is not None else 1.5
    kappa = args.kappa if args.kappa is not None else KAPPA_MIN
    lines = ["m,drop,bound,scaled"]
    for e in range(3, 17):
        m = 2**e
        d = nonholder_drop(m, mu, kappa, 1e-8)
        lines.append(f"{m},{d.value!r},{d.bound!r},{math.sqrt(m) * d.value!r}")
    return "\n".join(lines) + "\n"


def rate_rows(primes=RATE_PRIMES, s: int = 5, lam: float = 0.8, params: WeightParams | None = None, cache=None):
    """Per prime: CBC error at dimension s scaled by the guaranteed rate."""
    params = params or WeightParams(mu=2.0, kappa=KAPPA_MIN, gamma_power=2.0)
    bp = bd.BoundParams.for_params(lam, params)
    C = bd.C_const(bp)
    T = bd.T_d(s, params, bp, C)
    rows = []
    for N in primes:
        table = cached_fourier_table(N, params.mu, params.kappa, DEFAULT_TOL, cache)
        rule, trace = cbc_construct(s, N, params, table)
        e2 = trace.steps[-1].e2
        bound = trace.steps[-1].bound
        L = math.log(N / T)
        ratio = (e2 + bound) * N * L**bp.expo / T if L > 0 else None
        ok = N >= bd.N_min_precondition(T, bp)
        rows.append({"N": N, "s": s, "e2": e2, "e2_bound": bound, "T_s": T, "ratio": ratio, "precondition": ok})
    return rows


def _demo_rate(args) -> str:
    params = _load_params(args.params) if args.params else None
    lam = _float_list(args.lambdas)[0] if args.lambdas else 0.8
    primes = _int_list(args.primes) if args.primes else RATE_PRIMES
    cache = Path(args.cache_dir) if args.cache_dir else default_cache_dir()
    rows = rate_rows(primes, args.s or 5, lam, params, cache)
    lines = ["N,s,e2,e2_bound,T_s,ratio,precondition"]
    for r in rows:
        ratio = "" if r["ratio"] is None else repr(r["ratio"])
        lines.append(f"{r['N']},{r['s']},{r['e2']!r},{r['e2_bound']!r},{r['T_s']!r},{ratio},{int(r['precondition'])}")
    return "\n".join(lines) + "\n"


def _demo_tract(args) -> str:
    params = _load_params(args.params) if args.params else WeightParams(mu=2.0, kappa=KAPPA_MIN, gamma_power=2.0)
    bp = bd.BoundParams.for_params(_float_list(args.lambdas)[0] if args.lambdas else 0.9, params)
    rep = bd.tractability_report(params, [1, 2, 5, 10, 100, 1000, 10000], bp=bp)
    buf = io.StringIO()
    rep.write_csv(buf)
    return buf.getvalue()


DEMOS = {"nonholder": _demo_nonholder, "witness": _demo_witness, "rate": _demo_rate, "tract": _demo_tract}


def cmd_demo(args) -> int:
    _emit(DEMOS[args.kind](args), args.out)
    return EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "wce": cmd_wce,
    "bounds": cmd_bounds,
    "tract": cmd_tract,
    "points": cmd_points,
    "demo": cmd_demo,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="loglattice", description="Lattice rules for log-Korobov spaces.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--N", type=int, help="number of points (prime)")
    ap.add_argument("--s", type=int, help="dimension")
    ap.add_argument("--params", help="weight parameters: JSON file path or inline JSON")
    ap.add_argument("--lambda", dest="lambdas", help="comma-separated lambda values")
    ap.add_argument("--tol", type=float, default=None, help=f"table tolerance (default {DEFAULT_TOL})")
    ap.add_argument("--K", type=int, help="box half-width / cosine truncation")
    ap.add_argument("--method", help="construct: naive|fast; wce: spectral|bruteforce|cosine_tent")
    ap.add_argument("--out", help="output path (default stdout)")
    ap.add_argument("--format", choices=("json", "csv"), default=None)
    ap.add_argument("--cache-dir", dest="cache_dir", help="coefficient table cache (env CACHE_DIR)")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--g", help="generating vector, comma-separated")
    ap.add_argument("--table", help="coefficient table JSON to use instead of building one")
    ap.add_argument("--tent", action="store_true", help="points: apply the tent transform")
    ap.add_argument("--alpha", type=float, help="bounds: classical smoothness for the transfer bound")
    ap.add_argument("--lambda2", type=float, default=1.0, help="bounds: transfer exponent in (1/(2 alpha), 1]")
    ap.add_argument("--s-grid", dest="s_grid", help="tract: comma-separated dimensions")
    ap.add_argument("--kind", choices=sorted(DEMOS), default="nonholder", help="demo to run")
    ap.add_argument("--rows", type=int, default=2048, help="demo nonholder: number of abscissae")
    ap.add_argument("--mu", type=float)
    ap.add_argument("--kappa", type=float)
    ap.add_argument("--primes", help="demo rate: comma-separated primes")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.tol_set = args.tol is not None
    if args.tol is None:
        args.tol = DEFAULT_TOL
    if args.format is None:
        args.format = "csv" if args.command == "tract" else "json"
    try:
        return COMMANDS[args.command](args)
    except BrokenPipeError:
        return EXIT_OK
    except IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LatticeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
