"""Command line front end.

Subcommands: ``evolve``, ``convolve``, ``kernel``, ``path``, ``moments``
and ``verify``.  Exit codes: 0 success, 1 invalid input, 2 a verification
tolerance unmet, 3 numerical failure.  ``MONOLEV_THREADS`` caps the
number of worker threads.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import convolution as cv
from . import markov as mk
from . import measure as ms
from . import semigroup as sg
from . import verify as vf
from .config import load_config, load_measure, load_pair
from .errors import InputError, NumericalError
from .functions import Polynomial

EXIT_OK, EXIT_INPUT, EXIT_TOLERANCE, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """Raise instead of exiting so that usage errors map to exit code 1."""

    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _emit(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        atomic_write(out, text)


def _floats(s: str) -> list:
    try:
        v = [float(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"not a comma-separated list of numbers: {s!r}") from None
    if not v:
        raise InputError("empty list")
    return v


def _grid(s: str):
    parts = s.split(":")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise InputError(f"grid must be lo:hi:n, got {s!r}") from None
    if len(parts) != 3 or not hi > lo or n < 3:
        raise InputError(f"grid must be lo:hi:n with hi > lo and n >= 3, got {s!r}")
    return (lo, hi, n)


def _times(s: str) -> list:
    t = _floats(s)
    if any(v < 0 for v in t):
        raise InputError("times must be non-negative")
    return t


def _map(fn, items):
    n = vf.threads()
    if n == 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_evolve(args) -> int:
    cfg = load_config(args.pair)
    pair = cfg["pair"]
    if pair is None:
        raise InputError("--pair file holds no characteristic pair")
    grid = _grid(args.grid) if args.grid else cfg["grid"]
    times = _times(args.times)
    mus = _map(lambda t: sg.marginal(pair, t, grid), times)
    out = Path(args.out)
    for i, (t, mu) in enumerate(zip(times, mus)):
        atomic_write(out / f"density_{i:03d}_t{t!r}.csv", f"# t {t!r}\n" + ms.to_csv(mu))
    return EXIT_OK


def cmd_convolve(args) -> int:
    mu, nu = load_measure(args.mu), load_measure(args.nu)
    grid = _grid(args.grid) if args.grid else None
    if args.route == "mixture":
        lam = cv.mono_convolve(mu, nu, grid)
    else:
        lam = cv.composed_convolve(mu, nu, grid)
    atomic_write(f"{args.out}.json", json.dumps(ms.to_dict(lam), indent=1) + "\n")
    atomic_write(f"{args.out}.csv", ms.to_csv(lam))
    return EXIT_OK


def cmd_kernel(args) -> int:
    cfg = load_config(args.pair)
    pair = cfg["pair"]
    if pair is None:
        raise InputError("--pair file holds no characteristic pair")
    if args.t < 0:
        raise InputError("--t must be non-negative")
    grid = _grid(args.grid) if args.grid else cfg["grid"]
    _emit(ms.to_csv(mk.kernel(pair, args.t, args.x, grid)), args.out)
    return EXIT_OK


def cmd_path(args) -> int:
    cfg = load_config(args.pair)
    pair = cfg["pair"]
    if pair is None:
        raise InputError("--pair file holds no characteristic pair")
    if args.n < 1:
        raise InputError("--n must be positive")
    times = _times(args.times)
    seed = cfg["seed"] if args.seed is None else args.seed
    if seed < 0:
        raise InputError("--seed must be non-negative")
    X = mk.sample_path(pair, times, args.n, np.random.default_rng(seed))
    lines = ["path_id,t,x"]
    for i in range(args.n):
        lines += [f"{i},{t!r},{float(x)!r}" for t, x in zip(times, X[i])]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_moments(args) -> int:
    cfg = load_config(args.pair)
    pair = cfg["pair"]
    if pair is None:
        raise InputError("--pair file holds no characteristic pair")
    if not 0 <= args.kmax <= 16:
        raise InputError("--kmax must be in 0..16")
    if args.t < 0:
        raise InputError("--t must be non-negative")
    ks = list(range(args.kmax + 1))
    contour = np.atleast_1d(sg.moments_via_contour(pair, args.t, ks)) if args.t > 0 else \
        np.array([float(k == 0) for k in ks])
    mu = sg.marginal(pair, args.t, cfg["grid"])
    lines = ["k,contour,quadrature,abs_diff"]
    for k, c in zip(ks, contour):
        q = ms.integrate(mu, Polynomial.monomial(k))
        lines.append(f"{k},{float(c)!r},{float(q)!r},{abs(float(c) - float(q))!r}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    tol, seed = None, 0
    if args.config:
        cfg = load_config(args.config)
        tol, seed = cfg["tolerances"], cfg["seed"]
    results = vf.run(args.suite, tol, seed)
    failed = [r for r in results if not r["passed"]]
    report = {"suite": args.suite, "seed": seed, "checks": len(results), "failed": len(failed),
              "results": results}
    _emit(json.dumps(report, indent=1, default=_json_default) + "\n", args.out)
    sys.stderr.write(f"{len(results)} checks, {len(failed)} failed\n")
    for r in failed:
        sys.stderr.write(f"FAIL {r['suite']}: {r['name']} value={r['value']} "
                         f"{r.get('error', '')}\n")
    return EXIT_TOLERANCE if failed else EXIT_OK


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="monolev", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("evolve", help="marginal densities of the semigroup")
    e.add_argument("--pair", required=True, help="pair or config JSON file")
    e.add_argument("--times", required=True, help="comma-separated times")
    e.add_argument("--grid", help="lo:hi:n (default: padded support bound)")
    e.add_argument("--out", required=True, help="output directory")
    e.set_defaults(func=cmd_evolve)

    c = sub.add_parser("convolve", help="monotone convolution of two measures")
    c.add_argument("--mu", required=True, help="measure JSON or CSV")
    c.add_argument("--nu", required=True, help="measure JSON or CSV")
    c.add_argument("--grid", help="lo:hi:n")
    c.add_argument("--route", choices=("mixture", "composition"), default="mixture")
    c.add_argument("--out", required=True, help="output prefix (writes .json and .csv)")
    c.set_defaults(func=cmd_convolve)

    k = sub.add_parser("kernel", help="transition kernel delta_x |> mu_t")
    k.add_argument("--pair", required=True)
    k.add_argument("--t", type=float, required=True)
    k.add_argument("--x", type=float, required=True)
    k.add_argument("--grid", help="lo:hi:n")
    k.add_argument("--out", help="CSV file (default stdout)")
    k.set_defaults(func=cmd_kernel)

    pa = sub.add_parser("path", help="sample paths of the classical process")
    pa.add_argument("--pair", required=True)
    pa.add_argument("--times", required=True)
    pa.add_argument("--n", type=int, required=True)
    pa.add_argument("--seed", type=int, help="default: seed in the config file, else 0")
    pa.add_argument("--out", help="CSV file (default stdout)")
    pa.set_defaults(func=cmd_path)

    m = sub.add_parser("moments", help="contour vs quadrature moments of mu_t")
    m.add_argument("--pair", required=True)
    m.add_argument("--t", type=float, required=True)
    m.add_argument("--kmax", type=int, required=True)
    m.add_argument("--out", help="CSV file (default stdout)")
    m.set_defaults(func=cmd_moments)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", default="all", choices=("all",) + vf.SUITES)
    v.add_argument("--config", help="config JSON with tolerances and seed")
    v.add_argument("--out", help="JSON report file (default stdout)")
    v.set_defaults(func=cmd_verify)
    return p


def run(argv=None) -> int:
    """Run the command line; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except InputError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT
    except NumericalError as e:
        sys.stderr.write(f"numerical failure: {type(e).__name__}: {e}\n")
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
