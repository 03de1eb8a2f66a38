"""Command-line orchestration: verification suites, spectra, and reports.

Exit codes: 0 success, 1 identity violation found, 2 precision exhausted,
3 enumeration too large, 64 usage error.  Reports embed the tool version,
the effective configuration, the seed, and the normalization ledger; output
is deterministic for a fixed (config, seed) at any parallelism degree.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from multiprocessing import Pool

from . import __version__
from .assembly import (
    RamifiedLevelData,
    psi_relation,
)
from .geodesics import (
    dpsi_enumerated,
    gamma_splitting,
    pgt_report,
    psi_enumerated,
    sl2_classes,
)
from .integrals import TestFunctionSpec, orbital, verify_matching
from .oracle import (
    coset_coverage_nonsplit,
    coset_coverage_split,
    index_enumeration_test,
    oracle_orbital,
    radical_intersection_test,
)
from .orders import OrderKind
from .padic import (
    EnumerationTooLarge,
    PrecisionExhausted,
    RAMIFIED,
    SPLIT,
    UNRAMIFIED,
    ramified_torus,
    ramified_torus_2nonsplit,
    split_torus,
    unramified_torus,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_PRECISION = 2
EXIT_TOO_LARGE = 3
EXIT_USAGE = 64

NORMALIZATION_LEDGER = {
    "field_measure": "Vol(O_E^x) = 1",
    "split_measure": "Vol(o^x x o^x) = 1",
    "norm_index_prefactor": "applied in global assembly, off in bare local values",
    "dpsi": "sum of log x0 over classes of trace t, divided by sqrt(|t|-2)",
    "psi_weight": "2 sqrt(|t|-2) per trace (log of the class norm), times c",
    "sign_convention": "both signs of t counted; c = 1/2 when -1 is in the group",
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Validated run parameters echoed into every report."""

    command: str
    params: dict
    seed: int = 0
    threads: int = 1
    out: str | None = None
    fmt: str = "json"

    def echo(self) -> dict:
        return {"command": self.command, "seed": self.seed, "threads": self.threads,
                "format": self.fmt,
                **{k: (str(v) if isinstance(v, Fraction) else v)
                   for k, v in self.params.items()}}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GEOMATCH_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    """Order-preserving map honoring GEOMATCH_THREADS (deterministic merge)."""
    items = list(items)
    n = _threads()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with Pool(processes=min(n, len(items))) as pool:
        return pool.map(fn, items)


def _pgt_row(task) -> list:
    level, x = task
    rows = pgt_report(level, [x])
    r = rows[0]
    return [r.x, r.psi, r.psi_minus_x, r.x_pow_7_10, r.pi, r.li_x, r.pi_minus_li]


def fmt_float(v: float) -> str:
    return format(v, ".12g")


def _round12(v):
    if isinstance(v, float):
        return float(fmt_float(v))
    if isinstance(v, Fraction):
        return str(v)
    return v


def report_envelope(cfg: RunConfig, results) -> dict:
    return {"tool": "geomatch", "version": __version__, "config": cfg.echo(),
            "seed": cfg.seed, "normalization": NORMALIZATION_LEDGER,
            "results": results}


def emit_json(cfg: RunConfig, results) -> str:
    def clean(obj):
        if isinstance(obj, dict):
            return {str(k): clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        return _round12(obj)

    return json.dumps(clean(report_envelope(cfg, results)), indent=2) + "\n"


def emit_csv(cfg: RunConfig, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    for k, v in report_envelope(cfg, None).items():
        if k in ("results",):
            continue
        if isinstance(v, dict):
            for k2, v2 in v.items():
                buf.write(f"# {k}.{k2}={v2}\n")
        else:
            buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _write(cfg: RunConfig, text: str):
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# verification drivers


def _tori_for(p: int, M: int):
    tori = [split_torus(p, M), unramified_torus(p, M), ramified_torus(p, M)]
    if p == 2:
        tori.append(ramified_torus_2nonsplit(M))
    return tori


def run_verify_local(p: int, n_max: int, M: int, span: int = 3) -> dict:
    """Closed form against the brute-force oracle over a coordinate grid.

    M must leave the guard band above n_max; the working precision of the
    verification grid is raised internally as the coset sums demand.
    """
    if M < n_max + 2:
        raise PrecisionExhausted(f"M = {M} cannot decide level-{n_max} congruences")
    if p == 5:
        span = min(span, 1)  # the 2^20 enumeration cap binds earlier at p = 5
    work = max(M, span + n_max + 6)
    failures = []
    checked = 0
    for torus in _tori_for(p, work):
        for kind in OrderKind:
            for n in range(0, n_max + 1):
                for flag in (False, True):
                    spec = TestFunctionSpec(kind, n, flag)
                    for i in range(0, span + 1):
                        for j in range(0, span + 1):
                            if torus.kind == SPLIT:
                                if j:
                                    continue
                                a = (1 + p ** i) % torus.ctx.modulus
                                if a % p == 0:
                                    continue
                                x = torus.element(a, 1)
                            else:
                                x = torus.element(1 + p ** i, p ** j)
                            lhs = orbital(spec, x).value
                            rhs = oracle_orbital(spec, x).value
                            checked += 1
                            if lhs != rhs:
                                failures.append({
                                    "torus": torus.kind, "kind": kind.value,
                                    "n": n, "norm_index": flag,
                                    "alpha_exp": i, "beta_exp": j,
                                    "closed_form": str(lhs), "oracle": str(rhs)})
    inter = []
    for torus in _tori_for(p, max(work, 14))[1:]:
        for kind in (OrderKind.M, OrderKind.J):
            for r in range(0, 3):
                if kind is OrderKind.J and r == 0 and torus.kind == UNRAMIFIED:
                    continue
                for n in range(0, min(n_max, 3) + 1):
                    rep = radical_intersection_test(kind, torus, r, n)
                    if not rep["ok"]:
                        inter.append(rep)
    idx = []
    for kind in OrderKind:
        for n in range(1, min(n_max, 4) + 1):
            rep = index_enumeration_test(kind, n, p)
            if not rep["ok"]:
                idx.append(rep)
    return {"p": p, "n_max": n_max, "M": M, "points_checked": checked,
            "orbital_failures": failures, "intersection_failures": inter,
            "index_failures": idx,
            "ok": not failures and not inter and not idx}


def run_verify_matching(primes, n_max: int, span: int = 4) -> dict:
    """Split vanishing and field matching over the supported grids."""
    failures = []
    checked = 0
    for p in primes:
        M = span + 2 * n_max + 6
        for torus in _tori_for(p, M):
            for n in range(0, n_max + 1):
                for i in range(0, span + 1):
                    for j in range(0, span + 1):
                        if torus.kind == SPLIT:
                            if j:
                                continue
                            a = (1 + p ** i) % torus.ctx.modulus
                            if a % p == 0:
                                continue
                            x = torus.element(a, 1)
                        else:
                            x = torus.element(1 + p ** i, p ** j)
                        for flag in (False, True):
                            rep = verify_matching(p, n, x, flag)
                            checked += 1
                            if not rep.equal:
                                failures.append({
                                    "p": p, "n": n, "torus": torus.kind,
                                    "alpha_exp": i, "beta_exp": j,
                                    "norm_index": flag,
                                    "lhs": str(rep.lhs), "rhs": str(rep.rhs)})
    return {"primes": list(primes), "n_max": n_max, "points_checked": checked,
            "failures": failures, "ok": not failures}


def run_coverage(decomposition: str, p: int, M: int, samples: int, seed: int,
                 torus_kind: str = UNRAMIFIED) -> dict:
    if decomposition == "split-M":
        rep = coset_coverage_split(OrderKind.M, p, M, samples, seed)
    elif decomposition == "split-J":
        rep = coset_coverage_split(OrderKind.J, p, M, samples, seed)
    elif decomposition == "nonsplit-M":
        rep = coset_coverage_nonsplit(OrderKind.M, torus_kind, p, M, samples, seed)
    elif decomposition == "nonsplit-J":
        rep = coset_coverage_nonsplit(OrderKind.J, torus_kind, p, M, samples, seed)
    else:
        raise UsageError(f"unknown decomposition {decomposition!r}")
    return rep.to_dict()


# ---------------------------------------------------------------------------
# commands


def _add_common(sp):
    sp.add_argument("--config", help="flat key=value config file")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", dest="fmt", choices=("json", "csv"), default=None)


def build_parser() -> Parser:
    ps = Parser(prog="geomatch", description=__doc__)
    ps.add_argument("--version", action="store_true")
    sub = ps.add_subparsers(dest="command")

    sp = sub.add_parser("verify-local", help="closed forms against the oracle")
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--n-max", type=int, default=3)
    sp.add_argument("--M", type=int, default=12)
    _add_common(sp)

    sp = sub.add_parser("verify-matching", help="split vanishing and field matching")
    sp.add_argument("--primes", default="2,3,5")
    sp.add_argument("--n-max", type=int, default=6)
    _add_common(sp)

    sp = sub.add_parser("coverage", help="coset decomposition coverage")
    sp.add_argument("--decomposition", default="all",
                    choices=("all", "split-M", "split-J", "nonsplit-M", "nonsplit-J"))
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--M", type=int, default=3)
    sp.add_argument("--samples", type=int, default=10000)
    sp.add_argument("--torus", default=UNRAMIFIED,
                    choices=(UNRAMIFIED, RAMIFIED))
    _add_common(sp)

    sp = sub.add_parser("classes", help="conjugacy classes per trace")
    sp.add_argument("--t-min", type=int, default=3)
    sp.add_argument("--t-max", type=int, default=12)
    sp.add_argument("--level", type=int, default=1)
    _add_common(sp)

    sp = sub.add_parser("spectrum", help="counting functions on an x grid")
    sp.add_argument("--level", type=int, default=1)
    sp.add_argument("--x-max", type=float, default=10000.0)
    sp.add_argument("--x-count", type=int, default=12)
    _add_common(sp)

    sp = sub.add_parser("relation", help="quaternion-side counting identity")
    sp.add_argument("--ramified", default="2,3")
    sp.add_argument("--exponents", default="")
    sp.add_argument("--x-max", type=float, default=5000.0)
    sp.add_argument("--csv-out", default=None)
    _add_common(sp)

    sp = sub.add_parser("report", help="prime-geodesic table at given x values")
    sp.add_argument("--level", type=int, default=1)
    sp.add_argument("--x-grid", default="100,1000,10000")
    _add_common(sp)
    return ps


def _load_config(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _apply_config(args, parser_defaults_used: dict):
    if not getattr(args, "config", None):
        return
    conf = _load_config(args.config)
    for key, raw in conf.items():
        if not hasattr(args, key):
            continue
        current = getattr(args, key)
        default = parser_defaults_used.get(key, None)
        if current is not None and current != default:
            continue  # explicit flag wins
        target = default
        if isinstance(target, bool):
            setattr(args, key, raw.lower() in ("1", "true", "yes"))
        elif isinstance(target, int):
            setattr(args, key, int(raw))
        elif isinstance(target, float):
            setattr(args, key, float(raw))
        else:
            setattr(args, key, raw)


def _parse_primes(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"bad prime list {text!r}") from exc


def _parse_exponents(text: str) -> dict:
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise UsageError(f"bad exponent entry {part!r}")
        k, v = part.split("=", 1)
        out[int(k)] = int(v)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.version:
        print(__version__)
        return EXIT_OK
    if not args.command:
        parser.print_help()
        return EXIT_USAGE
    defaults = {}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            sub = action.choices.get(args.command)
            if sub is not None:
                defaults.update({a.dest: a.default for a in sub._actions})
        else:
            defaults[action.dest] = action.default
    try:
        _apply_config(args, defaults)
        return _dispatch(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except EnumerationTooLarge as exc:
        print(f"enumeration too large: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE


def _cfg(args, command: str, params: dict) -> RunConfig:
    return RunConfig(command=command, params=params,
                     seed=args.seed if args.seed is not None else 0,
                     threads=_threads(),
                     out=args.out, fmt=args.fmt or "json")


def _dispatch(args) -> int:
    if args.command == "verify-local":
        if args.p not in (2, 3, 5):
            raise UsageError("p must be one of 2, 3, 5")
        if not (0 <= args.n_max <= 6):
            raise UsageError("n-max must be in [0, 6]")
        cfg = _cfg(args, "verify-local",
                   {"p": args.p, "n_max": args.n_max, "M": args.M})
        res = run_verify_local(args.p, args.n_max, args.M)
        _write(cfg, emit_json(cfg, res))
        return EXIT_OK if res["ok"] else EXIT_VIOLATION

    if args.command == "verify-matching":
        primes = _parse_primes(args.primes)
        if any(p not in (2, 3, 5) for p in primes):
            raise UsageError("primes must be among 2, 3, 5")
        if not (0 <= args.n_max <= 8):
            raise UsageError("n-max must be in [0, 8]")
        cfg = _cfg(args, "verify-matching",
                   {"primes": primes, "n_max": args.n_max})
        res = run_verify_matching(primes, args.n_max)
        _write(cfg, emit_json(cfg, res))
        return EXIT_OK if res["ok"] else EXIT_VIOLATION

    if args.command == "coverage":
        if args.p not in (2, 3):
            raise UsageError("coverage supports p in {2, 3}")
        names = (["split-M", "split-J", "nonsplit-M", "nonsplit-J"]
                 if args.decomposition == "all" else [args.decomposition])
        seed = args.seed if args.seed is not None else 0
        cfg = _cfg(args, "coverage",
                   {"decomposition": args.decomposition, "p": args.p,
                    "M": args.M, "samples": args.samples, "torus": args.torus})
        results = [run_coverage(name, args.p, args.M, args.samples, seed,
                                args.torus) for name in names]
        _write(cfg, emit_json(cfg, results))
        return EXIT_OK if all(r["ok"] for r in results) else EXIT_VIOLATION

    if args.command == "classes":
        if not (1 <= args.level <= 6):
            raise UsageError("level must be in [1, 6]")
        if args.t_min < 3 or args.t_max < args.t_min:
            raise UsageError("need 3 <= t-min <= t-max")
        cfg = _cfg(args, "classes",
                   {"t_min": args.t_min, "t_max": args.t_max, "level": args.level})
        rows = []
        for at in range(args.t_min, args.t_max + 1):
            for t in (at, -at):
                cls = sl2_classes(t)
                splits = [gamma_splitting(c, args.level) for c in cls]
                rows.append([t, len(cls), sum(c for c, _ in splits),
                             dpsi_enumerated(args.level, t)])
        header = ["t", "class_count_sl2", "classes_in_level", "dpsi"]
        if cfg.fmt == "csv":
            _write(cfg, emit_csv(cfg, header, rows))
        else:
            _write(cfg, emit_json(cfg, [dict(zip(header, r)) for r in rows]))
        return EXIT_OK

    if args.command == "spectrum":
        if not (1 <= args.level <= 6):
            raise UsageError("level must be in [1, 6]")
        if args.x_max < 10:
            raise UsageError("x-max must be >= 10")
        cfg = _cfg(args, "spectrum",
                   {"level": args.level, "x_max": args.x_max,
                    "x_count": args.x_count})
        xs = _geometric_grid(args.x_max, args.x_count)
        rows = pmap(_pgt_row, [(args.level, x) for x in xs])
        header = ["x", "psi", "psi_minus_x", "x_pow_7_10", "pi", "li_x",
                  "pi_minus_li"]
        if cfg.fmt == "csv":
            _write(cfg, emit_csv(cfg, header, rows))
        else:
            _write(cfg, emit_json(cfg, [dict(zip(header, r)) for r in rows]))
        return EXIT_OK

    if args.command == "relation":
        ram = _parse_primes(args.ramified)
        try:
            data = RamifiedLevelData(tuple(ram),
                                     tuple(_parse_exponents(args.exponents).items()))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        if args.x_max < 10:
            raise UsageError("x-max must be >= 10")
        cfg = _cfg(args, "relation",
                   {"ramified": ram, "exponents": args.exponents,
                    "x_max": args.x_max})
        rep = psi_relation(data, args.x_max)
        res = {
            "x": rep.x,
            "psi_D": rep.psi_quaternion,
            "terms": [{"subset": list(t.subset), "coefficient": str(t.coefficient),
                       "psi": t.psi, "mode": t.mode} for t in rep.terms],
            "coefficient_sum": str(rep.coefficient_sum),
            "error": rep.error,
            "bound_7_10": rep.bound_7_10,
            "note": rep.note,
        }
        _write(cfg, emit_json(cfg, res))
        if args.csv_out:
            header = ["t"] + [f"dpsi_I_{'_'.join(map(str, t.subset)) or 'none'}"
                              for t in rep.terms] + ["dpsi_quaternion"]
            rows = []
            for row in rep.per_trace:
                keys = [k for k in row if k.startswith("dpsi[")]
                rows.append([row["t"]] + [row[k] for k in keys]
                            + [row["dpsi_quaternion"]])
            ccfg = RunConfig(cfg.command, cfg.params, cfg.seed, cfg.threads,
                             args.csv_out, "csv")
            _write(ccfg, emit_csv(ccfg, header, rows))
        return EXIT_OK

    if args.command == "report":
        if not (1 <= args.level <= 6):
            raise UsageError("level must be in [1, 6]")
        try:
            xs = [float(s) for s in args.x_grid.split(",") if s.strip()]
        except ValueError as exc:
            raise UsageError(f"bad x grid {args.x_grid!r}") from exc
        if any(x < 10 for x in xs):
            raise UsageError("grid values must be >= 10")
        cfg = _cfg(args, "report", {"level": args.level, "x_grid": xs})
        rows = pmap(_pgt_row, [(args.level, x) for x in xs])
        header = ["x", "psi", "psi_minus_x", "x_pow_7_10", "pi", "li_x",
                  "pi_minus_li"]
        if cfg.fmt == "csv":
            _write(cfg, emit_csv(cfg, header, rows))
        else:
            _write(cfg, emit_json(cfg, [dict(zip(header, r)) for r in rows]))
        return EXIT_OK

    raise UsageError(f"unknown command {args.command!r}")


def _geometric_grid(x_max: float, count: int) -> list[float]:
    if count < 2:
        return [x_max]
    lo, hi = 10.0, float(x_max)
    ratio = (hi / lo) ** (1.0 / (count - 1))
    return [lo * ratio ** k for k in range(count)]


if __name__ == "__main__":
    sys.exit(main())
