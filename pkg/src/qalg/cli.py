"""Command-line front end: ``qalg list | verify | spectrum | sweep``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from numbers import Number

import numpy as np

from . import __version__, systems, verify
from .verify import DEFAULT_TOL, FAIL, NA, PASS, Tolerances

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing --


def parse_value(text: str):
    """Number literal: integer, decimal, fraction ``p/q`` or complex ``re+imi``."""
    s = text.strip().replace(" ", "")
    if not s:
        raise UsageError("empty value")
    try:
        if s.endswith("i") or s.endswith("j"):
            z = complex(s[:-1] + "j") if s[:-1] not in ("", "+", "-") else complex(s[:-1] + "1j")
            return z if z.imag != 0 else z.real
        if "/" in s:
            return float(Fraction(s))
        return float(s)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse number {text!r}") from None


def parse_assignments(items, what="--param") -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"{what} expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = parse_value(v)
    return out


def parse_dims(text: str) -> list[int]:
    """``4`` or an inclusive range ``2:6``."""
    try:
        if ":" in text:
            lo, hi = (int(x) for x in text.split(":", 1))
            dims = list(range(lo, hi + 1))
        else:
            dims = [int(text)]
    except ValueError:
        raise UsageError(f"bad dimension spec {text!r}") from None
    if not dims or min(dims) < 1:
        raise UsageError("dimensions must be positive")
    return dims


def tolerances(overrides: dict) -> Tolerances:
    names = {f.name for f in dataclasses.fields(Tolerances)}
    bad = set(overrides) - names
    if bad:
        raise UsageError(f"unknown tolerance(s) {sorted(bad)}; known: {sorted(names)}")
    return dataclasses.replace(DEFAULT_TOL, **{k: float(abs(v)) for k, v in overrides.items()})


# ---------------------------------------------------------- serialization --


def to_jsonable(x):
    """Plain JSON structure: complex numbers become {"re", "im"}, NaN becomes null."""
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return {f.name: to_jsonable(getattr(x, f.name)) for f in dataclasses.fields(x)}
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [to_jsonable(v) for v in x.tolist()]
    if x is None or isinstance(x, (bool, str)):
        return x
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        z = complex(x)
        return {"re": _real(z.real), "im": _real(z.imag)}
    if isinstance(x, Number):
        return _real(float(x))
    return str(x)


def _real(v: float):
    return None if math.isnan(v) else v


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _emit(to_jsonable(obj), indent, 0) + "\n"


def _emit(x, indent, level) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(x, dict):
        if not x:
            return "{}"
        body = ",\n".join(f"{pad}{json.dumps(k)}: {_emit(v, indent, level + 1)}" for k, v in x.items())
        return "{\n" + body + "\n" + end + "}"
    if isinstance(x, list):
        if not x:
            return "[]"
        body = ",\n".join(pad + _emit(v, indent, level + 1) for v in x)
        return "[\n" + body + "\n" + end + "]"
    if isinstance(x, float):
        if math.isinf(x):
            return "1e999" if x > 0 else "-1e999"
        text = format(x, ".17g")
        # keep floats recognizable as floats after a round trip
        return text if any(c in text for c in ".en") else text + ".0"
    return json.dumps(x)


def write_output(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# -------------------------------------------------------------- commands --


def cmd_list(args) -> int:
    rows = []
    for sid in systems.system_ids():
        meta = systems.SYSTEMS[sid].meta
        rows.append({
            "id": sid,
            "table": meta.table,
            "class": meta.casimir_class,
            "members": meta.members,
            "model": meta.model_type,
            "quantization": meta.quantizes or "none",
            "params": list(meta.params),
        })
    if args.json:
        write_output(dumps(rows), args.json)
        return EXIT_OK
    head = ("id", "table", "class", "members", "model", "quantization")
    widths = [max(len(h), *(len(str(r[h])) for r in rows)) for h in head]
    print("  ".join(h.ljust(w) for h, w in zip(head, widths)))
    for r in rows:
        print("  ".join(str(r[h]).ljust(w) for h, w in zip(head, widths)))
    return EXIT_OK


def _merged_params(sid: str, given: dict) -> dict:
    defn = systems.SYSTEMS[sid]
    p = dict(defn.defaults)
    p.update(given)
    unknown = set(given) - set(defn.meta.params) - {"E", "mu"}
    if unknown:
        raise UsageError(f"{sid} has no parameter(s) {sorted(unknown)}; expected {list(defn.meta.params)}")
    return p


def _report_lines(rep) -> list[str]:
    lines = [f"{rep.system}  params={rep.params}  branch={rep.branch}  E={verify._fmt(rep.energy)}  dim={rep.dim}"]
    for r in rep.relations + rep.ladders:
        res = "n/a" if r.residual is None or (isinstance(r.residual, float) and math.isnan(r.residual)) \
            else f"{r.residual:.3g}"
        lines.append(f"  [{r.status:>14}] {r.mode:6} {r.name}  residual {res}")
    for v in rep.variants:
        lines.append(f"  [{v.status:>14}] variant {v.name}: {v.outcome} (expected {v.expect})")
    if rep.closure is not None:
        c = rep.closure
        lines.append(f"  [{c.status:>14}] closure spill {c.spill_at_E:.3g} at E*, {c.spill_detuned:.3g} detuned")
    for s in rep.spectra:
        lines.append(f"  [{s.status:>14}] spectrum {s.op}  max err {s.max_err:.3g}")
    for e in rep.eigenvectors:
        lines.append(f"  [{e.status:>14}] eigenvector {e.op}[{e.index}] ({e.oracle})  distance {e.distance:.3g}")
    for entry in rep.ledger:
        lines.append(f"  ledger: {entry.topic}: {entry.finding}")
    return lines


def cmd_verify(args) -> int:
    tol = tolerances(parse_assignments(args.tol, "--tol"))
    given = parse_assignments(args.param)
    ids = systems.system_ids() if args.all else [args.system]
    reports = []
    for sid in ids:
        p = _merged_params(sid, given if not args.all else {})
        E = p.pop("E", None) if args.energy is None else parse_value(args.energy)
        rep = verify.verify_system(sid, p, m=args.dim, branch=args.branch, E=E, mode=args.mode, tol=tol,
                                   seed=args.seed)
        reports.append(rep)
    if args.json:
        write_output(dumps(reports[0] if len(reports) == 1 else reports), args.json)
    if not args.json or args.json != "-":
        for rep in reports:
            print("\n".join(_report_lines(rep)))
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL


def cmd_spectrum(args) -> int:
    sid = args.system
    p = _merged_params(sid, parse_assignments(args.param))
    E = p.pop("E", None) if args.energy is None else parse_value(args.energy)
    meta = systems.SYSTEMS[sid].meta
    if meta.quantizes is None:
        raise systems.NoQuantization(f"{sid} has no finite-dimensional representation")
    if meta.quantizes == "parameter":
        p["a"] = -args.dim
        E = 1.0 if E is None else E
    else:
        E = None
    inst = systems.build(sid, p, E=E, branch=args.branch, m=args.dim)
    recs = verify.check_spectra(inst)
    if args.op:
        recs = [r for r in recs if r.op == args.op]
        if not recs:
            raise systems.NoRule(f"{sid} has no spectrum rule for {args.op}")
    out = {"system": sid, "params": inst.params, "branch": inst.branch, "energy": inst.E, "dim": inst.dim,
           "spectra": recs}
    if args.json:
        write_output(dumps(out), args.json)
    if not args.json or args.json != "-":
        print(f"{sid}  E={verify._fmt(inst.E)}  dim={inst.dim}")
        for r in recs:
            print(f"  {r.op} [{r.status}] max err {r.max_err:.3g}")
            for a, b in zip(r.computed, r.closed_form):
                print(f"    {verify._fmt(a):>24}   closed form {verify._fmt(b)}")
    return EXIT_OK if all(r.status in (PASS, NA) for r in recs) else EXIT_FAIL


# ----------------------------------------------------------------- sweep --


def sweep_jobs(ids, dims, draws, seed, branches=None):
    """Ordered (system, branch, m, draw) jobs; systems without quantization ignore m."""
    jobs = []
    for idx, sid in enumerate(ids):
        defn = systems.SYSTEMS[sid]
        brs = [b for b in defn.branches if branches is None or b in branches] or list(defn.branches)
        ms = dims if defn.meta.quantizes is not None else [None]
        for br in brs:
            for m in ms:
                for d in range(draws):
                    jobs.append((idx, sid, br, m, d, seed))
    return jobs


def run_job(job, mode="both", tol=DEFAULT_TOL):
    idx, sid, br, m, d, seed = job
    # one stream per job, so results do not depend on scheduling
    rng = np.random.default_rng([seed, idx, m or 0, d])
    p, E = systems.sample_params(sid, rng)
    quant = systems.SYSTEMS[sid].meta.quantizes
    if quant == "energy":
        E = None
    try:
        rep = verify.verify_system(sid, p, m=m, branch=br, E=E, mode=mode, tol=tol, seed=seed)
    except Exception as exc:  # noqa: BLE001 - a crashed job is a failed job
        return {"system": sid, "branch": br, "dim": m, "draw": d, "params": p, "ok": False,
                "error": f"{type(exc).__name__}: {exc}"}
    worst = {}
    for r in rep.relations + rep.ladders:
        if r.status != NA and r.residual is not None and not math.isnan(r.residual):
            worst[r.name] = max(worst.get(r.name, 0.0), float(r.residual))
    failed = [r.name for r in rep.relations + rep.ladders if r.status == FAIL]
    failed += [f"variant {v.name}" for v in rep.variants if v.status == FAIL]
    failed += [f"spectrum {s.op}" for s in rep.spectra if s.status == FAIL]
    failed += [f"eigenvector {e.op}[{e.index}]" for e in rep.eigenvectors if e.status == FAIL]
    if rep.closure is not None and rep.closure.status == FAIL:
        failed.append("closure")
    return {
        "system": sid, "branch": br, "dim": m, "draw": d, "params": rep.params, "energy": rep.energy,
        "ok": rep.ok, "failed": failed,
        "closure": None if rep.closure is None else
        {"spill_at_E": rep.closure.spill_at_E, "spill_detuned": rep.closure.spill_detuned},
        "max_residual": max(worst.values(), default=0.0),
        "ledger": [dataclasses.asdict(e) for e in rep.ledger],
    }


def _workers() -> int:
    """Sweep worker processes: up to 4 by default, capped by QALG_THREADS."""
    n = min(4, os.cpu_count() or 1)
    raw = os.environ.get("QALG_THREADS")
    if raw is None:
        return n
    try:
        return max(1, min(n, int(raw)))
    except ValueError:
        raise UsageError(f"QALG_THREADS must be an integer, got {raw!r}") from None


def _run_all(jobs, mode, tol, workers):
    if workers <= 1 or len(jobs) < 2:
        return [run_job(j, mode, tol) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(run_job, jobs, [mode] * len(jobs), [tol] * len(jobs), chunksize=8))


def cmd_sweep(args) -> int:
    tol = tolerances(parse_assignments(args.tol, "--tol"))
    if not args.all and not args.system:
        raise UsageError("sweep needs --system ID or --all")
    ids = systems.system_ids() if args.all else [args.system]
    dims = parse_dims(args.dims)
    if args.draws < 1:
        raise UsageError("--draws must be positive")
    jobs = sweep_jobs(ids, dims, args.draws, args.seed, [args.branch] if args.branch else None)
    results = _run_all(jobs, args.mode, tol, _workers())
    # pass/fail matrix: system/branch rows, dimension columns
    matrix = {}
    for r in results:
        key = f"{r['system']}" + (f" ({r['branch']})" if r["branch"] is not None else "")
        col = "-" if r["dim"] is None else str(r["dim"])
        cell = matrix.setdefault(key, {}).setdefault(col, {"pass": 0, "fail": 0})
        cell["pass" if r["ok"] else "fail"] += 1
    out = {"version": __version__, "seed": args.seed, "draws": args.draws, "dims": dims, "mode": args.mode,
           "summary": matrix, "ok": all(r["ok"] for r in results), "runs": results}
    if args.json:
        write_output(dumps(out), args.json)
    if not args.json or args.json != "-":
        cols = [str(d) for d in dims]
        width = max(len(k) for k in matrix)
        print(" " * width + "  " + "  ".join(f"{c:>7}" for c in ["-"] + cols))
        for key, row in matrix.items():
            cells = []
            for c in ["-"] + cols:
                v = row.get(c)
                cells.append(f"{v['pass']:>3}/{v['pass'] + v['fail']:<3}" if v else f"{'':>7}")
            print(f"{key:<{width}}  " + "  ".join(cells))
        bad = [r for r in results if not r["ok"]]
        for r in bad[:20]:
            print(f"FAIL {r['system']} branch={r['branch']} m={r['dim']} draw={r['draw']}: "
                  f"{r.get('error') or ', '.join(r['failed'])}")
        print(f"{len(results) - len(bad)}/{len(results)} runs passed")
    return EXIT_OK if out["ok"] else EXIT_FAIL


# ------------------------------------------------------------------ main --


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qalg", description="Verify quadratic symmetry algebras and their models.")
    ap.add_argument("--version", action="version", version=f"qalg {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="catalog of systems")
    p.add_argument("--json", metavar="PATH", help="write the catalog as JSON ('-' for stdout)")
    p.set_defaults(func=cmd_list)

    def common(p, dims=False):
        p.add_argument("--param", action="append", metavar="NAME=VALUE", help="parameter value (repeatable)")
        p.add_argument("--branch", help="quantization branch, e.g. + or -")
        p.add_argument("--mode", choices=("action", "matrix", "both"), default="both")
        p.add_argument("--tol", action="append", metavar="NAME=VALUE", help="tolerance override (repeatable)")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--json", metavar="PATH", help="write the report as JSON ('-' for stdout)")

    p = sub.add_parser("verify", help="verify one system (or all with --all)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--system", choices=systems.system_ids())
    g.add_argument("--all", action="store_true")
    p.add_argument("--dim", type=int, default=4, help="representation index m (default 4)")
    p.add_argument("--energy", help="energy value (default: the quantized one)")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spectrum", help="eigenvalues of a model operator against the closed form")
    p.add_argument("--system", required=True, choices=systems.system_ids())
    p.add_argument("--op", help="operator label, e.g. L2 or K1+K2")
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--energy", help="energy for parameter-quantized systems")
    common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="random-draw sweep over systems and dimensions")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--system", choices=systems.system_ids())
    g.add_argument("--all", action="store_true")
    p.add_argument("--dims", default="4", help="dimension or inclusive range lo:hi (default 4)")
    p.add_argument("--draws", type=int, default=20)
    common(p)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if getattr(args, "dim", 1) is not None and getattr(args, "dim", 1) < 1:
            raise UsageError("--dim must be positive")
        return args.func(args)
    except UsageError as exc:
        print(f"qalg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (systems.InadmissibleParams, systems.NoQuantization, systems.NoRule, KeyError) as exc:
        print(f"qalg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
