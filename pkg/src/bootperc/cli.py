"""Command-line front end.

Exit codes: 0 ok, 1 usage, 2 numeric or guard failure, 3 regression mismatch.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import mpmath

from bootperc import __version__
from bootperc import exact, montecarlo, oracle, tablecheck
from bootperc.bootstrap import closure, min_percolating_set, min_percolating_size, spans
from bootperc.lattice import GridShape, format_cell

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_MISMATCH = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Mismatch(Exception):
    pass


@dataclass
class RunSpec:
    subcommand: str
    parameters: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "csv"
    seed: int = 0
    precision_bits: int = exact.DEFAULT_PRECISION_BITS
    threads: int = 1

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> RunSpec:
        data = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown RunSpec fields: {sorted(extra)}")
        return cls(**data)


# ----------------------------------------------------------------------
# output helpers


class Emitter:
    def __init__(self, spec: RunSpec):
        self.spec = spec
        self.files: list[str] = []

    def write(self, name: str, rows: list[list], header: list[str], meta: dict | None = None, obj=None) -> None:
        if self.spec.format == "json":
            payload = obj if obj is not None else {"meta": meta or {}, "columns": header, "rows": rows}
            text = json.dumps(payload, indent=1, default=str) + "\n"
        else:
            buf = io.StringIO()
            for k, v in (meta or {}).items():
                buf.write(f"# {k}={v}\n")
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
            text = buf.getvalue()
        if self.spec.out:
            path = Path(self.spec.out)
            if path.suffix == "" or path.is_dir():
                path.mkdir(parents=True, exist_ok=True)
                path = path / f"{name}.{self.spec.format}"
            else:
                path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
            self.files.append(str(path))
        else:
            sys.stdout.write(text)


def _lambda_hash(ctx: exact.LambdaContext) -> str:
    return hashlib.sha256(f"{mpmath.nstr(ctx.lam, 40)}|{ctx.precision_bits}".encode()).hexdigest()[:16]


def write_manifest(spec: RunSpec, ctx: exact.LambdaContext, files: list[str], results: dict) -> Path | None:
    if not spec.out:
        return None
    base = Path(spec.out)
    path = (base / "manifest.json") if (base.suffix == "" or base.is_dir()) else base.with_name(base.name + ".manifest.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "run": json.loads(spec.to_json()),
        "version": __version__,
        "lambda": mpmath.nstr(ctx.lam, 30),
        "lambda_hash": _lambda_hash(ctx),
        "outputs": files,
        "results": results,
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n")
    return path


def append_results_log(path: str, row: dict) -> None:
    new = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(row))
        if new:
            w.writeheader()
        w.writerow(row)


def _fmt(x, digits: int = 15) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    return mpmath.nstr(mpmath.mpf(x), digits)


# ----------------------------------------------------------------------
# subcommands


def cmd_lambda(spec: RunSpec, ctx, em: Emitter) -> dict:
    tol = spec.parameters["tolerance"]
    if not 0 < tol <= 1e-6:
        raise exact.NumericError(f"tolerance must lie in (0, 1e-6], got {tol}")
    lc = exact.lambda_root(tol, spec.precision_bits)
    res = {"lambda": mpmath.nstr(lc.lam, 20), "truncation_order": lc.truncation_order, "residual": mpmath.nstr(lc.residual, 5)}
    em.write("lambda", [[res["lambda"], lc.truncation_order, res["residual"], lc.precision_bits]], ["lambda", "truncation_order", "residual", "precision_bits"])
    return res


def cmd_tables(spec: RunSpec, ctx, em: Emitter) -> dict:
    prm = spec.parameters
    meta = {"lambda": mpmath.nstr(ctx.lam, 30), "precision_bits": ctx.precision_bits}
    header = ["dim", "kind", "tag", "value"]
    if prm["which"] in ("S", "all"):
        t = exact.spanning_counts(prm["ell_max"])
        em.write("S", [list(r) for r in t.rows()], header, meta)
    if prm["which"] in ("stars", "all"):
        st = exact.star_tables(prm["ell_max"])
        rows = [list(r) for tab in (st.pstar, st.rstar, st.ystar) for r in tab.rows()]
        em.write("stars", rows, header, meta)
    if not prm["paper_check"]:
        return {}
    checks = tablecheck.check_star_tables()
    claims = tablecheck.check_global_claims()
    for c in checks:
        mark = "PASS" if c.ok else "FAIL"
        print(f"{mark} {c.row}({c.dim}) {c.relation} {c.printed}: computed {c.computed_str()}  [{c.source}]", file=sys.stderr)
    for c in claims:
        mark = "PASS" if c.ok else "FAIL"
        print(f"{mark} {c.name}: max ratio {float(c.worst):.6f} < {c.bound}", file=sys.stderr)
    failed = [c for c in checks if not c.ok] + [c for c in claims if not c.ok]
    print(f"{len(checks) + len(claims) - len(failed)}/{len(checks) + len(claims)} reference checks pass", file=sys.stderr)
    if failed:
        raise Mismatch(f"{len(failed)} reference values differ")
    return {"checks": len(checks) + len(claims)}


def cmd_oracle(spec: RunSpec, ctx, em: Emitter) -> dict:
    prm = spec.parameters
    rep = oracle.enumerate_counts(
        prm["dim"],
        prm["size"],
        shards=prm["shards"],
        workers=spec.threads,
        checkpoint_dir=prm["checkpoint_dir"],
        allow_large=prm["allow_large"],
    )
    doc = rep.to_json()
    em.write(
        f"oracle-{rep.dim}-{rep.set_size}",
        [[k, str(v)] for k, v in rep.counts.items()],
        ["count", "value"],
        {"dim": rep.dim, "size": rep.set_size, "checksum": doc["checksum"]},
        obj=doc,
    )
    return doc


def _shape(prm) -> GridShape:
    if prm.get("sides"):
        return GridShape(tuple(int(x) for x in prm["sides"].split(",")))
    return GridShape.uniform(prm["n"], prm["d"])


def _exact_target(prm, ctx):
    kind, ell, p = prm["target"], prm["l"], prm["p"]
    if kind == "sequential-cube":
        return float(exact.q_exact(ell, p, ctx))
    if kind == "droplets":
        return float(exact.expected_droplets(prm["n"], prm["d"], ell, p, ctx))
    if kind == "cube" and ell <= 4:
        return float(oracle.span_polynomial(ell).evaluate(p))
    if kind == "full-grid" and prm["n"] == 2 and prm["d"] <= 4 and not prm.get("sides"):
        return float(oracle.span_polynomial(prm["d"]).evaluate(p))
    return None


def cmd_simulate(spec: RunSpec, ctx, em: Emitter) -> dict:
    prm = spec.parameters
    shape = _shape(prm)
    cfg = montecarlo.McConfig(shape, prm["p"], prm["samples"], spec.seed, prm["replicas"], prm["r"])
    if prm["target"] == "droplets":
        ds = montecarlo.droplet_stats(cfg, prm["l"], spec.threads)
        est, extra = ds.mean, {"variance": ds.variance.mean, "subcubes": ds.subcubes}
    else:
        est = montecarlo.estimate_spanning(cfg, montecarlo.Target(prm["target"], prm["l"]), spec.threads)
        extra = {"successes": est.successes}
    res = {"target": prm["target"], "shape": str(shape), "p": prm["p"], "N": est.n, "mean": est.mean, "std_error": est.std_error, **extra}
    verdict = None
    if prm["compare_exact"]:
        want = _exact_target(prm, ctx)
        if want is None:
            raise UsageError(f"no closed form is available for target {prm['target']}")
        z = est.z_score(want)
        verdict = abs(z) <= 3
        res.update(exact=want, z=z)
        print(f"{'PASS' if verdict else 'FAIL'} {prm['target']}: mean {est.mean:.6g} vs exact {want:.6g}, z = {z:+.3f}", file=sys.stderr)
    em.write("simulate", [[k, v] for k, v in res.items()], ["field", "value"])
    if prm["log"]:
        append_results_log(prm["log"], {"seed": spec.seed, **{k: res.get(k) for k in ("target", "shape", "p", "N", "mean", "std_error", "exact", "z")}})
    if verdict is False:
        raise Mismatch("Monte Carlo estimate is more than 3 standard errors from the exact value")
    return res


def cmd_pc(spec: RunSpec, ctx, em: Emitter) -> dict:
    prm = spec.parameters
    rows = []
    for d in prm["d"]:
        shape = GridShape.uniform(prm["n"], d)
        est = montecarlo.pc_bisect(shape, prm["r"], prm["target_prob"], prm["samples"], spec.seed, prm["tol"], threads=spec.threads)
        pred = float(exact.pc_predict(prm["n"], d, "sharp", ctx)) if d >= 2 else math.nan
        rows.append([prm["n"], d, est.p_hat, est.bracket[0], est.bracket[1], est.theta.mean, len(est.probes), pred, "; ".join(est.warnings)])
    em.write("pc", rows, ["n", "d", "p_hat", "bracket_lo", "bracket_hi", "theta_at_p_hat", "probes", "sharp_formula", "warnings"])
    return {"rows": rows}


def cmd_minset(spec: RunSpec, ctx, em: Emitter) -> dict:
    prm = spec.parameters
    shape = GridShape.uniform(prm["n"], prm["d"])
    a = min_percolating_set(shape)
    perc = spans(shape.full_cube(), a)
    if shape.n_cells <= 1 << 16:
        perc = perc and closure(shape, a).infected.bits == (1 << shape.n_cells) - 1
    cells = [format_cell(c) for c in a.cells()]
    res = {"n": prm["n"], "d": prm["d"], "size": len(a), "formula": min_percolating_size(prm["n"], prm["d"]), "percolates": perc}
    em.write("minset", [[c] for c in cells] + [[f"percolates: {str(perc).lower()}"]], ["cell"], obj={**res, "cells": cells})
    return res


def cmd_predict(spec: RunSpec, ctx, em: Emitter) -> dict:
    prm = spec.parameters
    variants = ["hypercube-lower", "hypercube-upper", "grid-lower", "grid-upper", "sharp"] if prm["variant"] == "all" else [prm["variant"]]
    rows = [[prm["n"], d, v, _fmt(exact.pc_predict(prm["n"], d, v, ctx))] for d in prm["d"] for v in variants]
    d0 = exact.pc_order_threshold(prm["d_max"], prm["n"], ctx)
    em.write("predict", rows, ["n", "d", "variant", "p"], {"d0": d0})
    return {"d0": d0}


def cmd_techlemma(spec: RunSpec, ctx, em: Emitter) -> dict:
    prm = spec.parameters
    ell = prm["l"]
    rows = []
    rng = random.Random(spec.seed)
    runs = max(1, prm["runs"]) if prm["preset"] == "random" else 1
    bad = 0
    with mpmath.workprec(spec.precision_bits):
        for _ in range(runs):
            if prm["preset"] == "zero":
                g = [0.0] * ell
                h = [1.0] * ell
            elif prm["preset"] == "schedule":
                g = exact.decay_g_schedule(ell, prm["c_delta"])
                h = [1 + mpmath.mpf(x) for x in g]
            else:
                g, h = random_admissible(rng, ell, prm["g_total"])
            run, verdict = exact.tech_lemma_eval(ell, g, h, ctx)
            bad += not verdict.ok
            rows.append([ell, _fmt(run.f_values[-1]), _fmt(verdict.lower), _fmt(verdict.upper), verdict.bound_ok, len(verdict.claim1_failures)])
    em.write("techlemma", rows, ["l", "f_l", "lower", "upper", "bound_ok", "claim1_failures"])
    if bad:
        raise Mismatch(f"{bad} runs violate the bounds")
    return {"runs": runs, "violations": bad}


def random_admissible(rng: random.Random, ell: int, total: float = 1 / 3) -> tuple[list[float], list]:
    """Random g >= 0 with g(0) = 0 and sum g <= total, and h uniform in [1, 1 + g]."""
    raw = [rng.expovariate(1.0) for _ in range(ell - 1)]
    scale = rng.uniform(0, total) / (sum(raw) or 1.0)
    g = [0.0] + [x * scale for x in raw]
    h = [mpmath.mpf(1)] + [1 + mpmath.mpf(rng.uniform(0, x)) for x in g[1:]]
    return g, h


# ----------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bootperc", description="Two-neighbour bootstrap percolation: exact counts, oracles and simulation.")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--format", choices=["csv", "json"], default="csv")
    ap.add_argument("--out", default=None, help="output file or directory; also where the run manifest goes")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--precision-bits", type=int, default=exact.DEFAULT_PRECISION_BITS)
    sub = ap.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("lambda", help="compute lambda")
    p.add_argument("--tolerance", type=float, default=1e-30)

    p = sub.add_parser("tables", help="|S(l)| and the P*, R*, Y* tables")
    p.add_argument("--ell-max", type=int, default=7)
    p.add_argument("--which", choices=["S", "stars", "all"], default="all")
    p.add_argument("--paper-check", action="store_true", help="compare against the stored reference values")

    p = sub.add_parser("oracle", help="exhaustive enumeration on [2]^dim")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--checkpoint-dir", default=None)
    p.add_argument("--allow-large", action="store_true")

    p = sub.add_parser("simulate", help="Monte Carlo estimates")
    p.add_argument("--target", choices=["full-grid", "cube", "sequential-cube", "droplets"], required=True)
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--sides", default=None, help="comma-separated side lengths, overrides --n/--d")
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--compare-exact", action="store_true")
    p.add_argument("--log", default=None, help="CSV results log to append to")

    p = sub.add_parser("pc", help="bisection estimate of p_c on [n]^d")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=_ints, default=[6])
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--target-prob", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-3)

    p = sub.add_parser("minset", help="minimal percolating set of [n]^d")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)

    p = sub.add_parser("predict", help="closed-form p_c expressions")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=_ints, default=[100])
    p.add_argument("--variant", choices=["hypercube-lower", "hypercube-upper", "grid-lower", "grid-upper", "sharp", "all"], default="all")
    p.add_argument("--d-max", type=int, default=1000)

    p = sub.add_parser("techlemma", help="evaluate the f/g/h recursion and its bounds")
    p.add_argument("--l", type=int, default=50)
    p.add_argument("--preset", choices=["zero", "schedule", "random"], default="zero")
    p.add_argument("--c-delta", type=float, default=0.01)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--g-total", type=float, default=1 / 3)
    return ap


COMMANDS = {
    "lambda": cmd_lambda,
    "tables": cmd_tables,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
    "pc": cmd_pc,
    "minset": cmd_minset,
    "predict": cmd_predict,
    "techlemma": cmd_techlemma,
}
_GLOBAL = ("seed", "format", "out", "threads", "precision_bits", "subcommand")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in _GLOBAL}
    spec = RunSpec(args.subcommand, params, args.out, args.format, args.seed, args.precision_bits, args.threads)
    try:
        ctx = exact.default_context(spec.precision_bits)
        em = Emitter(spec)
        results = COMMANDS[spec.subcommand](spec, ctx, em)
        write_manifest(spec, ctx, em.files, results)
    except UsageError as e:
        print(f"bootperc: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Mismatch as e:
        print(f"bootperc: mismatch: {e}", file=sys.stderr)
        return EXIT_MISMATCH
    except (ArithmeticError, ValueError) as e:
        print(f"bootperc: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
