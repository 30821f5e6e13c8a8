"""Regression of computed star tables against printed reference values.

A printed number carries its own precision: ``1.2e9`` has two significant
figures, ``0.794`` three decimals, and a bare integer is exact. A computed
value matches when rounding it to that precision, either to nearest or in
the direction of the printed inequality (up for ``<=``, down for ``>=``),
gives the printed number.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from importlib import resources

from bootperc.exact import StarTables, s_value, star_tables


@dataclass(frozen=True)
class TableCheck:
    row: str
    dim: int
    relation: str
    printed: str
    computed: Fraction
    ok: bool
    source: str

    def computed_str(self) -> str:
        c = self.computed
        if c.denominator == 1:
            return str(c.numerator)
        return f"{float(c):.6g}"


def load_fixtures() -> dict:
    return json.loads(resources.files("bootperc").joinpath("data/star_tables.json").read_text())


def _unit(printed: str) -> Fraction | None:
    """Rounding unit implied by the printed digits; None for an exact integer."""
    if "e" in printed:
        mant, exp = printed.split("e")
        return Fraction(10) ** (int(exp) - (len(mant.split(".")[1]) if "." in mant else 0))
    if "." in printed:
        return Fraction(1, 10 ** len(printed.split(".")[1]))
    return None


def matches(computed: Fraction, printed: str, relation: str) -> bool:
    target = Fraction(Decimal(printed))
    unit = _unit(printed)
    if unit is None:
        return computed == target
    x = computed / unit
    candidates = {math.floor(x + Fraction(1, 2))}
    if relation == "<=":
        candidates.add(math.ceil(x))
    elif relation == ">=":
        candidates.add(math.floor(x))
    return any(c * unit == target for c in candidates)


def computed_value(tables: StarTables, row: str, dim: int, relation: str) -> Fraction:
    if row == "S":
        return Fraction(s_value(dim // 2))
    if row == "ratio":
        return tables.ratio(dim)
    table = {"Pstar": tables.pstar, "Rstar": tables.rstar, "Ystar": tables.ystar}[row]
    return Fraction(table.lower(dim) if relation == ">=" else table.upper(dim))


def check_star_tables(tables: StarTables | None = None) -> list[TableCheck]:
    fx = load_fixtures()
    top = max(e["dim"] for e in fx["entries"])
    tables = tables or star_tables((top + 1) // 2)
    out = []
    for e in fx["entries"]:
        val = computed_value(tables, e["row"], e["dim"], e["relation"])
        out.append(TableCheck(e["row"], e["dim"], e["relation"], e["printed"], val, matches(val, e["printed"], e["relation"]), e["source"]))
    return out


@dataclass(frozen=True)
class ClaimCheck:
    name: str
    worst: Fraction
    bound: Fraction
    ok: bool


def check_global_claims(tables: StarTables | None = None) -> list[ClaimCheck]:
    """The even and odd ratio bounds for every l up to the fixture's limit."""
    fx = load_fixtures()
    out = []
    for claim in fx["claims"]:
        ell_max = claim["ell_max"]
        tables_l = tables if tables is not None and max(tables.pstar.keys()) >= 2 * ell_max + 1 else star_tables(ell_max)
        bound = Fraction(claim["bound"])
        if claim["name"] == "even-global":
            ratios = [Fraction(2**l * tables_l.ystar.upper(2 * l), s_value(l)) for l in range(1, ell_max + 1)]
        else:
            ratios = [Fraction(tables_l.ystar.upper(2 * l + 1), tables_l.rstar.lower(2 * l + 1)) for l in range(0, ell_max + 1)]
        worst = max(ratios)
        out.append(ClaimCheck(claim["name"], worst, bound, worst < bound))
    return out
