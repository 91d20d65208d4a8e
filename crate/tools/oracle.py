#!/usr/bin/env python3
"""Independent oracle for snapshot fixtures.

Linear metrics use exact rationals; square-root metrics use mpmath at 60
digits. Gini is the O(m^2) pairwise mean-absolute-difference form.
"""

import json
import sys
from fractions import Fraction

import mpmath

mpmath.mp.dps = 60


def load(path):
    doc = json.load(open(path))
    return doc["chain"], [int(v["stake"]) for v in doc["validators"]]


def nakamoto(ws, frac):
    desc = sorted(ws, reverse=True)
    total = sum(desc)
    acc = 0
    for k, x in enumerate(desc, 1):
        acc += x
        if acc >= frac * total:
            return k
    return len(desc)


def gini(ws):
    m = len(ws)
    total = sum(ws)
    pair = sum(abs(a - b) for a in ws for b in ws)
    return pair / (2 * m * total)


def epsilon(ws, delta):
    asc = sorted(ws)
    m = len(asc)
    idx = delta * (m - 1) // 100
    return asc[-1] / asc[idx] - 1


def metrics(ws, exact):
    one_third = Fraction(1, 3) if exact else mpmath.mpf(1) / 3
    two_third = Fraction(2, 3) if exact else mpmath.mpf(2) / 3
    return (
        nakamoto(ws, one_third),
        nakamoto(ws, two_third),
        gini(ws),
        epsilon(ws, 0),
        epsilon(ws, 50),
    )


def main(paths):
    rows = []
    for p in paths:
        chain, stakes = load(p)
        lin = metrics([Fraction(s) for s in stakes], True)
        sq = metrics([mpmath.sqrt(s) for s in stakes], False)
        g_dec = (mpmath.mpf(lin[2].numerator) / lin[2].denominator - sq[2]) / (
            mpmath.mpf(lin[2].numerator) / lin[2].denominator
        ) * 100
        nl_inc = Fraction(sq[0] - lin[0], lin[0]) * 100
        ns_inc = Fraction(sq[1] - lin[1], lin[1]) * 100
        rows.append((g_dec, nl_inc, ns_inc))
        print(
            f"{chain}: m={len(stakes)} lin NL={lin[0]} NS={lin[1]} G={float(lin[2])!r} "
            f"eps0={float(lin[3])!r} eps50={float(lin[4])!r} | srsw NL={sq[0]} NS={sq[1]} "
            f"G={mpmath.nstr(sq[2], 17)} eps0={mpmath.nstr(sq[3], 17)} eps50={mpmath.nstr(sq[4], 17)} | "
            f"dG={mpmath.nstr(g_dec, 17)} dNL={float(nl_inc)!r} dNS={float(ns_inc)!r}"
        )
    if len(rows) > 1:
        n = len(rows)
        print(
            "mean:",
            mpmath.nstr(mpmath.fsum(r[0] for r in rows) / n, 17),
            float(sum(r[1] for r in rows) / n),
            float(sum(r[2] for r in rows) / n),
        )


if __name__ == "__main__":
    main(sys.argv[1:])
