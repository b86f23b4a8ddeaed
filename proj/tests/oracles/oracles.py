# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The cotflow Authors
"""High-precision reference values used by the C++ unit and acceptance tests.

Computed with mpmath at 50 significant digits and exact rationals, without
sharing code with the library. Run: python3 tests/oracles/oracles.py
"""
from fractions import Fraction

import mpmath as mp

mp.mp.dps = 50


def phi(u):
    return mp.exp(-u * u / 2) / mp.sqrt(2 * mp.pi)


def kde(samples, h, x):
    return mp.fsum(phi((mp.mpf(x) - mp.mpf(s)) / h) for s in samples) / (len(samples) * h)


def entropy(ps):
    return -mp.fsum(mp.mpf(p) * mp.log(p) for p in ps if p > 0)


def quantile(xs, q):
    xs = sorted(mp.mpf(x) for x in xs)
    pos = q * (len(xs) - 1)
    lo = int(mp.floor(pos))
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (pos - lo) * (xs[hi] - xs[lo])


def silverman(xs):
    n = len(xs)
    m = mp.fsum(xs) / n
    sd = mp.sqrt(mp.fsum((mp.mpf(x) - m) ** 2 for x in xs) / (n - 1))
    iqr = quantile(xs, mp.mpf("0.75")) - quantile(xs, mp.mpf("0.25"))
    spread = min(sd, iqr / mp.mpf("1.34")) if iqr > 0 else sd
    return mp.mpf("0.9") * spread * mp.mpf(n) ** mp.mpf("-0.2")


def pearson(pts):
    n = len(pts)
    mx = mp.fsum(mp.mpf(x) for x, _ in pts) / n
    my = mp.fsum(mp.mpf(y) for _, y in pts) / n
    sxy = mp.fsum((x - mx) * (y - my) for x, y in pts)
    sxx = mp.fsum((x - mx) ** 2 for x, _ in pts)
    syy = mp.fsum((y - my) ** 2 for _, y in pts)
    return sxy / mp.sqrt(sxx * syy)


def improvement(std, cot):
    s, c = Fraction(std), Fraction(cot)
    return (c - s) / s * 100


if __name__ == "__main__":
    print("kde peak            ", mp.nstr(kde([0.5], mp.mpf("0.1"), 0.5), 20))
    print("kde two-sample      ", mp.nstr(kde(["0.4", "0.6"], mp.mpf("0.1"), "0.5"), 20))
    print("entropy [.7,.2,.1]  ", mp.nstr(entropy([mp.mpf("0.7"), mp.mpf("0.2"), mp.mpf("0.1")]), 20))
    print("entropy [.5,.5]     ", mp.nstr(entropy([mp.mpf("0.5")] * 2), 20))
    print("silverman {0.4,0.6} ", mp.nstr(silverman([mp.mpf("0.4"), mp.mpf("0.6")]), 20))
    print("pearson 3-point     ", mp.nstr(pearson([(1, mp.mpf("0.2")), (2, mp.mpf("0.5")), (3, mp.mpf("0.4"))]), 20))
    rows = {
        "AQuA": ("0.3110", "0.4961"),
        "Sports": ("0.7497", "0.9395"),
        "Coin Flip": ("0.4580", "1.000"),
        "GSM8K": ("0.1774", "0.7771"),
        "Date": ("0.4417", "0.7100"),
    }
    for name, (s, c) in rows.items():
        print(f"improvement {name:10s}", f"{float(improvement(s, c)):.6f}")
