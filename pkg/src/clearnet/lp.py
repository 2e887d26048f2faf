"""Exact rational simplex for ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

The origin is feasible for every problem this package poses, so a single
phase suffices.  Bland's rule rules out cycling.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)


def maximize(c: Sequence, a: Sequence[Sequence], b: Sequence) -> tuple[Fraction, list[Fraction]]:
    m, n = len(a), len(c)
    if any(Fraction(x) < 0 for x in b):
        raise ValueError("right-hand side must be nonnegative")
    # tableau rows: [A | I | b]; objective row holds reduced costs -c
    rows = [[Fraction(x) for x in a[i]] + [Fraction(int(i == j)) for j in range(m)] + [Fraction(b[i])]
            for i in range(m)]
    obj = [-Fraction(x) for x in c] + [ZERO] * m + [ZERO]
    basis = [n + i for i in range(m)]
    width = n + m
    while True:
        col = next((j for j in range(width) if obj[j] < 0), None)
        if col is None:
            break
        best = None
        for i in range(m):
            if rows[i][col] > 0:
                ratio = rows[i][-1] / rows[i][col]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            raise ValueError("unbounded linear program")
        r = best[1]
        piv = rows[r][col]
        rows[r] = [x / piv for x in rows[r]]
        for i in range(m):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        if obj[col] != 0:
            f = obj[col]
            obj = [x - f * y for x, y in zip(obj, rows[r])]
        basis[r] = col
    x = [ZERO] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = rows[i][-1]
    return obj[-1], x
