"""Norms of a few finitely supported vectors in the built-in spaces."""
from __future__ import annotations

from banachforge import Coeffs, parse_space
from banachforge.core import fmt_scalar

VECTORS = {
    "e1+e2": Coeffs({1: 1, 2: 1}),
    "e2+..+e5": Coeffs({i: 1 for i in range(2, 6)}),
    "alternating": Coeffs({1: 1, 2: -1, 3: 1, 4: -1}),
}
SPACES = ["lp:1", "lp:2", "jp:2", "james(lp:1)", "variation(lp:1)", "bv1", "tsirelson(schreier,1/2)"]

if __name__ == "__main__":
    width = max(map(len, SPACES))
    print(" " * width, *(f"{k:>14}" for k in VECTORS))
    for s in SPACES:
        X = parse_space(s)
        print(f"{s:>{width}}", *(f"{fmt_scalar(X(a)):>14}" for a in VECTORS.values()))
