"""Vectors, interval combinatorics and the norm-oracle abstraction.

Everything is indexed from 1.  A :class:`Coeffs` is a sparse, immutable map
from index to scalar; in exact mode the scalars are ``Fraction`` and floats
are refused outright so that rational computations stay rational.
"""
from __future__ import annotations

import math
import os
import random
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Iterator, Mapping

EQ_TOL = 1e-12
INEQ_TOL = 1e-9

EXACT = "exact"
FLOAT = "float"


class BanachforgeError(Exception):
    pass


class ParseError(BanachforgeError, ValueError):
    pass


class CapError(BanachforgeError):
    """A desk-scale guard (support size, level cap, ...) was exceeded."""


class OrderingError(BanachforgeError, ValueError):
    pass


class SpecError(BanachforgeError, ValueError):
    pass


class ModelError(BanachforgeError):
    pass


class ConstructionError(BanachforgeError, ValueError):
    pass


class PoolError(BanachforgeError):
    pass


class OracleDefectError(BanachforgeError):
    pass


def default_mode() -> str:
    mode = os.environ.get("BANACHFORGE_MODE", EXACT).strip().lower()
    if mode not in (EXACT, FLOAT):
        raise SpecError(f"BANACHFORGE_MODE must be exact or float, got {mode!r}")
    return mode


def to_scalar(v, mode: str = EXACT):
    """Coerce ``v`` into the scalar type of ``mode``."""
    if mode == EXACT:
        if isinstance(v, bool):
            return Fraction(int(v))
        if isinstance(v, (int, Rational)):
            return Fraction(v)
        if isinstance(v, str):
            try:
                return Fraction(v.strip())
            except ValueError as exc:
                raise ParseError(f"not a rational: {v!r}") from exc
        raise TypeError(f"exact mode refuses {type(v).__name__} value {v!r}")
    if isinstance(v, str):
        try:
            return float(Fraction(v.strip())) if "/" in v else float(v)
        except ValueError as exc:
            raise ParseError(f"not a number: {v!r}") from exc
    return float(v)


def parse_scalar(text: str, mode: str | None = None):
    return to_scalar(text, mode or default_mode())


def fmt_scalar(v) -> str:
    """Rationals print as ``p/q`` (or ``p``), floats with 17 significant digits."""
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, int):
        return str(v)
    return "%.17g" % v


def is_exact(v) -> bool:
    return isinstance(v, (int, Fraction))


def close(a, b, tol: float = EQ_TOL) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def leq(a, b, tol: float = INEQ_TOL) -> bool:
    if is_exact(a) and is_exact(b):
        return a <= b
    return a <= b + tol * max(1.0, abs(b))


def iroot(n: int, p: int) -> int | None:
    """Exact integer p-th root of n >= 0, or None."""
    if n < 0:
        return None
    if n < 2:
        return n
    r = 1 << -(-n.bit_length() // p)
    while True:
        s = ((p - 1) * r + n // r ** (p - 1)) // p
        if s >= r:
            break
        r = s
    return r if r**p == n else None


def root(s, p):
    """s**(1/p), exact when s is rational with a rational p-th root."""
    if p == 1:
        return s
    if isinstance(s, Fraction) and isinstance(p, int):
        a, b = iroot(s.numerator, p), iroot(s.denominator, p)
        if a is not None and b is not None:
            return Fraction(a, b)
        return float(s) ** (1.0 / p)
    return float(s) ** (1.0 / float(p))


class Coeffs:
    """Finitely supported scalar sequence indexed from 1."""

    __slots__ = ("_e", "mode", "_hash")

    def __init__(self, entries: Mapping[int, object] | None = None, mode: str | None = None):
        mode = mode or default_mode()
        if mode not in (EXACT, FLOAT):
            raise SpecError(f"unknown mode {mode!r}")
        e = {}
        for k, v in (entries or {}).items():
            k = int(k)
            if k < 1:
                raise ValueError(f"indices start at 1, got {k}")
            s = to_scalar(v, mode)
            if s != 0:
                e[k] = s
        self._e = e
        self.mode = mode
        self._hash = None

    @classmethod
    def from_list(cls, values: Iterable, mode: str | None = None, start: int = 1) -> "Coeffs":
        return cls({i: v for i, v in enumerate(values, start)}, mode)

    @classmethod
    def unit(cls, i: int, mode: str | None = None) -> "Coeffs":
        return cls({i: 1}, mode)

    @classmethod
    def zero(cls, mode: str | None = None) -> "Coeffs":
        return cls({}, mode)

    # mapping-ish access
    def __getitem__(self, i: int):
        return self._e.get(i, Fraction(0) if self.mode == EXACT else 0.0)

    def get(self, i: int):
        return self[i]

    def items(self):
        return sorted(self._e.items())

    @property
    def entries(self) -> dict:
        return dict(self._e)

    def support(self) -> list[int]:
        return sorted(self._e)

    def range(self) -> tuple[int, int] | None:
        if not self._e:
            return None
        return min(self._e), max(self._e)

    def max_index(self) -> int:
        return max(self._e) if self._e else 0

    def is_zero(self) -> bool:
        return not self._e

    def __len__(self):
        return len(self._e)

    def to_list(self, n: int | None = None) -> list:
        n = self.max_index() if n is None else n
        return [self[i] for i in range(1, n + 1)]

    def __eq__(self, other):
        if not isinstance(other, Coeffs):
            return NotImplemented
        return self._e == other._e

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._e.items()))
        return self._hash

    def __repr__(self):
        body = ", ".join(f"{k}: {fmt_scalar(v)}" for k, v in self.items())
        return f"Coeffs({{{body}}}, {self.mode})"

    # arithmetic
    def _other(self, other: "Coeffs") -> "Coeffs":
        if not isinstance(other, Coeffs):
            raise TypeError("expected Coeffs")
        if other.mode != self.mode:
            raise TypeError("mixing exact and float Coeffs")
        return other

    def __add__(self, other):
        other = self._other(other)
        e = dict(self._e)
        for k, v in other._e.items():
            e[k] = e.get(k, 0) + v
        return Coeffs(e, self.mode)

    def __sub__(self, other):
        return self + (-self._other(other))

    def __neg__(self):
        return Coeffs({k: -v for k, v in self._e.items()}, self.mode)

    def scale(self, c) -> "Coeffs":
        c = to_scalar(c, self.mode)
        return Coeffs({k: c * v for k, v in self._e.items()}, self.mode)

    def __mul__(self, other):
        if isinstance(other, Coeffs):
            other = self._other(other)
            return Coeffs({k: v * other._e[k] for k, v in self._e.items() if k in other._e}, self.mode)
        return self.scale(other)

    __rmul__ = __mul__

    def abs(self) -> "Coeffs":
        return Coeffs({k: abs(v) for k, v in self._e.items()}, self.mode)

    def map(self, fn: Callable) -> "Coeffs":
        return Coeffs({k: fn(k, v) for k, v in self._e.items()}, self.mode)

    def shift(self, s: int) -> "Coeffs":
        return Coeffs({k + s: v for k, v in self._e.items()}, self.mode)

    def sum(self):
        return sum(self._e.values(), Fraction(0) if self.mode == EXACT else 0.0)

    def to_float(self) -> "Coeffs":
        return Coeffs({k: float(v) for k, v in self._e.items()}, FLOAT)

    # JSON
    def to_json(self) -> dict:
        if self.mode == EXACT:
            ent = {str(k): f"{v.numerator}/{v.denominator}" for k, v in self.items()}
        else:
            ent = {str(k): v for k, v in self.items()}
        return {"mode": self.mode, "entries": ent}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Coeffs":
        """``{"mode", "entries"}`` or a bare ``{index: value}`` map (exact mode)."""
        if not isinstance(obj, Mapping):
            raise ParseError("Coeffs JSON needs an 'entries' map")
        if "entries" in obj:
            mode, ent = obj.get("mode", EXACT), obj["entries"]
            if not isinstance(ent, Mapping):
                raise ParseError("Coeffs JSON needs an 'entries' map")
        else:
            mode, ent = EXACT, obj
        try:
            return cls({int(k): v for k, v in ent.items()}, mode)
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc)) from exc


def restrict(x: Coeffs, E) -> Coeffs:
    """x|E for an interval ``(lo, hi)`` (inclusive) or any container of indices.

    ``None`` or an interval with lo > hi is the empty interval.
    """
    if E is None:
        return Coeffs({}, x.mode)
    if isinstance(E, tuple) and len(E) == 2:
        lo, hi = E
        lo = 1 if lo is None else lo
        hi = math.inf if hi is None else hi
        return Coeffs({k: v for k, v in x._e.items() if lo <= k <= hi}, x.mode)
    E = set(E)
    return Coeffs({k: v for k, v in x._e.items() if k in E}, x.mode)


def check_interval_family(fam) -> None:
    prev = 0
    for k, m in fam:
        if not (k <= m) or k <= prev:
            raise OrderingError(f"intervals not disjoint and increasing: {fam}")
        prev = m


MAX_ENUM = 14


def enumerate_interval_families(n: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """Every family of pairwise disjoint intervals in [1, n], each exactly once.

    Families are tuples of ``(k, m)`` pairs in increasing order.  The number
    of families is the odd-index Fibonacci number F(2n+1).
    """
    if n > MAX_ENUM:
        raise CapError(f"interval family enumeration capped at n={MAX_ENUM}, got {n}")
    if n < 0:
        raise ValueError("n must be nonnegative")

    def rec(start: int, acc: tuple):
        yield acc
        for k in range(start, n + 1):
            for m in range(k, n + 1):
                yield from rec(m + 1, acc + ((k, m),))

    yield from rec(1, ())


class NormOracle:
    """A named norm on :class:`Coeffs` plus basis metadata."""

    def __init__(
        self,
        name: str,
        fn: Callable[[Coeffs], object],
        bimonotone_constant=1,
        unconditional: bool = False,
        normalized: bool = True,
        **meta,
    ):
        self.name = name
        self._fn = fn
        self.bimonotone_constant = bimonotone_constant
        self.unconditional = unconditional
        self.normalized = normalized
        self.meta = meta

    def eval(self, x: Coeffs):
        return self._fn(x)

    __call__ = eval

    def __repr__(self):
        return f"NormOracle({self.name})"


def _pnorm_values(vals, p):
    """(Σ|v|^p)^(1/p) for p ≥ 1 or p = inf, exact whenever that is possible."""
    vals = [abs(v) for v in vals]
    if not vals:
        return Fraction(0)
    if p == math.inf:
        return max(vals)
    if p == 1:
        return sum(vals)
    if isinstance(p, int) and all(isinstance(v, Fraction) for v in vals):
        return root(sum(v**p for v in vals), p)
    return math.fsum(float(v) ** float(p) for v in vals) ** (1.0 / float(p))


def pnorm(vals, p):
    return _pnorm_values(list(vals), p)


def normalize_p(p):
    if isinstance(p, str):
        t = p.strip().lower()
        if t in ("inf", "infinity", "oo"):
            return math.inf
        p = Fraction(t)
    if p == math.inf:
        return math.inf
    if isinstance(p, float) and p.is_integer():
        return int(p)
    if isinstance(p, Fraction):
        return int(p) if p.denominator == 1 else float(p)
    return p


def lp(p, dim: int | None = None) -> NormOracle:
    """The ℓ_p norm (p ≥ 1 or inf), optionally a truncation to ``dim`` coordinates."""
    p = normalize_p(p)
    if p != math.inf and p < 1:
        raise SpecError(f"lp needs p >= 1, got {p}")

    def fn(x: Coeffs):
        if dim is not None and x.max_index() > dim:
            raise CapError(f"index {x.max_index()} outside {dim}-dimensional stand-in")
        v = pnorm(x._e.values(), p)
        if not x._e:
            return Fraction(0) if x.mode == EXACT else 0.0
        return v

    tag = "inf" if p == math.inf else str(p)
    name = f"lp:{tag}" if dim is None else f"lp:{tag}:{dim}"
    return NormOracle(name, fn, 1, True, True, p=p, dim=dim)


def linf(dim: int | None = None) -> NormOracle:
    o = lp(math.inf, dim)
    o.name = "linf" if dim is None else f"linf:{dim}"
    return o


def norm_lower_search(oracle: NormOracle, functional: Coeffs, budget: int = 200, seed: int = 0):
    """Lower bound for the dual norm sup{f(x) : ||x|| <= 1} by seeded random ascent.

    Candidates live on the support of ``f``.  The returned value is
    ``max f(x)/||x||`` over every candidate visited, so it is a genuine lower
    bound.  Exact-mode functionals use dyadic rational steps.
    """
    mode = functional.mode
    supp = functional.support()
    if not supp:
        return Fraction(0) if mode == EXACT else 0.0
    rng = random.Random(seed)

    def ratio(x: Coeffs):
        if x.is_zero():
            return None
        nx = oracle(x)
        if nx == 0:
            raise OracleDefectError(f"{oracle.name} vanishes on nonzero {x!r}")
        fx = sum((functional[i] * x[i] for i in x.support()), Fraction(0) if mode == EXACT else 0.0)
        return fx / nx

    def sign(v):
        return (v > 0) - (v < 0)

    seeds = [Coeffs({i: sign(functional[i])}, mode) for i in supp]
    seeds.append(Coeffs({i: sign(functional[i]) for i in supp}, mode))
    seeds.append(functional)
    best, best_x = None, None
    for x in seeds:
        r = ratio(x)
        if r is not None and (best is None or r > best):
            best, best_x = r, x
    steps = [Fraction(1, 2**k) for k in range(0, 6)]
    for _ in range(max(0, budget)):
        if rng.random() < 0.2:
            cand = Coeffs({i: Fraction(rng.randint(-8, 8), 8) for i in supp}, EXACT)
        else:
            i = rng.choice(supp)
            d = rng.choice(steps) * rng.choice((-1, 1))
            cand = best_x.entries if best_x.mode == EXACT else {k: Fraction(v) for k, v in best_x.items()}
            cand = Coeffs({**cand, i: cand.get(i, 0) + d}, EXACT)
        if mode == FLOAT:
            cand = cand.to_float()
        r = ratio(cand)
        if r is not None and r > best:
            best, best_x = r, cand
    return best
