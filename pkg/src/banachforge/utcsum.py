"""The upper-triangular-column (utc) sum of spaces X_k over an outer space X.

A vector is a :class:`BlockVec`, one coefficient sequence per component k,
taken against finite-dimensional stand-in bases (t_{k,i})_i whose coordinate
functionals t*_{k,i} are the usual coordinates.  The norm is

    max( sup_{i0} ||Σ_{k<=i0} t*_{k,i0}(x_k) e_k||_X ,  max_k ||x_k||_{X_k} / A_0 ).
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Mapping

from .core import EXACT, Coeffs, NormOracle, OrderingError, ParseError, close, default_mode
from .spaces import parse_space

DEFAULT_INNER = "linf:16"


class BlockVec:
    """Finitely many nonzero parts x_k, each a Coeffs against (t_{k,i})_i."""

    __slots__ = ("parts", "mode")

    def __init__(self, parts: Mapping[int, Coeffs] | None = None, mode: str | None = None):
        parts = {int(k): v for k, v in (parts or {}).items() if not v.is_zero()}
        modes = {v.mode for v in parts.values()}
        if len(modes) > 1:
            raise TypeError("mixing exact and float parts")
        self.mode = modes.pop() if modes else (mode or default_mode())
        for k in parts:
            if k < 1:
                raise ValueError("component indices start at 1")
        self.parts = parts

    def supp(self) -> list[int]:
        return sorted(self.parts)

    def supp_k(self, k: int) -> list[int]:
        return self.parts[k].support() if k in self.parts else []

    def max_coord(self) -> int:
        """Largest i with some t*_{k,i}(x_k) != 0."""
        return max((v.max_index() for v in self.parts.values()), default=0)

    def is_zero(self) -> bool:
        return not self.parts

    def __add__(self, other: "BlockVec") -> "BlockVec":
        out = dict(self.parts)
        for k, v in other.parts.items():
            out[k] = out[k] + v if k in out else v
        return BlockVec(out, self.mode)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "BlockVec":
        return BlockVec({k: v.scale(c) for k, v in self.parts.items()}, self.mode)

    def restrict_components(self, lo: int, hi: int) -> "BlockVec":
        return BlockVec({k: v for k, v in self.parts.items() if lo <= k <= hi}, self.mode)

    def __eq__(self, other):
        return isinstance(other, BlockVec) and self.parts == other.parts

    def __repr__(self):
        return f"BlockVec({self.parts!r})"

    def to_json(self) -> dict:
        return {str(k): v.to_json() for k, v in sorted(self.parts.items())}

    @classmethod
    def from_json(cls, obj: Mapping) -> "BlockVec":
        try:
            return cls({int(k): Coeffs.from_json(v) for k, v in obj.items()})
        except (AttributeError, ValueError) as exc:
            raise ParseError(f"bad BlockVec JSON: {exc}") from exc


def column(a: Coeffs, i0: int) -> BlockVec:
    """Σ_{k<=i0} a_k t_{k,i0}."""
    if a.max_index() > i0:
        raise OrderingError(f"column at i0={i0} only has components k <= i0")
    return BlockVec({k: Coeffs({i0: v}, a.mode) for k, v in a.items()}, a.mode)


class UtcConfig:
    def __init__(self, outer: NormOracle | str, A0=None, inner: Mapping | None = None):
        self.outer = parse_space(outer) if isinstance(outer, str) else outer
        if A0 is None:
            A0 = self.outer.bimonotone_constant
        if A0 is None:
            raise ValueError(f"{self.outer.name} has no known bimonotone constant; pass A0")
        self.A0 = Fraction(A0) if not isinstance(A0, float) else A0
        inner = dict(inner or {})
        self.inner_specs = {str(k): v for k, v in inner.items()}
        self.inner_specs.setdefault("default", DEFAULT_INNER)
        self._inner_cache: dict[str, NormOracle] = {}

    def inner(self, k: int) -> NormOracle:
        spec = self.inner_specs.get(str(k), self.inner_specs["default"])
        if isinstance(spec, NormOracle):
            return spec
        if spec not in self._inner_cache:
            self._inner_cache[spec] = parse_space(spec)
        return self._inner_cache[spec]

    def to_json(self) -> dict:
        return {
            "outer": self.outer.name,
            "A0": str(self.A0),
            "inner": {k: (v if isinstance(v, str) else v.name) for k, v in self.inner_specs.items()},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "UtcConfig":
        try:
            A0 = obj.get("A0")
            if isinstance(A0, str):
                A0 = Fraction(A0)
            return cls(obj["outer"], A0, obj.get("inner"))
        except KeyError as exc:
            raise ParseError(f"utc config missing {exc}") from exc

    @classmethod
    def load(cls, path: str) -> "UtcConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def column_norm(cfg: UtcConfig, x: BlockVec, i0: int):
    """||Σ_{k<=i0} t*_{k,i0}(x_k) e_k||_X."""
    col = {k: v[i0] for k, v in x.parts.items() if k <= i0 and v[i0] != 0}
    return cfg.outer(Coeffs(col, x.mode))


def norm_utc(cfg: UtcConfig, x: BlockVec):
    zero = Fraction(0) if x.mode == EXACT else 0.0
    best = zero
    for i0 in range(1, x.max_coord() + 1):
        v = column_norm(cfg, x, i0)
        if v > best:
            best = v
    for k, v in x.parts.items():
        w = cfg.inner(k)(v) / cfg.A0
        if w > best:
            best = w
    return best


def check_disjoint_max(cfg: UtcConfig, y: BlockVec, w: BlockVec):
    """||y + w|| = max(||y||, ||w||) when y's components and coordinates end before w starts."""
    if not w.is_zero() and not y.is_zero():
        start = w.supp()[0]
        if not y.supp()[-1] < start:
            raise OrderingError("components of y must end before those of w start")
        if not y.max_coord() < start:
            raise OrderingError("coordinates of y must end before the components of w start")
    lhs = norm_utc(cfg, y + w)
    rhs = max(norm_utc(cfg, y), norm_utc(cfg, w))
    return lhs, rhs, close(lhs, rhs)
