"""Families of finite subsets of ℕ: Schreier, bounded, finite-rank fine, OSZ-style and explicit.

Sets are sorted tuples of positive integers.  Admissibility of successive
sets ``E_1 < ... < E_n`` asks for a member ``{m_1 < ... < m_n}`` with
``max E_{i-1} < m_i <= min E_i``.  For regular families choosing
``m_i = min E_i`` is optimal, which is what :func:`is_admissible` does.
"""
from __future__ import annotations

import itertools
import json
from functools import lru_cache
from typing import Iterable, Sequence

from .core import CapError, OrderingError, ParseError, SpecError

REGULAR_CAP = 20


def as_set(F: Iterable[int]) -> tuple[int, ...]:
    t = tuple(int(x) for x in F)
    for a, b in zip(t, t[1:]):
        if not a < b:
            raise OrderingError(f"set elements must be strictly increasing: {t}")
    if t and t[0] < 1:
        raise OrderingError(f"set elements must be positive: {t}")
    return t


class FamilySpec:
    """A family of finite subsets of ℕ.

    kind is one of ``schreier``, ``bounded``, ``fine``, ``osz``, ``explicit``.
    """

    def __init__(self, kind: str, k: int | None = None, m_seq: Sequence[int] | None = None,
                 base: "FamilySpec | None" = None, sets: Iterable[Iterable[int]] | None = None):
        self.kind = kind
        self.k = k
        self.base = base
        if kind in ("bounded", "fine"):
            if k is None or k < 0:
                raise SpecError(f"{kind} needs a nonnegative size parameter")
        elif kind == "osz":
            m_seq = tuple(int(v) for v in (m_seq or ()))
            if len(m_seq) < 2 or m_seq[0] != 1:
                raise SpecError("osz m_seq must start with m_0 = 1 and have at least one block")
            gaps = [b - a for a, b in zip(m_seq, m_seq[1:])]
            if any(g <= 0 for g in gaps):
                raise SpecError("osz m_seq must be strictly increasing")
            if any(g2 < g1 for g1, g2 in zip(gaps, gaps[1:])):
                raise SpecError("osz m_seq gaps must be nondecreasing")
            if base is None:
                raise SpecError("osz needs a base family")
        elif kind == "explicit":
            sets = sorted({as_set(s) for s in (sets or ())}, key=lambda s: (len(s), s))
        elif kind != "schreier":
            raise SpecError(f"unknown family kind {kind!r}")
        self.m_seq = tuple(m_seq) if kind == "osz" else None
        self.sets = tuple(sets) if kind == "explicit" else None
        self._set_index = frozenset(self.sets) if kind == "explicit" else None

    def __repr__(self):
        return f"FamilySpec({self.describe()})"

    def describe(self) -> str:
        if self.kind == "schreier":
            return "schreier"
        if self.kind in ("bounded", "fine"):
            return f"{self.kind}:{self.k}"
        if self.kind == "osz":
            return "osz:" + ",".join(map(str, self.m_seq)) + ";base=" + self.base.describe()
        return "explicit:" + json.dumps([list(s) for s in self.sets])

    def __eq__(self, other):
        return isinstance(other, FamilySpec) and self.describe() == other.describe()

    def __hash__(self):
        return hash(self.describe())

    @property
    def cap(self) -> int | None:
        """Largest element the membership test can decide (None = unbounded)."""
        return self.m_seq[-1] if self.kind == "osz" else None

    def size_bound(self, lo: int) -> int | None:
        """For size-bounded kinds: max #F over members with min F = lo."""
        if self.kind == "schreier":
            return lo
        if self.kind in ("bounded", "fine"):
            return self.k
        return None

    def is_size_bounded(self) -> bool:
        return self.kind in ("schreier", "bounded", "fine")


def parse_family(text: str) -> FamilySpec:
    t = text.strip()
    try:
        if t == "schreier":
            return FamilySpec("schreier")
        if t.startswith("bounded:"):
            return FamilySpec("bounded", k=int(t.split(":", 1)[1]))
        if t.startswith("fine:"):
            return FamilySpec("fine", k=int(t.split(":", 1)[1]))
        if t.startswith("osz:"):
            body = t[4:]
            if ";base=" not in body:
                raise ParseError("osz family needs ';base=<family>'")
            ms, base = body.split(";base=", 1)
            return FamilySpec("osz", m_seq=[int(v) for v in ms.split(",")], base=parse_family(base))
        if t.startswith("explicit:"):
            src = t[len("explicit:"):]
            if src.startswith("@"):
                with open(src[1:]) as fh:
                    data = json.load(fh)
            else:
                data = json.loads(src)
            return FamilySpec("explicit", sets=data)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        if isinstance(exc, (ParseError, SpecError)):
            raise
        raise ParseError(f"bad family spec {text!r}: {exc}") from exc
    raise ParseError(f"unknown family spec {text!r}")


def _osz_block(spec: FamilySpec, x: int) -> int:
    """Index d >= 1 of the block containing x; block 1 is [1, m_1], block d is (m_{d-1}, m_d]."""
    for d in range(1, len(spec.m_seq)):
        if x <= spec.m_seq[d]:
            return d
    raise CapError(f"element {x} lies beyond the last osz block end {spec.m_seq[-1]}")


def osz_member(spec: FamilySpec, F: Iterable[int]) -> bool:
    """F is a union of successive runs A_1 < ... < A_n whose minima lie in
    strictly increasing blocks d_1 < ... < d_n, where a run starting in block
    d has at most m_d - m_{d-1} elements and the anchors {m_{d_i - 1}} form a
    member of the base family."""
    if spec.kind != "osz":
        raise SpecError("osz_member needs an osz family")
    F = as_set(F)
    if not F:
        return True
    blocks = [_osz_block(spec, x) for x in F]
    ms = spec.m_seq
    n = len(F)

    @lru_cache(maxsize=None)
    def reach(i: int, anchors: tuple) -> bool:
        if i == n:
            return True
        d = blocks[i]
        a = ms[d - 1]
        if anchors and anchors[-1] >= a:
            return False
        new = anchors + (a,)
        # base is hereditary, so a failing anchor prefix cannot be rescued later
        if not member(spec.base, new):
            return False
        gap = ms[d] - a
        return any(reach(j, new) for j in range(i + 1, min(n, i + gap) + 1))

    return reach(0, ())


def member(spec: FamilySpec, F: Iterable[int]) -> bool:
    F = as_set(F)
    if spec.kind == "explicit":
        return F in spec._set_index
    if spec.kind == "osz":
        return osz_member(spec, F)
    if not F:
        return True
    return len(F) <= spec.size_bound(F[0])


def _check_successive(Es: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    out = [as_set(E) for E in Es]
    for E in out:
        if not E:
            raise OrderingError("admissibility needs nonempty sets")
    for A, B in zip(out, out[1:]):
        if not A[-1] < B[0]:
            raise OrderingError(f"sets are not successive: {A} then {B}")
    return out


def admissible_exhaustive(spec: FamilySpec, Es: Sequence[Sequence[int]]) -> bool:
    """Search every interleaving m_i in (max E_{i-1}, min E_i]."""
    Es = _check_successive(Es)
    if not Es:
        return True
    if spec.kind == "explicit":
        for G in spec.sets:
            if len(G) == len(Es) and all(
                (i == 0 or Es[i - 1][-1] < g) and g <= E[0] for i, (g, E) in enumerate(zip(G, Es))
            ):
                return True
        return False
    ranges = [range((Es[i - 1][-1] + 1) if i else 1, E[0] + 1) for i, E in enumerate(Es)]
    return any(member(spec, G) for G in itertools.product(*ranges))


def is_admissible(spec: FamilySpec, Es: Sequence[Sequence[int]]) -> bool:
    """Greedy admissibility via minima; falls back to exhaustive search for explicit families."""
    Es = _check_successive(Es)
    if spec.kind == "explicit":
        return admissible_exhaustive(spec, Es)
    return member(spec, [E[0] for E in Es])


def members_upto(spec: FamilySpec, cap: int) -> set[tuple[int, ...]]:
    if spec.kind == "explicit":
        return {s for s in spec.sets if not s or s[-1] <= cap}
    out = set()
    for r in range(cap + 1):
        for F in itertools.combinations(range(1, cap + 1), r):
            if member(spec, F):
                out.add(F)
    return out


def is_regular(spec: FamilySpec, cap: int) -> bool:
    """Hereditary and spreading, checked exhaustively on sets with max <= cap.

    Checking single-element removals and single unit shifts suffices: every
    subset is reached by removals and every spread by unit shifts applied
    from the largest element down.
    """
    if cap > REGULAR_CAP:
        raise CapError(f"is_regular is capped at {REGULAR_CAP}")
    if spec.cap is not None and cap > spec.cap:
        raise CapError(f"family decidable only up to {spec.cap}")
    mem = members_upto(spec, cap)
    if () not in mem:
        return False
    for F in mem:
        for i in range(len(F)):
            if F[:i] + F[i + 1:] not in mem:
                return False
            nxt = F[i + 1] if i + 1 < len(F) else cap + 1
            if F[i] + 1 < nxt and F[:i] + (F[i] + 1,) + F[i + 1:] not in mem:
                return False
    return True
