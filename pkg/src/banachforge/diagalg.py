"""Scalar-plus-finite-rank diagonal operators T = a0·I + Σ λ_i e_i*⊗e_i.

Covers the algebra operations, the scalar-plus-compact defect, the ideals
𝒜_L of the diagonal algebra and the norm comparison between a diagonal
operator on a Jamesification and the matching functional in its dual.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .core import EXACT, Coeffs, NormOracle, ParseError, SpecError, leq, norm_lower_search, to_scalar
from .james import james
from .spaces import parse_space


@dataclass(frozen=True)
class DiagOp:
    a0: object
    lambdas: Coeffs
    basis: NormOracle | None = None

    @classmethod
    def identity(cls, basis=None) -> "DiagOp":
        return cls(Fraction(1), Coeffs({}), basis)

    @classmethod
    def zero(cls, basis=None) -> "DiagOp":
        return cls(Fraction(0), Coeffs({}), basis)

    @classmethod
    def projection(cls, i: int, basis=None) -> "DiagOp":
        """e_i*⊗e_i."""
        return cls(Fraction(0), Coeffs({i: 1}), basis)

    def diagonal(self, i: int):
        """e_i*(T e_i) = a0 + λ_i."""
        return self.a0 + self.lambdas[i]

    @property
    def limit(self):
        """λ_{T,ω}: the limit of the diagonal, which is a0 for finitely supported λ."""
        return self.a0

    def support(self) -> list[int]:
        return self.lambdas.support()

    def scale(self, c) -> "DiagOp":
        return DiagOp(self.a0 * c, self.lambdas.scale(c), self.basis)

    def __eq__(self, other):
        return isinstance(other, DiagOp) and self.a0 == other.a0 and self.lambdas == other.lambdas

    def __hash__(self):
        return hash((self.a0, self.lambdas))

    def to_json(self) -> dict:
        out = {"a0": str(Fraction(self.a0)) if not isinstance(self.a0, float) else repr(self.a0),
               "lambda": {str(k): str(v) for k, v in self.lambdas.items()}}
        if self.basis is not None:
            out["basis"] = self.basis.name
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "DiagOp":
        try:
            a0 = to_scalar(obj.get("a0", "0"))
            lam = Coeffs({int(k): to_scalar(v) for k, v in obj.get("lambda", {}).items()})
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad DiagOp JSON: {exc}") from exc
        basis = parse_space(obj["basis"]) if obj.get("basis") else None
        return cls(a0, lam, basis)


def _same_basis(S: DiagOp, T: DiagOp):
    if S.basis is not None and T.basis is not None and S.basis.name != T.basis.name:
        raise SpecError(f"basis mismatch: {S.basis.name} vs {T.basis.name}")
    return S.basis if S.basis is not None else T.basis


def apply(op: DiagOp, x: Coeffs) -> Coeffs:
    """(a0 + λ_i)·x_i coordinatewise."""
    return Coeffs({i: op.diagonal(i) * v for i, v in x.items()}, x.mode)


def multiply(S: DiagOp, T: DiagOp) -> DiagOp:
    basis = _same_basis(S, T)
    idx = set(S.support()) | set(T.support())
    lam = {i: S.a0 * T.lambdas[i] + T.a0 * S.lambdas[i] + S.lambdas[i] * T.lambdas[i] for i in idx}
    return DiagOp(S.a0 * T.a0, Coeffs(lam, T.lambdas.mode), basis)


def add(S: DiagOp, T: DiagOp) -> DiagOp:
    basis = _same_basis(S, T)
    return DiagOp(S.a0 + T.a0, S.lambdas + T.lambdas, basis)


# norms of diagonal multipliers


def _is_one_unconditional(X: NormOracle) -> bool:
    return bool(X.unconditional) and X.bimonotone_constant == 1


def diagonal_norm_bracket(X: NormOracle, mult: Mapping[int, object], tail=0, budget: int = 200, seed: int = 0):
    """(lower, upper, exact) for ||D|| with D e_i = mult_i e_i (mult_i = tail off the listed i).

    Over a 1-unconditional basis ||D|| = sup |mult_i| exactly.  Otherwise the
    lower bound comes from unit vectors and a seeded search, and the upper
    bound from Abel summation over interval projections:
    ||D|| <= K (|tail| + Σ_i |mult_i - mult_{i+1}|), K the bimonotone constant.
    """
    keys = sorted(mult)
    sup = max([abs(tail)] + [abs(mult[i]) for i in keys])
    if _is_one_unconditional(X):
        return sup, sup, True
    lower = Fraction(0)
    for i in keys:
        e = Coeffs({i: 1})
        ne = X(e)
        if ne:
            lower = max(lower, abs(mult[i]))
    if keys:
        rng = random.Random(seed)
        span = list(range(1, keys[-1] + 2))
        for _ in range(budget):
            c = Coeffs({k: Fraction(rng.randint(-4, 4), 4) for k in span})
            if c.is_zero():
                continue
            nc = X(c)
            if nc == 0:
                continue
            Dc = Coeffs({k: mult.get(k, tail) * v for k, v in c.items()})
            lower = max(lower, X(Dc) / nc)
    else:
        lower = max(lower, abs(tail))
    K = X.bimonotone_constant
    if K is None:
        return lower, float("inf"), False
    seq = [mult[i] if i in mult else tail for i in range(1, (keys[-1] if keys else 0) + 2)]
    var = sum((abs(a - b) for a, b in zip(seq, seq[1:])), Fraction(0))
    upper = K * (abs(tail) + var)
    return lower, max(upper, lower), False


def sp_compact_defect(op: DiagOp, m: int, n: int, X: NormOracle | None = None, budget: int = 200, seed: int = 0):
    """(lower, upper, exact) for ||Σ_{i=m}^n (λ_i - λ_m) e_i*⊗e_i||."""
    if not 1 <= m <= n:
        raise SpecError(f"need 1 <= m <= n (got {m}, {n})")
    X = X or op.basis
    if X is None:
        raise SpecError("a basis oracle is required")
    mult = {i: op.diagonal(i) - op.diagonal(m) for i in range(m, n + 1)}
    return diagonal_norm_bracket(X, mult, 0, budget, seed)


# ideals


@dataclass(frozen=True)
class IdealSpec:
    """A closed subset L of [1, ω]: a finite set, plus ω, plus optionally every κ >= tail."""

    finite: frozenset = field(default_factory=frozenset)
    omega: bool = False
    tail: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "finite", frozenset(int(k) for k in self.finite))
        if any(k < 1 for k in self.finite):
            raise SpecError("L ⊆ [1, ω] holds naturals >= 1")
        if self.tail is not None and not self.omega:
            raise SpecError("an infinite L is closed only if it contains ω")

    def __contains__(self, k) -> bool:
        if k == "omega":
            return self.omega
        return k in self.finite or (self.tail is not None and k >= self.tail)

    def subset_of(self, other: "IdealSpec") -> bool:
        if self.omega and not other.omega:
            return False
        if self.tail is not None:
            if other.tail is None:
                return False
            if any(k not in other for k in range(self.tail, other.tail)):
                return False
        return all(k in other for k in self.finite)

    @classmethod
    def parse(cls, text: str) -> "IdealSpec":
        """'1,3,omega' or '2,5..' (every κ >= 5, which forces ω) or '' for ∅."""
        fin, omega, tail = set(), False, None
        for tok in filter(None, (t.strip() for t in text.split(","))):
            if tok in ("omega", "ω", "w"):
                omega = True
            elif tok.endswith(".."):
                tail, omega = int(tok[:-2]), True
            else:
                fin.add(int(tok))
        return cls(frozenset(fin), omega, tail)


def ideal_membership(op: DiagOp, L: IdealSpec) -> bool:
    """T ∈ 𝒜_L iff its diagonal vanishes on L (λ_{T,ω} = a0 stands for the point ω)."""
    if L.omega and op.a0 != 0:
        return False
    if L.tail is not None:
        # beyond the support the diagonal equals a0, which is already 0 here
        if any(op.diagonal(k) != 0 for k in op.support() if k >= L.tail):
            return False
    return all(op.diagonal(k) == 0 for k in L.finite)


def all_ideal_specs(universe: Iterable[int] = range(1, 6)) -> list[IdealSpec]:
    u = list(universe)
    out = []
    for r in range(len(u) + 1):
        for fin in itertools.combinations(u, r):
            for om in (False, True):
                out.append(IdealSpec(frozenset(fin), om))
    return out


def op_grid(universe: Iterable[int] = range(1, 6), values=(-1, 0, 1), a0_values=(0, 1)) -> list[DiagOp]:
    u = list(universe)
    ops = []
    for a0 in a0_values:
        for lam in itertools.product(values, repeat=len(u)):
            ops.append(DiagOp(Fraction(a0), Coeffs({k: Fraction(v) for k, v in zip(u, lam)}, EXACT)))
    return ops


def check_ideal_lattice(universe=range(1, 6), n_mult: int = 8, seed: int = 0) -> dict:
    """Exhaustive over L with finite part ⊆ universe (with and without ω), always in exact arithmetic.

    * closure: S·T ∈ 𝒜_L for T ∈ 𝒜_L (grid) and seeded S, plus sums and scalings;
    * order: 𝒜_L ⊆ 𝒜_{L'} (as sets of grid operators, whose members span each
      𝒜_L on the universe) iff L' ⊆ L.
    """
    specs = all_ideal_specs(universe)
    grid = op_grid(universe)
    rng = random.Random(seed)
    extra = max(universe) + 1
    S_ops = [DiagOp(Fraction(rng.randint(-3, 3), rng.randint(1, 3)),
                    Coeffs({k: Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for k in range(1, extra + 1)}, EXACT))
             for _ in range(n_mult)]
    members = {}
    failures = []
    for L in specs:
        mem = frozenset(i for i, T in enumerate(grid) if ideal_membership(T, L))
        members[L] = mem
        for i in mem:
            T = grid[i]
            for S in S_ops:
                if not ideal_membership(multiply(S, T), L) or not ideal_membership(multiply(T, S), L):
                    failures.append({"check": "closure", "L": _spec_json(L), "T": T.to_json(), "S": S.to_json()})
                    break
            if not ideal_membership(T.scale(Fraction(5, 2)), L):
                failures.append({"check": "scaling", "L": _spec_json(L), "T": T.to_json()})
        mlist = sorted(mem)
        for _ in range(min(20, len(mlist))):
            a, b = grid[rng.choice(mlist)], grid[rng.choice(mlist)]
            if not ideal_membership(add(a, b.scale(-3)), L):
                failures.append({"check": "linear", "L": _spec_json(L)})
    pairs = 0
    for L in specs:
        for L2 in specs:
            pairs += 1
            contained = members[L] <= members[L2]
            order = L2.finite <= L.finite and (not L2.omega or L.omega)
            if contained != order:
                failures.append({"check": "order", "L": _spec_json(L), "L2": _spec_json(L2),
                                 "contained": contained, "reverse_inclusion": order})
    return {"pass": not failures, "specs": len(specs), "grid": len(grid), "pairs": pairs, "failures": failures[:20]}


def _spec_json(L: IdealSpec) -> dict:
    return {"finite": sorted(L.finite), "omega": L.omega, "tail": L.tail}


# diagonal operators on J(X) against functionals on J(X)


def _runs_upper(X: NormOracle, values: list, tail):
    """||Σ_n c_n (Σ_{i∈I_n} e_i*)|| <= ||Σ_n c_n x_{k_n}*|| over maximal constant runs (I_n starts at k_n).

    The last run extends to infinity with value ``tail``.
    """
    seq = list(values) + [tail]
    starts = {}
    prev = None
    for i, v in enumerate(seq, start=1):
        if v != prev:
            if v != 0:
                starts[i] = v
            prev = v
    c = Coeffs(starts)
    if c.is_zero():
        return Fraction(0)
    # dual of a 1-unconditional ℓ_p (or its ℓ_p stand-in) is ℓ_q
    from .bd.model import dual_bound
    return dual_bound(X, c)


def check_adt_correspondence(X: NormOracle | str, op: DiagOp, budget: int = 200, seed: int = 0) -> dict:
    """Operator norm of T on J(X) against the J(X)*-norm of a0·s + Σ λ_i e_i*.

    Both sides are brackets.  The operator side: lower bound by witness
    search, upper bound |a0| + Σ|μ_i - μ_{i+1}| by Abel summation over the
    (monotone) initial-segment projections.  The functional side: lower bound
    by witness search, upper bound from the interval-run representation.
    The report flags whether the observed brackets are compatible with an
    isomorphism of distortion at most 2.
    """
    if isinstance(X, str):
        X = parse_space(X)
    if not X.unconditional:
        raise SpecError(f"{X.name} must have an unconditional basis")
    J = james(X)
    N = max(op.support(), default=0) + 2
    mult = {i: op.diagonal(i) for i in range(1, N + 1)}
    seq = [mult[i] for i in range(1, N + 1)]
    op_upper = abs(op.a0) + sum((abs(a - b) for a, b in zip(seq, seq[1:])), Fraction(0))
    rng = random.Random(seed)
    op_lower = Fraction(0)
    cands = [Coeffs({i: 1}) for i in range(1, N + 1)] + [Coeffs({i: 1 for i in range(1, k + 1)}) for k in
                                                          range(1, N + 1)]
    for _ in range(budget):
        cands.append(Coeffs({i: Fraction(rng.randint(-4, 4), 4) for i in range(1, N + 1)}))
    for x in cands:
        if x.is_zero():
            continue
        nx = J(x)
        if nx:
            op_lower = max(op_lower, J(apply(op, x)) / nx)
    phi = Coeffs(mult)
    dual_lower = norm_lower_search(J, phi, budget, seed) if not phi.is_zero() else Fraction(0)
    dual_upper = _runs_upper(X, seq, op.a0)
    report = {
        "op_lower": op_lower, "op_upper": op_upper, "dual_lower": dual_lower, "dual_upper": dual_upper,
        "op_consistent": leq(op_lower, op_upper), "dual_consistent": leq(dual_lower, dual_upper),
        "within_factor_2": leq(op_lower, 2 * dual_upper) and leq(dual_lower, 2 * op_upper),
    }
    return report
