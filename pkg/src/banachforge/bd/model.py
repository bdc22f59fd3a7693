"""Finite-stage Bourgain–Delbaen model over a utc sum.

The ideal space is built on Γ = ∪ Δ_n; here every Δ_n is the set of nodes a
caller registered, each one checked against the side conditions of its kind
at insertion time.  A vector of the stage-n space Z^n is a :class:`YVec`
(an x-part in the utc sum plus one scalar per node of rank <= n), and the
element of the full space it stands for is its canonical extension i_n(u).

Two independent evaluation routes are kept:

* :func:`stage_values` computes, for one u at stage l, every coordinate of
  E(q) = i_q(R_q u) for q = 0..l in a single sweep (the fast engine);
* :func:`extend` with ``method="literal"`` applies the stage-by-stage
  recursion, building each P_{(p,n]} as v - i_{p,n}(R_p v).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from ..core import (
    EXACT, CapError, Coeffs, ConstructionError, ModelError, NormOracle, ParseError, SpecError, leq,
    root, to_scalar,
)
from ..tsirelson import is_compliant
from ..utcsum import BlockVec, UtcConfig, norm_utc

KINDS = ("Base", "Even0", "Odd0", "Even1", "Odd1")
COMPLIANT_INDEX_CAP = 6
CACHE_LIMIT = 512


# parameters


def _ceil_log2(m: int) -> int:
    return (m - 1).bit_length()


class BDParams:
    """Weight ladder (m_j, n_j), the utc sum and the stage cap.

    In toy mode the ladder is extended past its end by doubling; in
    compliant mode by m_{j+1} = m_j^2 and n_{j+1} = (16 n_j)^{ceil log2 m_{j+1}},
    up to weight index COMPLIANT_INDEX_CAP.
    """

    def __init__(self, m, n, utc: UtcConfig | str | None = None, mode: str = "toy", level_cap: int = 16,
                 labels: Mapping[int, int] | None = None):
        self.m = tuple(int(v) for v in m)
        self.n = tuple(int(v) for v in n)
        if not self.m or len(self.m) != len(self.n):
            raise SpecError("m and n must be nonempty and of equal length")
        if any(b <= a for a, b in zip(self.m, self.m[1:])) or any(b <= a for a, b in zip(self.n, self.n[1:])):
            raise SpecError("m and n must be strictly increasing")
        if mode not in ("toy", "compliant"):
            raise SpecError(f"mode must be toy or compliant, got {mode!r}")
        if mode == "compliant" and not is_compliant(self.m, self.n):
            raise SpecError("compliant mode needs m_1>=4, m_{j+1}>=m_j^2, n_1>=m_1^2, n_{j+1}>=(16n_j)^{log2 m_{j+1}}")
        self.mode = mode
        if utc is None:
            utc = UtcConfig("lp:2")
        elif isinstance(utc, str):
            utc = UtcConfig(utc)
        self.utc = utc
        self.A0 = utc.A0
        self.beta0 = Fraction(1, self.m[0])
        if not self.beta0 * self.A0 < 1:
            raise SpecError(f"need beta_0 = 1/m_1 < 1/A_0 (m_1={self.m[0]}, A_0={self.A0})")
        b = self.beta0 * self.A0
        self.C0 = 1 + 2 * b / (1 - b)
        self.level_cap = int(level_cap)
        if self.level_cap < 1:
            raise SpecError("level_cap must be positive")
        self.labels = dict(labels) if labels else {j: 0 for j in range(1, len(self.m) + 1)}
        self._mcache = list(self.m)
        self._ncache = list(self.n)

    @property
    def toy(self) -> bool:
        return self.mode == "toy"

    def _grow(self, j: int):
        if j < 1:
            raise SpecError(f"weight indices start at 1, got {j}")
        if self.mode == "compliant" and j > max(len(self.m), COMPLIANT_INDEX_CAP):
            raise CapError(f"compliant weight index {j} exceeds the cap {COMPLIANT_INDEX_CAP}")
        while len(self._mcache) < j:
            if self.toy:
                self._mcache.append(2 * self._mcache[-1])
                self._ncache.append(2 * self._ncache[-1])
            else:
                m_next = self._mcache[-1] ** 2
                self._mcache.append(m_next)
                self._ncache.append((16 * self._ncache[-1]) ** _ceil_log2(m_next))

    def m_j(self, j: int) -> int:
        self._grow(j)
        return self._mcache[j - 1]

    def n_j(self, j: int) -> int:
        self._grow(j)
        return self._ncache[j - 1]

    def weight(self, j: int) -> Fraction:
        return Fraction(1, self.m_j(j))

    def sandwich_constant(self):
        return 2 * self.C0 ** 3 - self.C0 ** 2

    def to_json(self) -> dict:
        return {
            "m": list(self.m), "n": list(self.n), "mode": self.mode, "level_cap": self.level_cap,
            "utc": self.utc.to_json(), "labels": {str(k): v for k, v in sorted(self.labels.items())},
            "A0": str(self.A0), "C0": str(self.C0),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "BDParams":
        try:
            utc = UtcConfig.from_json(obj["utc"]) if "utc" in obj else None
            labels = {int(k): int(v) for k, v in obj.get("labels", {}).items()} or None
            return cls(obj["m"], obj["n"], utc, obj.get("mode", "toy"), obj.get("level_cap", 16), labels)
        except KeyError as exc:
            raise ParseError(f"BD params missing {exc}") from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, (SpecError, ParseError)):
                raise
            raise ParseError(f"bad BD params: {exc}") from exc


# dual-ball certificates


def _q_of(p):
    if p == 1:
        return float("inf")
    if p == float("inf"):
        return 1
    return 2 if p == 2 else float(p) / (float(p) - 1)


def _qnorm(vals, q):
    vals = [abs(v) for v in vals]
    if not vals:
        return Fraction(0)
    if q == float("inf"):
        return max(vals)
    if q == 1:
        return sum(vals)
    if q == 2 and all(isinstance(v, Fraction) for v in vals):
        return root(sum(v * v for v in vals), 2)
    return sum(float(v) ** q for v in vals) ** (1 / q)


def _runs(a: Coeffs) -> list:
    """Values on maximal runs of consecutive indices carrying equal values."""
    out, prev_i, prev_v = [], None, None
    for i, v in a.items():
        if prev_i is not None and i == prev_i + 1 and v == prev_v:
            prev_i = i
            continue
        out.append(v)
        prev_i, prev_v = i, v
    return out


def dual_bound(X: NormOracle, a: Coeffs, A0=None):
    """An upper bound for ||Σ a_k e_k*||_{X*}, exact for ℓ_p.

    James-type spaces over ℓ_p use the interval certificate: a functional
    constant on disjoint intervals E with values c_E has norm at most ||c||_q.
    Anything else falls back to Σ |a_k| A_0/||e_k||, valid because
    |x_k| ||e_k|| = ||P_{{k}} x|| <= A_0 ||x||.
    """
    if a.is_zero():
        return Fraction(0)
    p = X.meta.get("p")
    if p is not None:
        dim = X.meta.get("dim")
        if dim is not None and a.max_index() > dim:
            return float("inf")
        return _qnorm(a.entries.values(), _q_of(p))
    jp = X.meta.get("james_p")
    base = X.meta.get("base")
    if jp is None and X.meta.get("flavor") == "jamesification" and base is not None:
        jp = base.meta.get("p")
    if jp is not None:
        return _qnorm(_runs(a), _q_of(jp))
    A0 = X.bimonotone_constant if A0 is None else A0
    if A0 is None:
        return float("inf")
    total = 0
    for k, v in a.items():
        ek = X(Coeffs({k: 1}, a.mode))
        total += abs(v) * A0 / ek
    return total


# functional handles


@dataclass(frozen=True)
class FunctionalHandle:
    """An element of A_n = K_n ∪ G^utc_n ∪ B_n.

    * ``B``: coefficients keyed by node id (a combination of e_η*);
    * ``Gutc``: ``index`` = column i0, coefficients a_k over components k;
    * ``K``: ``index`` = component k, coefficients g_i of a functional on the
      stand-in X_k, applied with the factor 1/A_0.
    """

    pool: str
    coeffs: tuple
    index: int | None = None

    def __post_init__(self):
        if self.pool not in ("B", "Gutc", "K"):
            raise ParseError(f"unknown pool tag {self.pool!r}")

    @classmethod
    def B(cls, coeffs: Mapping[int, object]) -> "FunctionalHandle":
        items = tuple(sorted((int(k), to_scalar(v, EXACT) if not isinstance(v, float) else v)
                             for k, v in coeffs.items() if v != 0))
        return cls("B", items)

    @classmethod
    def e(cls, node_id: int) -> "FunctionalHandle":
        return cls("B", ((int(node_id), Fraction(1)),))

    @classmethod
    def zero(cls) -> "FunctionalHandle":
        return cls("B", ())

    @classmethod
    def Gutc(cls, i0: int, a: Mapping[int, object] | Coeffs) -> "FunctionalHandle":
        a = a if isinstance(a, Coeffs) else Coeffs(a, EXACT)
        return cls("Gutc", tuple(a.items()), int(i0))

    @classmethod
    def K(cls, k: int, g: Mapping[int, object] | Coeffs) -> "FunctionalHandle":
        g = g if isinstance(g, Coeffs) else Coeffs(g, EXACT)
        return cls("K", tuple(g.items()), int(k))

    def coeff_map(self) -> dict:
        return dict(self.coeffs)

    def as_coeffs(self) -> Coeffs:
        mode = EXACT if all(not isinstance(v, float) for _, v in self.coeffs) else "float"
        return Coeffs(dict(self.coeffs), mode)

    def is_zero(self) -> bool:
        return not self.coeffs

    def apply(self, x: BlockVec, y: Mapping[int, object], A0):
        """Value on the vector with x-part ``x`` and node coordinates ``y``."""
        if self.pool == "B":
            return sum((c * y.get(i, 0) for i, c in self.coeffs), Fraction(0))
        if self.pool == "Gutc":
            i0 = self.index
            return sum((a * x.parts[k][i0] for k, a in self.coeffs if k in x.parts), Fraction(0))
        k = self.index
        if k not in x.parts:
            return Fraction(0)
        xk = x.parts[k]
        return sum((g * xk[i] for i, g in self.coeffs), Fraction(0)) / A0

    def to_json(self) -> dict:
        def s(v):
            return v if isinstance(v, float) else str(v)

        if self.pool == "B":
            return {"pool": "B", "coeffs": {str(k): s(v) for k, v in self.coeffs}}
        key = "i0" if self.pool == "Gutc" else "k"
        name = "a" if self.pool == "Gutc" else "g"
        return {"pool": self.pool, key: self.index, name: {str(k): s(v) for k, v in self.coeffs}}

    @classmethod
    def from_json(cls, obj: Mapping, resolve=None) -> "FunctionalHandle":
        try:
            pool = obj["pool"]
            if pool == "B":
                res = resolve or int
                return cls.B({res(k): Fraction(v) for k, v in obj.get("coeffs", {}).items()})
            if pool == "Gutc":
                return cls.Gutc(int(obj["i0"]), {int(k): Fraction(v) for k, v in obj["a"].items()})
            if pool == "K":
                return cls.K(int(obj["k"]), {int(k): Fraction(v) for k, v in obj["g"].items()})
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"bad functional handle {obj!r}: {exc}") from exc
        raise ParseError(f"unknown pool tag {obj.get('pool')!r}")


def _legendre(n: int, p: int) -> int:
    e, q = 0, p
    while q <= n:
        e += n // q
        q *= p
    return e


def divides_factorial(d: int, N: int) -> bool:
    """d | N! without forming N!: compare prime exponents (Legendre's formula)."""
    d = abs(int(d))
    if d <= 1:
        return True
    p = 2
    while p * p <= d:
        if d % p == 0:
            e = 0
            while d % p == 0:
                d //= p
                e += 1
            if _legendre(N, p) < e:
                return False
        p += 1
    return d == 1 or d <= N


# nodes, vectors, model


@dataclass
class GammaNode:
    id: int
    rank: int
    kind: str
    j: int | None = None          # half index: weight 1/m_{2j} (even kinds) or 1/m_{2j-1} (odd kinds)
    age: int | None = None
    sigma: int = 0
    xi: int | None = None
    eta: int | None = None
    b: FunctionalHandle | None = None
    label: str | None = None

    @property
    def weight_index(self) -> int | None:
        if self.kind in ("Even0", "Even1"):
            return 2 * self.j
        if self.kind in ("Odd0", "Odd1"):
            return 2 * self.j - 1
        return None

    def to_json(self) -> dict:
        d = {"id": self.id, "rank": self.rank, "kind": self.kind, "sigma": self.sigma}
        if self.kind != "Base":
            d.update(j=self.j, age=self.age)
        if self.xi is not None:
            d["xi"] = self.xi
        if self.eta is not None:
            d["eta"] = self.eta
        if self.b is not None:
            d["b"] = self.b.to_json()
        if self.label:
            d["label"] = self.label
        return d


class YVec:
    """u = (x_k, y_k)_{k<=stage}: an x-part in the utc sum and node coordinates."""

    __slots__ = ("stage", "x", "y", "_key")

    def __init__(self, stage: int, x: BlockVec | Mapping | None = None, y: Mapping[int, object] | None = None):
        self.stage = int(stage)
        if x is None:
            x = BlockVec({}, EXACT)
        elif not isinstance(x, BlockVec):
            x = BlockVec({k: v if isinstance(v, Coeffs) else Coeffs(v) for k, v in x.items()})
        if x.parts and max(x.parts) > self.stage:
            raise ModelError(f"x-part has component {max(x.parts)} beyond stage {self.stage}")
        self.x = x
        self.y = {int(k): v for k, v in (y or {}).items() if v != 0}
        self._key = None

    @property
    def mode(self) -> str:
        return self.x.mode

    def key(self):
        if self._key is None:
            self._key = (self.stage, tuple((k, v) for k, v in sorted(self.x.parts.items())),
                         tuple(sorted(self.y.items())))
        return self._key

    def __eq__(self, other):
        return isinstance(other, YVec) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"YVec(stage={self.stage}, x={self.x.parts!r}, y={self.y!r})"

    def is_zero(self) -> bool:
        return self.x.is_zero() and not self.y

    def __add__(self, other: "YVec") -> "YVec":
        if self.stage != other.stage:
            raise ModelError("adding vectors of different stages; lift them first")
        y = dict(self.y)
        for k, v in other.y.items():
            y[k] = y.get(k, 0) + v
        return YVec(self.stage, self.x + other.x, y)

    def __sub__(self, other: "YVec") -> "YVec":
        return self + other.scale(-1)

    def scale(self, c) -> "YVec":
        return YVec(self.stage, self.x.scale(c), {k: c * v for k, v in self.y.items()})

    def max_cw(self) -> int:
        """max supp_cw: the largest coordinate index used by any x_k."""
        return self.x.max_coord()

    def to_json(self) -> dict:
        def s(v):
            return v if isinstance(v, float) else str(v)

        return {"stage": self.stage, "x": self.x.to_json(), "y": {str(k): s(v) for k, v in sorted(self.y.items())}}

    @classmethod
    def from_json(cls, obj: Mapping, resolve=None) -> "YVec":
        try:
            x = BlockVec.from_json(obj.get("x", {}))
            res = resolve or int
            mode = x.mode

            def sc(v):
                return to_scalar(v, mode)

            return cls(int(obj["stage"]), x, {res(k): sc(v) for k, v in obj.get("y", {}).items()})
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"bad YVec JSON: {exc}") from exc


class BDModel:
    def __init__(self, params: BDParams):
        self.params = params
        self.nodes: list[GammaNode] = [GammaNode(0, 1, "Base", sigma=1)]
        self.labels: dict[str, int] = {}
        self._ecache: dict = {}
        self._xcache: dict = {}

    # structure
    @property
    def top_rank(self) -> int:
        return self.nodes[-1].rank

    def node(self, ref) -> GammaNode:
        if isinstance(ref, GammaNode):
            ref = ref.id
        if isinstance(ref, str):
            if ref in self.labels:
                return self.nodes[self.labels[ref]]
            try:
                ref = int(ref)
            except ValueError:
                raise ModelError(f"unknown node label {ref!r}") from None
        if not isinstance(ref, int) or not 0 <= ref < len(self.nodes):
            raise ModelError(f"unknown node {ref!r}")
        return self.nodes[ref]

    def delta(self, r: int) -> list[GammaNode]:
        return [g for g in self.nodes if g.rank == r]

    def gamma_count(self, n: int) -> int:
        """#Γ_n."""
        return sum(1 for g in self.nodes if g.rank <= n)

    def N_next(self, n: int) -> int:
        """N_{n+1} = 2^n #Γ_n over the realized Γ_n."""
        return 2 ** n * self.gamma_count(n)

    def version(self) -> int:
        return len(self.nodes)

    # pools
    def pool_violation(self, h: FunctionalHandle, n: int) -> str | None:
        """None if h ∈ A_n, else the violated clause."""
        if h.pool == "B":
            total = 0
            N = self.N_next(n)
            for i, c in h.coeffs:
                if not 0 <= i < len(self.nodes):
                    return f"B-handle references unknown node {i}"
                if self.nodes[i].rank > n:
                    return f"B-handle references node {i} of rank {self.nodes[i].rank} > {n}"
                if isinstance(c, float):
                    return "B-handle coefficients must be rational"
                if not divides_factorial(c.denominator, N):
                    return f"B-handle denominator {c.denominator} does not divide N_{n + 1}! (N_{n + 1}={N})"
                total += abs(c)
            if total > 1:
                return f"B-handle has Σ|coeff| = {total} > 1"
            return None
        if h.pool == "Gutc":
            i0 = h.index
            ks = [k for k, _ in h.coeffs]
            if ks and max(ks) > n:
                return f"Gutc-handle uses component {max(ks)} > {n}"
            if ks and max(ks) > i0:
                return f"Gutc-handle column i0={i0} only sees components k <= i0"
            if i0 < 1 or i0 > 2 ** n:
                return f"Gutc-handle column i0={i0} outside the level-{n} window [1, 2^{n}]"
            bound = dual_bound(self.params.utc.outer, h.as_coeffs(), self.params.A0)
            if not leq(bound, 1, 1e-12):
                return f"Gutc-handle dual certificate {bound} > 1"
            return None
        k = h.index
        if not 1 <= k <= n:
            return f"K-handle component {k} outside [1, {n}]"
        g = h.as_coeffs()
        if g.max_index() > n:
            return f"K-handle uses coordinate {g.max_index()} > {n}"
        inner = self.params.utc.inner(k)
        bound = dual_bound(inner, g)
        if not leq(bound, 1, 1e-12):
            return f"K-handle dual certificate {bound} > 1"
        return None

    def handle_level(self, h: FunctionalHandle) -> int:
        """Smallest n <= level cap with h ∈ A_n."""
        for n in range(1, self.params.level_cap + 1):
            if self.pool_violation(h, n) is None:
                return n
        raise ModelError(f"handle {h.to_json()} is in no A_n with n <= {self.params.level_cap}")

    # insertion
    def add(self, kind: str, rank: int, j: int | None = None, xi=None, eta=None, b: FunctionalHandle | None = None,
            label: str | None = None) -> GammaNode:
        P = self.params

        def fail(clause):
            raise ConstructionError(f"{kind} at rank {rank}: {clause}")

        if kind not in KINDS[1:]:
            fail(f"kind must be one of {KINDS[1:]}")
        rank = int(rank)
        if rank < 2:
            fail("Δ_1 = {0}; new nodes need rank >= 2")
        if rank > P.level_cap:
            fail(f"rank <= level cap {P.level_cap}")
        if rank < self.top_rank:
            fail(f"σ must increase across blocks; rank must be >= current top rank {self.top_rank}")
        if label is not None and label in self.labels:
            fail(f"duplicate label {label!r}")
        if j is None or int(j) < 1:
            fail("half weight index j >= 1 required")
        j = int(j)
        n = rank - 1
        node = GammaNode(len(self.nodes), rank, kind, j, 1, len(self.nodes) + 1, label=label)
        wi = node.weight_index
        try:
            P.m_j(wi)
        except CapError as exc:
            fail(str(exc))
        if kind in ("Even0", "Even1"):
            if b is None:
                fail("b* handle required")
            why = self.pool_violation(b, n)
            if why:
                fail(f"b* ∈ A_{n}: {why}")
            node.b = b
        if kind == "Even0" and 2 * j > rank:
            fail(f"2j <= n+1 (2j={2 * j}, n+1={rank})")
        if kind == "Odd0" and 2 * j - 1 > rank:
            fail(f"2j-1 <= n+1 (2j-1={2 * j - 1}, n+1={rank})")
        if kind in ("Even1", "Odd1"):
            if xi is None:
                fail("ξ required")
            x = self.node(xi)
            if x.rank > n:
                fail(f"ξ ∈ Γ_{n} (rank(ξ)={x.rank})")
            if x.weight_index != wi:
                fail(f"weight(ξ) = 1/m_{wi} (ξ has index {x.weight_index})")
            if not x.age < P.n_j(wi):
                fail(f"age(ξ) < n_{wi} (age {x.age})")
            node.xi = x.id
            node.age = x.age + 1
        if kind in ("Odd0", "Odd1"):
            if eta is None:
                fail("η required")
            e = self.node(eta)
            if e.rank > n:
                fail(f"η ∈ Γ_{n} (rank(η)={e.rank})")
            ew = e.weight_index
            if kind == "Odd0":
                if ew is None or ew % 4 != 2:
                    fail(f"weight(η) = 1/m_{{4i-2}} (η has index {ew})")
                if not P.m_j(ew) > P.n_j(wi) ** 2:
                    fail(f"weight(η) = 1/m_{ew} < (1/n_{wi})^2")
            else:
                xn = self.nodes[node.xi]
                if not xn.rank < e.rank:
                    fail(f"rank(ξ) < rank(η) ({xn.rank} vs {e.rank})")
                if ew != 4 * xn.sigma:
                    fail(f"weight(η) = 1/m_{{4σ(ξ)}} = 1/m_{4 * xn.sigma} (η has index {ew})")
            node.eta = e.id
        if node.age > P.n_j(wi):
            fail(f"age <= n_{wi}")
        self.nodes.append(node)
        if label is not None:
            self.labels[label] = node.id
        self._ecache.clear()
        self._xcache.clear()
        return node

    # serialization
    def to_json(self) -> dict:
        return {"params": self.params.to_json(), "delta": [g.to_json() for g in self.nodes]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, obj: Mapping) -> "BDModel":
        try:
            model = cls(BDParams.from_json(obj["params"]))
            delta = obj.get("delta", [])
        except KeyError as exc:
            raise ParseError(f"model JSON missing {exc}") from exc
        requests = []
        for d in delta:
            if d.get("kind") == "Base":
                continue
            requests.append(d)
        _insert_requests(model, requests)
        for d, g in zip([d for d in delta if d.get("kind") != "Base"], model.nodes[1:]):
            if "id" in d and int(d["id"]) != g.id:
                raise ParseError(f"node ids must be consecutive in rank order (got {d['id']}, expected {g.id})")
        return model


def _insert_requests(model: BDModel, requests: Iterable[Mapping]):
    reqs = list(requests)
    for r in reqs:
        if not isinstance(r, Mapping) or "kind" not in r or "rank" not in r:
            raise ParseError(f"request needs kind and rank: {r!r}")
    for r in sorted(reqs, key=lambda r: int(r["rank"])):
        b = r.get("b")
        if isinstance(b, Mapping):
            b = FunctionalHandle.from_json(b, resolve=lambda k: model.node(k).id)
        model.add(r["kind"], int(r["rank"]), r.get("j"), r.get("xi"), r.get("eta"), b, r.get("label"))


def build_model(params: BDParams, requests: Iterable[Mapping] = ()) -> BDModel:
    """Base node plus the requested nodes, inserted in (stable) rank order."""
    model = BDModel(params)
    _insert_requests(model, requests)
    return model


# evaluation: fast engine


def _zero(mode):
    return Fraction(0) if mode == EXACT else 0.0


def _check_vec(model: BDModel, u: YVec):
    if u.stage > model.params.level_cap:
        raise CapError(f"stage {u.stage} exceeds level cap {model.params.level_cap}")
    for i in u.y:
        if not 0 <= i < len(model.nodes):
            raise ModelError(f"vector has a coordinate for unknown node {i}")
        if model.nodes[i].rank > u.stage:
            raise ModelError(f"node {i} has rank {model.nodes[i].rank} > stage {u.stage}")


def _handle_diff(model: BDModel, h: FunctionalHandle, u: YVec, E, q: int, p: int):
    """h(E(q) - E(p)) for p <= q; E(q) has x-components <= q."""
    if p >= q:
        return 0
    A0 = model.params.A0
    if h.pool == "B":
        return sum((c * (E[q][i] - E[p][i]) for i, c in h.coeffs), 0)
    if h.pool == "Gutc":
        i0 = h.index
        return sum((a * u.x.parts[k][i0] for k, a in h.coeffs if p < k <= q and k in u.x.parts), 0)
    k = h.index
    if not (p < k <= q) or k not in u.x.parts:
        return 0
    xk = u.x.parts[k]
    return sum((g * xk[i] for i, g in h.coeffs), 0) / A0


def _c_on(model: BDModel, g: GammaNode, u: YVec, E, q: int):
    """c_γ* applied to R_{rank-1} E(q), i.e. on the vector E(q) seen at stage rank-1."""
    if g.kind == "Base":
        return 0
    P = model.params
    w = P.weight(g.weight_index)
    if g.kind == "Even0":
        return w * _handle_diff(model, g.b, u, E, q, 0)
    if g.kind == "Odd0":
        return w * E[q][g.eta]
    p = model.nodes[g.xi].rank
    lo = min(p, q)
    if g.kind == "Even1":
        return E[q][g.xi] + w * _handle_diff(model, g.b, u, E, q, lo)
    return E[q][g.xi] + w * (E[q][g.eta] - E[lo][g.eta])


def stage_values(model: BDModel, u: YVec) -> list[list]:
    """E[q][id] = e_id*(i_q(R_q u)) for q = 0..stage(u), every registered node."""
    key = (model.version(), u.key())
    hit = model._ecache.get(key)
    if hit is not None:
        return hit
    _check_vec(model, u)
    zero = _zero(u.mode)
    n_nodes = len(model.nodes)
    E = [[zero] * n_nodes]
    for q in range(1, u.stage + 1):
        row = [zero] * n_nodes
        E.append(row)
        for g in model.nodes:
            if g.rank <= q:
                row[g.id] = u.y.get(g.id, zero)
            else:
                row[g.id] = _c_on(model, g, u, E, q)
    if len(model._ecache) > CACHE_LIMIT:
        model._ecache.clear()
    model._ecache[key] = E
    return E


def eval_e(model: BDModel, gamma, u: YVec):
    """e_γ*(i_n(u))."""
    g = model.node(gamma)
    E = stage_values(model, u)
    return E[u.stage][g.id]


def eval_c(model: BDModel, gamma, u: YVec):
    """c_γ*(i_n(u)) = c_γ*(R_{rank-1} i_n(u)); zero on Δ_1."""
    g = model.node(gamma)
    E = stage_values(model, u)
    return _c_on(model, g, u, E, min(g.rank - 1, u.stage)) if g.rank > 1 else _zero(u.mode)


def eval_d(model: BDModel, gamma, u: YVec):
    """d_γ*(i_n(u)) = e_γ*(P_{{rank}} i_n(u))."""
    g = model.node(gamma)
    E = stage_values(model, u)
    lq = u.stage
    return E[min(g.rank, lq)][g.id] - E[min(g.rank - 1, lq)][g.id]


def lift(model: BDModel, u: YVec, m: int) -> YVec:
    """i_{l,m}(u) via the fast engine (l = stage(u) <= m), or R_m(u) for m < l."""
    if m > model.params.level_cap:
        raise CapError(f"stage {m} exceeds level cap {model.params.level_cap}")
    if m <= u.stage:
        return restrict_stage(model, u, m)
    E = stage_values(model, u)
    row = E[u.stage]
    y = {g.id: row[g.id] for g in model.nodes if g.rank <= m}
    return YVec(m, u.x, y)


def restrict_stage(model: BDModel, u: YVec, m: int) -> YVec:
    """R_m(u): keep the components and node coordinates of rank <= m."""
    x = u.x.restrict_components(1, m)
    y = {i: v for i, v in u.y.items() if model.nodes[i].rank <= m}
    return YVec(m, x, y)


def full_vector(model: BDModel, u: YVec) -> YVec:
    """i_n(u) truncated at the level cap."""
    return lift(model, u, model.params.level_cap)


# evaluation: literal recursion


def _literal_chain(model: BDModel, w: YVec, n: int) -> YVec:
    key = (model.version(), w.key())
    chain = model._xcache.get(key)
    if chain is None:
        _check_vec(model, w)
        chain = [w]
        model._xcache[key] = chain
    while chain[-1].stage < n:
        chain.append(_literal_step(model, chain[-1]))
    return chain[n - w.stage]


def _projection_tail(model: BDModel, v: YVec, p: int) -> YVec:
    """P^{(n)}_{(p,n]} v = v - i_{p,n}(R_p v)."""
    if p >= v.stage:
        return v.scale(0)
    head = _literal_chain(model, restrict_stage(model, v, p), v.stage)
    return v - head


def _literal_c(model: BDModel, g: GammaNode, v: YVec):
    P = model.params
    A0 = P.A0
    w = P.weight(g.weight_index)
    zero = _zero(v.mode)
    if g.kind == "Even0":
        return w * g.b.apply(v.x, v.y, A0)
    if g.kind == "Odd0":
        return w * v.y.get(g.eta, zero)
    p = model.nodes[g.xi].rank
    tail = _projection_tail(model, v, p)
    if g.kind == "Even1":
        return v.y.get(g.xi, zero) + w * g.b.apply(tail.x, tail.y, A0)
    return v.y.get(g.xi, zero) + w * tail.y.get(g.eta, zero)


def _literal_step(model: BDModel, v: YVec) -> YVec:
    """i_{n,n+1}: append y_{n+1} = (c_γ*(v))_{γ∈Δ_{n+1}} with x_{n+1} = 0."""
    n = v.stage
    y = dict(v.y)
    for g in model.delta(n + 1):
        y[g.id] = _literal_c(model, g, v)
    return YVec(n + 1, v.x, y)


def extend(model: BDModel, l: int, m: int, u: YVec, method: str = "fast") -> YVec:
    """i_{l,m}(u) for u at stage l <= m <= level cap."""
    if u.stage != l:
        raise ModelError(f"vector is at stage {u.stage}, not {l}")
    if not l <= m:
        raise ModelError(f"extension needs l <= m (got {l}, {m})")
    if m > model.params.level_cap:
        raise CapError(f"stage {m} exceeds level cap {model.params.level_cap}")
    if method == "fast":
        return lift(model, u, m)
    if method == "literal":
        return _literal_chain(model, u, m)
    raise SpecError(f"unknown method {method!r}")


def projection(model: BDModel, m: int, u: YVec, method: str = "fast") -> YVec:
    """P^{(n)}_m u = i_{m,n}(R_m u), n = stage(u)."""
    n = u.stage
    m = min(m, n)
    return extend(model, m, n, restrict_stage(model, u, m), method)


def literal_coordinate(model: BDModel, gamma, u: YVec):
    """e_γ*(i_n(u)) through the literal recursion."""
    g = model.node(gamma)
    if g.rank <= u.stage:
        return u.y.get(g.id, _zero(u.mode))
    return _literal_chain(model, u, g.rank).y.get(g.id, _zero(u.mode))


def literal_d(model: BDModel, gamma, u: YVec):
    """d_γ*(z) as e_γ*(P_{{r}} z) with P_{{r}} z = i_r R_r z - i_{r-1} R_{r-1} z built literally."""
    g = model.node(gamma)
    r = g.rank
    z = u if u.stage >= r else _literal_chain(model, u, r)
    hi = z.y.get(g.id, _zero(u.mode)) if r <= z.stage else _zero(u.mode)
    lo_vec = _literal_chain(model, restrict_stage(model, z, r - 1), r)
    return hi - lo_vec.y.get(g.id, _zero(u.mode))


def literal_c(model: BDModel, gamma, u: YVec):
    """c_γ*(R_{r-1} z) by the defining formula on the literally extended vector."""
    g = model.node(gamma)
    if g.kind == "Base":
        return _zero(u.mode)
    r = g.rank
    z = u if u.stage >= r - 1 else _literal_chain(model, u, r - 1)
    return _literal_c(model, g, restrict_stage(model, z, r - 1))


# norms


def norm_Z(model: BDModel, u: YVec):
    """Norm of u in Z^n: max(utc norm of the x-part, sup |y|)."""
    best = norm_utc(model.params.utc, u.x)
    for v in u.y.values():
        if abs(v) > best:
            best = abs(v)
    return best


def norm_Y(model: BDModel, u: YVec):
    """||i_n(u)|| in the model truncated at the level cap.

    Exact for the finite model; for the ideal space (with its infinitely many
    further nodes) this is a lower bound.
    """
    best = norm_utc(model.params.utc, u.x)
    row = stage_values(model, u)[u.stage]
    for v in row:
        if abs(v) > best:
            best = abs(v)
    return best


# supports


def supp_bd(model: BDModel, u: YVec) -> list[int]:
    """{k : P_{{k}} i_n(u) != 0}."""
    E = stage_values(model, u)
    out = []
    for k in range(1, u.stage + 1):
        if k in u.x.parts:
            out.append(k)
            continue
        if any(E[k][g.id] != E[k - 1][g.id] for g in model.nodes if g.rank == k):
            out.append(k)
    return out


def ran_bd(model: BDModel, u: YVec) -> tuple[int, int] | None:
    s = supp_bd(model, u)
    return (s[0], s[-1]) if s else None


def column_vector(model: BDModel, coeffs: Mapping[int, object], i: int, stage: int | None = None,
                  mode: str = EXACT) -> YVec:
    """u with x_k = b_k t_{k,i} and no node coordinates."""
    parts = {int(k): Coeffs({i: v}, mode) for k, v in coeffs.items() if v != 0}
    stage = stage if stage is not None else max(parts, default=1)
    return YVec(stage, BlockVec(parts, mode), {})
