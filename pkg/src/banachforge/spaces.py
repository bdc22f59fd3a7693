"""Space-spec strings -> NormOracle.

Grammar (whitespace ignored)::

    lp:P | lp:P:DIM | linf | linf:DIM | c0
    jp:P | bv1 | summing-c
    james(S) | variation(S) | double(S)
    tsirelson(FAMILY,THETA)
    mixed(m=4,16;n=16,64;l=4n)
"""
from __future__ import annotations

from .core import NormOracle, ParseError, SpecError, linf, lp
from .families import parse_family


def _inner(text: str, head: str) -> str:
    if not (text.startswith(head + "(") and text.endswith(")")):
        raise ParseError(f"expected {head}(...) in {text!r}")
    body = text[len(head) + 1:-1]
    depth = 0
    for ch in body:
        depth += ch == "("
        depth -= ch == ")"
        if depth < 0:
            raise ParseError(f"unbalanced parentheses in {text!r}")
    if depth:
        raise ParseError(f"unbalanced parentheses in {text!r}")
    return body


def parse_mixed(body: str):
    from .tsirelson import MixedParams

    fields = {}
    for part in body.split(";"):
        if "=" not in part:
            raise ParseError(f"mixed parameter {part!r} needs key=value")
        k, v = part.split("=", 1)
        fields[k.strip()] = v.strip()
    try:
        m = [int(x) for x in fields["m"].split(",")]
        n = [int(x) for x in fields["n"].split(",")]
        lf = fields.get("l", "4n")
        if not lf.endswith("n"):
            raise ParseError("l must look like '3n' or '4n'")
        return MixedParams(m, n, int(lf[:-1] or 1))
    except KeyError as exc:
        raise ParseError(f"mixed spec missing {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, (ParseError, SpecError)):
            raise
        raise ParseError(str(exc)) from exc


def parse_space(text: str) -> NormOracle:
    from . import james as J
    from .tsirelson import TsirelsonSpec, mixed_oracle, tsirelson_oracle

    t = "".join(text.split())
    try:
        if t in ("linf", "c0"):
            return linf()
        if t.startswith("linf:"):
            return linf(int(t[5:]))
        if t.startswith("lp:"):
            parts = t[3:].split(":")
            if len(parts) == 1:
                return lp(parts[0])
            if len(parts) == 2:
                return lp(parts[0], int(parts[1]))
            raise ParseError(f"bad lp spec {text!r}")
        if t.startswith("jp:"):
            return J.jp_oracle(t[3:])
        if t == "bv1":
            return J.bv1()
        if t == "summing-c":
            return J.summing_c()
        for head, make in (("james", J.james), ("variation", J.variation), ("double", J.double)):
            if t.startswith(head + "("):
                return make(parse_space(_inner(t, head)))
        if t.startswith("tsirelson("):
            body = _inner(t, "tsirelson")
            if "," not in body:
                raise ParseError("tsirelson spec needs (family,theta)")
            fam, theta = body.rsplit(",", 1)
            return tsirelson_oracle(TsirelsonSpec(parse_family(fam), theta))
        if t.startswith("mixed("):
            return mixed_oracle(parse_mixed(_inner(t, "mixed")))
    except ParseError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad space spec {text!r}: {exc}") from exc
    raise ParseError(f"unknown space spec {text!r}")
