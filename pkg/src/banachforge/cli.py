"""Command-line front end.  JSON (or a bare scalar) goes to stdout, summaries and
errors to stderr.

    banachforge norm --space jp:2 --vector 1,1
    banachforge family member --spec schreier --set 2,3
    banachforge bd build --params p.json --requests r.json --out model.json
    banachforge verify submult-2 --trials 1000 --seed 7
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .core import BanachforgeError, CapError, Coeffs, ParseError, default_mode, fmt_scalar, to_scalar

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_ERROR = 2
EXIT_CAP = 3


def _err(msg: str) -> None:
    print(f"banachforge: {msg}", file=sys.stderr)


def parse_vector(text: str, mode: str | None = None) -> Coeffs:
    """``1,1/2,0,3`` (dense, 1-based) or a JSON object ``{"3": "1/2"}`` (sparse) or ``@file.json``."""
    mode = mode or default_mode()
    t = text.strip()
    if t.startswith("@"):
        with open(t[1:]) as fh:
            t = fh.read().strip()
    if t.startswith("{"):
        try:
            obj = json.loads(t)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad vector JSON: {exc}") from exc
        try:
            return Coeffs({int(k): to_scalar(v if not isinstance(v, float) else str(v), mode)
                           for k, v in obj.items()}, mode)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    if not t:
        return Coeffs({}, mode)
    return Coeffs.from_list([to_scalar(v, mode) for v in t.split(",")], mode)


def _parse_set(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParseError(f"bad set {text!r}") from exc


def _load_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True)


# commands


def cmd_norm(args) -> int:
    from .spaces import parse_space

    try:
        X = parse_space(args.space)
        a = parse_vector(args.vector)
        value = X(a)
    except CapError as exc:
        _err(f"cap exceeded: {exc}")
        return EXIT_CAP
    except (BanachforgeError, ValueError, OSError) as exc:
        _err(str(exc))
        return EXIT_ERROR
    print(fmt_scalar(value))
    return EXIT_OK


def cmd_family(args) -> int:
    from . import families as F

    try:
        spec = F.parse_family(args.spec)
        if args.sub == "member":
            result = F.member(spec, _parse_set(args.set))
        elif args.sub == "admissible":
            sets = [_parse_set(s) for s in args.sets.split(";")]
            result = F.is_admissible(spec, sets)
        else:
            result = F.is_regular(spec, args.cap)
    except (BanachforgeError, ValueError) as exc:
        _err(str(exc))
        return EXIT_ERROR
    print("true" if result else "false")
    return EXIT_OK if result else EXIT_FALSE


def cmd_bd(args) -> int:
    from .bd import model as M
    from .bd.estimates import evaluation_analysis
    from .bd.toys import toy_params

    try:
        if args.sub == "build":
            params = M.BDParams.from_json(_load_json(args.params)) if args.params else toy_params()
            reqs = _load_json(args.requests) if args.requests else []
            if not isinstance(reqs, list):
                raise ParseError("requests must be a JSON list")
            model = M.build_model(params, reqs)
            text = model.dumps()
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(text + "\n")
                print(f"wrote {len(model.nodes)} nodes to {args.out}", file=sys.stderr)
            else:
                print(text)
            return EXIT_OK
        model = M.BDModel.from_json(_load_json(args.model))
        if args.sub == "analysis":
            chain = evaluation_analysis(model, args.node)
            print(_dump([{"p": p, "xi": xi, "b": b.to_json()} for p, xi, b in chain]))
            return EXIT_OK
        u = M.YVec.from_json(_load_json(args.vector))
        if args.sub == "eval":
            print(fmt_scalar(M.eval_e(model, args.node, u)))
        else:
            print(fmt_scalar(M.norm_Y(model, u)))
        return EXIT_OK
    except CapError as exc:
        _err(f"cap exceeded: {exc}")
        return EXIT_CAP
    except (BanachforgeError, ValueError, TypeError, KeyError) as exc:
        _err(f"schema violation: {exc}")
        return EXIT_ERROR


def cmd_verify(args) -> int:
    from . import verify

    if args.suite not in verify.SUITES:
        _err(f"unknown suite {args.suite!r}; known: {', '.join(verify.SUITES)}")
        return EXIT_ERROR
    if args.mode == "compliant" and args.suite in verify.TOY_SUITES:
        _err(f"{args.suite} evaluates quantitative estimates, which are only available with toy parameters")
        return EXIT_ERROR
    report = verify.run_suite(args.suite, args.trials, args.seed)
    text = _dump(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    status = "PASS" if report["pass"] else "FAIL"
    print(f"{args.suite}: {status} ({report['checks']} checks, {report['failure_count']} failures, "
          f"max ratio {report['max_ratio']} vs bound {report['bound']})", file=sys.stderr)
    return EXIT_OK if report["pass"] else EXIT_FALSE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="banachforge", description="Exact norm calculators and finite-stage checks.")
    p.add_argument("--mode", choices=("exact", "float"), help="arithmetic mode (default: $BANACHFORGE_MODE or exact)")
    sub = p.add_subparsers(dest="cmd", required=True)

    n = sub.add_parser("norm", help="norm of a finitely supported vector")
    n.add_argument("--space", required=True, help="e.g. jp:2, lp:3/2, tsirelson(schreier,1/2), james(lp:2)")
    n.add_argument("--vector", required=True, help="dense 1,1/2,... or sparse JSON {\"3\": \"1/2\"} or @file")
    n.set_defaults(fn=cmd_norm)

    f = sub.add_parser("family", help="regular family queries")
    fs = f.add_subparsers(dest="sub", required=True)
    fm = fs.add_parser("member")
    fm.add_argument("--spec", required=True)
    fm.add_argument("--set", required=True, help="comma separated, e.g. 2,3")
    fa = fs.add_parser("admissible")
    fa.add_argument("--spec", required=True)
    fa.add_argument("--sets", required=True, help="successive sets separated by ';', e.g. 2,3;4;5,6")
    fr = fs.add_parser("regular")
    fr.add_argument("--spec", required=True)
    fr.add_argument("--cap", type=int, default=12)
    f.set_defaults(fn=cmd_family)

    b = sub.add_parser("bd", help="finite-stage model operations")
    bs = b.add_subparsers(dest="sub", required=True)
    bb = bs.add_parser("build")
    bb.add_argument("--params", help="params JSON (default: toy parameters)")
    bb.add_argument("--requests", help="JSON list of node requests")
    bb.add_argument("--out")
    for name in ("eval", "analysis", "norm"):
        q = bs.add_parser(name)
        q.add_argument("--model", required=True)
        if name != "norm":
            q.add_argument("--node", type=int, required=True)
        if name != "analysis":
            q.add_argument("--vector", required=True, help="vector JSON file {stage, x, y}")
    b.set_defaults(fn=cmd_bd)

    v = sub.add_parser("verify", help="run a seeded verification suite")
    v.add_argument("suite")
    v.add_argument("--trials", type=int)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--mode", dest="suite_mode", choices=("toy", "compliant", "exact", "float"))
    v.add_argument("--out", help="also write the report to this file")
    v.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    mode = args.mode
    suite_mode = getattr(args, "suite_mode", None)
    if suite_mode in ("exact", "float"):
        mode = suite_mode
    args.mode = suite_mode
    saved = os.environ.get("BANACHFORGE_MODE")
    if mode:
        os.environ["BANACHFORGE_MODE"] = mode
    try:
        default_mode()
        return args.fn(args)
    except BanachforgeError as exc:
        _err(str(exc))
        return EXIT_ERROR
    finally:
        if saved is None:
            os.environ.pop("BANACHFORGE_MODE", None)
        else:
            os.environ["BANACHFORGE_MODE"] = saved


if __name__ == "__main__":
    sys.exit(main())
