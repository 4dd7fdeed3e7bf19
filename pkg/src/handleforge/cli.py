"""Command line front door; a thin client of the service handlers.

Subcommands::

    handleforge construct outer --lambda 2 --a 1 --eps 0.5 [--relax]
    handleforge construct inner --lambda 0.5 --eps 0.5
    handleforge construct quadratic --A diag:2 --B diag:1 --r 1 --eps 0.5
    handleforge verify --profile handle.json --condition {2|6|8|9|cap}
                       [--grid N] [--levi-oracle {2|4}] [--use inverse]
    handleforge export --profile handle.json --what {profile|fprime|region}
                       --out file.csv

Exit codes: 0 success, 1 verification failure, 2 usage error.  Matrices are
``diag:a,b,...`` or a whitespace matrix file.  All randomized checks take
``--seed`` (default 42).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import HandleForgeError, UsageError, VerificationFailed
from .service import handlers
from .service.schemas import (
    ConstructInnerRequest,
    ConstructOuterRequest,
    ConstructQuadraticRequest,
    ExportRequest,
    VerifyRequest,
)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2


def _parse_matrix(spec: str) -> list[list[float]]:
    if spec.startswith("diag:"):
        vals = [float(x) for x in spec[len("diag:"):].split(",") if x]
        if not vals:
            raise UsageError(f"empty diagonal in {spec!r}")
        n = len(vals)
        return [[vals[i] if i == j else 0.0 for j in range(n)]
                for i in range(n)]
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"matrix file not found: {spec!r}")
    m = np.loadtxt(path, ndmin=2)
    return m.tolist()


def _write_json(path: str, payload) -> None:
    Path(path).write_text(json.dumps(handlers.jsonable(payload), indent=2)
                          + "\n")


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="handleforge", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    con = sub.add_parser("construct", help="build and certify a handle")
    csub = con.add_subparsers(dest="kind", required=True)

    outer = csub.add_parser("outer")
    outer.add_argument("--lambda", dest="lam", type=float, required=True)
    outer.add_argument("--a", type=float, default=1.0)
    outer.add_argument("--eps", type=float, required=True)
    outer.add_argument("--relax", action="store_true")

    inner = csub.add_parser("inner")
    inner.add_argument("--lambda", dest="lam", type=float, required=True)
    inner.add_argument("--eps", type=float, required=True)

    quad = csub.add_parser("quadratic")
    quad.add_argument("--A", required=True)
    quad.add_argument("--B", required=True)
    quad.add_argument("--r", type=float, required=True)
    quad.add_argument("--eps", type=float, required=True)

    for p in (outer, inner, quad):
        p.add_argument("--grid", type=int, default=1000)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out", default="handle.json")
        p.add_argument("--certify-out", default="certify.json")

    ver = sub.add_parser("verify", help="sweep a condition over a profile")
    ver.add_argument("--profile", required=True)
    ver.add_argument("--condition", required=True,
                     choices=["2", "6", "8", "9", "cap"])
    ver.add_argument("--grid", type=int, default=1000)
    ver.add_argument("--use", choices=["profile", "inverse"],
                     default="profile")
    ver.add_argument("--levi-oracle", type=int, default=None)
    ver.add_argument("--seed", type=int, default=42)
    ver.add_argument("--out", default=None)

    exp = sub.add_parser("export", help="CSV traces and region polylines")
    exp.add_argument("--profile", required=True)
    exp.add_argument("--what", required=True,
                     choices=["profile", "fprime", "region"])
    exp.add_argument("--out", required=True)
    exp.add_argument("--n", type=int, default=400)
    return top


def _load_doc(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"file not found: {path!r}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path!r}: {exc}") from exc


def _run_construct(args) -> int:
    if args.kind == "outer":
        resp = handlers.construct_outer(ConstructOuterRequest(
            lam=args.lam, a=args.a, eps=args.eps, relax=args.relax,
            grid=args.grid, seed=args.seed))
    elif args.kind == "inner":
        resp = handlers.construct_inner(ConstructInnerRequest(
            lam=args.lam, eps=args.eps, grid=args.grid, seed=args.seed))
    else:
        resp = handlers.construct_quadratic(ConstructQuadraticRequest(
            A=_parse_matrix(args.A), B=_parse_matrix(args.B), r=args.r,
            eps=args.eps, grid=args.grid, seed=args.seed))
    _write_json(args.out, resp.handle)
    _write_json(args.certify_out, resp.certification)
    print(f"handle -> {args.out}")
    print(f"certification -> {args.certify_out} "
          f"({'PASS' if resp.passed else 'FAIL'})")
    return EXIT_OK if resp.passed else EXIT_VERIFICATION


def _run_verify(args) -> int:
    doc = _load_doc(args.profile)
    resp = handlers.verify(VerifyRequest(
        profile=doc, condition=args.condition, grid=args.grid, use=args.use,
        levi_oracle=args.levi_oracle, seed=args.seed))
    payload = resp.model_dump()
    if args.out:
        _write_json(args.out, payload)
    print(f"condition {resp.condition} ({resp.direction}): "
          f"min margin {resp.min_margin:.6g} at {resp.location:.6g} "
          f"over {resp.n_points} points -> "
          f"{'PASS' if resp.passed else 'FAIL'}")
    print(f"classification: {resp.classification}")
    if resp.levi_agree is not None:
        print(f"levi oracle agreement: {resp.levi_agree}")
    return EXIT_OK if resp.passed else EXIT_VERIFICATION


def _run_export(args) -> int:
    doc = _load_doc(args.profile)
    csv = handlers.export_csv(ExportRequest(profile=doc, what=args.what,
                                            n_points=args.n))
    Path(args.out).write_text(csv)
    print(f"{args.what} -> {args.out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "construct":
            return _run_construct(args)
        if args.command == "verify":
            return _run_verify(args)
        return _run_export(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except HandleForgeError as exc:
        # invalid regimes and malformed inputs are usage errors by contract
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
