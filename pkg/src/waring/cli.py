"""Command-line front end.

Input polynomials come from a file, stdin (`-`), or an inline string, in
either the text grammar or the JSON schemas.  Reports go to stdout as text or
as JSON with sorted keys, so a fixed seed gives a byte-identical report.

Exit codes: 0 success, 1 bad input, 2 decomposition failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .binary import binary_decompose
from .core import (
    DecompositionError,
    HomogeneousPoly,
    PolyParseError,
    decomposition_from_json,
    decomposition_to_json,
    format_poly,
    monomials,
    parse_poly,
    poly_from_json,
)
from .decompose import DecomposeOptions, classify_ternary_cubic, decompose, verify


def _pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def parse_input(text: str) -> HomogeneousPoly:
    """Polynomial from the text grammar or one of the JSON schemas."""
    stripped = text.strip()
    if not stripped.startswith("{"):
        return parse_poly(stripped)
    try:
        obj = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise ValueError(f"bad JSON input: {exc}")
    if "tensor" in obj:
        return _poly_from_tensor(obj)
    return poly_from_json(obj)


def _poly_from_tensor(obj: dict) -> HomogeneousPoly:
    """Flat multi-index coefficient array, graded-lex exponent order."""
    try:
        nvars = int(obj["nvars"])
        degree = int(obj["degree"])
        flat = list(obj["tensor"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad tensor JSON: {exc}")
    exps = monomials(nvars, degree)
    if len(flat) != len(exps):
        raise ValueError(
            f"tensor array has {len(flat)} entries, expected {len(exps)}"
        )
    coeffs = {}
    for exp, v in zip(exps, flat):
        c = complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
        if c != 0:
            coeffs[exp] = c
    return HomogeneousPoly(nvars, degree, coeffs)


def _read_source(arg: str) -> str:
    if arg == "-":
        return sys.stdin.read()
    if os.path.exists(arg):
        with open(arg, "r") as fh:
            return fh.read()
    return arg


def _emit(report: dict, fmt: str, text_lines) -> None:
    if fmt == "json":
        print(json.dumps(report, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _decomposition_report(rep) -> dict:
    dec = rep.decomposition
    return {
        "rank": rep.rank,
        "residual": rep.residual,
        "terms": [
            {"weight": _pair(w), "form": [_pair(v) for v in k]}
            for w, k in dec.terms
        ],
        "basis": [list(e) for e in rep.basis],
        "free_count": rep.free_count,
        "retries": rep.retries,
        "seed": rep.seed,
        "degree": dec.degree,
        "nvars": dec.nvars,
    }


def _term_lines(dec) -> list[str]:
    out = []
    for w, k in dec.terms:
        kp = ", ".join(f"{complex(v):.6g}" for v in k)
        out.append(f"  {complex(w):.6g} * ({kp})^{dec.degree}")
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="waring",
        description="decompose homogeneous polynomials into sums of powers of linear forms",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, needs_input=True):
        if needs_input:
            p.add_argument("input", help="file path, inline polynomial, or - for stdin")
        p.add_argument("--tol", type=float, default=1e-7)
        p.add_argument("--max-rank", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--format", choices=["text", "json"], default="text")

    add_common(sub.add_parser("decompose", help="minimal power-sum decomposition"))
    add_common(sub.add_parser("rank", help="symmetric rank only"))
    add_common(sub.add_parser("classify", help="orbit class of a ternary cubic"))
    add_common(sub.add_parser("sylvester", help="binary decomposition directly"))
    pv = sub.add_parser("verify", help="check a decomposition against a polynomial")
    add_common(pv)
    pv.add_argument("--decomposition", required=True, help="decomposition JSON file")

    args = ap.parse_args(argv)
    fmt = args.format
    if args.tol <= 0:
        print("error: --tol must be positive", file=sys.stderr)
        return 1

    try:
        f = parse_input(_read_source(args.input))
    except (PolyParseError, ValueError) as exc:
        if fmt == "json":
            print(json.dumps({"error": {"code": "invalid-input", "message": str(exc)}},
                             sort_keys=True))
        print(f"error: {exc}", file=sys.stderr)
        return 1

    opts = DecomposeOptions(
        tol=args.tol, max_rank=args.max_rank, seed=args.seed, jobs=args.jobs
    )
    try:
        if args.command == "decompose":
            rep = decompose(f, opts)
            report = _decomposition_report(rep)
            _emit(report, fmt, [
                f"rank {rep.rank}  residual {rep.residual:.3g}  "
                f"retries {rep.retries}  seed {rep.seed}",
                *_term_lines(rep.decomposition),
            ])
        elif args.command == "rank":
            rep = decompose(f, opts)
            _emit({"rank": rep.rank, "residual": rep.residual, "seed": rep.seed},
                  fmt, [str(rep.rank)])
        elif args.command == "classify":
            cls = classify_ternary_cubic(f, seed=args.seed, tol=args.tol)
            _emit({"class": cls.label, "rank": cls.rank}, fmt,
                  [f"{cls.label} (rank {cls.rank})"])
        elif args.command == "sylvester":
            if f.nvars != 2:
                raise ValueError("sylvester needs a binary form")
            dec = binary_decompose(f, rng_seed=args.seed).normalized()
            report = decomposition_to_json(dec)
            report["seed"] = args.seed
            _emit(report, fmt, [
                f"rank {dec.rank}  residual {dec.residual:.3g}",
                *_term_lines(dec),
            ])
        elif args.command == "verify":
            with open(args.decomposition, "r") as fh:
                dec = decomposition_from_json(json.load(fh))
            vr = verify(f, dec)
            _emit(
                {
                    "residual": vr.residual,
                    "max_coeff_err": vr.max_coeff_err,
                    "collisions": vr.collisions,
                },
                fmt,
                [
                    f"residual {vr.residual:.6g}  max coefficient error "
                    f"{vr.max_coeff_err:.6g}  collisions {vr.collisions}",
                    f"input: {format_poly(f)}",
                ],
            )
    except (PolyParseError, ValueError, OSError, json.JSONDecodeError) as exc:
        if fmt == "json":
            print(json.dumps({"error": {"code": "invalid-input", "message": str(exc)}},
                             sort_keys=True))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DecompositionError as exc:
        if fmt == "json":
            print(json.dumps(
                {"error": {"code": "decomposition-failed", "message": str(exc)}},
                sort_keys=True))
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
