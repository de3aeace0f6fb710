"""Command-line front end: solve, formfactor, dynamics, verify.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 internal.
Every run writes a manifest next to its output (command, input paths,
config hash, tool version, wall time) so results are reproducible;
identical inputs and seeds give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time

from . import __version__
from .determinants import norm_product, splus_form_factor, sz_form_factor
from .errors import GaudinError, IllConditioned, NoConvergence, NotAnEigenstate
from .model import load_model
from .rapidities import extract_rapidities
from .solver import (ContinuationConfig, load_solutions, occupation_id,
                     save_solutions, solve_all_sectors, transform_axis)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2
EXIT_INTERNAL = 3

_NUMERICAL_ERRORS = (NoConvergence, NotAnEigenstate, IllConditioned)


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _write_manifest(out_path, command, inputs, options, started):
    manifest = {
        "command": command,
        "inputs": {str(p): _file_digest(p) for p in inputs},
        "config_hash": hashlib.sha256(
            json.dumps(options, sort_keys=True).encode()).hexdigest(),
        "tool_version": __version__,
        "wall_time_s": round(time.monotonic() - started, 6),
    }
    with open(str(out_path) + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def _cmd_solve(args) -> int:
    started = time.monotonic()
    model = load_model(args.model)
    if args.all:
        sectors = None
    else:
        if not 0 <= args.sector <= model.num_spins:
            raise ValueError(
                f"sector {args.sector} out of range for N={model.num_spins}")
        sectors = [args.sector]
    solved = solve_all_sectors(model, ContinuationConfig(), sectors=sectors)
    save_solutions(args.out, model, solved)
    total = sum(len(v) for v in solved.states.values())
    _write_manifest(args.out, "solve", [args.model],
                    {"sector": None if args.all else args.sector}, started)
    print(f"solved {total} states -> {args.out}")
    if solved.collisions:
        print(f"warning: {len(solved.collisions)} colliding solution pairs",
              file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _formfactor_rows(model, pairs, op, site):
    """(bra_id, ket_id, value) rows; diagonal entries are expectation
    values, off-diagonal ones are normalized by sqrt|G_n G_m| (the
    individual norm signs are representation conventions)."""
    bundles = []
    for occ, state in pairs:
        mu = transform_axis(model, state)
        bundles.append({
            "id": occupation_id(occ),
            "m": state.sector_m,
            "state": state,
            "mu": mu,
            "gram": norm_product(model, state, mu),
        })
    rows = []
    kets_for_sz = {}
    for bra in bundles:
        for ket in bundles:
            if op == "sz":
                if bra["m"] != ket["m"]:
                    continue
                if ket["id"] not in kets_for_sz:
                    kets_for_sz[ket["id"]] = extract_rapidities(model,
                                                                ket["state"])
                value = sz_form_factor(model, site, bra["mu"],
                                       kets_for_sz[ket["id"]],
                                       ket["state"].values)
            elif op == "sp":
                if bra["m"] != ket["m"] + 1:
                    continue
                value = splus_form_factor(model, site, bra["mu"], ket["state"])
            else:  # sm: conjugation partner of sp with real data
                if bra["m"] != ket["m"] - 1:
                    continue
                value = splus_form_factor(model, site, ket["mu"], bra["state"])
            if bra["id"] == ket["id"]:
                norm = bra["gram"]
            else:
                norm = math.sqrt(abs(bra["gram"] * ket["gram"]))
            rows.append((bra["id"], ket["id"], float(value) / norm))
    return rows


def _cmd_formfactor(args) -> int:
    started = time.monotonic()
    model = load_model(args.model)
    pairs = load_solutions(args.solutions, model.g)
    if not 0 <= args.site < model.num_spins:
        raise ValueError(f"site {args.site} out of range")
    rows = _formfactor_rows(model, pairs, args.op, args.site)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bra_id", "ket_id", "site", "operator", "value"])
        for bra_id, ket_id, value in rows:
            writer.writerow([bra_id, ket_id, args.site, args.op, repr(value)])
    _write_manifest(args.out, "formfactor", [args.model, args.solutions],
                    {"op": args.op, "site": args.site}, started)
    print(f"wrote {len(rows)} rows -> {args.out}")
    if not rows:
        print("warning: no sector-compatible state pairs; table is empty",
              file=sys.stderr)
    return EXIT_OK


def _cmd_dynamics(args) -> int:
    started = time.monotonic()
    from .dynamics import load_params, run_dynamics
    params, times, sampling = load_params(args.params)
    series = run_dynamics(params, times, sampling)
    series.save_csv(args.out)
    _write_manifest(args.out, "dynamics", [args.params],
                    {"sampling": repr(sampling)}, started)
    print(f"wrote {times.size} samples -> {args.out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import run_checks
    model = load_model(args.model)
    solutions_pairs = None
    if args.solutions:
        solutions_pairs = load_solutions(args.solutions, model.g)
    results = run_checks(model, level=args.level,
                         solutions_pairs=solutions_pairs)
    failed = 0
    for res in results:
        if res.passed is None:
            tag = "SKIP"
        elif res.passed:
            tag = "PASS"
        else:
            tag = "FAIL"
            failed += 1
        print(f"{tag} {res.name}: {res.detail}")
    print(f"{len(results)} checks, {failed} failures")
    return EXIT_OK if failed == 0 else EXIT_NUMERICAL


def build_parser() -> _Parser:
    parser = _Parser(prog="gaudin", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve magnetization sectors")
    p_solve.add_argument("model", help="model JSON file")
    group = p_solve.add_mutually_exclusive_group(required=True)
    group.add_argument("--sector", type=int, help="single sector M")
    group.add_argument("--all", action="store_true", help="every sector")
    p_solve.add_argument("--out", required=True, help="solutions JSON output")
    p_solve.set_defaults(func=_cmd_solve)

    p_ff = sub.add_parser("formfactor", help="local spin operator tables")
    p_ff.add_argument("model")
    p_ff.add_argument("solutions")
    p_ff.add_argument("--op", choices=["sz", "sp", "sm"], required=True)
    p_ff.add_argument("--site", type=int, required=True)
    p_ff.add_argument("--out", required=True, help="CSV output")
    p_ff.set_defaults(func=_cmd_formfactor)

    p_dyn = sub.add_parser("dynamics", help="central-spin coherence series")
    p_dyn.add_argument("params", help="dynamics parameter JSON file")
    p_dyn.add_argument("--out", required=True, help="CSV output")
    p_dyn.set_defaults(func=_cmd_dynamics)

    p_ver = sub.add_parser("verify", help="run the oracle-equivalence suite")
    p_ver.add_argument("model")
    p_ver.add_argument("--level", choices=["quick", "full"], default="quick")
    p_ver.add_argument("--solutions", help="also validate a solutions file")
    p_ver.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError, KeyError, json.JSONDecodeError,
            GaudinError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
