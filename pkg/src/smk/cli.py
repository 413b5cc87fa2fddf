"""Command-line front end.

Batch-oriented: every subcommand reads JSON inputs, writes one JSON report
to stdout (and optionally to a file), and signals through the exit code:
0 = success / verdict true, 2 = valid negative outcome (verdict false, no
admissible clique order), 1 = error, 64 = usage error. Identical inputs and
seed produce byte-identical reports. Set ``SMK_LOG`` for verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings

import numpy as np

from . import io
from .altmeasure import enumerate_extreme_measures, solve_weight_lp
from .assemble import assemble, maximal_support_set, verify_global
from .certify import RankPolicy, certify, zero_propagation_check
from .core import clique_subvector, validate_cover
from .errors import SmkError
from .extract import constraint_feasibility_check, extract_atoms, lex_order_rows
from .matrices import moment_matrix
from .relax import build_relaxation, emit_sdpa, pipeline, solve_sdp_bundled
from .rip import NoOrderExists, RipFailsAt, check_rip, find_rip_order

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2
EXIT_USAGE = 64

log = logging.getLogger("smk")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rel-tol", type=float, default=1e-6, help="rank/PSD tolerance")
    common.add_argument("--round", type=int, default=None, metavar="DECIMALS",
                        help="round moment entries before rank decisions")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--merge-tol", type=float, default=1e-6, help="atom merge tolerance")
    common.add_argument("--allow-missing-as-zero", action="store_true",
                        help="treat absent sparse entries in moment files as 0")
    common.add_argument("--output", default=None, help="also write the JSON report here")

    parser = _Parser(prog="smk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    p = add("rip", "check/search a clique order with the running intersection property")
    p.add_argument("--input", required=True, help="moment-vector or {n, cliques} JSON")

    p = add("certify", "run the flatness certificate on a moment vector")
    p.add_argument("--input", required=True, help="moment-vector JSON")
    p.add_argument("--constraints", default=None, help="problem JSON supplying constraints")

    p = add("extract-assemble", "certify, extract clique atoms, assemble, verify")
    p.add_argument("--input", required=True)
    p.add_argument("--constraints", default=None)
    p.add_argument("--measure-output", default=None, help="write the assembled measure JSON here")

    p = add("altmeasure", "extreme representing measures over the maximal atoms")
    p.add_argument("--input", required=True)
    p.add_argument("--constraints", default=None)
    p.add_argument("--measure", default=None, help="measure JSON supplying the atoms (default: run the chain)")
    p.add_argument("--cost", required=True, help="comma-separated cost vector, or random:N")

    p = add("relax", "build the relaxation and emit SDPA sparse text")
    p.add_argument("--pop", required=True)
    p.add_argument("--omega", type=int, required=True)
    p.add_argument("--sdpa-output", default=None, help="write the .dat-s text here")

    p = add("solve", "bundled best-effort SDP solve")
    p.add_argument("--pop", required=True)
    p.add_argument("--omega", type=int, required=True)
    p.add_argument("--max-iters", type=int, default=20000)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--moments-output", default=None, help="write the solution moment JSON here")

    p = add("pipeline", "solve/ingest, certify, extract, assemble")
    p.add_argument("--pop", required=True)
    p.add_argument("--omega", type=int, required=True)
    p.add_argument("--solution", default=None,
                   help="moment JSON or whitespace primal vector file (default: bundled solver)")
    p.add_argument("--max-iters", type=int, default=20000)
    p.add_argument("--tol", type=float, default=1e-7)
    return parser


def _policy(args) -> RankPolicy:
    return RankPolicy(rel_tol=args.rel_tol, round_decimals=args.round)


def _measure_dict(mu) -> dict:
    return io.measure_to_dict(mu)


def _run_rip(args, report):
    data = io._load(args.input)
    cover = io.cover_from_dict(data)
    problems = validate_cover(cover)
    if problems:
        report["cover_violations"] = problems
        return EXIT_ERROR
    try:
        wit = check_rip(cover)
        report["order"] = list(wit.order)
        report["witnesses"] = {str(i): sorted(js) for i, js in wit.witness.items()}
        report["reordered"] = False
        return EXIT_OK
    except RipFailsAt as exc:
        report["fails_at"] = exc.index
        report["overlap"] = list(exc.overlap)
    try:
        order = find_rip_order(cover)
    except NoOrderExists as exc:
        report["no_order_exists"] = True
        report["detail"] = str(exc)
        return EXIT_NEGATIVE
    wit = check_rip(cover.reorder(order))
    report["order"] = list(order)
    report["witnesses"] = {str(i): sorted(js) for i, js in wit.witness.items()}
    report["reordered"] = True
    return EXIT_OK


def _load_constraints(args, cover):
    if getattr(args, "constraints", None):
        pop = io.load_pop(args.constraints)
        if pop.cover != cover:
            raise SmkError("constraints file cover does not match the moment file cover")
        return pop.constraints
    return tuple(() for _ in range(cover.m))


def _certify_chain(args, report, want_measure: bool) -> int:
    y = io.load_moment_vector(args.input, allow_missing_as_zero=args.allow_missing_as_zero)
    constraints = _load_constraints(args, y.cover)
    policy = _policy(args)
    if policy.round_decimals is not None:
        y = y.rounded(policy.round_decimals)
    witnesses = check_rip(y.cover)
    cert = certify(y, constraints, witnesses, policy)
    report["certificate"] = cert.to_dict()
    report["zero_propagation"] = zero_propagation_check(y, policy).value
    if not cert.verdict:
        return EXIT_NEGATIVE
    measures = []
    for i in range(1, y.cover.m + 1):
        M = moment_matrix(clique_subvector(y, i), y.omega)
        r_i = cert.cliques[i - 1].rank_full
        measures.append(extract_atoms(M, r_i, policy, seed=args.seed + i, merge_tol=args.merge_tol))
    report["clique_measures"] = [_measure_dict(mu) for mu in measures]
    if not want_measure:
        return EXIT_OK
    mu = assemble(measures, witnesses, args.merge_tol, chosen=cert.witness_choice())
    mu = mu.sorted_by_atoms()
    report["measure"] = _measure_dict(mu)
    report["global_residual"] = verify_global(mu, y)
    support = maximal_support_set(measures, y.cover, args.merge_tol)
    report["maximal_support"] = [[float(v) for v in p] for p in support]
    flat = [g for gs in constraints for g in gs]
    feas = constraint_feasibility_check(mu, flat, tol=args.rel_tol)
    report["feasibility_clean"] = feas.clean
    return EXIT_OK


def _run_certify(args, report):
    return _certify_chain(args, report, want_measure=False)


def _run_extract_assemble(args, report):
    code = _certify_chain(args, report, want_measure=True)
    if code == EXIT_OK and args.measure_output:
        io.save_measure(io.load_measure(report["measure"]), args.measure_output)
    return code


def _run_altmeasure(args, report):
    y = io.load_moment_vector(args.input, allow_missing_as_zero=args.allow_missing_as_zero)
    if args.measure:
        atoms = io.load_measure(args.measure).atoms
    else:
        code = _certify_chain(args, report, want_measure=True)
        if code != EXIT_OK:
            return code
        atoms = np.asarray(report["measure"]["atoms"], dtype=float)
    atoms = atoms[lex_order_rows(atoms)]
    report["atoms"] = [[float(v) for v in a] for a in atoms]
    if args.cost.startswith("random:"):
        budget = int(args.cost.split(":", 1)[1])
        solutions = enumerate_extreme_measures(atoms, y, budget, seed=args.seed)
        report["weights"] = [[float(w) for w in s] for s in solutions]
    else:
        cost = np.array([float(t) for t in args.cost.split(",")])
        if cost.shape[0] != atoms.shape[0]:
            raise SmkError(f"cost has {cost.shape[0]} entries for {atoms.shape[0]} atoms")
        w = solve_weight_lp(atoms, y, cost)
        report["weights"] = [[float(v) for v in w]]
    return EXIT_OK


def _run_relax(args, report):
    pop = io.load_pop(args.pop)
    instance = build_relaxation(pop, args.omega)
    text = emit_sdpa(instance)
    report["num_vars"] = instance.num_vars
    report["block_sizes"] = [b.size for b in instance.blocks]
    report["sdpa"] = text
    if args.sdpa_output:
        with open(args.sdpa_output, "w") as fh:
            fh.write(text)
    return EXIT_OK


def _run_solve(args, report):
    pop = io.load_pop(args.pop)
    instance = build_relaxation(pop, args.omega)
    sol = solve_sdp_bundled(instance, max_iters=args.max_iters, tol=args.tol)
    report["objective"] = sol.objective
    report["iterations"] = sol.iterations
    report["primal_residual"] = sol.primal_residual
    report["dual_residual"] = sol.dual_residual
    report["min_block_eig"] = sol.min_block_eig
    report["converged"] = sol.converged
    if args.moments_output:
        io.save_moment_vector(sol.y, args.moments_output)
    return EXIT_OK  # non-convergence is reported in the JSON, not an error


def _run_pipeline(args, report):
    pop = io.load_pop(args.pop)
    policy = _policy(args)
    solution = None
    solver = "bundled"
    if args.solution:
        solver = "file"
        text = open(args.solution).read()
        if text.lstrip().startswith("{"):
            solution = io.load_moment_vector(args.solution,
                                             allow_missing_as_zero=args.allow_missing_as_zero)
        else:
            solution = [float(t) for t in text.split()]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = pipeline(
            pop, args.omega, policy, solver=solver, solution=solution,
            seed=args.seed, merge_tol=args.merge_tol,
            max_iters=args.max_iters, solve_tol=args.tol,
        )
    report["warnings"] = [str(w.message) for w in caught]
    report["clique_order"] = list(result.clique_order)
    report["objective_bound"] = result.objective
    report["certificate"] = result.certificate.to_dict()
    if result.solve_report is not None:
        report["solver"] = {
            "iterations": result.solve_report.iterations,
            "primal_residual": result.solve_report.primal_residual,
            "converged": result.solve_report.converged,
        }
    if result.measure is None:
        return EXIT_NEGATIVE
    report["measure"] = _measure_dict(result.measure)
    report["minimizers"] = [[float(v) for v in a] for a in result.minimizers]
    report["global_residual"] = result.global_residual
    report["feasibility_clean"] = result.feasibility_clean
    return EXIT_OK


_RUNNERS = {
    "rip": _run_rip,
    "certify": _run_certify,
    "extract-assemble": _run_extract_assemble,
    "altmeasure": _run_altmeasure,
    "relax": _run_relax,
    "solve": _run_solve,
    "pipeline": _run_pipeline,
}


def run(argv=None) -> int:
    """Parse arguments, dispatch, and emit the JSON report; returns the exit
    code rather than raising SystemExit."""
    level = os.environ.get("SMK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {"command": args.command, "seed": args.seed}
    log.info("running %s", args.command)
    try:
        code = _RUNNERS[args.command](args, report)
    except SmkError as exc:
        report["error"] = type(exc).__name__
        report["detail"] = str(exc)
        code = EXIT_ERROR
    except OSError as exc:
        report["error"] = "OSError"
        report["detail"] = str(exc)
        code = EXIT_ERROR
    report["exit_code"] = code
    text = json.dumps(report, indent=2)
    print(text)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    return code


def entry_point():
    raise SystemExit(run())
