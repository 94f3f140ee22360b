"""Command-line entry point.

Exit codes: 0/10/20 for Normal/Abnormal/NotExtremal from ``certify``;
``refute`` exits 0 only on NotExtremal and 1 otherwise; 2 malformed input;
3 numerical failure; 4 no admissible process.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import certify, direct, instances, penalab, schema, selftest
from .linprog import LpError, NumericalFailure
from .model import Grid, InadmissibleCandidate, ProblemClassError, compile_table, eval_cost
from .subdiff import GeneratorOverflow, PreconditionError

EXIT_OK = 0
EXIT_REFUTE_MISS = 1
EXIT_MALFORMED = 2
EXIT_NUMERICAL = 3
EXIT_INFEASIBLE = 4
VERDICT_EXIT = {certify.NORMAL_EXTREMAL: 0, certify.ABNORMAL_EXTREMAL: 10,
                certify.NOT_EXTREMAL: 20}


@dataclass(frozen=True)
class EngineSettings:
    grid: int | None = None
    tol_lp: float = 1e-9
    tol_active: float = 1e-6
    tol_weierstrass: float = 1e-7
    tol_cross: float = 1e-6
    normal_mode: bool = True
    abnormal_measure: bool = True
    abnormal_adjoint: bool = True
    out: str | None = None
    threads: int = 1

    def __post_init__(self):
        for name in ("tol_lp", "tol_active", "tol_weierstrass", "tol_cross"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.grid is not None and self.grid < 2:
            raise ValueError("grid override needs N >= 2")

    @classmethod
    def from_args(cls, args) -> "EngineSettings":
        threads = int(os.environ.get("EXTREMAL_CERTIFY_THREADS", "1") or 1)
        return cls(grid=args.grid, tol_lp=args.tol_lp, tol_active=args.tol_active,
                   tol_weierstrass=args.tol_weierstrass, tol_cross=args.tol_cross,
                   normal_mode=not args.no_normal, abnormal_measure=not args.no_abnormal_measure,
                   abnormal_adjoint=not args.no_abnormal_adjoint, out=args.out,
                   threads=max(threads, 1))

    def certify_settings(self) -> certify.CertifySettings:
        return certify.CertifySettings(
            tol_lp=self.tol_lp, tol_active=self.tol_active, tol_weierstrass=self.tol_weierstrass,
            tol_cross=self.tol_cross, normal_mode=self.normal_mode,
            abnormal_measure=self.abnormal_measure, abnormal_adjoint=self.abnormal_adjoint,
            workers=self.threads)


def _emit(text: str, settings: EngineSettings, stdout) -> None:
    if settings.out:
        with open(settings.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def cmd_solve(args, settings: EngineSettings, stdout) -> int:
    problem = schema.load_problem(args.problem, settings.grid)
    if args.refine:
        grids = [int(v) for v in args.refine.split(",") if v]
        rows = direct.refinement_table(problem, grids, settings.tol_lp)
        if settings.out:
            direct.write_csv(settings.out, rows, direct.REFINEMENT_COLUMNS)
        else:
            direct.write_csv(stdout, rows, direct.REFINEMENT_COLUMNS)
        return EXIT_OK
    sol = direct.solve_direct(problem, settings.tol_lp)
    _emit(schema.dumps(schema.process_to_dict(sol.process, sol.cost)), settings, stdout)
    return EXIT_OK


def _certify(args, settings: EngineSettings) -> certify.Certificate:
    problem = schema.load_problem(args.problem, settings.grid)
    process = schema.load_process(args.process)
    try:
        process.check_dims(problem)
    except ValueError as exc:
        raise schema.MalformedInput(str(exc)) from None
    cs = settings.certify_settings()
    cert = certify.certify_extremal(compile_table(problem, process), cs)
    if cert.verdict == certify.NORMAL_EXTREMAL:
        try:
            suff = certify.sufficiency_certificate(problem, process, cert.multipliers, cs)
        except (certify.CrossCheckFailure, certify.InvalidMultipliers) as exc:
            suff = certify.SufficiencyCertificate(f"Refused: {exc}", eval_cost(problem, process),
                                                  float("nan"), float("nan"), cs.tol_cross)
        cert = cert.with_sufficiency(suff)
    return cert


def cmd_certify(args, settings: EngineSettings, stdout) -> int:
    cert = _certify(args, settings)
    _emit(schema.dumps(cert.to_dict()), settings, stdout)
    return VERDICT_EXIT[cert.verdict]


def cmd_refute(args, settings: EngineSettings, stdout) -> int:
    cert = _certify(args, settings)
    _emit(schema.dumps(cert.to_dict()), settings, stdout)
    return EXIT_OK if cert.verdict == certify.NOT_EXTREMAL else EXIT_REFUTE_MISS


def cmd_penalize(args, settings: EngineSettings, stdout) -> int:
    problem = schema.load_problem(args.problem, settings.grid)
    try:
        sched = penalab.PenaltySchedule.parse(args.schedule) if args.schedule \
            else penalab.PenaltySchedule()
    except ValueError as exc:
        raise schema.MalformedInput(f"--schedule: {exc}") from None
    report = penalab.run_schedule(problem, sched, settings.tol_lp, settings.certify_settings())
    if settings.out:
        report.write_csv(settings.out)
    else:
        report.write_csv(stdout)
    if not report.complete:
        sys.stderr.write(f"penalty schedule aborted: {report.error}\n")
        return EXIT_NUMERICAL
    return EXIT_OK


def example_l_report(alpha: float, N: int, settings: EngineSettings) -> dict:
    prob = instances.ExampleL(Grid(0.0, 1.0, N))
    cand = prob.zero_candidate()
    cert = certify.certify_extremal(compile_table(prob, cand), settings.certify_settings())
    cls = cert.classical
    family = eval_cost(prob, prob.improving_process(alpha))
    try:
        certify.validate_lc(prob)
        lc = "valid"
    except ProblemClassError as exc:
        lc = f"rejected: {exc}"
    return {
        "grid": N,
        "alpha": alpha,
        "candidate_cost": eval_cost(prob, cand),
        "classical": {"feasible": cls.feasible,
                      "lambda0": cls.multipliers.lambda0 if cls.feasible else None,
                      "max_abs_p": float(np.max(np.abs(cls.multipliers.p))) if cls.feasible else None},
        "verdict": cert.verdict,
        "farkas_verified": [r.verified for r in cert.farkas_bundle],
        "refuted_modes": [r.normalization for r in cert.farkas_bundle],
        "family_cost": family,
        "family_cost_limit": -0.75 * alpha,
        "linear_convex": lc,
    }


def cmd_example_l(args, settings: EngineSettings, stdout) -> int:
    report = example_l_report(args.alpha, settings.grid or 200, settings)
    _emit(schema.dumps(report), settings, stdout)
    ok = report["verdict"] == certify.NOT_EXTREMAL and report["classical"]["feasible"]
    return EXIT_OK if ok else EXIT_REFUTE_MISS


def cmd_selftest(args, settings: EngineSettings, stdout) -> int:
    ok = selftest.run(lambda line: stdout.write(line + "\n"))
    return EXIT_OK if ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=int, default=None, help="override the grid size N")
    common.add_argument("--tol-lp", type=float, default=1e-9)
    common.add_argument("--tol-active", type=float, default=1e-6)
    common.add_argument("--tol-weierstrass", type=float, default=1e-7)
    common.add_argument("--tol-cross", type=float, default=1e-6)
    common.add_argument("--no-normal", action="store_true", help="skip the normal mode")
    common.add_argument("--no-abnormal-measure", action="store_true")
    common.add_argument("--no-abnormal-adjoint", action="store_true")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="extremal-certify",
                                     description="Certify or refute extremality of discrete "
                                                 "state-constrained control processes.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", parents=[common], help="direct transcription solve")
    p.add_argument("problem")
    p.add_argument("--refine", default=None, help="comma-separated grid sizes; writes a CSV")
    p.set_defaults(func=cmd_solve)
    for name, func in (("certify", cmd_certify), ("refute", cmd_refute)):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("problem")
        p.add_argument("process")
        p.set_defaults(func=func)
    p = sub.add_parser("penalize", parents=[common], help="penalty schedule report (CSV)")
    p.add_argument("problem")
    p.add_argument("--schedule", default=None, help="comma-separated increasing weights")
    p.set_defaults(func=cmd_penalize)
    p = sub.add_parser("example-l", parents=[common], help="built-in Example (L) reproduction")
    p.add_argument("--alpha", type=float, default=0.2)
    p.set_defaults(func=cmd_example_l)
    p = sub.add_parser("selftest", parents=[common], help="run the built-in property battery")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        settings = EngineSettings.from_args(args)
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_MALFORMED
    try:
        return args.func(args, settings, stdout)
    except direct.DirectInfeasible as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except (schema.MalformedInput, ProblemClassError, InadmissibleCandidate, PreconditionError,
            GeneratorOverflow, certify.StructuralError) as exc:
        sys.stderr.write(f"malformed input: {exc}\n")
        return EXIT_MALFORMED
    except (NumericalFailure, LpError, direct.DirectUnbounded) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
