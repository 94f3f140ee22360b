"""Certification engine for discrete state-constrained optimal control."""
from .certify import (ABNORMAL_EXTREMAL, NORMAL_EXTREMAL, NOT_EXTREMAL, Certificate,
                      CertifySettings, MultiplierSet, assemble_q, build_multiplier_lp,
                      certify_extremal, check_classical, check_weierstrass, find_multipliers,
                      sufficiency_certificate, verify_multipliers)
from .direct import solve_direct, transcribe
from .linprog import LpProblem, solve_lp, verify_farkas
from .model import (ExtremalDataTable, Grid, LcProblem, MaxAffine, Polytope, Process, PwaSum,
                    check_admissible, compile_table, eval_cost)
from .penalab import PenaltySchedule, penalize, run_schedule

__all__ = [
    "ABNORMAL_EXTREMAL", "NORMAL_EXTREMAL", "NOT_EXTREMAL", "Certificate", "CertifySettings",
    "MultiplierSet", "assemble_q", "build_multiplier_lp", "certify_extremal", "check_classical",
    "check_weierstrass", "find_multipliers", "sufficiency_certificate", "verify_multipliers",
    "solve_direct", "transcribe", "LpProblem", "solve_lp", "verify_farkas", "ExtremalDataTable",
    "Grid", "LcProblem", "MaxAffine", "Polytope", "Process", "PwaSum", "check_admissible",
    "compile_table", "eval_cost", "PenaltySchedule", "penalize", "run_schedule",
]
