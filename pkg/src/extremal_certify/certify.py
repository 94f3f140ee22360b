"""Discrete multiplier search, refutation and sufficiency certificates.

The multiplier system is encoded as a family of linear programs, one per
normalization of the nontriviality condition:

* ``normal``: ``lambda0 = 1``;
* ``abnormal-measure``: ``lambda0 = 0`` and total atom mass 1;
* ``abnormal-adjoint(i, +/-)``: ``lambda0 = 0``, no atoms,
  ``p_i(a) = +/-1`` and ``|p_j(a)| <= 1``.

Any nonzero multiplier rescales into one of these, so infeasibility of the
whole family (each with a verified Farkas certificate) refutes extremality of
the discretized candidate.

Discretization on interval ``k``::

    -(p[k+1] - p[k]) / step = Fx[k]^T qt[k] - sum_j theta[k,j] xi_j
                          0 = Fu[k]^T qt[k] - sum_j theta[k,j] zeta_j - sum_i nu[k,i] g_i
    qt[k] = p[k+1] + sum_{j<=k} gamma_j mu_j,    sum_j theta[k,j] = lambda0

Taking the right-node value of ``p`` in ``qt`` (implicit in the adjoint,
i.e. ``qt[k] = q[k+1]`` for ``k < N-1``) makes the system the exact LP dual of
the explicit Euler transcription, so a grid-optimal process of a
linear-convex problem always carries normal multipliers and vice versa.

The LP objective is the l1 norm of ``p`` so that returned multipliers are
the smallest available adjoint.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .linprog import (EQ, GE, LE, FarkasCertificate, Infeasible, LpBuilder, LpProblem,
                      NumericalFailure, Optimal, solve_lp, verify_farkas)
from .model import (ControlProblem, ExtremalDataTable, LcProblem, ProblemClassError, Process,
                    compile_table, eval_cost)

NORMAL_EXTREMAL = "NormalExtremal"
ABNORMAL_EXTREMAL = "AbnormalExtremal"
NOT_EXTREMAL = "NotExtremal"

EXTENDED = "extended"
CLASSICAL = "classical"


class StructuralError(ValueError):
    """The table cannot be encoded (e.g. no admissible gamma at an active node)."""


class MissingGammaError(ValueError):
    pass


class NotNormalError(ValueError):
    pass


class CrossCheckFailure(RuntimeError):
    pass


class InvalidMultipliers(ValueError):
    pass


@dataclass(frozen=True)
class Normalization:
    kind: str
    index: int = -1
    sign: int = 0

    @property
    def label(self) -> str:
        if self.kind == "abnormal-adjoint":
            return f"abnormal-adjoint({self.index},{'+' if self.sign > 0 else '-'})"
        return self.kind


NORMAL = Normalization("normal")
ABNORMAL_MEASURE = Normalization("abnormal-measure")


def normalization_family(n: int, normal: bool = True, measure: bool = True,
                         adjoint: bool = True) -> list[Normalization]:
    family = []
    if normal:
        family.append(NORMAL)
    if measure:
        family.append(ABNORMAL_MEASURE)
    if adjoint:
        for i in range(n):
            family.append(Normalization("abnormal-adjoint", i, 1))
            family.append(Normalization("abnormal-adjoint", i, -1))
    return family


@dataclass(frozen=True, eq=False)
class CertifySettings:
    tol_lp: float = 1e-9
    tol_active: float = 1e-6
    tol_weierstrass: float = 1e-7
    tol_residual: float = 1e-7
    tol_cross: float = 1e-6
    normal_mode: bool = True
    abnormal_measure: bool = True
    abnormal_adjoint: bool = True
    workers: int = 0

    def __post_init__(self):
        for name in ("tol_lp", "tol_active", "tol_weierstrass", "tol_residual", "tol_cross"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class MultiplierSet:
    """Discrete multipliers.  ``p`` and ``gamma`` are ``(N+1, n)``, ``mu`` is
    ``(N+1,)``; ``theta``/``nu`` hold per-interval generator weights and
    ``omega``/``sigma`` the endpoint-cost and endpoint-cone weights."""

    p: np.ndarray
    lambda0: float
    mu: np.ndarray
    gamma: np.ndarray
    theta: tuple = ()
    nu: tuple = ()
    omega: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    normalization: str = ""

    @property
    def q(self) -> np.ndarray:
        return assemble_q(self)

    @property
    def qtilde(self) -> np.ndarray:
        """Interval costates ``p[k+1] + sum_{j<=k} gamma_j mu_j``, shape ``(N, n)``."""
        return np.asarray(self.p, dtype=float)[1:] + _atom_cumsum(self)[:-1]

    def to_dict(self) -> dict:
        return {"normalization": self.normalization, "lambda0": self.lambda0,
                "p": self.p.tolist(), "mu": self.mu.tolist(), "gamma": self.gamma.tolist(),
                "q": self.q.tolist()}


def _atom_cumsum(ms: MultiplierSet) -> np.ndarray:
    """``sum_{j<=k} gamma_j mu_j`` for every node ``k``."""
    mu = np.asarray(ms.mu, dtype=float)
    gamma = ms.gamma
    if np.any(mu != 0.0):
        if gamma is None:
            raise MissingGammaError("gamma missing while the measure has atoms")
        g = np.asarray(gamma, dtype=float)
        bad = np.flatnonzero((mu != 0.0) & ~np.all(np.isfinite(g), axis=1))
        if bad.size:
            raise MissingGammaError(f"gamma missing at atom node {int(bad[0])}")
        return np.cumsum(np.where(mu[:, None] != 0.0, g * mu[:, None], 0.0), axis=0)
    return np.zeros_like(np.asarray(ms.p, dtype=float))


def assemble_q(ms: MultiplierSet, table: ExtremalDataTable | None = None) -> np.ndarray:
    """``q_k = p_k + sum_{j<k} gamma_j mu_j`` for ``k < N`` and
    ``q_N = p_N + sum_{j<=N} gamma_j mu_j``."""
    p = np.asarray(ms.p, dtype=float)
    if table is not None and p.shape[0] != table.grid.N + 1:
        raise ValueError("multiplier set and table disagree on the grid")
    incl = _atom_cumsum(ms)
    excl = np.vstack([np.zeros((1, p.shape[1])), incl[:-1]])
    q = p + excl
    q[-1] = p[-1] + incl[-1]
    return q


@dataclass(frozen=True, eq=False)
class MultiplierProgram:
    """A multiplier LP with its column layout."""

    lp: LpProblem
    blocks: dict
    normalization: Normalization
    system: str
    table: ExtremalDataTable
    free_atoms: np.ndarray

    def decode(self, x: np.ndarray) -> MultiplierSet:
        t = self.table
        N, n = t.grid.N, t.n
        b = self.blocks
        p = x[b["pp"]] - x[b["pm"]]
        lam = float(x[b["lambda0"]][0])
        mu = np.zeros(N + 1)
        gamma = np.array([t.gamma[k][0] if len(t.gamma[k]) else np.zeros(n) for k in range(N + 1)])
        for k in np.flatnonzero(self.free_atoms):
            w = np.clip(x[b[f"kappa{k}"]], 0.0, None)
            mu[k] = w.sum()
            if mu[k] > 0.0:
                gamma[k] = w @ t.gamma[k] / mu[k]
        theta = tuple(np.clip(x[b[f"theta{k}"]], 0.0, None) for k in range(N))
        nu = tuple(np.clip(x[b[f"nu{k}"]], 0.0, None) if f"nu{k}" in b else np.zeros(len(t.ncone[k]))
                   for k in range(N))
        return MultiplierSet(p=p, lambda0=max(lam, 0.0), mu=mu, gamma=gamma, theta=theta, nu=nu,
                             omega=np.clip(x[b["omega"]], 0.0, None),
                             sigma=np.clip(x[b["sigma"]], 0.0, None),
                             normalization=self.normalization.label)


def _weierstrass_rows(t: ExtremalDataTable, k: int) -> np.ndarray:
    """Distinct nonzero ``(f_s - f*, L_s - L*)`` differences at node ``k``."""
    df = t.ws_f[k] - t.ws_f[k][0]
    dL = t.ws_L[k] - t.ws_L[k][0]
    rows = np.column_stack([df, dL])[1:]
    rows = rows[np.any(np.abs(rows) > 0.0, axis=1)]
    if rows.shape[0] <= 1:
        return rows
    _, idx = np.unique(np.round(rows, 12), axis=0, return_index=True)
    return rows[np.sort(idx)]


def active_nodes(table: ExtremalDataTable, tol_active: float = 1e-6) -> np.ndarray:
    return table.h >= -table.tol_active(tol_active)


def build_multiplier_lp(table: ExtremalDataTable, normalization: Normalization = NORMAL,
                        system: str = EXTENDED, tol_active: float = 1e-6) -> MultiplierProgram:
    """Encode the discrete multiplier system for one normalization.

    ``system="classical"`` drops the control rows of the adjoint inclusion
    and keeps only its state marginal (with the x-part of the joint
    generators).
    """
    if system not in (EXTENDED, CLASSICAL):
        raise ValueError(f"unknown system {system!r}")
    t = table
    N, n, m, step = t.grid.N, t.n, t.m, t.grid.step
    active = active_nodes(t, tol_active)
    for k in np.flatnonzero(active):
        if len(t.gamma[k]) == 0:
            raise StructuralError(
                f"node {k}: state constraint active but its subdifferential is empty")
    free_atoms = active.copy()
    if normalization.kind == "abnormal-adjoint":
        free_atoms[:] = False
        # with no atoms and lambda0 = 0, p[k] = (I + step Fx[k]^T) p[k+1]; p(a) = 0 must force p = 0
        eye = np.eye(n)
        for k in range(N):
            if np.linalg.cond(eye + step * t.Fx[k].T) > 1e12:
                raise StructuralError(
                    f"interval {k}: I + step*Fx^T is singular, so p(a) cannot normalize "
                    "the abnormal adjoint; refine the grid")

    B = LpBuilder()
    pp = B.add_vars("pp", (N + 1, n), lower=0.0, cost=1.0)
    pm = B.add_vars("pm", (N + 1, n), lower=0.0, cost=1.0)
    lam_val = 1.0 if normalization.kind == "normal" else 0.0
    lam = int(B.add_vars("lambda0", (1,), lower=lam_val, upper=lam_val)[0])
    kappa = {}
    for k in np.flatnonzero(free_atoms):
        kappa[k] = B.add_vars(f"kappa{k}", (len(t.gamma[k]),), lower=0.0)
    has_atoms = bool(kappa)
    if has_atoms:
        S = B.add_vars("S", (N + 1, n))
    theta = [B.add_vars(f"theta{k}", (len(t.lsub_x[k]),), lower=0.0) for k in range(N)]
    nu = []
    if system == EXTENDED:
        nu = [B.add_vars(f"nu{k}", (len(t.ncone[k]),), lower=0.0) for k in range(N)]
    omega = B.add_vars("omega", (len(t.endpoint_lsub),), lower=0.0)
    sigma = B.add_vars("sigma", (len(t.endpoint_ncone),), lower=0.0)

    def qt(k: int, coef) -> dict:
        """Coefficients of ``coef . qt_k`` in LP columns."""
        row = {}
        for i in range(n):
            c = float(coef[i])
            if c == 0.0:
                continue
            row[pp[k + 1, i]] = row.get(pp[k + 1, i], 0.0) + c
            row[pm[k + 1, i]] = row.get(pm[k + 1, i], 0.0) - c
            if has_atoms:
                row[S[k, i]] = row.get(S[k, i], 0.0) + c
        return row

    def merge(*parts) -> dict:
        out: dict = {}
        for part in parts:
            for j, v in part.items():
                out[j] = out.get(j, 0.0) + v
        return out

    if has_atoms:
        for k in range(N + 1):
            for i in range(n):
                row = {S[k, i]: 1.0}
                if k > 0:
                    row[S[k - 1, i]] = -1.0
                if k in kappa:
                    for g, col in enumerate(kappa[k]):
                        row[col] = row.get(col, 0.0) - t.gamma[k][g, i]
                B.add_row(row, EQ, 0.0, ("atoms", k, i))

    for k in range(N):
        FxT = t.Fx[k].T
        # state rows, scaled by step:  p[k+1] - p[k] + step*(Fx^T qt - sum theta xi) = 0
        for i in range(n):
            row = merge({pp[k + 1, i]: 1.0, pm[k + 1, i]: -1.0, pp[k, i]: -1.0, pm[k, i]: 1.0},
                        qt(k, step * FxT[i]),
                        {theta[k][j]: -step * t.lsub_x[k][j, i] for j in range(len(theta[k]))})
            B.add_row(row, EQ, 0.0, ("adjoint-x", k, i))
        if system == EXTENDED:
            FuT = t.Fu[k].T
            for i in range(m):
                row = merge(qt(k, FuT[i]),
                            {theta[k][j]: -t.lsub_u[k][j, i] for j in range(len(theta[k]))},
                            {nu[k][j]: -t.ncone[k][j, i] for j in range(len(nu[k]))})
                if any(v != 0.0 for v in row.values()):
                    B.add_row(row, EQ, 0.0, ("adjoint-u", k, i))
        row = {int(j): 1.0 for j in theta[k]}
        row[lam] = -1.0
        B.add_row(row, EQ, 0.0, ("theta-sum", k))
        for w in _weierstrass_rows(t, k):
            row = merge(qt(k, w[:n]), {lam: -w[n]})
            B.add_row(row, LE, 0.0, ("weierstrass", k))

    # transversality: (p_0, -q_N) = sum sigma g + sum omega l
    for i in range(n):
        row = {pp[0, i]: 1.0, pm[0, i]: -1.0}
        row = merge(row, {sigma[r]: -t.endpoint_ncone[r, i] for r in range(len(sigma))},
                    {omega[j]: -t.endpoint_lsub[j, i] for j in range(len(omega))})
        B.add_row(row, EQ, 0.0, ("transversality-a", i))
    for i in range(n):
        row = {pp[N, i]: -1.0, pm[N, i]: 1.0}
        if has_atoms:
            row[S[N, i]] = -1.0
        row = merge(row, {sigma[r]: -t.endpoint_ncone[r, n + i] for r in range(len(sigma))},
                    {omega[j]: -t.endpoint_lsub[j, n + i] for j in range(len(omega))})
        B.add_row(row, EQ, 0.0, ("transversality-b", i))
    row = {int(j): 1.0 for j in omega}
    row[lam] = -1.0
    B.add_row(row, EQ, 0.0, ("endpoint-weight-sum",))

    if normalization.kind == "abnormal-measure":
        row = {int(c): 1.0 for cols in kappa.values() for c in cols}
        B.add_row(row, EQ, 1.0, ("normalization",))
    elif normalization.kind == "abnormal-adjoint":
        for i in range(n):
            row = {pp[0, i]: 1.0, pm[0, i]: -1.0}
            if i == normalization.index:
                B.add_row(row, EQ, float(normalization.sign), ("normalization", i))
            else:
                B.add_row(row, LE, 1.0, ("normalization-box", i))
                B.add_row(row, GE, -1.0, ("normalization-box", i))

    B.blocks["lambda0"] = np.array([lam])
    return MultiplierProgram(B.build(), B.blocks, normalization, system, t, free_atoms)


@dataclass(frozen=True, eq=False)
class ModeRefutation:
    """A normalization LP shown infeasible by a verified Farkas certificate."""

    normalization: str
    program: MultiplierProgram
    farkas: FarkasCertificate
    verified: bool

    def to_dict(self) -> dict:
        return {"normalization": self.normalization, "verified": self.verified,
                "lp_rows": self.program.lp.num_rows, "lp_vars": self.program.lp.num_vars,
                "farkas": self.farkas.to_dict()}


def find_multipliers(table: ExtremalDataTable, normalization: Normalization = NORMAL,
                     system: str = EXTENDED, settings: CertifySettings | None = None):
    """Solve one normalization LP.

    Returns a :class:`MultiplierSet` when feasible, otherwise a
    :class:`ModeRefutation` whose certificate has been re-verified
    independently of the solver.
    """
    settings = settings or CertifySettings()
    prog = build_multiplier_lp(table, normalization, system, settings.tol_active)
    out = solve_lp(prog.lp, tol=settings.tol_lp)
    if isinstance(out, Optimal):
        return prog.decode(out.x)
    if isinstance(out, Infeasible):
        ok = verify_farkas(prog.lp, out.farkas, settings.tol_lp)
        if not ok:
            raise NumericalFailure(f"{normalization.label}: Farkas certificate failed verification")
        return ModeRefutation(normalization.label, prog, out.farkas, ok)
    raise NumericalFailure(f"{normalization.label}: multiplier LP reported unbounded")


@dataclass(frozen=True, eq=False)
class WeierstrassReport:
    gaps: np.ndarray
    argmax: np.ndarray
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.gaps <= self.tol))

    @property
    def max_gap(self) -> float:
        return float(np.max(self.gaps, initial=0.0))

    def to_dict(self) -> dict:
        return {"passed": self.passed, "tol": self.tol, "max_gap": self.max_gap,
                "gaps": self.gaps.tolist(), "argmax_sample": self.argmax.tolist()}


def check_weierstrass(table: ExtremalDataTable, ms: MultiplierSet,
                      tol: float = 1e-7) -> WeierstrassReport:
    """Hamiltonian gap ``max_s H(u_s) - H(u*)`` at every interval, using ``qt``."""
    qt = ms.qtilde
    N = table.grid.N
    gaps = np.zeros(N)
    arg = np.zeros(N, dtype=int)
    for k in range(N):
        H = table.ws_f[k] @ qt[k] - ms.lambda0 * table.ws_L[k]
        arg[k] = int(np.argmax(H))
        gaps[k] = float(H[arg[k]] - H[0])
    return WeierstrassReport(gaps, arg, tol)


@dataclass(frozen=True, eq=False)
class MultiplierCheck:
    residuals: dict
    tol: float

    @property
    def ok(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values())

    def failures(self) -> dict:
        return {k: v for k, v in self.residuals.items() if v > self.tol}


def verify_multipliers(table: ExtremalDataTable, ms: MultiplierSet, system: str = EXTENDED,
                       tol: float = 1e-7, tol_active: float = 1e-6) -> MultiplierCheck:
    """Evaluate every condition of the discrete system at ``ms`` directly."""
    t = table
    N, n, step = t.grid.N, t.n, t.grid.step
    p = np.asarray(ms.p, dtype=float)
    qt = ms.qtilde
    q = ms.q
    lam = float(ms.lambda0)
    res = {}
    signs = [-lam, -np.min(ms.mu, initial=0.0)]
    signs += [-np.min(th, initial=0.0) for th in ms.theta]
    signs += [-np.min(v, initial=0.0) for v in ms.nu]
    signs += [-np.min(ms.omega, initial=0.0), -np.min(ms.sigma, initial=0.0)]
    res["sign"] = float(max(max(signs), 0.0)) + 0.0
    inactive = ~active_nodes(t, tol_active)
    res["support"] = float(np.max(np.abs(ms.mu[inactive]), initial=0.0))
    gam = 0.0
    for k in np.flatnonzero(ms.mu > 0):
        G = t.gamma[k]
        if len(G) == 0:
            gam = max(gam, float(ms.mu[k]))
        else:
            gam = max(gam, float(np.min(np.max(np.abs(G - ms.gamma[k]), axis=1))) * ms.mu[k])
    res["gamma"] = gam
    ax = au = ts = 0.0
    for k in range(N):
        th = ms.theta[k]
        lhs = p[k + 1] - p[k]
        rhs = -step * (t.Fx[k].T @ qt[k] - th @ t.lsub_x[k])
        ax = max(ax, float(np.max(np.abs(lhs - rhs))))
        if system == EXTENDED:
            r = t.Fu[k].T @ qt[k] - th @ t.lsub_u[k]
            if len(t.ncone[k]):
                r = r - ms.nu[k] @ t.ncone[k]
            au = max(au, float(np.max(np.abs(r), initial=0.0)))
        ts = max(ts, abs(float(th.sum()) - lam))
    res["adjoint_x"] = ax
    if system == EXTENDED:
        res["adjoint_u"] = au
    res["theta_sum"] = ts
    res["weierstrass"] = max(check_weierstrass(t, ms).max_gap, 0.0)
    endpoint = np.concatenate([p[0], -q[N]])
    comb = ms.omega @ t.endpoint_lsub
    if len(t.endpoint_ncone):
        comb = comb + ms.sigma @ t.endpoint_ncone
    res["transversality"] = float(np.max(np.abs(endpoint - comb)))
    res["endpoint_weight_sum"] = abs(float(ms.omega.sum()) - lam)
    total = lam + float(np.sum(ms.mu)) + float(np.max(np.abs(p), initial=0.0))
    res["nontriviality"] = max(0.0, 1.0 - total) if total < 1.0 - 1e-9 else 0.0
    return MultiplierCheck(res, tol)


def _solve_family(table, family, system, settings):
    workers = settings.workers or int(os.environ.get("EXTREMAL_CERTIFY_THREADS", "1") or 1)
    if workers > 1 and len(family) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda nz: find_multipliers(table, nz, system, settings), family))
    return [find_multipliers(table, nz, system, settings) for nz in family]


@dataclass(frozen=True, eq=False)
class ClassicalVerdict:
    feasible: bool
    multipliers: MultiplierSet | None
    refutations: tuple

    def to_dict(self) -> dict:
        d = {"feasible": self.feasible,
             "multipliers": self.multipliers.to_dict() if self.multipliers else None,
             "refuted_modes": [r.normalization for r in self.refutations]}
        if self.multipliers is not None:
            d["max_abs_p"] = float(np.max(np.abs(self.multipliers.p)))
        return d


def check_classical(table: ExtremalDataTable, settings: CertifySettings | None = None) -> ClassicalVerdict:
    """Search multipliers for the classical system (state-marginal adjoint inclusion)."""
    settings = settings or CertifySettings()
    refuted = []
    family = normalization_family(table.n, settings.normal_mode, settings.abnormal_measure,
                                  settings.abnormal_adjoint)
    for nz in family:
        out = find_multipliers(table, nz, CLASSICAL, settings)
        if isinstance(out, MultiplierSet):
            return ClassicalVerdict(True, out, tuple(refuted))
        refuted.append(out)
    return ClassicalVerdict(False, None, tuple(refuted))


@dataclass(frozen=True, eq=False)
class Certificate:
    verdict: str
    multipliers: MultiplierSet | None
    farkas_bundle: tuple
    weierstrass: WeierstrassReport | None
    classical: ClassicalVerdict | None
    settings: CertifySettings
    label: str = ""
    sufficiency: "SufficiencyCertificate | None" = None

    def with_sufficiency(self, suff) -> "Certificate":
        return Certificate(self.verdict, self.multipliers, self.farkas_bundle, self.weierstrass,
                           self.classical, self.settings, self.label, suff)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "table": self.label,
            "multipliers": self.multipliers.to_dict() if self.multipliers else None,
            "weierstrass": self.weierstrass.to_dict() if self.weierstrass else None,
            "classical": self.classical.to_dict() if self.classical else None,
            "farkas_bundle": [r.to_dict() for r in self.farkas_bundle],
            "sufficiency": self.sufficiency.to_dict() if self.sufficiency else None,
            "tolerances": self.settings.to_dict(),
        }


def certify_extremal(table: ExtremalDataTable, settings: CertifySettings | None = None,
                     classical: bool = True) -> Certificate:
    """Normal mode first, then every abnormal normalization; refute if all fail."""
    settings = settings or CertifySettings()
    family = normalization_family(table.n, settings.normal_mode, settings.abnormal_measure,
                                  settings.abnormal_adjoint)
    bundle = []
    found = None
    if family and family[0] is NORMAL:
        out = find_multipliers(table, NORMAL, EXTENDED, settings)
        if isinstance(out, MultiplierSet):
            found = out
        else:
            bundle.append(out)
        family = family[1:]
    verdict = NORMAL_EXTREMAL if found is not None else None
    if found is None and family:
        results = _solve_family(table, family, EXTENDED, settings)
        for out in results:
            if isinstance(out, MultiplierSet):
                if found is None:
                    found = out
            else:
                bundle.append(out)
        if found is not None:
            verdict = ABNORMAL_EXTREMAL
    if found is None:
        verdict = NOT_EXTREMAL
    wrep = check_weierstrass(table, found, settings.tol_weierstrass) if found is not None else None
    cls = check_classical(table, settings) if classical else None
    return Certificate(verdict, found, tuple(bundle) if found is None else (), wrep, cls,
                       settings, table.label)


@dataclass(frozen=True, eq=False)
class SufficiencyCertificate:
    verdict: str
    cost: float
    direct_cost: float
    gap: float
    tol: float

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "cost": self.cost, "direct_cost": self.direct_cost,
                "cross_check_gap": self.gap, "tol": self.tol}


def validate_lc(problem: ControlProblem):
    if not isinstance(problem, LcProblem):
        issues = problem.structure_issues() if hasattr(problem, "structure_issues") else []
        raise ProblemClassError("; ".join(issues) or "not a linear-convex problem")
    issues = problem.structure_issues()
    if issues:
        raise ProblemClassError("; ".join(issues))


def sufficiency_certificate(problem: ControlProblem, process: Process, ms: MultiplierSet,
                            settings: CertifySettings | None = None) -> SufficiencyCertificate:
    """Global-minimum certificate for a normal extremal of a linear-convex problem.

    The multipliers are re-verified against the table compiled at
    ``process``, and the cost is cross-checked against the direct
    transcription on the same grid; the certificate is refused on mismatch.
    """
    from .direct import solve_direct

    settings = settings or CertifySettings()
    validate_lc(problem)
    if abs(ms.lambda0 - 1.0) > 1e-9:
        raise NotNormalError(f"lambda0 = {ms.lambda0}; a normal extremal needs lambda0 = 1")
    table = compile_table(problem, process)
    check = verify_multipliers(table, ms, EXTENDED, settings.tol_residual, settings.tol_active)
    if not check.ok:
        raise InvalidMultipliers(f"multipliers fail the extremal system: {check.failures()}")
    cost = eval_cost(problem, process)
    direct = solve_direct(problem, tol=settings.tol_lp)
    gap = abs(cost - direct.cost)
    if gap > settings.tol_cross:
        raise CrossCheckFailure(
            f"certified cost {cost:.12g} differs from the direct optimum {direct.cost:.12g} "
            f"by {gap:.3g} > {settings.tol_cross:.3g}")
    return SufficiencyCertificate("GlobalMinimum", cost, direct.cost, gap, settings.tol_cross)
