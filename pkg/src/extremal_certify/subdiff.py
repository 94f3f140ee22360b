"""Exact subdifferentials for the piecewise-affine convex class.

Convex sets are carried as finite generator lists: a subdifferential is the
convex hull of its points, a normal cone the conic hull of its points.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .linprog import EQ, LpBuilder, Optimal, solve_lp

if TYPE_CHECKING:
    from .model import MaxAffine, Polytope, PwaSum


class PreconditionError(ValueError):
    pass


class GeneratorOverflow(RuntimeError):
    pass


DEFAULT_MAX_GENERATORS = 4096


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    points: np.ndarray
    conic: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("generator points must be a 2-D array (count, dim)")
        object.__setattr__(self, "points", pts)

    @classmethod
    def empty(cls, dim: int, conic: bool = False) -> "GeneratorSet":
        return cls(np.zeros((0, dim)), conic)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def is_empty(self) -> bool:
        return self.points.shape[0] == 0

    def __len__(self) -> int:
        return self.points.shape[0]

    def contains(self, v, tol: float = 1e-9) -> bool:
        """Membership of ``v`` in the hull (convex or conic) via a small LP."""
        v = np.asarray(v, dtype=float).ravel()
        if self.is_empty:
            return bool(self.conic and np.all(np.abs(v) <= tol))
        b = LpBuilder()
        w = b.add_vars("w", len(self), lower=0.0)
        for i in range(self.dim):
            b.add_row({int(w[j]): self.points[j, i] for j in range(len(self))}, EQ, v[i])
        if not self.conic:
            b.add_row({int(j): 1.0 for j in w}, EQ, 1.0)
        return isinstance(solve_lp(b.build(), tol=tol), Optimal)


def unique_rows(points: np.ndarray) -> np.ndarray:
    if points.shape[0] <= 1:
        return points
    keep = []
    seen = set()
    for row in points:
        key = tuple(np.round(row, 12) + 0.0)
        if key not in seen:
            seen.add(key)
            keep.append(row)
    return np.array(keep)


def activity_tol(value: float) -> float:
    return 1e-7 * (1.0 + abs(value))


def maxaffine_subdiff(f: "MaxAffine", z, tol: float | None = None) -> GeneratorSet:
    """Gradients of the pieces of ``f`` active at ``z``.

    A piece is active when its value is within ``tol`` of the maximum; the
    default tolerance scales with ``|f(z)|``.
    """
    z = np.asarray(z, dtype=float).ravel()
    vals = f.piece_values(z)
    top = float(vals.max())
    if tol is None:
        tol = activity_tol(top)
    active = vals >= top - tol
    return GeneratorSet(unique_rows(f.gradients[active]))


def pwasum_subdiff(f: "PwaSum", z, tol: float | None = None,
                   max_generators: int = DEFAULT_MAX_GENERATORS) -> GeneratorSet:
    """Minkowski sum of the term subdifferentials of a sum of max-affine terms.

    Generators are all sums picking one generator per term, deduplicated.
    Raises :class:`GeneratorOverflow` when the product count exceeds
    ``max_generators``; regrouping terms into a single max-affine term
    avoids the blow-up.
    """
    z = np.asarray(z, dtype=float).ravel()
    if not f.terms:
        return GeneratorSet(np.zeros((1, f.dim)))
    parts = [maxaffine_subdiff(t, z, tol).points for t in f.terms]
    count = int(np.prod([p.shape[0] for p in parts]))
    if count > max_generators:
        raise GeneratorOverflow(
            f"{count} generators exceed the bound {max_generators}; "
            "merge terms that share kinks into one max-affine term")
    acc = parts[0]
    for p in parts[1:]:
        acc = unique_rows((acc[:, None, :] + p[None, :, :]).reshape(-1, f.dim))
    return GeneratorSet(unique_rows(acc))


def normal_cone(U: "Polytope", u, tol: float = 1e-9) -> GeneratorSet:
    """Outward normals of the constraints of ``U`` active at ``u``."""
    u = np.asarray(u, dtype=float).ravel()
    slack = U.d - U.C @ u
    scale = 1.0 + np.abs(U.d)
    if np.any(slack < -tol * scale):
        i = int(np.argmin(slack / scale))
        raise PreconditionError(
            f"point violates constraint {i} of the polytope by {-slack[i]:.3g}")
    active = slack <= tol * scale
    return GeneratorSet(unique_rows(U.C[active]) if active.any()
                        else np.zeros((0, U.dim)), conic=True)


def state_subdiff(problem, k: int, x, mode: str = "sharp") -> GeneratorSet:
    """State-constraint subdifferential at node ``k`` for affine ``h``.

    ``mode="bar"`` collects gradient limits from all nearby points and is
    always ``{d_k}``.  ``mode="sharp"`` only admits limits along points where
    the constraint is violated: ``{d_k}`` when ``d_k != 0``; when ``d_k == 0``
    it is ``{0}`` if ``e_k > 0`` and empty otherwise.
    """
    d, e = problem.constraint_data(k)
    d = np.asarray(d, dtype=float).ravel()
    if mode == "bar":
        return GeneratorSet(d[None, :])
    if mode != "sharp":
        raise ValueError(f"unknown mode {mode!r}; expected 'bar' or 'sharp'")
    if np.any(d != 0.0):
        return GeneratorSet(d[None, :])
    if e > 0.0:
        return GeneratorSet(np.zeros((1, d.size)))
    return GeneratorSet.empty(d.size)


def polytope_vertices(C: np.ndarray, d: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vertex enumeration by active-set combinations; fine for small dimensions."""
    C = np.asarray(C, dtype=float)
    d = np.asarray(d, dtype=float)
    m = C.shape[1]
    verts = []
    for rows in itertools.combinations(range(C.shape[0]), m):
        sub = C[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        v = np.linalg.solve(sub, d[list(rows)])
        if np.all(C @ v <= d + tol * (1.0 + np.abs(d))):
            verts.append(v)
    if not verts:
        return np.zeros((0, m))
    pts = unique_rows(np.round(np.array(verts), 12))
    order = np.lexsort(pts.T[::-1])
    return pts[order]
