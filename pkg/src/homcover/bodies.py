"""Convex bodies in vertex representation, with derived facet data.

Special kinds (cube = [-s,s]^n, simplex = conv{0, s*e_1, ..., s*e_n}
recentered at its centroid, cross-polytope = conv{+-s*e_j}) carry
closed-form facets and closed-form Minkowski-combination membership.
General vertex bodies fall back to hull facets (2-D: monotone chain,
higher dimensions: qhull) and small LPs for combination membership.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import lpcore

INTERIOR_MARGIN = 1e-7
MEMBERSHIP_TOL = 1e-9

CUBE = "cube"
SIMPLEX = "simplex"
CROSSPOLYTOPE = "crosspolytope"
VREP = "vrep"

_SYMMETRIC_KINDS = (CUBE, CROSSPOLYTOPE)


def _hull_2d(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull; returns hull vertices in ccw order."""
    pts = sorted(map(tuple, points))
    if len(pts) <= 2:
        return np.asarray(pts, dtype=float)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1], dtype=float)


class ConvexBody:
    """Immutable full-dimensional polytope.

    Use the classmethod constructors; the raw constructor checks
    full-dimensionality and rejects degenerate vertex sets.
    """

    def __init__(self, kind: str, dim: int, vertices: np.ndarray, scale: float = 1.0):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != dim:
            raise ValueError("vertices must be a (k, dim) array")
        if not np.all(np.isfinite(vertices)):
            raise ValueError("vertices must be finite")
        centered = vertices - vertices.mean(axis=0)
        if np.linalg.matrix_rank(centered, tol=1e-10) < dim:
            raise ValueError("vertex set is degenerate (not full-dimensional)")
        self.kind = kind
        self.dim = dim
        self.scale = float(scale)
        vertices.setflags(write=False)
        self.vertices = vertices

    # --- constructors -------------------------------------------------

    @classmethod
    def cube(cls, dim: int, scale: float = 1.0) -> "ConvexBody":
        verts = np.array(list(itertools.product((-scale, scale), repeat=dim)))
        return cls(CUBE, dim, verts, scale)

    @classmethod
    def simplex(cls, dim: int, scale: float = 1.0) -> "ConvexBody":
        base = np.vstack([np.zeros(dim), scale * np.eye(dim)])
        return cls(SIMPLEX, dim, base - base.mean(axis=0), scale)

    @classmethod
    def cross_polytope(cls, dim: int, scale: float = 1.0) -> "ConvexBody":
        verts = np.vstack([scale * np.eye(dim), -scale * np.eye(dim)])
        return cls(CROSSPOLYTOPE, dim, verts, scale)

    @classmethod
    def from_vertices(cls, vertices) -> "ConvexBody":
        vertices = np.asarray(vertices, dtype=float)
        return cls(VREP, vertices.shape[1], vertices)

    @classmethod
    def from_spec(cls, spec: dict) -> "ConvexBody":
        kind = spec["kind"].lower()
        dim = int(spec["dim"])
        scale = float(spec.get("scale", 1.0))
        if kind == CUBE:
            return cls.cube(dim, scale)
        if kind == SIMPLEX:
            return cls.simplex(dim, scale)
        if kind == CROSSPOLYTOPE:
            return cls.cross_polytope(dim, scale)
        if kind == VREP:
            return cls.from_vertices(spec["vertices"])
        raise ValueError(f"unknown body kind {kind!r}")

    def to_spec(self) -> dict:
        spec = {"kind": self.kind, "dim": self.dim}
        if self.kind == VREP:
            spec["vertices"] = self.vertices.tolist()
        elif self.scale != 1.0:
            spec["scale"] = self.scale
        return spec

    def scaled(self, factor: float) -> "ConvexBody":
        """Homothety about the origin by a positive factor."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        if self.kind == VREP:
            return ConvexBody(VREP, self.dim, self.vertices * factor)
        return ConvexBody(self.kind, self.dim, self.vertices * factor, self.scale * factor)

    # --- derived geometry ---------------------------------------------

    @cached_property
    def halfspaces(self):
        """(A, b) with unit rows so that the body equals {x : A x <= b}."""
        n, s = self.dim, self.scale
        if self.kind == CUBE:
            A = np.vstack([np.eye(n), -np.eye(n)])
            b = np.full(2 * n, s)
        elif self.kind == SIMPLEX:
            A = np.vstack([-np.eye(n), np.ones((1, n))])
            b = np.concatenate([np.full(n, s / (n + 1)), [s / (n + 1)]])
        elif self.kind == CROSSPOLYTOPE:
            A = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
            b = np.full(2 ** n, s)
        elif self.dim == 2:
            hull = _hull_2d(self.vertices)
            edges = np.roll(hull, -1, axis=0) - hull
            A = np.column_stack([edges[:, 1], -edges[:, 0]])  # outward for ccw hulls
            b = np.einsum("ij,ij->i", A, hull)
        else:
            from scipy.spatial import ConvexHull

            hull = ConvexHull(self.vertices)
            eq = hull.equations  # rows [a, c] meaning a @ x + c <= 0
            A, b = eq[:, :-1], -eq[:, -1]
        norms = np.linalg.norm(A, axis=1)
        A = A / norms[:, None]
        b = b / norms
        A.setflags(write=False)
        b.setflags(write=False)
        return A, b

    @cached_property
    def chebyshev(self):
        """(center, inradius) of the largest inscribed Euclidean ball."""
        A, b = self.halfspaces
        return lpcore.chebyshev_center(A, b)

    @cached_property
    def contains_origin_interior(self) -> bool:
        A, b = self.halfspaces
        return bool(np.all(b > INTERIOR_MARGIN))

    @cached_property
    def vertex_bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @cached_property
    def _simplex_frame(self):
        """(v0, Minv) mapping x -> Minv @ (x - v0) into standard-simplex
        coordinates; available for any body with exactly dim+1 vertices."""
        if self.vertices.shape[0] != self.dim + 1:
            return None
        v0 = self.vertices[0]
        M = (self.vertices[1:] - v0).T
        return v0, np.linalg.inv(M)

    # --- predicates -----------------------------------------------------

    def contains(self, points, mode: str = "closed"):
        """Membership of one point or an array of points.

        closed: point in conv(vertices) up to tolerance.  strictInterior:
        a Euclidean ball of radius INTERIOR_MARGIN around the point fits.
        """
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        if pts.shape[1] != self.dim:
            raise ValueError(f"point dimension {pts.shape[1]} != body dimension {self.dim}")
        A, b = self.halfspaces
        if mode == "closed":
            slack = b + MEMBERSHIP_TOL
        elif mode == "strictInterior":
            slack = b - INTERIOR_MARGIN
        else:
            raise ValueError(f"unknown mode {mode!r}")
        ok = np.all(pts @ A.T <= slack, axis=1)
        return bool(ok[0]) if single else ok

    def support(self, direction) -> float:
        """max over vertices of <v, direction>."""
        direction = np.asarray(direction, dtype=float)
        if direction.shape != (self.dim,):
            raise ValueError("direction dimension mismatch")
        if np.linalg.norm(direction) == 0.0:
            raise ValueError("direction must be nonzero")
        return float(np.max(self.vertices @ direction))

    def gauge(self, points):
        """Minkowski gauge ||x||_K = min{t >= 0 : x in t K}; needs interior origin."""
        if not self.contains_origin_interior:
            raise ValueError("gauge requires the origin in the interior")
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        A, b = self.halfspaces
        g = np.max((pts @ A.T) / b, axis=1)
        g = np.maximum(g, 0.0)
        return float(g[0]) if single else g

    def dilated_contains(self, points, delta: float):
        """Membership in body + delta * [-1,1]^n (sup-norm dilation).

        Exact closed forms for the special kinds and 2-D vertex bodies;
        a per-point feasibility LP otherwise.
        """
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        if pts.shape[1] != self.dim:
            raise ValueError("point dimension mismatch")
        n, s = self.dim, self.scale
        if delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.kind == CUBE:
            ok = np.all(np.abs(pts) <= s + delta + MEMBERSHIP_TOL, axis=1)
        elif self.kind == CROSSPOLYTOPE:
            ok = np.sum(np.maximum(np.abs(pts) - delta, 0.0), axis=1) <= s + MEMBERSHIP_TOL
        elif self.kind == SIMPLEX:
            w = pts + s / (n + 1)
            ok = (np.min(w, axis=1) >= -delta - MEMBERSHIP_TOL) & (
                np.sum(np.maximum(w - delta, 0.0), axis=1) <= s + MEMBERSHIP_TOL
            )
        elif self.dim == 2:
            # in 2-D the dilation's facet normals are those of the body plus
            # the axis directions, so offset supports give an exact H-rep
            A, b = self.halfspaces
            ok = np.all(pts @ A.T <= b + delta * np.abs(A).sum(axis=1) + MEMBERSHIP_TOL, axis=1)
        else:
            ok = np.array([
                _box_reaches_body(self, p - delta, p + delta) for p in pts
            ])
        return bool(ok[0]) if single else ok


def _box_reaches_body(body: ConvexBody, lo: np.ndarray, hi: np.ndarray) -> bool:
    """Does the axis box [lo, hi] intersect the body?"""
    n, s = body.dim, body.scale
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi + MEMBERSHIP_TOL):
        return False
    if body.kind == CUBE:
        return bool(np.all(lo <= s + MEMBERSHIP_TOL) and np.all(hi >= -s - MEMBERSHIP_TOL))
    if body.kind == CROSSPOLYTOPE:
        nearest = np.maximum(np.maximum(lo, -hi), 0.0)
        return bool(nearest.sum() <= s + MEMBERSHIP_TOL)
    if body.kind == SIMPLEX:
        shift = s / (n + 1)
        c_lo, c_hi = lo + shift, hi + shift
        if np.any(c_hi < -MEMBERSHIP_TOL):
            return False
        return bool(np.sum(np.maximum(c_lo, 0.0)) <= s + MEMBERSHIP_TOL)
    A, b = body.halfspaces
    rows = [(A[i], lpcore.LE, b[i]) for i in range(A.shape[0])]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        rows.append((e, lpcore.LE, hi[j]))
        rows.append((-e, lpcore.LE, -lo[j]))
    pt = lpcore.feasible_point(*zip(*rows), dim=n)
    return pt is not None


# --- homothets ----------------------------------------------------------


@dataclass(frozen=True)
class HomothetPlacement:
    """A translated, shrunken copy center + ratio * K of a reference body."""

    center: np.ndarray
    ratio: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"homothety ratio must be in [0, 1], got {self.ratio}")


def homothet_contains(body: ConvexBody, center, ratio: float, points, tol: float = MEMBERSHIP_TOL):
    """Vectorized membership in center + ratio * body (closed)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    A, b = body.halfspaces
    return np.all((pts - np.asarray(center)) @ A.T <= ratio * b + tol, axis=1)


def covered_by_union(body: ConvexBody, placements: Sequence[HomothetPlacement], points,
                     shrink: float = 0.0):
    """Boolean mask: which points lie in the union of (possibly shrunken)
    homothets of ``body``.

    Homothets whose shrunken ratio is <= 0 cover nothing.  Points are
    pre-sorted along the first axis so each homothet only examines the
    candidates inside its bounding slab.  Large point sets are chunked
    across the configured worker threads.
    """
    from . import runtime

    pts = np.atleast_2d(np.asarray(points, dtype=float))
    body.halfspaces  # populate the cache before any thread fan-out
    if pts.shape[0] >= runtime._PARALLEL_MIN_POINTS and runtime.get_threads() > 1:
        return runtime.chunked_mask(
            lambda chunk: _covered_by_union_chunk(body, placements, chunk, shrink), pts)
    return _covered_by_union_chunk(body, placements, pts, shrink)


def _covered_by_union_chunk(body: ConvexBody, placements, pts: np.ndarray,
                            shrink: float):
    m = pts.shape[0]
    covered = np.zeros(m, dtype=bool)
    if m == 0:
        return covered
    A, b = body.halfspaces
    lo, hi = body.vertex_bbox
    order = np.argsort(pts[:, 0], kind="stable")
    x_sorted = pts[order, 0]
    for pl in placements:
        r = pl.ratio - shrink
        if r <= 0.0:
            continue
        c = pl.center
        left = np.searchsorted(x_sorted, c[0] + r * lo[0] - 1e-9, side="left")
        right = np.searchsorted(x_sorted, c[0] + r * hi[0] + 1e-9, side="right")
        if left >= right:
            continue
        cand = order[left:right]
        cand = cand[~covered[cand]]
        if cand.size == 0:
            continue
        inside = np.all((pts[cand] - c) @ A.T <= r * b + MEMBERSHIP_TOL, axis=1)
        covered[cand[inside]] = True
        if covered.all():
            break
    return covered


# --- Minkowski combinations ----------------------------------------------


@dataclass(frozen=True)
class MinkowskiCombo:
    """The set plus_coeff * K - minus_coeff * K for a reference body K."""

    body: ConvexBody
    plus_coeff: float
    minus_coeff: float

    def __post_init__(self):
        if self.plus_coeff < 0 or self.minus_coeff < 0:
            raise ValueError("combination coefficients must be nonnegative")
        if self.plus_coeff + self.minus_coeff <= 0:
            raise ValueError("combination must have positive total scale")

    @property
    def dim(self) -> int:
        return self.body.dim


def bounding_box(combo: MinkowskiCombo):
    """Tight axis-aligned box of a K-combination, from per-axis supports."""
    body, a, c = combo.body, combo.plus_coeff, combo.minus_coeff
    V = body.vertices
    hi_body = V.max(axis=0)
    lo_body = V.min(axis=0)
    hi = a * hi_body + c * (-lo_body)
    lo = a * lo_body - c * hi_body
    return lo, hi


def combo_contains(combo: MinkowskiCombo, points):
    """Membership in plus*K - minus*K.

    Closed forms: symmetric kinds reduce to a single scaled copy; simplex
    kinds (including any (n+1)-vertex body) reduce to positive/negative
    part sums in standard-simplex coordinates.  Everything else solves one
    feasibility LP over barycentric weights of both copies per point.
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.shape[1] != combo.dim:
        raise ValueError("point dimension mismatch")
    body, a, c = combo.body, combo.plus_coeff, combo.minus_coeff
    if c == 0.0:
        ok = homothet_contains(body, np.zeros(combo.dim), 1.0, pts / a)
    elif a == 0.0:
        ok = homothet_contains(body, np.zeros(combo.dim), 1.0, -pts / c)
    elif body.kind in _SYMMETRIC_KINDS:
        ok = homothet_contains(body, np.zeros(combo.dim), 1.0, pts / (a + c))
    else:
        frame = body._simplex_frame
        if frame is not None:
            v0, Minv = frame
            y = (pts - (a - c) * v0) @ Minv.T
            ok = (np.sum(np.maximum(y, 0.0), axis=1) <= a + MEMBERSHIP_TOL) & (
                np.sum(np.maximum(-y, 0.0), axis=1) <= c + MEMBERSHIP_TOL
            )
        else:
            ok = np.array([combo_contains_lp(combo, p) for p in pts])
    return bool(ok[0]) if single else ok


def combo_contains_lp(combo: MinkowskiCombo, point) -> bool:
    """Reference path: one linear feasibility problem over barycentric
    weights of both copies (point = a * V' p - c * V' q, p and q stochastic)."""
    point = np.asarray(point, dtype=float)
    if point.shape != (combo.dim,):
        raise ValueError("point dimension mismatch")
    V = combo.body.vertices
    k, n = V.shape
    a, c = combo.plus_coeff, combo.minus_coeff
    coeffs, rels, rhs = [], [], []
    for j in range(n):
        row = np.concatenate([a * V[:, j], -c * V[:, j]])
        coeffs.append(row)
        rels.append(lpcore.EQ)
        rhs.append(point[j])
    ones_p = np.concatenate([np.ones(k), np.zeros(k)])
    ones_q = np.concatenate([np.zeros(k), np.ones(k)])
    coeffs += [ones_p, ones_q]
    rels += [lpcore.EQ, lpcore.EQ]
    rhs += [1.0, 1.0]
    lp = lpcore.LinearProgram(
        np.zeros(2 * k),
        list(zip(coeffs, rels, rhs)),
        var_bounds=[(0.0, None)] * (2 * k),
    )
    return lpcore.solve(lp).status == lpcore.OPTIMAL


# --- factors used by cross-body certificates ------------------------------


def cover_factor(outer: ConvexBody, inner: ConvexBody) -> float:
    """min{t : outer subset of t * inner}; requires interior origin in inner."""
    A, b = inner.halfspaces
    if np.any(b <= 0):
        raise ValueError("cover_factor requires the origin interior to the inner body")
    supports = np.max(outer.vertices @ A.T, axis=0)
    return float(np.max(supports / b))


def reflection_factor(body: ConvexBody) -> float:
    """min{t : -K subset of t K}."""
    A, b = body.halfspaces
    if np.any(b <= 0):
        raise ValueError("reflection_factor requires the origin in the interior")
    supports = np.max((-body.vertices) @ A.T, axis=0)
    return float(np.max(supports / b))


def cube_inclusion_factor(body: ConvexBody) -> float:
    """Largest rho with rho * [-1,1]^n inside the body."""
    A, b = body.halfspaces
    if np.any(b <= 0):
        raise ValueError("cube_inclusion_factor requires the origin in the interior")
    return float(np.min(b / np.abs(A).sum(axis=1)))


# --- random vertex bodies -------------------------------------------------


def random_vrep_body(dim: int, n_vertices: int, rng: np.random.Generator) -> ConvexBody:
    """Vertices sampled uniformly on the unit sphere (rejection from the
    cube), recentered so the vertex centroid is the origin."""
    if n_vertices < dim + 1:
        raise ValueError("need at least dim + 1 vertices")
    for _ in range(200):
        verts = []
        while len(verts) < n_vertices:
            u = rng.uniform(-1.0, 1.0, size=dim)
            norm = np.linalg.norm(u)
            if 1e-6 < norm <= 1.0:
                verts.append(u / norm)
        verts = np.array(verts)
        verts -= verts.mean(axis=0)
        try:
            return ConvexBody.from_vertices(verts)
        except ValueError:
            continue
    raise RuntimeError("failed to sample a full-dimensional vertex body")
