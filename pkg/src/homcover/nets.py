"""Certified epsilon-nets: point sets {y_j} with {y_j + eps*K} covering K.

The construction is a plain axis grid whose spacing is tied to the
Euclidean inradius of eps*K about its Chebyshev center c:

    spacing * sqrt(n) / 2  <=  (1 - slack) * inradius(eps*K)

A grid point g is kept iff its cell can be the rounding target of some
x - c with x in K, i.e. g + c lies in K dilated by half a cell per axis.
Then for any x in K the point g = round((x - c)/h) * h is kept and
|x - g - c| <= h*sqrt(n)/2 < inradius, hence x in g + eps*K.  Kept points
also satisfy g in K - eps*K, because the inradius ball around c sits
inside eps*K.  Certification is therefore unconditional, with no
probabilistic step anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bodies import ConvexBody

GRID_SLACK = 0.01
MAX_NET_POINTS = 10_000_000
EPSILON_FLOOR = 1e-3


class NetTooLarge(RuntimeError):
    """The requested grid would exceed the net-size budget."""


def default_epsilon(n: int) -> float:
    """Experiment default: (1 - 4 ln n / n) / (n ln n), floored at 1e-3.
    The unfloored expression only becomes positive around n = 9; at desk
    scale the floor governs."""
    if n < 2:
        raise ValueError("dimension must be >= 2")
    a_n = 1.0 - 4.0 * math.log(n) / n
    return max(a_n / (n * math.log(n)), EPSILON_FLOOR)


class GridIndex:
    """Compact lookup from integer grid coordinates to net row numbers."""

    def __init__(self, indices: np.ndarray):
        self.j_lo = indices.min(axis=0)
        spans = indices.max(axis=0) - self.j_lo + 1
        self.strides = np.cumprod(np.concatenate([[1], spans[:0:-1]]))[::-1].copy()
        self.spans = spans
        keys = (indices - self.j_lo) @ self.strides
        order = np.argsort(keys, kind="stable")
        self.sorted_keys = keys[order]
        self.sorted_rows = order.astype(np.int64)

    def lookup(self, j: np.ndarray) -> np.ndarray:
        """Row numbers for integer coordinates j (N, dim); -1 when absent."""
        j = np.atleast_2d(j)
        shifted = j - self.j_lo
        in_range = np.all((shifted >= 0) & (shifted < self.spans), axis=1)
        keys = np.where(in_range, shifted @ self.strides, 0)
        pos = np.searchsorted(self.sorted_keys, keys)
        pos = np.minimum(pos, self.sorted_keys.size - 1)
        found = in_range & (self.sorted_keys[pos] == keys)
        return np.where(found, self.sorted_rows[pos], -1)


def gauge_grid(dim: int, keep_fn: Callable, inradius: float, anchor: np.ndarray,
               bbox_lo: np.ndarray, bbox_hi: np.ndarray,
               max_points: int = MAX_NET_POINTS):
    """Shared grid builder.

    keep_fn(points, half_spacing) must return the mask of grid points whose
    cell reaches the covering target.  Returns (points, spacing, GridIndex).
    """
    if inradius <= 0:
        raise ValueError("gauge inradius must be positive")
    h = 2.0 * inradius / math.sqrt(dim) * (1.0 - GRID_SLACK)
    lo = bbox_lo - anchor - h / 2
    hi = bbox_hi - anchor + h / 2
    j_lo = np.ceil(lo / h - 1e-12).astype(int)
    j_hi = np.floor(hi / h + 1e-12).astype(int)
    counts = np.maximum(j_hi - j_lo + 1, 0)
    total = int(np.prod(counts.astype(float)))
    if total <= 0:
        raise ValueError("empty grid range")
    if total > max_points:
        raise NetTooLarge(f"grid would have {total} candidate points (> {max_points})")

    axes = [np.arange(j_lo[d], j_hi[d] + 1) for d in range(dim)]
    kept_pts = []
    kept_idx = []
    # slabs along the first axis keep peak memory proportional to one slab
    tail = np.stack([g.ravel() for g in np.meshgrid(*axes[1:], indexing="ij")], axis=-1) \
        if dim > 1 else np.zeros((1, 0), dtype=int)
    slab_rows = tail.shape[0]
    for j0 in axes[0]:
        idx = np.column_stack([np.full(slab_rows, j0), tail]) if dim > 1 else np.array([[j0]])
        pts = idx * h
        mask = keep_fn(pts, h / 2)
        if np.any(mask):
            kept_pts.append(pts[mask])
            kept_idx.append(idx[mask])
    if not kept_pts:
        raise ValueError("grid kept no points; target appears empty")
    points = np.concatenate(kept_pts)
    indices = np.concatenate(kept_idx)
    return points, h, GridIndex(indices)


@dataclass(eq=False)
class EpsNet:
    """A certified net plus the construction metadata behind the guarantee."""

    epsilon: float
    points: np.ndarray
    grid_spacing: float
    certified_inradius: float
    anchor: np.ndarray
    body: ConvexBody
    index: GridIndex = field(repr=False)
    cardinality_bound: float = 0.0  # the (5/epsilon)^n reference, informational

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def designated_indices(self, points) -> np.ndarray:
        """Net index of the grid cell each point rounds to (-1 if absent)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        j = np.rint((pts - self.anchor) / self.grid_spacing).astype(int)
        return self.index.lookup(j)

    def covering_indices(self, points):
        """For each point x, an index of a net point y with x in y + eps*K.

        The designated grid cell is tried first and verified by membership;
        rare failures fall back to a full scan.  Returns (indices, ok_mask);
        ok is False only when no net point covers x at all.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        idx = self.designated_indices(pts)
        A, b = self.body.halfspaces
        bound = self.epsilon * b + 1e-9
        ok = idx >= 0
        sel = np.where(ok)[0]
        diff = pts[sel] - self.points[idx[sel]]
        good = np.all(diff @ A.T <= bound, axis=1)
        ok[sel[~good]] = False
        for i in np.where(~ok)[0]:
            hits = np.all((pts[i] - self.points) @ A.T <= bound, axis=1)
            j = np.argmax(hits)
            if hits[j]:
                idx[i] = j
                ok[i] = True
            else:
                idx[i] = -1
        return idx, ok


def build_net(body: ConvexBody, epsilon: float,
              max_points: int = MAX_NET_POINTS) -> EpsNet:
    """Construct a certified epsilon-net on the body (see module docstring)."""
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    center, inradius = body.chebyshev
    anchor = epsilon * center
    r = epsilon * inradius
    lo, hi = body.vertex_bbox

    def keep(pts, half):
        return body.dilated_contains(pts + anchor, half)

    points, h, index = gauge_grid(body.dim, keep, r, anchor, lo, hi, max_points)
    return EpsNet(
        epsilon=epsilon,
        points=points,
        grid_spacing=h,
        certified_inradius=r,
        anchor=anchor,
        body=body,
        index=index,
        cardinality_bound=(5.0 / epsilon) ** body.dim,
    )
