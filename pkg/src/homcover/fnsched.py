"""Scheduling of homothety budgets for translative coverings.

Large ratios (lambda >= n^-5) are placed directly by the random-cover
engine.  Small ratios are grouped into dyadic classes by the size of
lambda * n^5, each class is cut into volume-certified partitions, and each
partition covers one dyadic cube of a tiling of the body.  A single cube
is covered in two phases: a random prefix placed uniformly in the slightly
inflated cube, then a deterministic patch pass that lays the remaining
pieces on a separated subset of the grid points the prefix missed.

Every phase carries an explicit shrink margin, so the final verdict always
comes from an independent coverage certificate, never from the scheduling
arithmetic itself.  In paper mode the Rogers factor (n ln n + n ln ln n +
c n) is used verbatim; desk mode replaces it by multiplier * c / 5, which
preserves the slack ratios between the 4n / 5n / 6n variants while keeping
the construction computable at n = 2 or 3.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import covercert, nets, randvol
from .bodies import (
    ConvexBody,
    HomothetPlacement,
    MinkowskiCombo,
    _box_reaches_body,
    combo_contains,
    cover_factor,
    covered_by_union,
    cube_inclusion_factor,
)
from .covercert import CoverageVerdict
from .randvol import RngSpec, sample_uniform

PHASE_RANDOM = "random"
PHASE_PATCH = "patch"
PHASE_PROP1 = "prop1"

MODE_DESK = "desk"
MODE_PAPER = "paper"
DESK_MULTIPLIER = 3.0

_PIECE_TAG = 0x91
_CUBE_TAG = 0xC0
_VOL_TAG = 0xF0


class PatchDeficit(RuntimeError):
    """Fewer pieces left than patch locations that need one."""


class CubeAssignmentDeficit(RuntimeError):
    """The dyadic budgets cannot tile the requested cells."""


def rogers_factor(n: int, constant: int, mode: str, multiplier: float = DESK_MULTIPLIER) -> float:
    """The covering-density factor for one of the 4n / 5n / 6n variants."""
    if mode == MODE_PAPER:
        return n * math.log(n) + n * math.log(math.log(n)) + constant * n
    if mode == MODE_DESK:
        return multiplier * constant / 5.0
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(eq=False)
class RatioSequence:
    """A finite list of homothety ratios; indices are identities."""

    ratios: tuple
    dim: int
    sum_pow: float = field(init=False)

    def __post_init__(self):
        ratios = tuple(float(r) for r in self.ratios)
        if any(not 0.0 <= r < 1.0 for r in ratios):
            raise ValueError("ratios must lie in [0, 1)")
        object.__setattr__(self, "ratios", ratios)
        self.sum_pow = float(sum(r ** self.dim for r in ratios))


@dataclass(eq=False)
class PlacedPiece:
    index: int
    center: np.ndarray
    ratio: float
    phase: str


@dataclass(eq=False)
class DyadicPlan:
    classes: dict            # k -> list of ratio indices
    budgets: dict            # k -> F(k)
    partitions: dict         # (k, l) -> list of ratio indices
    cube_assignments: list   # (center ndarray, cube scale, (k, l))
    remainder: list          # indices parked because their class had F(k) = 0
    large_indices: list      # indices routed to the direct random phase
    kell_thresholds: dict    # k -> per-partition volume requirement
    tile_scale: float
    tiling_centers: list


@dataclass(eq=False)
class CoveringConstruction:
    pieces: list                      # PlacedPiece
    verdict: Optional[CoverageVerdict]
    plan: Optional[DyadicPlan] = None
    per_cube: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    certificate: Optional[dict] = None     # re-checkable serialized verdict
    cube_certificates: list = field(default_factory=list)


def _class_of(lam: float, n: int) -> int:
    """k with lambda * n^5 in (2^-k, 2^-(k-1)]."""
    t = lam * n ** 5
    return int(math.floor(-math.log2(t))) + 1


def dyadic_plan(seq: RatioSequence, n: int, *, body_volume: float,
                tiling_centers: Sequence, tile_scale: float,
                mode: str = MODE_DESK, multiplier: float = DESK_MULTIPLIER,
                c_partition: int = 5, c_budget: int = 6) -> DyadicPlan:
    """Group small ratios into dyadic classes, cut classes into partitions
    meeting the per-cube volume threshold, and assign partitions to a
    dyadic subdivision of the tiling cells.

    Ratios >= n^-5 are routed to the direct random phase; classes too thin
    to fill a single partition are parked in a remainder pool.
    """
    floor = n ** -5
    large, classes = [], {}
    for i, lam in enumerate(seq.ratios):
        if lam >= floor:
            large.append(i)
        elif lam > 0.0:
            classes.setdefault(_class_of(lam, n), []).append(i)
    remainder = [i for i, lam in enumerate(seq.ratios) if lam == 0.0]

    budgets, partitions, kell = {}, {}, {}
    for k in sorted(classes):
        idx = classes[k]
        cube_vol = (2.0 * 2.0 ** (-k + 1) * tile_scale) ** n
        class_vol = sum(seq.ratios[i] ** n for i in idx) * body_volume
        f_k = int(math.floor(class_vol / (rogers_factor(n, c_budget, mode, multiplier) * cube_vol)))
        budgets[k] = f_k
        if f_k == 0:
            remainder.extend(idx)
            continue
        threshold = rogers_factor(n, c_partition, mode, multiplier) * cube_vol
        kell[k] = threshold
        by_size = sorted(idx, key=lambda i: (-seq.ratios[i], i))
        bins = [[] for _ in range(f_k)]
        fills = [0.0] * f_k
        cursor = 0
        pos = 0
        while pos < len(by_size) and cursor < f_k:
            i = by_size[pos]
            bins[cursor].append(i)
            fills[cursor] += seq.ratios[i] ** n * body_volume
            pos += 1
            if fills[cursor] >= threshold:
                cursor += 1
        if cursor < f_k:
            raise CubeAssignmentDeficit(
                f"class {k}: budget {f_k} not fillable to the partition threshold")
        for j, i in enumerate(by_size[pos:]):  # leftovers round-robin
            bins[j % f_k].append(i)
        for ell, b in enumerate(bins, start=1):
            partitions[(k, ell)] = b

    # dyadic assignment of partition cubes onto the tiling cells
    queues = {k: list(range(1, budgets[k] + 1)) for k in budgets if budgets[k] > 0}
    max_depth = max(queues) if queues else 0
    assignments = []

    def assign(center: np.ndarray, depth: int):
        k = depth + 1
        if k in queues and queues[k]:
            ell = queues[k].pop(0)
            s_k = 2.0 ** (-k + 1) * tile_scale
            assignments.append((center.copy(), s_k, (k, ell)))
            return
        if k >= max_depth:
            raise CubeAssignmentDeficit(
                f"no partition cube available for a cell at depth {depth}")
        half = 2.0 ** (-k) * tile_scale  # child scale
        for offsets in np.ndindex(*(2,) * n):
            child = center + (2 * np.array(offsets) - 1) * half
            assign(child, depth + 1)

    if classes and not queues and tiling_centers:
        raise CubeAssignmentDeficit("every dyadic class fell below one partition")
    for c in tiling_centers:
        assign(np.asarray(c, dtype=float), 0)

    return DyadicPlan(
        classes=classes,
        budgets=budgets,
        partitions=partitions,
        cube_assignments=assignments,
        remainder=remainder,
        large_indices=large,
        kell_thresholds=kell,
        tile_scale=tile_scale,
        tiling_centers=[np.asarray(c, dtype=float) for c in tiling_centers],
    )


# --- covering one cube -----------------------------------------------------


def _sample_box_minus_body(side: float, body: ConvexBody, coeff: float,
                           rng: RngSpec, count: int) -> np.ndarray:
    """Uniform points in side*B_inf - coeff*K by rejection from the box."""
    V = body.vertices
    hi = side - coeff * V.min(axis=0)
    lo = -side - coeff * V.max(axis=0)
    gen = rng.generator()
    out = []
    got = 0
    tries = 0
    while got < count:
        batch = gen.uniform(lo, hi, size=(max(64, count), body.dim))
        if body.kind == "cube":
            keep = np.ones(batch.shape[0], dtype=bool)  # box - cube is a box
        else:
            keep = np.array([
                _box_reaches_body(body, (-side - x) / coeff, (side - x) / coeff)
                for x in batch
            ])
        out.append(batch[keep])
        got += int(keep.sum())
        tries += batch.shape[0]
        if tries > 200 * (count + 100):
            raise randvol.RejectionTooSlow("box-minus-body sampling stalled")
    return np.concatenate(out)[:count]


def separation_radius(pieces_body: ConvexBody, lam_min: float, shrink: float, n: int) -> float:
    """Patch separation: capped by 1/(2 n ln n), and small enough that the
    exclusion zone of one patch point stays inside its (shrunken) piece."""
    A, b = pieces_body.halfspaces
    V = pieces_body.vertices
    h_plus = np.max(V @ A.T, axis=0)
    h_minus = np.max((-V) @ A.T, axis=0)
    gamma = float(np.max((h_plus + h_minus) / b))  # K - K inside gamma * K
    usable = lam_min - shrink
    if usable <= 0:
        raise ValueError("shrink margins consumed the smallest piece")
    return min(1.0 / (2.0 * n * math.log(n)), usable / (2.0 * gamma))


def cover_cube_two_phase(side: float, pieces_body: ConvexBody, lambdas: Sequence[float],
                      rng: RngSpec, *, mode: str = MODE_DESK,
                      multiplier: float = DESK_MULTIPLIER,
                      cert_margin: float = 0.0,
                      indices: Optional[Sequence[int]] = None) -> CoveringConstruction:
    """Two-phase translative covering of side*B_inf by {lambda_i * K}.

    Phase 1 places the shortest prefix whose volume meets the 4n-variant
    factor at independent uniform positions in side*B_inf - 2K.  A
    certified grid (gauge sigma_g * K) is then probed against the prefix
    shrunken by sigma_g + cert-margin; a separated subset of the missed
    grid points receives the remaining pieces.  The returned verdict comes
    from an independent cross-body coverage certificate on the cube.
    """
    body = pieces_body
    n = body.dim
    lambdas = np.asarray(lambdas, dtype=float)
    M = lambdas.size
    if M == 0:
        raise ValueError("need at least one piece")
    if indices is None:
        indices = list(range(M))
    if side < n ** 2 - 1e-9:
        raise ValueError(f"cube side parameter {side} below n^2 = {n ** 2}")
    if lambdas.min() < 0.5 - 1e-9 or lambdas.max() > 1.0 + 1e-9:
        warnings.warn("piece ratios outside [1/2, 1]; the construction still "
                      "runs but the density premises are off", stacklevel=2)

    vol_piece = randvol.body_volume(body, rng.child(_VOL_TAG))
    cube_vol = (2.0 * side) ** n
    total = float(np.sum(lambdas ** n)) * vol_piece
    need = rogers_factor(n, 5, mode, multiplier) * cube_vol
    if total < need:
        raise ValueError(f"piece volume {total:.3g} below the required {need:.3g}")

    info = {
        "insideUnitBox": bool(np.max(np.abs(body.vertices)) <= 1.0 + 1e-9),
        "reflectionInside": bool(np.all(body.contains(-body.vertices / n))),
    }
    if not (info["insideUnitBox"] and info["reflectionInside"]):
        warnings.warn("pieces body violates the normalization premises "
                      "(K inside the unit box and -K/n inside K)", stacklevel=2)

    # phase 1: least prefix reaching the 4n-variant volume
    csum = np.cumsum(lambdas ** n) * vol_piece
    target = rogers_factor(n, 4, mode, multiplier) * cube_vol
    m_prime = int(np.searchsorted(csum, target) + 1)
    m_prime = min(m_prime, M)
    phase1_pts = np.vstack([
        _sample_box_minus_body(side, body, 2.0, rng.child(_PIECE_TAG, i), 1)
        for i in range(m_prime)
    ])
    placements = [HomothetPlacement(phase1_pts[i], lambdas[i]) for i in range(m_prime)]

    # margins: sigma_g for the marking grid, cert margin for the final net
    lam_min = float(lambdas.min())
    lam_min_patch = float(lambdas[m_prime:].min()) if m_prime < M else lam_min
    sigma_g = lam_min / 24.0
    delta_cert = max(cert_margin, lam_min / 24.0)
    shrink = sigma_g + delta_cert

    target_body = ConvexBody.cube(n, scale=side)
    tau = cover_factor(target_body, body)
    eps_cert = (delta_cert / 1.05) / tau
    c_k, r_k = body.chebyshev
    h_cert = 2.0 * (eps_cert * side) / math.sqrt(n) * (1.0 - nets.GRID_SLACK)
    side_marked = side * (1.0 + eps_cert) + h_cert / 2.0 + 1e-9

    anchor = sigma_g * c_k
    box_lo = np.full(n, -side_marked)
    box_hi = np.full(n, side_marked)

    def keep(pts, half):
        return np.all(np.abs(pts + anchor) <= side_marked + half, axis=1)

    grid_pts, h_g, _ = nets.gauge_grid(n, keep, sigma_g * r_k, anchor, box_lo, box_hi)
    covered = covered_by_union(body, placements, grid_pts, shrink=shrink)
    marked = grid_pts[~covered]

    # phase 2: separated patch points, in grid order
    sigma_d = separation_radius(body, lam_min_patch, shrink, n)
    zone = MinkowskiCombo(body, 2.0 * sigma_d, 2.0 * sigma_d)
    zone_lo, zone_hi = (2.0 * sigma_d * (body.vertices.min(axis=0) - body.vertices.max(axis=0)),
                        2.0 * sigma_d * (body.vertices.max(axis=0) - body.vertices.min(axis=0)))
    cell = np.maximum(zone_hi - zone_lo, 1e-12)
    chosen: list[np.ndarray] = []
    buckets: dict = {}
    for g in marked:
        key = tuple((g // cell).astype(int))
        blocked = False
        for off in np.ndindex(*(3,) * n):
            neigh = tuple(np.array(key) + np.array(off) - 1)
            for p in buckets.get(neigh, ()):
                if combo_contains(zone, g - p):
                    blocked = True
                    break
            if blocked:
                break
        if not blocked:
            chosen.append(g)
            buckets.setdefault(key, []).append(g)

    available = M - m_prime
    if len(chosen) > available:
        raise PatchDeficit(
            f"patch needs {len(chosen)} pieces but only {available} remain "
            f"(shortfall {len(chosen) - available})")
    for j in range(m_prime, M):
        if chosen:
            pos = chosen[(j - m_prime) % len(chosen)]
        else:
            pos = np.zeros(n)
        placements.append(HomothetPlacement(pos, lambdas[j]))

    pieces = [
        PlacedPiece(indices[i], placements[i].center, float(lambdas[i]),
                    PHASE_RANDOM if i < m_prime else PHASE_PATCH)
        for i in range(M)
    ]
    verdict = covercert.certify_cover(target_body, placements, eps_cert,
                                      pieces_body=body)
    info.update({
        "mPrime": m_prime,
        "gridPoints": int(grid_pts.shape[0]),
        "marked": int(marked.shape[0]),
        "patchPoints": len(chosen),
        "sigmaGrid": sigma_g,
        "sigmaSeparation": sigma_d,
        "certMargin": delta_cert,
        "epsilonCert": eps_cert,
    })
    certificate = covercert.verdict_to_dict(verdict, target_body, placements,
                                            pieces_body=body)
    return CoveringConstruction(pieces=pieces, verdict=verdict, info=info,
                                certificate=certificate)


# --- the end-to-end pipeline ----------------------------------------------


def _normalize_body(body: ConvexBody, n: int):
    """Heuristic stand-in for John positioning: translate the vertex
    centroid to the origin and scale the bounding box into n^1.5 * B_inf.
    Returns (normalized body, translation, scale, flags)."""
    V = body.vertices
    t = V.mean(axis=0)
    extent = float(np.max(np.abs(V - t)))
    s = n ** 1.5 / extent
    if np.allclose(t, 0.0) and extent <= n ** 1.5 + 1e-9:
        lower_ok = body.contains_origin_interior and cube_inclusion_factor(body) >= 1.0 - 1e-9
        return body, np.zeros(n), 1.0, {"applied": False, "unitBoxInside": lower_ok}
    normalized = ConvexBody.from_vertices((V - t) * s)
    lower_ok = normalized.contains_origin_interior and \
        cube_inclusion_factor(normalized) >= 1.0 - 1e-9
    if not lower_ok:
        warnings.warn("heuristic normalization could not fit the unit box "
                      "inside the body; proceeding, coverage is still certified",
                      stacklevel=2)
    return normalized, t, s, {"applied": True, "unitBoxInside": lower_ok}


def schedule_covering(body: ConvexBody, seq: RatioSequence, rng: RngSpec, *,
                   mode: str = MODE_DESK, multiplier: float = DESK_MULTIPLIER,
                   eps_final: Optional[float] = None) -> CoveringConstruction:
    """Schedule the whole ratio sequence into a certified covering of K.

    Branch A: when the large ratios alone carry the 4n-variant volume, they
    are placed by the direct random phase.  Branch B: the body is
    normalized toward the cube sandwich, tiled by cubes of scale n^-1.5,
    and each dyadic partition covers its assigned cube via the two-phase
    construction, rescaled so the pieces land in [1/2, 1].
    """
    n = body.dim
    if seq.dim != n:
        raise ValueError("sequence dimension does not match the body")
    vol_k = randvol.body_volume(body, rng.child(_VOL_TAG, 1))
    ratio_kk = randvol.difference_volume_ratio(body, rng.child(_VOL_TAG, 2))[0]
    vol_kk = ratio_kk * vol_k

    floor = n ** -5
    large = [i for i, lam in enumerate(seq.ratios) if lam >= floor]
    large_mass = sum(seq.ratios[i] ** n for i in large) * vol_k
    branch_a = large_mass >= rogers_factor(n, 4, mode, multiplier) * vol_kk

    if branch_a:
        lams = [seq.ratios[i] for i in large]
        eps = eps_final if eps_final is not None else \
            min(max(min(lams) / 10.0, 1e-4), 0.25)
        placements = []
        for i in large:
            lam = seq.ratios[i]
            center = sample_uniform(MinkowskiCombo(body, 1.0, lam),
                                    rng.child(_PIECE_TAG, i), 1)[0]
            placements.append(HomothetPlacement(center, lam))
        verdict = covercert.certify_cover(body, placements, eps)
        pieces = [PlacedPiece(i, pl.center, pl.ratio, PHASE_PROP1)
                  for i, pl in zip(large, placements)]
        return CoveringConstruction(
            pieces=pieces, verdict=verdict,
            certificate=covercert.verdict_to_dict(verdict, body, placements),
            info={"branch": "A", "largeMass": large_mass, "epsilonFinal": eps,
                  "volumeRatio": ratio_kk, "mode": mode, "multiplier": multiplier})

    # --- branch B ---
    normalized, t_shift, s_scale, norm_flags = _normalize_body(body, n)
    vol_norm = vol_k * s_scale ** n
    small_pos = [r for r in seq.ratios if 0.0 < r < floor]
    if not small_pos:
        raise ValueError("branch B needs small ratios but none are present")
    eps_f = eps_final if eps_final is not None else \
        min(max(min(small_pos) / 10.0, 1e-4), 0.25)

    tile_scale = n ** -1.5
    c_f, r_f = normalized.chebyshev
    h_f = 2.0 * eps_f * r_f / math.sqrt(n) * (1.0 - nets.GRID_SLACK)
    margin = h_f / 2.0 + eps_f * float(np.max(np.abs(normalized.vertices))) + 1e-9
    lo, hi = normalized.vertex_bbox
    step = 2.0 * tile_scale
    j_lo = np.floor((lo - margin) / step - 0.5).astype(int)
    j_hi = np.ceil((hi + margin) / step + 0.5).astype(int)
    tiling = []
    for jj in np.ndindex(*(j_hi - j_lo + 1)):
        center = (np.array(jj) + j_lo) * step
        if _box_reaches_body(normalized, center - tile_scale - margin,
                             center + tile_scale + margin):
            tiling.append(center)

    plan = dyadic_plan(seq, n, body_volume=vol_norm, tiling_centers=tiling,
                       tile_scale=tile_scale, mode=mode, multiplier=multiplier)

    pieces_small = normalized.scaled(tile_scale)
    pieces: list[PlacedPiece] = []
    per_cube = []
    cube_certificates = []
    for cube_no, (center, s_k, key) in enumerate(plan.cube_assignments):
        k, _ = key
        idx = plan.partitions[key]
        rescale = n ** 5 * 2.0 ** (k - 1)
        lams = [seq.ratios[i] * rescale for i in idx]
        sub = cover_cube_two_phase(
            float(n ** 2), pieces_small, lams, rng.child(_CUBE_TAG, cube_no),
            mode=mode, multiplier=multiplier,
            cert_margin=eps_f * rescale * 1.05, indices=idx)
        back = s_k / n ** 2
        for piece in sub.pieces:
            pieces.append(PlacedPiece(piece.index, center + piece.center * back,
                                      seq.ratios[piece.index], piece.phase))
        per_cube.append({"cube": cube_no, "class": key, "center": center.tolist(),
                         "scale": s_k, "status": sub.verdict.status,
                         "info": sub.info})
        cube_certificates.append(sub.certificate)

    placements = [HomothetPlacement(p.center, p.ratio) for p in pieces]
    verdict = covercert.certify_cover(normalized, placements, eps_f)
    certificate = covercert.verdict_to_dict(verdict, normalized, placements)

    if norm_flags["applied"]:
        pieces = [
            PlacedPiece(p.index, p.center / s_scale + (1.0 - p.ratio) * t_shift,
                        p.ratio, p.phase)
            for p in pieces
        ]
    return CoveringConstruction(
        pieces=pieces, verdict=verdict, plan=plan, per_cube=per_cube,
        certificate=certificate, cube_certificates=cube_certificates,
        info={"branch": "B", "largeMass": large_mass, "epsilonFinal": eps_f,
              "volumeRatio": ratio_kk, "normalization": norm_flags,
              "tilingCells": len(tiling), "mode": mode, "multiplier": multiplier})
