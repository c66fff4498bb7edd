"""Topological phase evaluation: loop integrals of the field momentum.

A closed loop of the charge around flux picks up the phase
(1/hbar) closed-integral Pi . dr, which for a point tube equals
winding x e Phi/(hbar c).  One odd superconducting flux quantum hc/2e
gives a phase of exactly pi.

Loops are polygons; smooth curves are passed in as dense polygons.  The
line quadrature is composite Gauss-Legendre per edge with the per-edge
sample count doubled until two successive estimates agree to 1e-8
relative, refusing after 20 doublings.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .em_kernel import CONSTANTS, PhysicalConstants, Vec3
from .errors import ConvergenceError, SingularityError, WindingAmbiguityError
from .interaction import FluxDistribution

__all__ = [
    "LoopPath",
    "LOOP_CSV_HEADER",
    "ab_phase",
    "winding_number",
    "winding_numbers",
    "enclosed_flux",
    "fringe_shift",
]

LOOP_CSV_HEADER = ["x_cm", "y_cm"]


@dataclass(frozen=True)
class LoopPath:
    """Closed planar polygon; the edge from the last vertex back to the
    first is implicit (the first vertex is not repeated in storage)."""

    vertices: tuple[Vec3, ...]
    closed: bool = True
    refinement: int = 8  # initial quadrature samples per edge

    def __post_init__(self):
        verts = tuple(self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ValueError("a loop needs at least 3 vertices")
        if self.refinement < 1:
            raise ValueError("refinement must be >= 1")
        pts = self.as_array()
        nxt = np.roll(pts, -1, axis=0)
        if np.any(np.all(pts == nxt, axis=1)):
            raise ValueError("consecutive loop vertices must be distinct "
                             "(do not repeat the first vertex at the end)")

    def as_array(self) -> np.ndarray:
        return np.array([[v.x, v.y] for v in self.vertices])

    @classmethod
    def regular_polygon(cls, center: Vec3, radius: float, n: int = 256,
                        ccw: bool = True, refinement: int = 8) -> "LoopPath":
        th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        if not ccw:
            th = -th
        verts = tuple(Vec3(center.x + radius * math.cos(t), center.y + radius * math.sin(t)) for t in th)
        return cls(verts, closed=True, refinement=refinement)

    @classmethod
    def from_csv(cls, path, refinement: int = 8) -> "LoopPath":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != LOOP_CSV_HEADER:
                raise ValueError(f"loop CSV must have header {','.join(LOOP_CSV_HEADER)}, got {reader.fieldnames}")
            verts = tuple(Vec3(float(r["x_cm"]), float(r["y_cm"])) for r in reader)
        return cls(verts, closed=True, refinement=refinement)


def _edges(loop: LoopPath) -> tuple[np.ndarray, np.ndarray]:
    a = loop.as_array()
    return a, np.roll(a, -1, axis=0)


def _segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance of each point to each segment; shape (P, E)."""
    ab = b - a  # (E, 2)
    ap = points[:, None, :] - a[None, :, :]  # (P, E, 2)
    denom = np.einsum("ej,ej->e", ab, ab)
    t = np.clip(np.einsum("pej,ej->pe", ap, ab) / denom[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = points[:, None, :] - closest
    return np.sqrt(np.einsum("pej,pej->pe", d, d))


def winding_numbers(loop: LoopPath, points: np.ndarray) -> np.ndarray:
    """Signed winding numbers of the loop about each (N, 2) query point."""
    a, b = _edges(loop)
    scale = float(np.max(np.abs(np.concatenate([a.ravel(), points.ravel()]))) or 1.0)
    dmin = _segment_distances(points, a, b)
    on_edge = np.nonzero(np.min(dmin, axis=1) <= 1e-12 * scale)[0]
    if on_edge.size:
        raise WindingAmbiguityError(f"query point index {on_edge[0]} lies on the loop")
    u = a[None, :, :] - points[:, None, :]
    v = b[None, :, :] - points[:, None, :]
    cross = u[:, :, 0] * v[:, :, 1] - u[:, :, 1] * v[:, :, 0]
    dot = np.einsum("pej,pej->pe", u, v)
    total = np.sum(np.arctan2(cross, dot), axis=1) / (2.0 * math.pi)
    return np.rint(total).astype(int)


def winding_number(loop: LoopPath, point: Vec3) -> int:
    """Signed number of times the loop encircles the point (CCW positive)."""
    return int(winding_numbers(loop, np.array([[point.x, point.y]]))[0])


def _check_path_clearance(loop: LoopPath, pi_field) -> None:
    sing = getattr(pi_field, "singular_points", None)
    if not sing:
        return
    excl = float(getattr(pi_field, "exclusion_cm", 0.0))
    a, b = _edges(loop)
    pts = np.array([[p.x, p.y] for p in sing])
    dmin = float(np.min(_segment_distances(pts, a, b)))
    if dmin <= excl:
        raise SingularityError(
            f"loop passes within the singular exclusion ({dmin:.3e} <= {excl:.3e} cm) of a flux sample"
        )


def _line_integral(loop: LoopPath, pi_field, n_per_edge: int) -> tuple[float, float]:
    """(integral of Pi . dr, integral of |Pi . t| |dr|) at fixed sampling."""
    a, b = _edges(loop)
    x, w = np.polynomial.legendre.leggauss(n_per_edge)
    t = 0.5 * (x + 1.0)  # nodes in (0, 1)
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]  # (E, n, 2)
    pts3 = np.column_stack([pts.reshape(-1, 2), np.zeros(pts.shape[0] * pts.shape[1])])
    if hasattr(pi_field, "evaluate_many"):
        pi = pi_field.evaluate_many(pts3)
    else:
        pi = np.empty((len(pts3), 3))
        for i, p in enumerate(pts3):
            q = pi_field(Vec3(float(p[0]), float(p[1]), 0.0))
            pi[i] = (q.x, q.y, q.z)
    tang = (b - a)  # edge vector carries |dr|; GL weights scaled by 1/2
    dots = pi.reshape(len(a), n_per_edge, 3)[:, :, :2]
    proj = np.einsum("enj,ej->en", dots, tang)
    integral = float(np.sum(proj * (0.5 * w)[None, :]))
    l1 = float(np.sum(np.abs(proj) * (0.5 * w)[None, :]))
    return integral, l1


def ab_phase(
    loop: LoopPath,
    pi_field,
    constants: PhysicalConstants = CONSTANTS,
    rel_tol: float = 1e-8,
    max_doublings: int = 20,
) -> float:
    """Loop integral of Pi divided by hbar [radians].

    `pi_field` is any callable Vec3 -> Vec3; objects may expose
    `evaluate_many(points)` for vectorized sampling and
    `singular_points`/`exclusion_cm` for path-clearance checking.
    """
    if not loop.closed:
        raise ValueError("phase requires a closed loop")
    _check_path_clearance(loop, pi_field)
    n = max(2, loop.refinement)
    prev, _ = _line_integral(loop, pi_field, n)
    for _ in range(max_doublings):
        n *= 2
        cur, l1 = _line_integral(loop, pi_field, n)
        tol = rel_tol * max(abs(cur), 1e-3 * l1)
        if abs(cur - prev) <= tol:
            return cur / constants.hbar
        prev = cur
    raise ConvergenceError(
        f"loop quadrature did not converge after {max_doublings} doublings",
        estimate=abs(cur - prev) / constants.hbar,
    )


def enclosed_flux(loop: LoopPath, dist: FluxDistribution) -> float:
    """Stokes-style oracle: sum of winding(sample) x B_z x area [Mx]."""
    if not loop.closed:
        raise ValueError("enclosed flux requires a closed loop")
    try:
        w = winding_numbers(loop, dist.positions[:, :2])
    except WindingAmbiguityError as err:
        raise WindingAmbiguityError(f"flux sample on the loop: {err}") from err
    return float(np.sum(w * dist.bz * dist.areas))


def fringe_shift(phase: float) -> float:
    """Interferometer readout: phase/(2 pi) reduced to [0, 1)."""
    return (phase / (2.0 * math.pi)) % 1.0
