"""Charge-fluxon interaction: field momentum and the overlap Lagrangian.

Four equivalent routes are provided:

* ``field_momentum_closed`` -- Pi = e Phi / (2 pi c rho) phi-hat, the
  closed form for a point tube, with phi-hat = z-hat x (r - R)/rho
  (counterclockwise in the plane, B_z > 0 along +z).
* ``field_momentum_numeric`` -- direct 3-D quadrature of
  (1/4 pi c) E x B over a truncated cylinder around a finite-width tube.
* ``field_momentum_distributed`` -- the cross-section sum
  (e / 2 pi c) sum_i B_i dA_i phi-hat_i / |r - R_i| for sampled flux.
* ``vector_potential_symmetric`` -- A = Phi/(2 pi rho) phi-hat, with
  (e/c) A identical to the closed-form Pi.

``interaction_lagrangian`` evaluates L = (v_charge - v_fluxon) . Pi either
from the closed form or as the literal field-overlap integral of
(B_e . B_f - E_e . E_f)/(4 pi).

Quadrature layout: cylindrical coordinates on the tube axis.  The radial
direction covers the tube support, the angle uses the periodic trapezoid
rule, and the axial direction is Gauss-Legendre after z = z_s sinh(t),
which concentrates nodes where the Coulomb field against the tube is
largest.  Truncating |z| at Z leaves a relative deficit of about
rho^2/(2 Z^2) (from int dz rho/(rho^2+z^2)^(3/2) = 2 rho . Z/sqrt(rho^2+Z^2)),
which is reported as the truncation estimate alongside each result.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .em_kernel import (
    CONSTANTS,
    ChargeState,
    FluxonState,
    PhysicalConstants,
    TubeProfile,
    Vec3,
    tube_bz_profile,
)
from .errors import ConvergenceError, SingularityError

__all__ = [
    "QuadratureRule",
    "QuadratureSpec",
    "FluxDistribution",
    "FLUX_CSV_HEADER",
    "field_momentum_closed",
    "field_momentum_numeric",
    "field_momentum_estimate",
    "PiEstimate",
    "field_momentum_distributed",
    "LagrangianMethod",
    "LagrangianResult",
    "interaction_lagrangian",
    "vector_potential_symmetric",
    "vector_potential_symmetric_many",
    "default_quadrature_spec",
    "PointFluxonPi",
    "DistributedPi",
]


class QuadratureRule(str, Enum):
    GAUSS_LEGENDRE = "GaussLegendre"
    ADAPTIVE_SIMPSON = "AdaptiveSimpson"


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretization of the overlap integral.

    inner_cutoff excludes a ball around the charge (the integrand is
    integrable but sharply peaked there; the omitted mass is O(cutoff^2) and
    enters the reported truncation estimate).  outer_radius and z_extent
    truncate the cylinder.
    """

    inner_cutoff: float  # cm
    outer_radius: float  # cm
    z_extent: float  # cm
    points_per_dim: int = 16
    rule: QuadratureRule = QuadratureRule.GAUSS_LEGENDRE

    def __post_init__(self):
        if not (0.0 <= self.inner_cutoff < self.outer_radius):
            raise ValueError("require 0 <= inner_cutoff < outer_radius")
        if self.z_extent <= 0.0:
            raise ValueError("z_extent must be positive")
        if self.points_per_dim < 8:
            raise ValueError("points_per_dim must be >= 8")


def default_quadrature_spec(charge: ChargeState, fluxon: FluxonState, points_per_dim: int = 16) -> QuadratureSpec:
    """Defaults: cutoff = tube_radius/100, truncations = 100 x separation."""
    d = (charge.position - fluxon.position).planar_norm()
    return QuadratureSpec(
        inner_cutoff=fluxon.tube_radius / 100.0,
        outer_radius=100.0 * d,
        z_extent=100.0 * d,
        points_per_dim=points_per_dim,
    )


FLUX_CSV_HEADER = ["x_cm", "y_cm", "Bz_G", "area_cm2"]


class FluxDistribution:
    """Discretized flux cross-section: sample positions, B_z, area weights.

    The total flux is stored redundantly and checked against
    sum(B_z * area) on construction.
    """

    def __init__(self, positions, bz, areas, flux: float | None = None):
        self.positions = np.atleast_2d(np.asarray(positions, dtype=float))
        if self.positions.shape[1] == 2:
            self.positions = np.column_stack([self.positions, np.zeros(len(self.positions))])
        self.bz = np.asarray(bz, dtype=float)
        self.areas = np.asarray(areas, dtype=float)
        if not (len(self.positions) == len(self.bz) == len(self.areas)):
            raise ValueError("positions, bz, areas must have equal lengths")
        if np.any(self.areas <= 0.0):
            raise ValueError("all sample areas must be positive")
        total = float(np.sum(self.bz * self.areas))
        if flux is None:
            flux = total
        elif abs(total - flux) > 1e-9 * max(abs(flux), np.sum(np.abs(self.bz) * self.areas), 1e-300):
            raise ValueError(f"stored flux {flux:g} != sum(Bz*area) = {total:g}")
        self.flux = flux

    def __len__(self) -> int:
        return len(self.bz)

    @property
    def samples(self) -> list[tuple[Vec3, float, float]]:
        return [
            (Vec3.from_array(p), float(b), float(a))
            for p, b, a in zip(self.positions, self.bz, self.areas)
        ]

    @classmethod
    def uniform_disk(cls, center: Vec3, radius: float, flux: float, n_samples: int) -> "FluxDistribution":
        """Equal-area sunflower sampling of a uniform-B disk."""
        i = np.arange(n_samples)
        r = radius * np.sqrt((i + 0.5) / n_samples)
        th = i * (math.pi * (3.0 - math.sqrt(5.0)))
        pos = np.column_stack([center.x + r * np.cos(th), center.y + r * np.sin(th)])
        area = math.pi * radius**2 / n_samples
        b = flux / (math.pi * radius**2)
        return cls(pos, np.full(n_samples, b), np.full(n_samples, area), flux=flux)

    @classmethod
    def from_csv(cls, path) -> "FluxDistribution":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != FLUX_CSV_HEADER:
                raise ValueError(
                    f"flux CSV must have header {','.join(FLUX_CSV_HEADER)}, got {reader.fieldnames}"
                )
            rows = [(float(r["x_cm"]), float(r["y_cm"]), float(r["Bz_G"]), float(r["area_cm2"])) for r in reader]
        if not rows:
            raise ValueError("flux CSV has no samples")
        arr = np.array(rows)
        return cls(arr[:, :2], arr[:, 2], arr[:, 3])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(FLUX_CSV_HEADER)
            for p, b, a in zip(self.positions, self.bz, self.areas):
                writer.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(b)), repr(float(a))])


def field_momentum_closed(
    e: float, flux: float, r: Vec3, R: Vec3, constants: PhysicalConstants = CONSTANTS
) -> Vec3:
    """Point-tube field momentum e Phi/(2 pi c |r-R|) phi-hat [g cm/s]."""
    d = r - R
    rho2 = d.x * d.x + d.y * d.y
    if rho2 == 0.0:
        raise SingularityError("field momentum undefined at coincident charge and fluxon")
    k = e * flux / (2.0 * math.pi * constants.c)
    return Vec3(-k * d.y / rho2, k * d.x / rho2, 0.0)


def vector_potential_symmetric(
    flux: float, R: Vec3, x: Vec3
) -> Vec3:
    """A = Phi/(2 pi |x - R|) phi-hat [G cm]; (e/c) A equals the closed-form Pi."""
    d = x - R
    rho2 = d.x * d.x + d.y * d.y
    if rho2 == 0.0:
        raise SingularityError("vector potential undefined on the flux axis")
    k = flux / (2.0 * math.pi)
    return Vec3(-k * d.y / rho2, k * d.x / rho2, 0.0)


def vector_potential_symmetric_many(flux: float, R: Vec3, points: np.ndarray) -> np.ndarray:
    """Vectorized symmetric-gauge A at an (N, >=2) array of points."""
    d = points[:, :2] - np.array([R.x, R.y])[None, :]
    rho2 = np.einsum("ij,ij->i", d, d)
    if np.any(rho2 == 0.0):
        raise SingularityError("vector potential undefined on the flux axis")
    k = flux / (2.0 * math.pi)
    out = np.zeros((len(points), 3))
    out[:, 0] = -k * d[:, 1] / rho2
    out[:, 1] = k * d[:, 0] / rho2
    return out


def field_momentum_distributed(
    e: float, dist: FluxDistribution, r: Vec3, constants: PhysicalConstants = CONSTANTS
) -> Vec3:
    """Weighted sum of point-tube momenta over the flux samples."""
    d = np.array([r.x, r.y]) - dist.positions[:, :2]
    rho2 = np.einsum("ij,ij->i", d, d)
    bad = np.nonzero(rho2 == 0.0)[0]
    if bad.size:
        raise SingularityError(f"charge position coincides with flux sample index {bad[0]}")
    w = e * dist.bz * dist.areas / (2.0 * math.pi * constants.c * rho2)
    return Vec3(float(-np.sum(w * d[:, 1])), float(np.sum(w * d[:, 0])), 0.0)


# --------------------------------------------------------------------------
# numeric overlap quadrature
# --------------------------------------------------------------------------

def _axis_rule(n: int, a: float, b: float, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for one axis on [a, b]."""
    if rule is QuadratureRule.GAUSS_LEGENDRE:
        x, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (b - a)
        return a + half * (x + 1.0), half * w
    # composite Simpson; force an even interval count
    if n % 2 == 0:
        n += 1
    x = np.linspace(a, b, n)
    h = (b - a) / (n - 1)
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * h / 3.0


@dataclass(frozen=True)
class _Grid:
    points: np.ndarray  # (N, 3)
    weights: np.ndarray  # (N,), zero inside the exclusion ball
    bz: np.ndarray  # (N,) tube field at each node
    truncation_rel: float  # estimated relative bias from domain truncation


def _build_grid(charge: ChargeState, fluxon: FluxonState, quad: QuadratureSpec) -> _Grid:
    if fluxon.profile is TubeProfile.POINT_LIMIT:
        raise ValueError("numeric overlap requires a finite tube profile")
    sep = (charge.position - fluxon.position).planar_norm()
    if sep <= fluxon.tube_radius / 10.0:
        raise SingularityError(
            "charge must sit off the tube axis by more than tube_radius/10 "
            f"(separation {sep:.3e} cm, tube radius {fluxon.tube_radius:.3e} cm)"
        )
    ppd = quad.points_per_dim

    if fluxon.profile is TubeProfile.UNIFORM_DISK:
        r_cap = min(fluxon.tube_radius, quad.outer_radius)
        radial_tail = max(0.0, 1.0 - (r_cap / fluxon.tube_radius) ** 2)
    else:
        r_cap = min(12.0 * fluxon.tube_radius, quad.outer_radius)
        radial_tail = math.exp(-0.5 * (r_cap / fluxon.tube_radius) ** 2)

    r_nodes, r_w = _axis_rule(3 * ppd, 0.0, r_cap, quad.rule)
    th_nodes = np.arange(4 * ppd) * (2.0 * math.pi / (4 * ppd))
    th_w = np.full(4 * ppd, 2.0 * math.pi / (4 * ppd))
    z_scale = max(sep, fluxon.tube_radius)
    t_max = math.asinh(quad.z_extent / z_scale)
    t_lo, w_lo = _axis_rule(3 * ppd // 2, -t_max, 0.0, quad.rule)
    t_hi, w_hi = _axis_rule(3 * ppd // 2, 0.0, t_max, quad.rule)
    t_nodes = np.concatenate([t_lo, t_hi])
    t_w = np.concatenate([w_lo, w_hi])
    z_nodes = z_scale * np.sinh(t_nodes)
    z_jac = z_scale * np.cosh(t_nodes)

    R, TH, T = np.meshgrid(r_nodes, th_nodes, z_nodes, indexing="ij")
    WR, WTH, WT = np.meshgrid(r_w, th_w, t_w * z_jac, indexing="ij")
    x = fluxon.position.x + R * np.cos(TH)
    y = fluxon.position.y + R * np.sin(TH)
    z = T
    pts = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    w = (WR * R * WTH * WT).ravel()  # cylindrical jacobian rho included

    bz_line = tube_bz_profile(fluxon.profile, fluxon.flux, fluxon.tube_radius, r_nodes)
    bz = np.broadcast_to(bz_line[:, None, None], R.shape).ravel().copy()

    if quad.inner_cutoff > 0.0:
        dc = pts - charge.position.as_array()[None, :]
        inside = np.einsum("ij,ij->i", dc, dc) < quad.inner_cutoff**2
        w = np.where(inside, 0.0, w)

    trunc = sep**2 / (2.0 * quad.z_extent**2) + radial_tail
    # excluded-ball estimate: field product is ~ e B(charge)/(c) over O(cutoff^2)
    if quad.inner_cutoff > 0.0:
        b_at_charge = float(
            tube_bz_profile(fluxon.profile, fluxon.flux, fluxon.tube_radius, np.array([sep]))[0]
        )
        scale = abs(charge.charge * fluxon.flux) / (2.0 * math.pi * sep) + 1e-300
        trunc += abs(charge.charge * b_at_charge) * quad.inner_cutoff**2 / scale
    return _Grid(points=pts, weights=w, bz=bz, truncation_rel=trunc)


def _pi_on_grid(charge: ChargeState, grid: _Grid, constants: PhysicalConstants) -> np.ndarray:
    d = grid.points - charge.position.as_array()[None, :]
    r2 = np.einsum("ij,ij->i", d, d)
    r2 = np.where(grid.weights == 0.0, 1.0, r2)  # excluded nodes: any value, weight 0
    ew = charge.charge / r2**1.5 * grid.weights * grid.bz / (4.0 * math.pi * constants.c)
    # E x (B_z z-hat) = (E_y B_z, -E_x B_z, 0)
    return np.array([np.sum(ew * d[:, 1]), -np.sum(ew * d[:, 0]), 0.0])


def _overlap_on_grid(
    charge: ChargeState, fluxon: FluxonState, grid: _Grid, constants: PhysicalConstants
) -> float:
    d = grid.points - charge.position.as_array()[None, :]
    r2 = np.einsum("ij,ij->i", d, d)
    r2 = np.where(grid.weights == 0.0, 1.0, r2)
    E_e = charge.charge * d / (r2 ** 1.5)[:, None]
    B_f = np.zeros_like(E_e)
    B_f[:, 2] = grid.bz
    vc = charge.velocity.as_array()
    vf = fluxon.velocity.as_array()
    B_e = np.cross(np.broadcast_to(vc, E_e.shape), E_e) / constants.c
    E_f = -np.cross(np.broadcast_to(vf, B_f.shape), B_f) / constants.c
    dens = (np.einsum("ij,ij->i", B_e, B_f) - np.einsum("ij,ij->i", E_e, E_f)) / (4.0 * math.pi)
    return float(np.sum(dens * grid.weights))


def _estimate_levels(ppd: int) -> tuple[int, int]:
    """Two resolutions for the error estimate; the fine one is returned.
    Halve when possible, otherwise refine upward past the ppd >= 8 floor."""
    if ppd // 2 >= 8:
        return ppd // 2, ppd
    return ppd, 2 * ppd


@dataclass(frozen=True)
class PiEstimate:
    """Numeric field momentum with its accuracy accounting."""

    value: Vec3
    quadrature_error: float  # |fine - coarse|, absolute
    truncation_error: float  # estimated |bias| from domain truncation, absolute


def field_momentum_estimate(
    charge: ChargeState,
    fluxon: FluxonState,
    quad: QuadratureSpec | None = None,
    constants: PhysicalConstants = CONSTANTS,
) -> PiEstimate:
    """3-D quadrature of (1/4 pi c) E x B with a two-level error estimate."""
    if quad is None:
        quad = default_quadrature_spec(charge, fluxon)
    n_lo, n_hi = _estimate_levels(quad.points_per_dim)
    fine_spec = QuadratureSpec(
        quad.inner_cutoff, quad.outer_radius, quad.z_extent, n_hi, quad.rule,
    )
    fine = _pi_on_grid(charge, _build_grid(charge, fluxon, fine_spec), constants)
    coarse_spec = QuadratureSpec(
        quad.inner_cutoff, quad.outer_radius, quad.z_extent, n_lo, quad.rule,
    )
    grid_c = _build_grid(charge, fluxon, coarse_spec)
    coarse = _pi_on_grid(charge, grid_c, constants)
    qerr = float(np.linalg.norm(fine - coarse))
    mag = float(np.linalg.norm(fine))
    trunc = grid_c.truncation_rel * mag
    if qerr > 0.25 * mag and mag > 0.0:
        if quad.rule is QuadratureRule.ADAPTIVE_SIMPSON and quad.points_per_dim < 256:
            return field_momentum_estimate(
                charge, fluxon, QuadratureSpec(
                    quad.inner_cutoff, quad.outer_radius, quad.z_extent,
                    2 * quad.points_per_dim, quad.rule), constants,
            )
        raise ConvergenceError(
            "field-momentum quadrature did not stabilize; tighten the spec "
            f"(value {mag:.3e}, truncation estimate {trunc:.3e})",
            estimate=qerr,
        )
    return PiEstimate(Vec3.from_array(fine), qerr, trunc)


def field_momentum_numeric(
    charge: ChargeState,
    fluxon: FluxonState,
    quad: QuadratureSpec | None = None,
    constants: PhysicalConstants = CONSTANTS,
) -> Vec3:
    return field_momentum_estimate(charge, fluxon, quad, constants).value


class LagrangianMethod(str, Enum):
    CLOSED_FORM = "ClosedForm"
    NUMERIC_OVERLAP = "NumericOverlap"


@dataclass(frozen=True)
class LagrangianResult:
    value: float  # erg
    tolerance: float  # absolute accuracy accompanying the value (0 = exact)
    method: LagrangianMethod


def interaction_lagrangian(
    charge: ChargeState,
    fluxon: FluxonState,
    method: LagrangianMethod = LagrangianMethod.CLOSED_FORM,
    quad: QuadratureSpec | None = None,
    constants: PhysicalConstants = CONSTANTS,
) -> LagrangianResult:
    """L_int = (v_charge - v_fluxon) . Pi, by closed form or field overlap."""
    if method is LagrangianMethod.CLOSED_FORM:
        pi = field_momentum_closed(charge.charge, fluxon.flux, charge.position, fluxon.position, constants)
        value = (charge.velocity - fluxon.velocity).dot(pi)
        return LagrangianResult(value, 0.0, method)

    if quad is None:
        quad = default_quadrature_spec(charge, fluxon)
    n_lo, n_hi = _estimate_levels(quad.points_per_dim)
    fine_spec = QuadratureSpec(
        quad.inner_cutoff, quad.outer_radius, quad.z_extent, n_hi, quad.rule,
    )
    fine = _overlap_on_grid(charge, fluxon, _build_grid(charge, fluxon, fine_spec), constants)
    coarse_spec = QuadratureSpec(
        quad.inner_cutoff, quad.outer_radius, quad.z_extent, n_lo, quad.rule,
    )
    grid_c = _build_grid(charge, fluxon, coarse_spec)
    coarse = _overlap_on_grid(charge, fluxon, grid_c, constants)
    qerr = abs(fine - coarse)
    tol = qerr + 1.25 * grid_c.truncation_rel * abs(fine)  # 1.25: safety on the bias bound
    rel_speed = (charge.velocity - fluxon.velocity).norm()
    scale = abs(
        rel_speed * charge.charge * fluxon.flux
        / (2.0 * math.pi * constants.c * max((charge.position - fluxon.position).planar_norm(), 1e-300))
    )
    if qerr > 0.25 * max(abs(fine), scale) and scale > 0.0:
        raise ConvergenceError(
            "overlap-Lagrangian quadrature did not stabilize; tighten the spec",
            estimate=qerr,
        )
    return LagrangianResult(fine, tol, method)


# --------------------------------------------------------------------------
# Pi(x) providers for phase integrals
# --------------------------------------------------------------------------

class PointFluxonPi:
    """Pi(x) of a point fluxon at a fixed position, for loop integrals."""

    def __init__(self, e: float, flux: float, fluxon_position: Vec3,
                 constants: PhysicalConstants = CONSTANTS, exclusion_cm: float = 0.0):
        self.e = e
        self.flux = flux
        self.position = fluxon_position
        self.constants = constants
        self.singular_points = [fluxon_position]
        self.exclusion_cm = exclusion_cm

    def __call__(self, x: Vec3) -> Vec3:
        return field_momentum_closed(self.e, self.flux, x, self.position, self.constants)

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        d = points[:, :2] - np.array([self.position.x, self.position.y])[None, :]
        rho2 = np.einsum("ij,ij->i", d, d)
        if np.any(rho2 == 0.0):
            raise SingularityError("loop point on the fluxon axis")
        k = self.e * self.flux / (2.0 * math.pi * self.constants.c)
        out = np.zeros((len(points), 3))
        out[:, 0] = -k * d[:, 1] / rho2
        out[:, 1] = k * d[:, 0] / rho2
        return out


class DistributedPi:
    """Pi(x) of a sampled flux distribution, vectorized over loop points."""

    def __init__(self, e: float, dist: FluxDistribution,
                 constants: PhysicalConstants = CONSTANTS, exclusion_cm: float = 0.0):
        self.e = e
        self.dist = dist
        self.constants = constants
        self.singular_points = [Vec3.from_array(p) for p in dist.positions]
        self.exclusion_cm = exclusion_cm

    def __call__(self, x: Vec3) -> Vec3:
        return field_momentum_distributed(self.e, self.dist, x, self.constants)

    def evaluate_many(self, points: np.ndarray, chunk: int = 256) -> np.ndarray:
        out = np.zeros((len(points), 3))
        src = self.dist.positions[:, :2]
        coef = self.e * self.dist.bz * self.dist.areas / (2.0 * math.pi * self.constants.c)
        for lo in range(0, len(points), chunk):
            p = points[lo:lo + chunk, :2]
            d = p[:, None, :] - src[None, :, :]  # (n, S, 2)
            rho2 = np.einsum("nsj,nsj->ns", d, d)
            if np.any(rho2 == 0.0):
                raise SingularityError("loop point coincides with a flux sample")
            w = coef[None, :] / rho2
            out[lo:lo + chunk, 0] = -np.sum(w * d[:, :, 1], axis=1)
            out[lo:lo + chunk, 1] = np.sum(w * d[:, :, 0], axis=1)
        return out
