"""Field kernels for moving point charges and finite-width flux tubes.

Everything in the core library is Gaussian-CGS: lengths in cm, time in s,
charge in statC, E in statV/cm, B in G, energy in erg.  In these units the
quasi-static field of a point charge is E = e r/r^3, a moving charge carries
B = (1/c) v x E, and a moving flux tube carries E = -(1/c) V x B.  The
Lorentz-scalar overlap density of two field samples is
(B1.B2 - E1.E2)/(4 pi), which equals (1/8 pi) F1_{mu nu} F2^{mu nu}.

Planar (two-dimensional) problems are embedded at z = 0 with flux tubes
running along +z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidBoostError, SingularityError

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "Vec3",
    "TubeProfile",
    "ChargeState",
    "FluxonState",
    "FieldSample",
    "charge_fields",
    "fluxon_fields",
    "scalar_density",
    "boost_fields",
    "coulomb_e_grid",
    "tube_bz_profile",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """Pinned constants table (Gaussian-CGS).

    `hbar` defaults to h/(2 pi) computed from the stored h so that the
    identity e * (hc/2e) / (hbar c) = pi holds to machine precision;
    `flux_quantum` is always computed as h c / (2 e_charge).
    """

    c: float  # speed of light [cm/s]
    h: float  # Planck constant [erg s]
    e_charge: float  # elementary charge [statC]
    m_electron: float  # electron mass [g]
    erg_per_eV: float  # energy conversion [erg/eV]
    hbar: float = 0.0  # reduced Planck constant [erg s]; 0 -> derive h/(2 pi)
    flux_quantum: float = field(init=False)  # hc/2e [Mx = G cm^2]

    def __post_init__(self):
        if self.hbar == 0.0:
            object.__setattr__(self, "hbar", self.h / (2.0 * math.pi))
        for name in ("c", "h", "e_charge", "m_electron", "erg_per_eV", "hbar"):
            if not (getattr(self, name) > 0.0 and math.isfinite(getattr(self, name))):
                raise ValueError(f"constant {name} must be finite and positive")
        object.__setattr__(self, "flux_quantum", self.h * self.c / (2.0 * self.e_charge))

    @classmethod
    def codata(cls) -> "PhysicalConstants":
        # CODATA 2018.  e(statC) = e(C) * c(m/s) * 10; both factors exact.
        c_cm_s = 2.99792458e10
        return cls(
            c=c_cm_s,
            h=6.62607015e-27,
            e_charge=1.602176634e-19 * 2.99792458e9,
            m_electron=9.1093837015e-28,
            erg_per_eV=1.602176634e-12,
        )

    def as_dict(self) -> dict[str, float]:
        return {
            "c_cm_per_s": self.c,
            "h_erg_s": self.h,
            "hbar_erg_s": self.hbar,
            "e_statC": self.e_charge,
            "m_electron_g": self.m_electron,
            "erg_per_eV": self.erg_per_eV,
            "flux_quantum_Mx": self.flux_quantum,
        }


CONSTANTS = PhysicalConstants.codata()


@dataclass(frozen=True, slots=True)
class Vec3:
    """Immutable 3-vector; components must be finite."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite Vec3 components: ({self.x}, {self.y}, {self.z})")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def __mul__(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "Vec3":
        return Vec3(self.x / s, self.y / s, self.z / s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def planar_norm(self) -> float:
        """Length of the (x, y) projection."""
        return math.hypot(self.x, self.y)

    def perp(self) -> "Vec3":
        """z-hat cross self: the counterclockwise in-plane perpendicular."""
        return Vec3(-self.y, self.x, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a) -> "Vec3":
        return cls(float(a[0]), float(a[1]), float(a[2]) if len(a) > 2 else 0.0)


ZERO3 = Vec3(0.0, 0.0, 0.0)


class TubeProfile(str, Enum):
    """Cross-section of a flux tube carrying total flux Phi along +z."""

    POINT_LIMIT = "PointLimit"
    UNIFORM_DISK = "UniformDisk"
    GAUSSIAN_TUBE = "GaussianTube"


@dataclass(frozen=True)
class ChargeState:
    """Point charge: position/velocity planar (z = 0), charge in statC, mass in g."""

    position: Vec3
    velocity: Vec3
    charge: float
    mass: float

    def __post_init__(self):
        if self.mass <= 0.0 or not math.isfinite(self.mass):
            raise ValueError("charge mass must be positive")
        if not math.isfinite(self.charge):
            raise ValueError("charge must be finite")
        if self.velocity.norm() >= CONSTANTS.c:
            raise ValueError(f"charge speed {self.velocity.norm():.3e} cm/s >= c")


@dataclass(frozen=True)
class FluxonState:
    """Flux tube along +z: flux in Mx, tube_radius sets the profile scale.

    tube_radius is the disk radius for UNIFORM_DISK and the Gaussian width s
    (B_z = Phi/(2 pi s^2) exp(-rho^2 / 2 s^2)) for GAUSSIAN_TUBE.  A zero
    radius is only meaningful in the point limit.
    """

    position: Vec3
    velocity: Vec3
    flux: float
    mass: float
    tube_radius: float = 0.0
    profile: TubeProfile = TubeProfile.POINT_LIMIT

    def __post_init__(self):
        if self.mass <= 0.0 or not math.isfinite(self.mass):
            raise ValueError("fluxon mass must be positive")
        if not math.isfinite(self.flux):
            raise ValueError("flux must be finite")
        if self.tube_radius < 0.0 or not math.isfinite(self.tube_radius):
            raise ValueError("tube_radius must be >= 0")
        if self.tube_radius == 0.0 and self.profile is not TubeProfile.POINT_LIMIT:
            raise ValueError("tube_radius = 0 requires the PointLimit profile")
        if self.velocity.norm() >= CONSTANTS.c:
            raise ValueError(f"fluxon speed {self.velocity.norm():.3e} cm/s >= c")


@dataclass(frozen=True)
class FieldSample:
    """E and B at one spacetime point."""

    E: Vec3
    B: Vec3


def coulomb_e_grid(e: float, source: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Coulomb field e*(x - r)/|x - r|^3 at an (N, 3) array of points."""
    d = points - source[np.newaxis, :]
    r2 = np.einsum("ij,ij->i", d, d)
    return e * d / (r2 ** 1.5)[:, np.newaxis]


def tube_bz_profile(
    profile: TubeProfile, flux: float, tube_radius: float, rho: np.ndarray
) -> np.ndarray:
    """Axial field B_z(rho) of the tube; rho is planar distance to the axis."""
    rho = np.asarray(rho, dtype=float)
    if profile is TubeProfile.POINT_LIMIT:
        return np.zeros_like(rho)
    if profile is TubeProfile.UNIFORM_DISK:
        w = tube_radius
        return np.where(rho < w, flux / (math.pi * w * w), 0.0)
    s = tube_radius
    return flux / (2.0 * math.pi * s * s) * np.exp(-0.5 * (rho / s) ** 2)


def charge_fields(charge: ChargeState, x: Vec3, constants: PhysicalConstants = CONSTANTS) -> FieldSample:
    """Quasi-static fields of a point charge: Coulomb E plus B = (1/c) v x E."""
    d = x - charge.position
    r = d.norm()
    if r == 0.0:
        raise SingularityError("field evaluation at the charge position")
    E = d * (charge.charge / r**3)
    B = charge.velocity.cross(E) / constants.c
    return FieldSample(E=E, B=B)


def fluxon_fields(fluxon: FluxonState, x: Vec3, constants: PhysicalConstants = CONSTANTS) -> FieldSample:
    """Fields of the flux tube: B = B_z(rho) z-hat plus E = -(1/c) V x B."""
    rho = (x - fluxon.position).planar_norm()
    if fluxon.profile is TubeProfile.POINT_LIMIT and rho == 0.0:
        raise SingularityError("point-limit fluxon evaluated on its axis")
    bz = float(tube_bz_profile(fluxon.profile, fluxon.flux, fluxon.tube_radius, np.array([rho]))[0])
    B = Vec3(0.0, 0.0, bz)
    E = -1.0 * fluxon.velocity.cross(B) / constants.c
    return FieldSample(E=E, B=B)


def scalar_density(f1: FieldSample, f2: FieldSample) -> float:
    """Lorentz-scalar cross term (B1.B2 - E1.E2)/(4 pi) in erg/cm^3."""
    return (f1.B.dot(f2.B) - f1.E.dot(f2.E)) / (4.0 * math.pi)


def boost_fields(f: FieldSample, beta: Vec3) -> FieldSample:
    """Boost E and B to the frame moving with velocity beta*c.

    Standard decomposition: parallel components unchanged,
    E'_perp = gamma (E + beta x B)_perp, B'_perp = gamma (B - beta x E)_perp,
    written here in the equivalent closed form with the gamma^2/(gamma+1)
    projector so no basis construction is needed.
    """
    b2 = beta.dot(beta)
    if b2 >= 1.0:
        raise InvalidBoostError(f"|beta| = {math.sqrt(b2):.6f} >= 1")
    if b2 == 0.0:
        return f
    gamma = 1.0 / math.sqrt(1.0 - b2)
    g2 = gamma * gamma / (gamma + 1.0)
    E = gamma * (f.E + beta.cross(f.B)) - g2 * beta.dot(f.E) * beta
    B = gamma * (f.B - beta.cross(f.E)) - g2 * beta.dot(f.B) * beta
    return FieldSample(E=E, B=B)
