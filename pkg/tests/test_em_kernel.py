"""Field kernel tests: Coulomb/tube fields, scalar density, boosts.

Oracles are kept independent of the library internals: Gauss's law uses a
spherical surface quadrature built here, flux normalization uses
scipy.integrate.quad on the radial profile, and the scalar invariant is
checked against an explicit 4x4 field-tensor contraction.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from fluxlab.em_kernel import (
    CONSTANTS,
    ChargeState,
    FieldSample,
    FluxonState,
    PhysicalConstants,
    TubeProfile,
    Vec3,
    boost_fields,
    charge_fields,
    fluxon_fields,
    scalar_density,
)
from fluxlab.errors import InvalidBoostError, SingularityError


# ----------------------------------------------------------------------
# oracles
# ----------------------------------------------------------------------

def sphere_flux_oracle(field_at, center: Vec3, radius: float, n_theta=64, n_phi=128) -> float:
    """Surface integral of E . n over a sphere: Gauss-Legendre in cos(theta),
    trapezoid in phi."""
    mu, w_mu = np.polynomial.legendre.leggauss(n_theta)
    phi = np.arange(n_phi) * (2.0 * math.pi / n_phi)
    total = 0.0
    for m, wm in zip(mu, w_mu):
        s = math.sqrt(1.0 - m * m)
        for ph in phi:
            n_hat = Vec3(s * math.cos(ph), s * math.sin(ph), m)
            x = center + radius * n_hat
            total += field_at(x).dot(n_hat) * wm * (2.0 * math.pi / n_phi)
    return total * radius**2


def field_tensor(sample: FieldSample) -> np.ndarray:
    """Contravariant F^{mu nu} with metric (+,-,-,-): F^{0i} = -E_i,
    F^{ij} = -eps_ijk B_k."""
    E = sample.E.as_array()
    B = sample.B.as_array()
    F = np.zeros((4, 4))
    F[0, 1:] = -E
    F[1:, 0] = E
    F[1, 2], F[2, 1] = -B[2], B[2]
    F[2, 3], F[3, 2] = -B[0], B[0]
    F[3, 1], F[1, 3] = -B[1], B[1]
    return F


def tensor_contraction_oracle(f1: FieldSample, f2: FieldSample) -> float:
    """(1/8 pi) F1_{mu nu} F2^{mu nu} from the explicit matrices."""
    g = np.diag([1.0, -1.0, -1.0, -1.0])
    F1_lower = g @ field_tensor(f1) @ g
    return float(np.sum(F1_lower * field_tensor(f2))) / (8.0 * math.pi)


def rand_sample(rng) -> FieldSample:
    return FieldSample(Vec3(*rng.uniform(-1, 1, 3)), Vec3(*rng.uniform(-1, 1, 3)))


# ----------------------------------------------------------------------
# constants table
# ----------------------------------------------------------------------

def test_constants_positive_and_consistent():
    c = CONSTANTS
    for v in (c.c, c.h, c.hbar, c.e_charge, c.m_electron, c.erg_per_eV, c.flux_quantum):
        assert v > 0.0
    assert c.flux_quantum == c.h * c.c / (2.0 * c.e_charge)
    assert c.hbar == pytest.approx(c.h / (2.0 * math.pi), rel=1e-15)


def test_constants_reject_nonpositive():
    with pytest.raises(ValueError):
        PhysicalConstants(c=-1.0, h=1.0, e_charge=1.0, m_electron=1.0, erg_per_eV=1.0)


def test_unit_system_constants_for_tests():
    # c = 1 test units: Pi magnitude e*flux/(2 pi c rho) comes out 1/(2 pi)
    u = PhysicalConstants(c=1.0, h=2.0 * math.pi, e_charge=1.0, m_electron=1.0, erg_per_eV=1.0)
    assert u.hbar == pytest.approx(1.0)
    assert u.flux_quantum == pytest.approx(math.pi)


# ----------------------------------------------------------------------
# Vec3 / state invariants
# ----------------------------------------------------------------------

def test_vec3_rejects_nonfinite():
    with pytest.raises(ValueError):
        Vec3(float("nan"), 0.0)
    with pytest.raises(ValueError):
        Vec3(0.0, float("inf"))


def test_vec3_algebra():
    a, b = Vec3(1, 2, 3), Vec3(-4, 5, 0.5)
    assert (a + b - a).as_array() == pytest.approx(b.as_array())
    assert a.cross(b).dot(a) == pytest.approx(0.0)
    assert (2.0 * a).norm() == pytest.approx(2.0 * a.norm())
    assert a.perp().as_array() == pytest.approx([-2, 1, 0])


def test_state_invariants():
    with pytest.raises(ValueError):
        ChargeState(Vec3(0, 0), Vec3(0, 0), 1.0, mass=-1.0)
    with pytest.raises(ValueError):
        ChargeState(Vec3(0, 0), Vec3(CONSTANTS.c, 0), 1.0, mass=1.0)
    with pytest.raises(ValueError):
        FluxonState(Vec3(0, 0), Vec3(0, 0), 1.0, 1.0, tube_radius=-0.1)
    with pytest.raises(ValueError):
        FluxonState(Vec3(0, 0), Vec3(0, 0), 1.0, 1.0, tube_radius=0.0,
                    profile=TubeProfile.GAUSSIAN_TUBE)
    # tube_radius = 0 fine in the point limit
    FluxonState(Vec3(0, 0), Vec3(0, 0), 1.0, 1.0)


# ----------------------------------------------------------------------
# charge fields
# ----------------------------------------------------------------------

def test_coulomb_field_static():
    ch = ChargeState(Vec3(0, 0), Vec3(0, 0), 1.0, 1.0)
    f = charge_fields(ch, Vec3(1.0, 0.0))
    assert f.E.as_array() == pytest.approx([1.0, 0.0, 0.0])
    assert f.B.norm() == 0.0


def test_moving_charge_magnetic_field():
    v = 1.0e8
    ch = ChargeState(Vec3(0, 0), Vec3(0.0, v), 1.0, 1.0)
    f = charge_fields(ch, Vec3(1.0, 0.0))
    # B = (1/c) (0, v, 0) x (1, 0, 0) = (0, 0, -v/c)
    assert f.B.as_array() == pytest.approx([0.0, 0.0, -v / CONSTANTS.c])


def test_charge_field_singularity():
    ch = ChargeState(Vec3(0.5, -0.25), Vec3(0, 0), 1.0, 1.0)
    with pytest.raises(SingularityError):
        charge_fields(ch, Vec3(0.5, -0.25))


def test_gauss_law_enclosing_and_not():
    e = 1.0
    ch = ChargeState(Vec3(0.3, -0.2, 0.0), Vec3(0, 0), e, 1.0)
    field_at = lambda x: charge_fields(ch, x).E
    flux_in = sphere_flux_oracle(field_at, Vec3(0, 0, 0), 2.0)
    assert flux_in == pytest.approx(4.0 * math.pi * e, rel=1e-10)
    flux_out = sphere_flux_oracle(field_at, Vec3(6.0, 0, 0), 2.0)
    assert abs(flux_out) < 1e-10 * 4.0 * math.pi * e


# ----------------------------------------------------------------------
# fluxon fields
# ----------------------------------------------------------------------

def test_point_limit_fields_vanish_off_axis():
    fx = FluxonState(Vec3(0, 0), Vec3(1e5, 0), 3.0, 1.0)
    f = fluxon_fields(fx, Vec3(0.7, 0.1))
    assert f.E.norm() == 0.0 and f.B.norm() == 0.0
    with pytest.raises(SingularityError):
        fluxon_fields(fx, Vec3(0.0, 0.0))


def test_uniform_disk_value():
    fx = FluxonState(Vec3(0, 0), Vec3(0, 0), math.pi, 1.0,
                     tube_radius=1.0, profile=TubeProfile.UNIFORM_DISK)
    assert fluxon_fields(fx, Vec3(0.5, 0.0)).B.z == pytest.approx(1.0)
    assert fluxon_fields(fx, Vec3(1.5, 0.0)).B.z == 0.0


def test_moving_fluxon_electric_field():
    v = 2.0e8
    fx = FluxonState(Vec3(0, 0), Vec3(v, 0.0), 2.0, 1.0,
                     tube_radius=1.0, profile=TubeProfile.UNIFORM_DISK)
    f = fluxon_fields(fx, Vec3(0.25, 0.0))
    bz = 2.0 / math.pi
    # E = -(1/c) (v, 0, 0) x (0, 0, bz) = -(1/c)(0*bz - 0, 0 - v*bz, 0)
    assert f.E.as_array() == pytest.approx([0.0, v * bz / CONSTANTS.c, 0.0])


@pytest.mark.parametrize("profile,radius", [
    (TubeProfile.UNIFORM_DISK, 0.7),
    (TubeProfile.GAUSSIAN_TUBE, 0.3),
])
def test_flux_normalization(profile, radius):
    """Plane integral of B_z equals the stored flux (radial quadrature oracle)."""
    flux = 2.5
    fx = FluxonState(Vec3(0.4, -0.1), Vec3(0, 0), flux, 1.0,
                     tube_radius=radius, profile=profile)

    def bz_of_rho(rho):
        return fluxon_fields(fx, Vec3(fx.position.x + rho, fx.position.y)).B.z

    total, _ = quad(lambda rho: bz_of_rho(rho) * 2.0 * math.pi * rho, 0.0, 20.0 * radius,
                    limit=200)
    assert total == pytest.approx(flux, rel=1e-6)


# ----------------------------------------------------------------------
# scalar density and boosts
# ----------------------------------------------------------------------

def test_scalar_density_orthogonal_sectors():
    f1 = FieldSample(Vec3(1, 0, 0), Vec3(0, 0, 0))
    f2 = FieldSample(Vec3(0, 0, 0), Vec3(0, 0, 1))
    assert scalar_density(f1, f2) == 0.0


def test_scalar_density_pure_b():
    f = FieldSample(Vec3(0, 0, 0), Vec3(0, 0, 2))
    assert scalar_density(f, f) == pytest.approx(1.0 / math.pi)


def test_scalar_density_static_pair_vanishes():
    ch = ChargeState(Vec3(0, 0), Vec3(0, 0), 1.0, 1.0)
    fx = FluxonState(Vec3(2, 0), Vec3(0, 0), 1.0, 1.0,
                     tube_radius=0.5, profile=TubeProfile.GAUSSIAN_TUBE)
    x = Vec3(1.7, 0.4)
    assert scalar_density(charge_fields(ch, x), fluxon_fields(fx, x)) == 0.0


def test_boost_identity_and_textbook_case():
    rng = np.random.default_rng(3)
    f = rand_sample(rng)
    g = boost_fields(f, Vec3(0, 0, 0))
    assert g.E.as_array() == pytest.approx(f.E.as_array())
    assert g.B.as_array() == pytest.approx(f.B.as_array())

    b = 0.6
    gamma = 1.0 / math.sqrt(1.0 - b * b)
    out = boost_fields(FieldSample(Vec3(0, 1, 0), Vec3(0, 0, 0)), Vec3(b, 0, 0))
    assert out.E.as_array() == pytest.approx([0.0, gamma, 0.0])
    assert out.B.as_array() == pytest.approx([0.0, 0.0, -gamma * b])


def test_boost_rejects_superluminal():
    with pytest.raises(InvalidBoostError):
        boost_fields(FieldSample(Vec3(1, 0, 0), Vec3(0, 0, 0)), Vec3(1.0, 0, 0))


def test_scalar_density_boost_invariance_1000_cases():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        f1, f2 = rand_sample(rng), rand_sample(rng)
        n = rng.uniform(-1, 1, 3)
        n /= np.linalg.norm(n)
        beta = Vec3(*(n * rng.uniform(0.0, 0.9)))
        d0 = scalar_density(f1, f2)
        d1 = scalar_density(boost_fields(f1, beta), boost_fields(f2, beta))
        worst = max(worst, abs(d1 - d0) / max(abs(d0), 1e-30))
    assert worst <= 1e-9


def test_tensor_contraction_identity():
    rng = np.random.default_rng(11)
    for _ in range(50):
        f1, f2 = rand_sample(rng), rand_sample(rng)
        assert tensor_contraction_oracle(f1, f2) == pytest.approx(
            scalar_density(f1, f2), rel=1e-12, abs=1e-15
        )


def test_parity():
    """Space inversion of sources and evaluation point: E flips, B (axial)
    and the scalar density are unchanged."""
    ch = ChargeState(Vec3(0.2, -0.4), Vec3(1e7, 3e7), 1.0, 1.0)
    ch_inv = ChargeState(-1.0 * ch.position, -1.0 * ch.velocity, 1.0, 1.0)
    fx = FluxonState(Vec3(-1, 0.5), Vec3(-2e7, 1e7), 1.5, 1.0,
                     tube_radius=0.3, profile=TubeProfile.GAUSSIAN_TUBE)
    fx_inv = FluxonState(-1.0 * fx.position, -1.0 * fx.velocity, 1.5, 1.0,
                         tube_radius=0.3, profile=TubeProfile.GAUSSIAN_TUBE)
    x = Vec3(1.3, 0.7)
    fc, fci = charge_fields(ch, x), charge_fields(ch_inv, -1.0 * x)
    ff, ffi = fluxon_fields(fx, x), fluxon_fields(fx_inv, -1.0 * x)
    for f, fi in ((fc, fci), (ff, ffi)):
        assert fi.E.as_array() == pytest.approx(-f.E.as_array())
        assert fi.B.as_array() == pytest.approx(f.B.as_array())
    assert scalar_density(fci, ffi) == pytest.approx(scalar_density(fc, ff), rel=1e-12)
