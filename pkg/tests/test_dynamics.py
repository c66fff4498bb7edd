"""Two-body dynamics tests: force-free flybys, conservation, relabeling.

Convergence orders are measured by dt-halving; the force-free property is
asserted as convergence of finite-difference accelerations toward zero at
the integrator's order, never as literal zeros.
"""

import math

import numpy as np
import pytest

from fluxlab.em_kernel import CONSTANTS, ChargeState, FluxonState, TubeProfile, Vec3
from fluxlab.errors import SingularityError
from fluxlab.dynamics import (
    TRAJECTORY_CSV_HEADER,
    CanonicalState,
    Integrator,
    force_diagnostics,
    hamiltonian,
    simulate,
    step,
    suggest_dt,
)
from fluxlab.interaction import field_momentum_closed

E, M_CHARGE, M_FLUXON = 1.0, 1.0, 2.0
FLUX_FOR_K = lambda k: k * 2.0 * math.pi * CONSTANTS.c  # flux giving coupling k


def make_pair(k=0.3):
    charge = ChargeState(Vec3(-5.0, 1.0), Vec3(0, 0), E, M_CHARGE)
    fluxon = FluxonState(Vec3(0.0, 0.0), Vec3(0, 0), FLUX_FOR_K(k), M_FLUXON)
    return charge, fluxon


def flyby_state(charge, fluxon, speed=1.0):
    """Charge moving at (speed, 0), fluxon kinetically at rest."""
    pi0 = field_momentum_closed(charge.charge, fluxon.flux, charge.position, fluxon.position)
    p0 = Vec3(charge.mass * speed, 0.0) + pi0
    P0 = Vec3(0.0, 0.0) - pi0
    return CanonicalState(r=charge.position, R=fluxon.position, p=p0, P=P0)


# ----------------------------------------------------------------------
# hamiltonian
# ----------------------------------------------------------------------

def test_hamiltonian_free_particle_limit():
    charge = ChargeState(Vec3(-1, 0), Vec3(0, 0), E, M_CHARGE)
    fluxon = FluxonState(Vec3(0, 0), Vec3(0, 0), 0.0, M_FLUXON)
    s = CanonicalState(r=Vec3(-1, 0), R=Vec3(0, 0), p=Vec3(2, 1), P=Vec3(-1, 3))
    want = (4 + 1) / (2 * M_CHARGE) + (1 + 9) / (2 * M_FLUXON)
    assert hamiltonian(s, charge, fluxon) == pytest.approx(want, rel=1e-15)


def test_hamiltonian_zero_kinetic_momenta():
    charge, fluxon = make_pair()
    pi0 = field_momentum_closed(charge.charge, fluxon.flux, charge.position, fluxon.position)
    s = CanonicalState(r=charge.position, R=fluxon.position, p=pi0, P=-1.0 * pi0)
    assert hamiltonian(s, charge, fluxon) == pytest.approx(0.0, abs=1e-30)


def test_hamiltonian_translation_invariance():
    charge, fluxon = make_pair()
    s1 = flyby_state(charge, fluxon)
    shift = Vec3(17.0, -4.0)
    s2 = CanonicalState(r=s1.r + shift, R=s1.R + shift, p=s1.p, P=s1.P)
    assert hamiltonian(s2, charge, fluxon) == pytest.approx(
        hamiltonian(s1, charge, fluxon), rel=1e-15
    )


def test_hamiltonian_coincident_raises():
    charge, fluxon = make_pair()
    s = CanonicalState(r=Vec3(0, 0), R=Vec3(0, 0), p=Vec3(1, 0), P=Vec3(0, 0))
    with pytest.raises(SingularityError):
        hamiltonian(s, charge, fluxon)


def test_canonical_state_planar_invariant():
    with pytest.raises(ValueError):
        CanonicalState(r=Vec3(0, 0, 1.0), R=Vec3(1, 0), p=Vec3(0, 0), P=Vec3(0, 0))


# ----------------------------------------------------------------------
# stepping
# ----------------------------------------------------------------------

@pytest.mark.parametrize("integrator", list(Integrator))
def test_zero_flux_free_flight_exact(integrator):
    charge = ChargeState(Vec3(-1.0, 0.5), Vec3(0, 0), E, M_CHARGE)
    fluxon = FluxonState(Vec3(3.0, 0.0), Vec3(0, 0), 0.0, M_FLUXON)
    s = CanonicalState(r=Vec3(-1.0, 0.5), R=Vec3(3.0, 0.0), p=Vec3(0.7, -0.2), P=Vec3(0.1, 0.3))
    traj = simulate(s, 2.0, 0.01, charge, fluxon, integrator)
    t = traj.times[-1]
    want_r = np.array([-1.0 + 0.7 / M_CHARGE * t, 0.5 - 0.2 / M_CHARGE * t])
    assert traj.r_xy[-1] == pytest.approx(want_r, rel=1e-13, abs=1e-13)
    assert traj.p_xy[-1] == pytest.approx([0.7, -0.2], rel=1e-15)


def test_step_requires_positive_dt():
    charge, fluxon = make_pair()
    with pytest.raises(ValueError):
        step(flyby_state(charge, fluxon), 0.0, charge, fluxon)


def test_trajectory_singularity_detected():
    """A head-on relative path crossing the tube core raises."""
    charge = ChargeState(Vec3(-1.0, 0.0), Vec3(0, 0), E, M_CHARGE)
    fluxon = FluxonState(Vec3(0.0, 0.0), Vec3(0, 0), FLUX_FOR_K(0.0), M_FLUXON,
                         tube_radius=0.05, profile=TubeProfile.UNIFORM_DISK)
    s = CanonicalState(r=Vec3(-1.0, 0.0), R=Vec3(0, 0), p=Vec3(1.0, 0.0), P=Vec3(0, 0))
    with pytest.raises(SingularityError):
        simulate(s, 2.5, 0.01, charge, fluxon)


def test_rk4_force_free_convergence_order():
    charge, fluxon = make_pair()
    s0 = flyby_state(charge, fluxon)
    errs = []
    for dt in (0.1, 0.05, 0.025, 0.0125):
        traj = simulate(s0, 10.0, dt, charge, fluxon, Integrator.RK4)
        errs.append(force_diagnostics(traj, charge, fluxon).max_accel_charge)
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(3.5 < o < 4.6 for o in orders), orders
    assert errs[-1] < 1e-9


def test_verlet_force_free_convergence_order():
    charge, fluxon = make_pair()
    s0 = flyby_state(charge, fluxon)
    errs = []
    for dt in (0.1, 0.05, 0.025):
        traj = simulate(s0, 10.0, dt, charge, fluxon, Integrator.STORMER_VERLET_SPLIT)
        errs.append(force_diagnostics(traj, charge, fluxon).max_accel_charge)
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(1.6 < o < 2.5 for o in orders), orders


def test_kinetic_momentum_sum_conserved():
    charge, fluxon = make_pair()
    s0 = flyby_state(charge, fluxon)
    traj = simulate(s0, 10.0, 0.05, charge, fluxon, Integrator.RK4)
    total = charge.mass * traj.vr_xy + fluxon.mass * traj.vR_xy
    drift = np.max(np.abs(total - total[0]))
    assert drift <= 1e-12 * max(1.0, np.max(np.abs(total)))


def test_canonical_vs_kinetic_identity_every_step():
    charge, fluxon = make_pair()
    s0 = flyby_state(charge, fluxon)
    traj = simulate(s0, 5.0, 0.05, charge, fluxon, Integrator.RK4)
    for i in range(len(traj)):
        d = Vec3(*(traj.r_xy[i] - traj.R_xy[i]))
        pi_vec = field_momentum_closed(charge.charge, fluxon.flux, d, Vec3(0, 0))
        gap_p = traj.p_xy[i] - charge.mass * traj.vr_xy[i]
        gap_P = traj.P_xy[i] - fluxon.mass * traj.vR_xy[i]
        assert gap_p == pytest.approx([pi_vec.x, pi_vec.y], rel=1e-12, abs=1e-15)
        assert gap_P == pytest.approx([-pi_vec.x, -pi_vec.y], rel=1e-12, abs=1e-15)


def test_canonical_momentum_changes_while_speed_constant():
    charge, fluxon = make_pair()
    s0 = flyby_state(charge, fluxon)
    traj = simulate(s0, 10.0, 0.01, charge, fluxon, Integrator.RK4)
    p_change = np.max(np.linalg.norm(traj.p_xy - traj.p_xy[0], axis=1))
    speed_var = np.max(np.abs(np.linalg.norm(traj.vr_xy, axis=1) - 1.0))
    assert p_change > 0.1  # Pi difference along the pass
    assert speed_var < 1e-10
    # the change in p is exactly the change in Pi(r - R)
    pi_start = field_momentum_closed(
        charge.charge, fluxon.flux, Vec3(*traj.r_xy[0]), Vec3(*traj.R_xy[0]))
    pi_end = field_momentum_closed(
        charge.charge, fluxon.flux, Vec3(*traj.r_xy[-1]), Vec3(*traj.R_xy[-1]))
    dp = traj.p_xy[-1] - traj.p_xy[0]
    # equality holds up to m * |delta rdot|, the integrator's residual
    assert dp == pytest.approx([pi_end.x - pi_start.x, pi_end.y - pi_start.y],
                               rel=1e-8, abs=M_CHARGE * 1e-10)


def test_straight_line_flyby_deflection():
    charge, fluxon = make_pair()
    s0 = flyby_state(charge, fluxon)
    traj = simulate(s0, 10.0, 0.005, charge, fluxon, Integrator.RK4)
    v0, v1 = traj.vr_xy[0], traj.vr_xy[-1]
    deflection = abs(math.atan2(v1[1], v1[0]) - math.atan2(v0[1], v0[0]))
    assert deflection < 1e-8
    # path stays straight: y stays at the impact parameter
    assert np.max(np.abs(traj.r_xy[:, 1] - 1.0)) < 1e-8


def test_rk4_energy_drift_per_1e4_steps():
    charge, fluxon = make_pair()
    s0 = flyby_state(charge, fluxon)
    dt = suggest_dt(s0, charge, fluxon)  # |Pi| variation < 1e-3 |p| per step
    traj = simulate(s0, 1e4 * dt, dt, charge, fluxon, Integrator.RK4, record_every=100)
    assert force_diagnostics(traj, charge, fluxon).energy_drift_rel < 1e-9


def test_verlet_long_run_energy_bounded():
    """1e6 symplectic steps: bounded oscillation, no secular growth."""
    charge, fluxon = make_pair()
    s0 = flyby_state(charge, fluxon)
    traj = simulate(s0, 20.0, 2e-5, charge, fluxon,
                    Integrator.STORMER_VERLET_SPLIT, record_every=1000)
    drift = np.abs(traj.energy - traj.energy[0]) / abs(traj.energy[0])
    assert drift.max() < 1e-9
    # after the flyby the drift returns toward zero instead of accumulating
    assert drift[-1] <= drift.max()
    assert np.max(drift[len(drift) // 2:]) <= drift.max()


# ----------------------------------------------------------------------
# trajectory bookkeeping
# ----------------------------------------------------------------------

def test_trajectory_csv_export(tmp_path):
    charge, fluxon = make_pair()
    traj = simulate(flyby_state(charge, fluxon), 1.0, 0.05, charge, fluxon)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRAJECTORY_CSV_HEADER)
    assert len(lines) == len(traj) + 1
    row = [float(v) for v in lines[1].split(",")]
    assert row[0] == traj.times[0]
    assert row[-1] == pytest.approx(traj.energy[0], rel=1e-15)


def test_record_every_thins_output():
    charge, fluxon = make_pair()
    traj = simulate(flyby_state(charge, fluxon), 1.0, 0.01, charge, fluxon, record_every=10)
    assert len(traj) == 11
    assert np.all(np.diff(traj.times) > 0)


def test_force_diagnostics_requires_three_points():
    charge, fluxon = make_pair()
    traj = simulate(flyby_state(charge, fluxon), 0.05, 0.05, charge, fluxon)
    with pytest.raises(ValueError):
        force_diagnostics(traj, charge, fluxon)


def test_free_case_diagnostics_at_machine_scale():
    charge = ChargeState(Vec3(-1.0, 0.5), Vec3(0, 0), E, M_CHARGE)
    fluxon = FluxonState(Vec3(3.0, 0.0), Vec3(0, 0), 0.0, M_FLUXON)
    s = CanonicalState(r=Vec3(-1.0, 0.5), R=Vec3(3.0, 0.0), p=Vec3(0.7, -0.2), P=Vec3(0.1, 0.3))
    d = force_diagnostics(simulate(s, 2.0, 0.01, charge, fluxon), charge, fluxon)
    assert d.max_accel_charge < 1e-12
    assert d.max_accel_fluxon < 1e-12
    assert d.max_third_law_residual < 1e-12
    assert d.energy_drift_rel < 1e-14


# ----------------------------------------------------------------------
# relabeling / frame equivalence
# ----------------------------------------------------------------------

def test_role_swap_hamiltonian_identity():
    """Swapping (m, M), (r, R) and flipping momentum signs maps the
    Hamiltonian onto the flux-reversed one at every phase-space point."""
    rng = np.random.default_rng(12)
    charge, fluxon = make_pair(k=0.17)
    charge_sw = ChargeState(charge.position, charge.velocity, charge.charge, fluxon.mass)
    fluxon_sw = FluxonState(fluxon.position, fluxon.velocity, fluxon.flux, charge.mass)
    fluxon_neg = FluxonState(fluxon.position, fluxon.velocity, -fluxon.flux, fluxon.mass)
    for _ in range(100):
        r, R = Vec3(*rng.uniform(-3, 3, 2)), Vec3(*rng.uniform(-3, 3, 2))
        p, P = Vec3(*rng.uniform(-2, 2, 2)), Vec3(*rng.uniform(-2, 2, 2))
        s = CanonicalState(r=r, R=R, p=p, P=P)
        s_swapped = CanonicalState(r=R, R=r, p=-1.0 * P, P=-1.0 * p)
        h_b = hamiltonian(s_swapped, charge_sw, fluxon_sw)
        h_ref = hamiltonian(s, charge, fluxon_neg)
        assert h_b == pytest.approx(h_ref, rel=1e-14)


def test_mirror_equivalence_of_flux_reversal():
    """Reflecting the initial data about the x axis while flipping the
    flux sign produces the exactly mirrored trajectory."""
    charge, fluxon = make_pair(k=0.23)
    fluxon_neg = FluxonState(fluxon.position, fluxon.velocity, -fluxon.flux, fluxon.mass)
    s0 = flyby_state(charge, fluxon)
    mirror = CanonicalState(
        r=Vec3(s0.r.x, -s0.r.y), R=Vec3(s0.R.x, -s0.R.y),
        p=Vec3(s0.p.x, -s0.p.y), P=Vec3(s0.P.x, -s0.P.y),
    )
    t1 = simulate(s0, 5.0, 0.02, charge, fluxon)
    t2 = simulate(mirror, 5.0, 0.02, charge, fluxon_neg)
    assert t2.r_xy[:, 0] == pytest.approx(t1.r_xy[:, 0], rel=1e-14)
    assert t2.r_xy[:, 1] == pytest.approx(-t1.r_xy[:, 1], rel=1e-14)
    assert t2.P_xy[:, 1] == pytest.approx(-t1.P_xy[:, 1], rel=1e-14, abs=1e-18)


def test_role_swap_direct_run_comparison():
    """Direct two-run check of the exchange m<->M, p<->-P, r<->R at fixed
    flux: the swapped run's fluxon slot retraces the momentum-flipped
    original's charge slot (the exchange composes a slot relabeling with
    time reversal, so the fluxon mirrors the charge trajectory)."""
    charge, fluxon = make_pair(k=0.21)
    s_a = flyby_state(charge, fluxon)

    swapped = CanonicalState(r=s_a.R, R=s_a.r, p=-1.0 * s_a.P, P=-1.0 * s_a.p)
    charge_sw = ChargeState(s_a.R, Vec3(0, 0), charge.charge, fluxon.mass)
    fluxon_sw = FluxonState(s_a.r, Vec3(0, 0), fluxon.flux, charge.mass)
    t_b = simulate(swapped, 6.0, 0.02, charge_sw, fluxon_sw)

    flipped = CanonicalState(r=s_a.r, R=s_a.R, p=-1.0 * s_a.p, P=-1.0 * s_a.P)
    t_d = simulate(flipped, 6.0, 0.02, charge, fluxon)

    assert t_b.R_xy == pytest.approx(t_d.r_xy, rel=1e-12, abs=1e-15)
    assert t_b.r_xy == pytest.approx(t_d.R_xy, rel=1e-12, abs=1e-15)
    assert t_b.p_xy == pytest.approx(t_d.P_xy, rel=1e-12, abs=1e-15)
    assert t_b.P_xy == pytest.approx(t_d.p_xy, rel=1e-12, abs=1e-15)


def test_relative_motion_frame_equivalence():
    """Same relative initial motion realized either as a moving charge or
    as a moving fluxon yields the same relative trajectory (Type I = II)."""
    k = 0.3
    charge, fluxon = make_pair(k)
    # Type I: fluxon kinetically static, charge flies
    s1 = flyby_state(charge, fluxon, speed=1.0)
    t1 = simulate(s1, 8.0, 0.01, charge, fluxon, record_every=10)
    d1 = t1.r_xy - t1.R_xy

    # Type II: charge static at the origin of the old charge's frame;
    # fluxon carries the opposite relative velocity from the mirrored start
    r_c = Vec3(0.0, 0.0)
    R0 = Vec3(r_c.x - (s1.r.x - s1.R.x), r_c.y - (s1.r.y - s1.R.y))
    charge2 = ChargeState(r_c, Vec3(0, 0), charge.charge, charge.mass)
    fluxon2 = FluxonState(R0, Vec3(0, 0), fluxon.flux, fluxon.mass)
    pi0 = field_momentum_closed(charge.charge, fluxon.flux, r_c, R0)
    p0 = pi0  # kinetic velocity zero for the charge
    P0 = Vec3(-fluxon.mass * 1.0, 0.0) - pi0  # Rdot = (-1, 0) so ddot matches
    s2 = CanonicalState(r=r_c, R=R0, p=p0, P=P0)
    t2 = simulate(s2, 8.0, 0.01, charge2, fluxon2, record_every=10)
    d2 = t2.r_xy - t2.R_xy
    assert d2 == pytest.approx(d1, rel=1e-6, abs=1e-9)
