"""Canonical two-body dynamics of a charge and a point fluxon.

The low-speed Hamiltonian is

    H = (p - Pi)^2 / 2m + (P + Pi)^2 / 2M,      Pi = Pi(r - R),

with Pi the closed-form field momentum.  Hamilton's equations give kinetic
velocities rdot = (p - Pi)/m, Rdot = (P + Pi)/M and momentum rates
pdot_i = sum_j (rdot - Rdot)_j dPi_j/dd_i = -Pdot.  Because Pi is a gradient
(k times grad of the azimuth) its Jacobian is symmetric, so the kinetic
accelerations vanish identically: the interaction is force-free and any
measured acceleration is pure integrator error.

Two steppers are provided: classic RK4 and the generalized
Stoermer-Verlet splitting (symmetric, symplectic, order 2; the momentum
half-kick is solved exactly through a 2x2 linear system, the drift by
fixed-point iteration).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .em_kernel import CONSTANTS, ChargeState, FluxonState, PhysicalConstants, Vec3
from .errors import ConvergenceError, SingularityError

__all__ = [
    "Integrator",
    "CanonicalState",
    "Trajectory",
    "TRAJECTORY_CSV_HEADER",
    "hamiltonian",
    "step",
    "simulate",
    "suggest_dt",
    "force_diagnostics",
    "ForceDiagnostics",
]

TRAJECTORY_CSV_HEADER = ["t", "rx", "ry", "Rx", "Ry", "px", "py", "Px", "Py", "H"]


class Integrator(str, Enum):
    RK4 = "RK4"
    STORMER_VERLET_SPLIT = "StrormerVerletSplit"


@dataclass(frozen=True)
class CanonicalState:
    """Planar canonical state: positions r, R [cm], momenta p, P [g cm/s]."""

    r: Vec3
    R: Vec3
    p: Vec3
    P: Vec3
    t: float = 0.0

    def __post_init__(self):
        for name in ("r", "R", "p", "P"):
            v = getattr(self, name)
            if v.z != 0.0:
                raise ValueError(f"{name}.z must be 0 (planar problem)")
        if not math.isfinite(self.t):
            raise ValueError("time must be finite")


def _coupling(charge: ChargeState, fluxon: FluxonState, constants: PhysicalConstants) -> float:
    """Pi = k * phi-hat / rho with k = e Phi / (2 pi c)."""
    return charge.charge * fluxon.flux / (2.0 * math.pi * constants.c)


def _pi(dx: float, dy: float, k: float) -> tuple[float, float]:
    u = dx * dx + dy * dy
    if u == 0.0:
        raise SingularityError("charge and fluxon coincide")
    return -k * dy / u, k * dx / u


def _pi_jacobian(dx: float, dy: float, k: float) -> tuple[float, float]:
    """Entries of the symmetric traceless Jacobian J = [[a, b], [b, -a]]."""
    u = dx * dx + dy * dy
    u2 = u * u
    return 2.0 * k * dx * dy / u2, k * (dy * dy - dx * dx) / u2


def _deriv(y: tuple, m: float, M: float, k: float) -> tuple:
    rx, ry, Rx, Ry, px, py, Px, Py = y
    dx = rx - Rx
    dy = ry - Ry
    pix, piy = _pi(dx, dy, k)
    vrx = (px - pix) / m
    vry = (py - piy) / m
    vRx = (Px + pix) / M
    vRy = (Py + piy) / M
    wx = vrx - vRx
    wy = vry - vRy
    a, b = _pi_jacobian(dx, dy, k)
    fx = wx * a + wy * b
    fy = wx * b - wy * a
    return (vrx, vry, vRx, vRy, fx, fy, -fx, -fy)


def _rk4_step(y: tuple, dt: float, m: float, M: float, k: float) -> tuple:
    k1 = _deriv(y, m, M, k)
    y2 = tuple(y[i] + 0.5 * dt * k1[i] for i in range(8))
    k2 = _deriv(y2, m, M, k)
    y3 = tuple(y[i] + 0.5 * dt * k2[i] for i in range(8))
    k3 = _deriv(y3, m, M, k)
    y4 = tuple(y[i] + dt * k3[i] for i in range(8))
    k4 = _deriv(y4, m, M, k)
    return tuple(
        y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(8)
    )


def _w_of(dx, dy, px, py, Px, Py, m, M, k):
    pix, piy = _pi(dx, dy, k)
    return (px - pix) / m - (Px + pix) / M, (py - piy) / m - (Py + piy) / M


def _verlet_step(y: tuple, dt: float, m: float, M: float, k: float) -> tuple:
    rx, ry, Rx, Ry, px, py, Px, Py = y
    kappa = 1.0 / m + 1.0 / M
    half = 0.5 * dt

    # half kick: (I - (dt/2) kappa J) w_half = w0, then p += (dt/2) J w_half
    dx, dy = rx - Rx, ry - Ry
    a, b = _pi_jacobian(dx, dy, k)
    w0x, w0y = _w_of(dx, dy, px, py, Px, Py, m, M, k)
    c = half * kappa
    det = 1.0 - c * c * (a * a + b * b)
    whx = ((1.0 + c * a) * w0x + c * b * w0y) / det
    why = (c * b * w0x + (1.0 - c * a) * w0y) / det
    gx = whx * a + why * b
    gy = whx * b - why * a
    px += half * gx
    py += half * gy
    Px -= half * gx
    Py -= half * gy

    # drift: d' = d + (dt/2) [w(d) + w(d')], fixed point on d'
    wdx, wdy = _w_of(dx, dy, px, py, Px, Py, m, M, k)
    dpx, dpy = dx + dt * wdx, dy + dt * wdy  # predictor
    scale = abs(dx) + abs(dy) + abs(dt * wdx) + abs(dt * wdy) + 1e-300
    for _ in range(60):
        wpx, wpy = _w_of(dpx, dpy, px, py, Px, Py, m, M, k)
        nx = dx + half * (wdx + wpx)
        ny = dy + half * (wdy + wpy)
        if abs(nx - dpx) + abs(ny - dpy) <= 1e-15 * scale:
            dpx, dpy = nx, ny
            break
        dpx, dpy = nx, ny
    else:
        raise ConvergenceError("Verlet drift stage failed to contract; reduce dt")

    pixn, piyn = _pi(dpx, dpy, k)
    pix0, piy0 = _pi(dx, dy, k)
    rx += half * ((px - pix0) / m + (px - pixn) / m)
    ry += half * ((py - piy0) / m + (py - piyn) / m)
    Rx += half * ((Px + pix0) / M + (Px + pixn) / M)
    Ry += half * ((Py + piy0) / M + (Py + piyn) / M)

    # final kick, explicit at the new positions
    dx, dy = rx - Rx, ry - Ry
    a, b = _pi_jacobian(dx, dy, k)
    wx, wy = _w_of(dx, dy, px, py, Px, Py, m, M, k)
    gx = wx * a + wy * b
    gy = wx * b - wy * a
    return (rx, ry, Rx, Ry, px + half * gx, py + half * gy, Px - half * gx, Py - half * gy)


def _energy(y: tuple, m: float, M: float, k: float) -> float:
    rx, ry, Rx, Ry, px, py, Px, Py = y
    pix, piy = _pi(rx - Rx, ry - Ry, k)
    return ((px - pix) ** 2 + (py - piy) ** 2) / (2.0 * m) + (
        (Px + pix) ** 2 + (Py + piy) ** 2
    ) / (2.0 * M)


def hamiltonian(
    state: CanonicalState,
    charge: ChargeState,
    fluxon: FluxonState,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Energy (p - Pi)^2/2m + (P + Pi)^2/2M [erg], closed-form Pi."""
    k = _coupling(charge, fluxon, constants)
    y = (state.r.x, state.r.y, state.R.x, state.R.y,
         state.p.x, state.p.y, state.P.x, state.P.y)
    return _energy(y, charge.mass, fluxon.mass, k)


def _min_separation_on_segment(d0x, d0y, d1x, d1y) -> float:
    """Minimum |d| along the straight segment from d0 to d1."""
    ex, ey = d1x - d0x, d1y - d0y
    e2 = ex * ex + ey * ey
    if e2 == 0.0:
        return math.hypot(d0x, d0y)
    t = max(0.0, min(1.0, -(d0x * ex + d0y * ey) / e2))
    return math.hypot(d0x + t * ex, d0y + t * ey)


def step(
    state: CanonicalState,
    dt: float,
    charge: ChargeState,
    fluxon: FluxonState,
    integrator: Integrator = Integrator.RK4,
    constants: PhysicalConstants = CONSTANTS,
) -> CanonicalState:
    """Advance one step; raises if the relative path crosses the tube core."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    k = _coupling(charge, fluxon, constants)
    y = (state.r.x, state.r.y, state.R.x, state.R.y,
         state.p.x, state.p.y, state.P.x, state.P.y)
    stepper = _rk4_step if integrator is Integrator.RK4 else _verlet_step
    yn = stepper(y, dt, charge.mass, fluxon.mass, k)
    exclusion = fluxon.tube_radius
    d_min = _min_separation_on_segment(y[0] - y[2], y[1] - y[3], yn[0] - yn[2], yn[1] - yn[3])
    if d_min <= exclusion or d_min == 0.0:
        raise SingularityError(
            f"trajectory crossed within the fluxon exclusion radius "
            f"({d_min:.3e} <= {exclusion:.3e} cm) at t = {state.t + dt:.6e} s"
        )
    return CanonicalState(
        r=Vec3(yn[0], yn[1]), R=Vec3(yn[2], yn[3]),
        p=Vec3(yn[4], yn[5]), P=Vec3(yn[6], yn[7]), t=state.t + dt,
    )


def suggest_dt(
    state: CanonicalState,
    charge: ChargeState,
    fluxon: FluxonState,
    constants: PhysicalConstants = CONSTANTS,
    pi_variation: float = 1e-3,
) -> float:
    """dt such that the per-step change of Pi stays below
    `pi_variation` x |p| (|J| = k/rho^2 bounds the Pi gradient).

    The bound is enforced at the closest approach of the force-free
    (straight) relative path, not just at the current separation.
    """
    k = _coupling(charge, fluxon, constants)
    d = state.r - state.R
    rho = d.planar_norm()
    if rho == 0.0:
        raise SingularityError("coincident particles")
    pix, piy = _pi(d.x, d.y, k)
    vr = Vec3((state.p.x - pix) / charge.mass, (state.p.y - piy) / charge.mass)
    vR = Vec3((state.P.x + pix) / fluxon.mass, (state.P.y + piy) / fluxon.mass)
    rel_v = vr - vR
    rel = rel_v.planar_norm()
    p_scale = max(state.p.planar_norm(), math.hypot(pix, piy))
    if rel == 0.0 or abs(k) == 0.0 or p_scale == 0.0:
        return math.inf
    approaching = d.dot(rel_v) < 0.0
    rho_min = abs(d.x * rel_v.y - d.y * rel_v.x) / rel if approaching else rho
    if rho_min == 0.0:
        raise SingularityError("relative path passes through the fluxon core")
    return pi_variation * p_scale * rho_min * rho_min / (abs(k) * rel)


@dataclass(frozen=True)
class TrajectoryDiagnostics:
    """Per-step records; acceleration entries are NaN at the endpoints
    where the central difference is undefined."""

    energy: np.ndarray
    accel_charge: np.ndarray  # |d(rdot)/dt| by central differences
    accel_fluxon: np.ndarray
    third_law_residual: np.ndarray  # |m rddot + M Rddot|


class Trajectory:
    """Recorded canonical history with kinetic velocities and diagnostics."""

    def __init__(self, times, r_xy, R_xy, p_xy, P_xy, vr_xy, vR_xy, energy,
                 charge_mass: float, fluxon_mass: float):
        self.times = np.asarray(times)
        if len(self.times) >= 2 and not np.all(np.diff(self.times) > 0.0):
            raise ValueError("timestamps must be strictly increasing")
        self.r_xy = np.asarray(r_xy)
        self.R_xy = np.asarray(R_xy)
        self.p_xy = np.asarray(p_xy)
        self.P_xy = np.asarray(P_xy)
        self.vr_xy = np.asarray(vr_xy)
        self.vR_xy = np.asarray(vR_xy)
        self.energy = np.asarray(energy)
        self.charge_mass = charge_mass
        self.fluxon_mass = fluxon_mass

    def __len__(self) -> int:
        return len(self.times)

    @property
    def states(self) -> list[CanonicalState]:
        return [
            CanonicalState(
                r=Vec3(*self.r_xy[i]), R=Vec3(*self.R_xy[i]),
                p=Vec3(*self.p_xy[i]), P=Vec3(*self.P_xy[i]), t=float(self.times[i]),
            )
            for i in range(len(self))
        ]

    @property
    def kinetic_velocities(self) -> list[tuple[Vec3, Vec3]]:
        return [(Vec3(*self.vr_xy[i]), Vec3(*self.vR_xy[i])) for i in range(len(self))]

    @property
    def diagnostics(self) -> TrajectoryDiagnostics:
        n = len(self)
        acc_r = np.full(n, np.nan)
        acc_R = np.full(n, np.nan)
        resid = np.full(n, np.nan)
        if n >= 3:
            dt2 = (self.times[2:] - self.times[:-2])[:, None]
            ar = (self.vr_xy[2:] - self.vr_xy[:-2]) / dt2
            aR = (self.vR_xy[2:] - self.vR_xy[:-2]) / dt2
            acc_r[1:-1] = np.linalg.norm(ar, axis=1)
            acc_R[1:-1] = np.linalg.norm(aR, axis=1)
            resid[1:-1] = np.linalg.norm(self.charge_mass * ar + self.fluxon_mass * aR, axis=1)
        return TrajectoryDiagnostics(self.energy.copy(), acc_r, acc_R, resid)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJECTORY_CSV_HEADER)
            for i in range(len(self)):
                writer.writerow([
                    repr(float(self.times[i])),
                    repr(float(self.r_xy[i, 0])), repr(float(self.r_xy[i, 1])),
                    repr(float(self.R_xy[i, 0])), repr(float(self.R_xy[i, 1])),
                    repr(float(self.p_xy[i, 0])), repr(float(self.p_xy[i, 1])),
                    repr(float(self.P_xy[i, 0])), repr(float(self.P_xy[i, 1])),
                    repr(float(self.energy[i])),
                ])


def simulate(
    initial: CanonicalState,
    T: float,
    dt: float,
    charge: ChargeState,
    fluxon: FluxonState,
    integrator: Integrator = Integrator.RK4,
    constants: PhysicalConstants = CONSTANTS,
    record_every: int = 1,
) -> Trajectory:
    """Integrate for round(T/dt) steps, recording every `record_every`-th."""
    if dt <= 0.0 or T <= 0.0:
        raise ValueError("T and dt must be positive")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    n_steps = max(1, round(T / dt))
    k = _coupling(charge, fluxon, constants)
    m, M = charge.mass, fluxon.mass
    stepper = _rk4_step if integrator is Integrator.RK4 else _verlet_step
    exclusion = fluxon.tube_radius

    y = (initial.r.x, initial.r.y, initial.R.x, initial.R.y,
         initial.p.x, initial.p.y, initial.P.x, initial.P.y)
    rows = []

    def record(i, yy):
        pix, piy = _pi(yy[0] - yy[2], yy[1] - yy[3], k)
        rows.append((
            initial.t + i * dt, yy[0], yy[1], yy[2], yy[3], yy[4], yy[5], yy[6], yy[7],
            (yy[4] - pix) / m, (yy[5] - piy) / m, (yy[6] + pix) / M, (yy[7] + piy) / M,
            _energy(yy, m, M, k),
        ))

    record(0, y)
    for i in range(1, n_steps + 1):
        yn = stepper(y, dt, m, M, k)
        d_min = _min_separation_on_segment(y[0] - y[2], y[1] - y[3], yn[0] - yn[2], yn[1] - yn[3])
        if d_min <= exclusion or d_min == 0.0:
            raise SingularityError(
                f"trajectory crossed the fluxon exclusion radius at step {i} "
                f"(min separation {d_min:.3e} cm)"
            )
        y = yn
        if i % record_every == 0 or i == n_steps:
            record(i, y)

    arr = np.array(rows)
    return Trajectory(
        times=arr[:, 0], r_xy=arr[:, 1:3], R_xy=arr[:, 3:5],
        p_xy=arr[:, 5:7], P_xy=arr[:, 7:9], vr_xy=arr[:, 9:11], vR_xy=arr[:, 11:13],
        energy=arr[:, 13], charge_mass=m, fluxon_mass=M,
    )


@dataclass(frozen=True)
class ForceDiagnostics:
    max_accel_charge: float  # max |rddot| [cm/s^2]
    max_accel_fluxon: float  # max |Rddot|
    max_third_law_residual: float  # max |m rddot + M Rddot| [g cm/s^2]
    energy_drift_rel: float  # max |H - H0| / |H0|


def force_diagnostics(
    traj: Trajectory, charge: ChargeState, fluxon: FluxonState
) -> ForceDiagnostics:
    """Finite-difference force audit; requires at least 3 recorded points."""
    if len(traj) < 3:
        raise ValueError("force diagnostics need a trajectory of >= 3 points")
    d = traj.diagnostics
    h0 = abs(d.energy[0])
    drift = float(np.max(np.abs(d.energy - d.energy[0]))) / (h0 if h0 > 0.0 else 1.0)
    return ForceDiagnostics(
        max_accel_charge=float(np.nanmax(d.accel_charge)),
        max_accel_fluxon=float(np.nanmax(d.accel_fluxon)),
        max_third_law_residual=float(np.nanmax(d.third_law_residual)),
        energy_drift_rel=drift,
    )
