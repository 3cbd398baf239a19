"""Planar Push-T simulator: a sphere pusher and a T-shaped block on a plane.

The pusher is driven by a first-order velocity servo, the block is a
second-order rigid body pushed by a compliant penalty contact and slowed by
regularized Coulomb friction against the ground. One realization of the
randomized physics is a :class:`ModelParams`.

The numerical core is a set of scalar numba kernels operating on flat
``float64`` state vectors laid out as::

    [px_p, py_p, vx_p, vy_p, px_b, py_b, phi, vx_b, vy_b, wb]

Every rollout is integrated by the same scalar code path, so results do not
depend on how rollouts are batched or distributed across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from numba import njit

STATE_FIELDS = ("px_p", "py_p", "vx_p", "vy_p", "px_b", "py_b", "phi", "vx_b", "vy_b", "wb")
STATE_DIM = len(STATE_FIELDS)

# indices into the packed parameter vector
_FRICTION, _TAU, _MASS_B, _MASS_P, _KV_X, _KV_Y, _INERTIA_B = range(7)
# indices into the packed system vector
_RADIUS, _UMAX, _GRAVITY, _VEPS, _WEPS, _RGYR, _REACTION = range(7)


class SimulationError(FloatingPointError):
    """Raised when a simulated state or cost becomes non-finite."""


class State(NamedTuple):
    px_p: float = 0.0
    py_p: float = 0.0
    vx_p: float = 0.0
    vy_p: float = 0.0
    px_b: float = 0.0
    py_b: float = 0.0
    phi: float = 0.0
    vx_b: float = 0.0
    vy_b: float = 0.0
    wb: float = 0.0

    @classmethod
    def from_array(cls, a) -> State:
        return cls(*(float(v) for v in a))

    def to_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)

    @property
    def p_p(self) -> np.ndarray:
        return np.array([self.px_p, self.py_p])

    @property
    def v_p(self) -> np.ndarray:
        return np.array([self.vx_p, self.vy_p])

    @property
    def p_b(self) -> np.ndarray:
        return np.array([self.px_b, self.py_b])

    @property
    def v_b(self) -> np.ndarray:
        return np.array([self.vx_b, self.vy_b])


class Command(NamedTuple):
    """Commanded planar pusher velocity."""

    ux: float = 0.0
    uy: float = 0.0


@dataclass(frozen=True)
class TBlockGeometry:
    """Union of a horizontal bar and a vertical stem, in the block frame.

    The bar is centred at the origin of the construction frame and the stem
    is centred ``stem_offset`` below it. The block frame used everywhere else
    has its origin at the area centroid of the union.
    """

    bar_half_extents: tuple[float, float] = (0.06, 0.015)
    stem_half_extents: tuple[float, float] = (0.015, 0.045)
    stem_offset: float = 0.06

    def __post_init__(self):
        if min(*self.bar_half_extents, *self.stem_half_extents) <= 0:
            raise ValueError("half-extents must be strictly positive")
        reach = self.bar_half_extents[1] + self.stem_half_extents[1]
        if abs(self.stem_offset) > reach:
            raise ValueError(
                f"stem_offset {self.stem_offset} leaves the bar and stem disconnected "
                f"(must be within +-{reach})"
            )

    def _raw_rects(self):
        bx, by = self.bar_half_extents
        sx, sy = self.stem_half_extents
        return [(0.0, 0.0, bx, by), (0.0, -self.stem_offset, sx, sy)]

    def _overlap(self):
        (ax, ay, ahx, ahy), (bx, by, bhx, bhy) = self._raw_rects()
        x0, x1 = max(ax - ahx, bx - bhx), min(ax + ahx, bx + bhx)
        y0, y1 = max(ay - ahy, by - bhy), min(ay + ahy, by + bhy)
        if x1 <= x0 or y1 <= y0:
            return None
        return ((x0 + x1) / 2, (y0 + y1) / 2, (x1 - x0) / 2, (y1 - y0) / 2)

    @cached_property
    def _mass_properties(self):
        # inclusion-exclusion over bar, stem and their overlap (uniform density)
        parts = [(r, 1.0) for r in self._raw_rects()]
        ov = self._overlap()
        if ov is not None:
            parts.append((ov, -1.0))
        area = sum(s * 4 * hx * hy for (_, _, hx, hy), s in parts)
        cx = sum(s * 4 * hx * hy * x for (x, _, hx, hy), s in parts) / area
        cy = sum(s * 4 * hx * hy * y for (_, y, hx, hy), s in parts) / area
        second = sum(
            s * 4 * hx * hy * ((hx**2 + hy**2) / 3 + (x - cx) ** 2 + (y - cy) ** 2)
            for (x, y, hx, hy), s in parts
        )
        return area, (cx, cy), math.sqrt(second / area)

    @property
    def area(self) -> float:
        return self._mass_properties[0]

    @property
    def radius_of_gyration(self) -> float:
        return self._mass_properties[2]

    @cached_property
    def rects(self) -> np.ndarray:
        """``(2, 4)`` array of ``(cx, cy, hx, hy)`` in the centroidal block frame."""
        cx, cy = self._mass_properties[1]
        return np.array([(x - cx, y - cy, hx, hy) for x, y, hx, hy in self._raw_rects()])

    @cached_property
    def boundary(self) -> tuple[np.ndarray, np.ndarray]:
        """Boundary segments of the union and their outward normals.

        Each rectangle edge is kept except where the region just outside it
        belongs to the other rectangle.
        """
        rects = self.rects
        segs, normals = [], []
        for i in range(2):
            cx, cy, hx, hy = rects[i]
            ox, oy, ohx, ohy = rects[1 - i]
            xlo, xhi, ylo, yhi = cx - hx, cx + hx, cy - hy, cy + hy
            edges = [
                # (fixed coordinate, axis of the edge, lo, hi, outward normal)
                (yhi, 0, xlo, xhi, (0.0, 1.0)),
                (ylo, 0, xlo, xhi, (0.0, -1.0)),
                (xhi, 1, ylo, yhi, (1.0, 0.0)),
                (xlo, 1, ylo, yhi, (-1.0, 0.0)),
            ]
            for fixed, axis, lo, hi, n in edges:
                if axis == 0:
                    o_fixed_lo, o_fixed_hi, o_lo, o_hi, sgn = oy - ohy, oy + ohy, ox - ohx, ox + ohx, n[1]
                else:
                    o_fixed_lo, o_fixed_hi, o_lo, o_hi, sgn = ox - ohx, ox + ohx, oy - ohy, oy + ohy, n[0]
                # is the point just outside this edge inside the other rectangle?
                if sgn > 0:
                    covered = o_fixed_lo <= fixed < o_fixed_hi
                else:
                    covered = o_fixed_lo < fixed <= o_fixed_hi
                pieces = [(lo, hi)]
                if covered:
                    cut_lo, cut_hi = max(lo, o_lo), min(hi, o_hi)
                    if cut_hi > cut_lo:
                        pieces = [(lo, cut_lo), (cut_hi, hi)]
                for a, b in pieces:
                    if b - a <= 1e-15:
                        continue
                    if axis == 0:
                        segs.append((a, fixed, b, fixed))
                    else:
                        segs.append((fixed, a, fixed, b))
                    normals.append(n)
        return np.array(segs), np.array(normals)

    def contains(self, q) -> bool:
        """Closed containment test for a block-frame point."""
        return any(abs(q[0] - cx) <= hx and abs(q[1] - cy) <= hy for cx, cy, hx, hy in self.rects)


@dataclass(frozen=True)
class PushTSystem:
    """Nominal constants of the Push-T plant and the integrator."""

    geometry: TBlockGeometry = field(default_factory=TBlockGeometry)
    block_mass: float = 0.1
    pusher_mass: float = 0.05
    servo_gain: float = 20.0
    pusher_radius: float = 0.01
    u_max: float = 1.0
    dt: float = 0.01
    substeps: int = 5
    gravity: float = 9.81
    v_eps: float = 0.01
    w_eps: float = 0.1
    # when False the servo absorbs the contact reaction (velocity-source pusher)
    pusher_reaction: bool = False

    def __post_init__(self):
        if self.dt <= 0 or self.substeps < 1:
            raise ValueError("dt must be positive and substeps >= 1")
        if min(self.block_mass, self.pusher_mass, self.servo_gain, self.pusher_radius, self.u_max) <= 0:
            raise ValueError("masses, gain, radius and u_max must be positive")

    @cached_property
    def packed(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        segs, normals = self.geometry.boundary
        sysv = np.array([
            self.pusher_radius,
            self.u_max,
            self.gravity,
            self.v_eps,
            self.w_eps,
            self.geometry.radius_of_gyration,
            1.0 if self.pusher_reaction else 0.0,
        ])
        return sysv, self.geometry.rects.copy(), segs, normals


DEFAULT_SYSTEM = PushTSystem()


@dataclass(frozen=True)
class ModelParams:
    """One physics realization: friction, contact time constant, mass and gain scales.

    ``mass_scale`` is ``(block, pusher)``; ``gain_scale`` is ``(x, y)`` per servo axis.
    """

    friction: float = 1.0
    time_constant: float = 0.02
    mass_scale: tuple[float, float] = (1.0, 1.0)
    gain_scale: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if not self.friction >= 0:
            raise ValueError(f"friction must be >= 0, got {self.friction}")
        if not self.time_constant > 0:
            raise ValueError(f"time_constant must be > 0, got {self.time_constant}")
        if not (min(self.mass_scale) > 0 and min(self.gain_scale) > 0):
            raise ValueError("mass and gain scales must be > 0")

    @classmethod
    def nominal(cls) -> ModelParams:
        return cls()

    def effective(self, system: PushTSystem = DEFAULT_SYSTEM) -> np.ndarray:
        """Packed vector ``[friction, tau, m_block, m_pusher, kv_x, kv_y, inertia_block]``."""
        m_b = self.mass_scale[0] * system.block_mass
        return np.array([
            self.friction,
            self.time_constant,
            m_b,
            self.mass_scale[1] * system.pusher_mass,
            self.gain_scale[0] * system.servo_gain,
            self.gain_scale[1] * system.servo_gain,
            m_b * system.geometry.radius_of_gyration**2,
        ])


def pack_params(params, system: PushTSystem = DEFAULT_SYSTEM) -> np.ndarray:
    return np.stack([p.effective(system) for p in params])


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def wrap_angle(a):
    """Map an angle into (-pi, pi]."""
    return a - 2.0 * math.pi * math.ceil((a - math.pi) / (2.0 * math.pi))


@njit(cache=True, nogil=True)
def _sdf_local(qx, qy, rects, segs, normals):
    best = np.inf
    wx = 0.0
    wy = 0.0
    bi = 0
    for s in range(segs.shape[0]):
        ax = segs[s, 0]
        ay = segs[s, 1]
        ex = segs[s, 2] - ax
        ey = segs[s, 3] - ay
        t = ((qx - ax) * ex + (qy - ay) * ey) / (ex * ex + ey * ey)
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        px = ax + t * ex
        py = ay + t * ey
        d2 = (qx - px) * (qx - px) + (qy - py) * (qy - py)
        if d2 < best:
            best = d2
            wx = px
            wy = py
            bi = s
    inside = False
    for i in range(rects.shape[0]):
        if abs(qx - rects[i, 0]) <= rects[i, 2] and abs(qy - rects[i, 1]) <= rects[i, 3]:
            inside = True
    d = math.sqrt(best)
    if d > 1e-12:
        nx = (qx - wx) / d
        ny = (qy - wy) / d
        if inside:
            nx = -nx
            ny = -ny
    else:
        nx = normals[bi, 0]
        ny = normals[bi, 1]
    if inside:
        d = -d
    return d, nx, ny, wx, wy


@njit(cache=True, nogil=True)
def _sdf_world(px, py, bx, by, phi, rects, segs, normals):
    c = math.cos(phi)
    s = math.sin(phi)
    dx = px - bx
    dy = py - by
    d, nx, ny, wx, wy = _sdf_local(c * dx + s * dy, -s * dx + c * dy, rects, segs, normals)
    return d, c * nx - s * ny, s * nx + c * ny, bx + c * wx - s * wy, by + s * wx + c * wy


@njit(cache=True, nogil=True)
def _contact(x, prm, sysv, rects, segs, normals, h):
    """Penalty contact between pusher and block.

    Returns ``(fbx, fby, torque_b, fpx, fpy, normal_mag, tangent_mag)``.
    """
    d, nx, ny, wx, wy = _sdf_world(x[0], x[1], x[4], x[5], x[6], rects, segs, normals)
    pen = sysv[_RADIUS] - d
    if pen <= 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    m_b = prm[_MASS_B]
    m_p = prm[_MASS_P]
    tau = prm[_TAU]
    m_eff = 2.0 * m_b * m_p / (m_b + m_p)
    stiffness = m_eff / (tau * tau)
    damping = 2.0 * m_eff / tau
    rx = wx - x[4]
    ry = wy - x[5]
    vrx = x[2] - (x[7] - x[9] * ry)
    vry = x[3] - (x[8] + x[9] * rx)
    vn = vrx * nx + vry * ny
    fn = stiffness * pen - damping * vn
    if fn <= 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    vtx = vrx - vn * nx
    vty = vry - vn * ny
    vt = math.sqrt(vtx * vtx + vty * vty)
    ftx = 0.0
    fty = 0.0
    ft = 0.0
    if vt > 0.0:
        tx = vtx / vt
        ty = vty / vt
        rt = rx * ty - ry * tx
        inv_mass = 1.0 / m_b + rt * rt / prm[_INERTIA_B]
        if sysv[_REACTION] != 0.0:
            inv_mass += 1.0 / m_p
        # never more than what stops the relative sliding within one substep
        ft = min(prm[_FRICTION] * fn * math.tanh(vt / sysv[_VEPS]), vt / (h * inv_mass))
        ftx = -ft * tx
        fty = -ft * ty
    fpx = fn * nx + ftx
    fpy = fn * ny + fty
    fbx = -fpx
    fby = -fpy
    return fbx, fby, rx * fby - ry * fbx, fpx, fpy, fn, ft


@njit(cache=True, nogil=True)
def _advance(x, ux, uy, prm, sysv, rects, segs, normals, dt, nsub):
    """Advance ``x`` in place by one control step ``dt`` holding command ``(ux, uy)``."""
    umax = sysv[_UMAX]
    mag = math.sqrt(ux * ux + uy * uy)
    if mag > umax:
        ux = ux * umax / mag
        uy = uy * umax / mag
    h = dt / nsub
    decay_x = math.exp(-prm[_KV_X] * h)
    decay_y = math.exp(-prm[_KV_Y] * h)
    lam_g = prm[_FRICTION] * sysv[_GRAVITY]
    rgyr = sysv[_RGYR]
    for _ in range(nsub):
        fbx, fby, tb, fpx, fpy, fn, ft = _contact(x, prm, sysv, rects, segs, normals, h)
        # pusher: exact discretization of the first-order servo
        vpx = ux + (x[2] - ux) * decay_x
        vpy = uy + (x[3] - uy) * decay_y
        if sysv[_REACTION] != 0.0:
            vpx += h * fpx / prm[_MASS_P]
            vpy += h * fpy / prm[_MASS_P]
        x[2] = vpx
        x[3] = vpy
        x[0] += h * vpx
        x[1] += h * vpy
        # block: contact impulse, then ground friction capped so it cannot reverse motion
        vbx = x[7] + h * fbx / prm[_MASS_B]
        vby = x[8] + h * fby / prm[_MASS_B]
        wb = x[9] + h * tb / prm[_INERTIA_B]
        speed = math.sqrt(vbx * vbx + vby * vby)
        if speed > 0.0:
            scale = max(speed - h * lam_g * math.tanh(speed / sysv[_VEPS]), 0.0) / speed
            vbx *= scale
            vby *= scale
        spin = abs(wb)
        if spin > 0.0:
            wb *= max(spin - h * lam_g * math.tanh(spin / sysv[_WEPS]) / rgyr, 0.0) / spin
        x[7] = vbx
        x[8] = vby
        x[9] = wb
        x[4] += h * vbx
        x[5] += h * vby
        x[6] = wrap_angle(x[6] + h * wb)


@njit(cache=True, nogil=True)
def _rollout_trace(x0, knots, knot_idx, prm, sysv, rects, segs, normals, dt, nsub, states):
    x = x0.copy()
    states[0, :] = x
    for i in range(knot_idx.shape[0]):
        c = knot_idx[i]
        _advance(x, knots[c, 0], knots[c, 1], prm, sysv, rects, segs, normals, dt, nsub)
        states[i + 1, :] = x


@njit(cache=True, nogil=True)
def _hold(x0, ux, uy, prm, sysv, rects, segs, normals, dt, nsub, states):
    """Simulate ``states.shape[0] - 1`` steps holding one command; row 0 is ``x0``."""
    x = x0.copy()
    states[0, :] = x
    for i in range(1, states.shape[0]):
        _advance(x, ux, uy, prm, sysv, rects, segs, normals, dt, nsub)
        states[i, :] = x


# ---------------------------------------------------------------------------
# Python API
# ---------------------------------------------------------------------------

class SignedDistance(NamedTuple):
    distance: float
    normal: np.ndarray
    witness: np.ndarray


class ContactForces(NamedTuple):
    force_on_block: np.ndarray
    torque_on_block: float
    force_on_pusher: np.ndarray
    normal_force: float
    tangential_force: float


def signed_distance(geom: TBlockGeometry, block_pose, point) -> SignedDistance:
    """Signed distance from ``point`` to the T-union placed at ``block_pose = (p_b, phi)``.

    Negative inside. ``normal`` is the outward unit normal at the nearest
    boundary point ``witness`` (both in the world frame).
    """
    (bx, by), phi = block_pose
    segs, normals = geom.boundary
    d, nx, ny, wx, wy = _sdf_world(float(point[0]), float(point[1]), float(bx), float(by),
                                   float(phi), geom.rects, segs, normals)
    return SignedDistance(d, np.array([nx, ny]), np.array([wx, wy]))


def contact_force(state: State, params: ModelParams, system: PushTSystem = DEFAULT_SYSTEM,
                  h: float | None = None) -> ContactForces:
    """Contact forces for ``state``; ``h`` is the integration substep used by the stick cap."""
    if h is None:
        h = system.dt / system.substeps
    sysv, rects, segs, normals = system.packed
    fbx, fby, tb, fpx, fpy, fn, ft = _contact(np.asarray(state, dtype=np.float64),
                                              params.effective(system), sysv, rects, segs, normals, h)
    return ContactForces(np.array([fbx, fby]), tb, np.array([fpx, fpy]), fn, ft)


def _check_finite(a):
    if not np.all(np.isfinite(a)):
        raise SimulationError("non-finite state encountered during simulation")


def step(state: State, cmd, params: ModelParams, dt: float | None = None,
         system: PushTSystem = DEFAULT_SYSTEM) -> State:
    """Advance one control step (``system.substeps`` internal substeps)."""
    dt = system.dt if dt is None else dt
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(state, dtype=np.float64).copy()
    _check_finite(x)
    sysv, rects, segs, normals = system.packed
    _advance(x, float(cmd[0]), float(cmd[1]), params.effective(system), sysv, rects, segs, normals,
             dt, system.substeps)
    _check_finite(x)
    return State.from_array(x)


def simulate_hold(state: State, cmd, params: ModelParams, n_steps: int,
                  system: PushTSystem = DEFAULT_SYSTEM) -> np.ndarray:
    """Hold ``cmd`` for ``n_steps`` control steps; returns the ``(n_steps + 1, 10)`` state array."""
    out = np.empty((n_steps + 1, STATE_DIM))
    sysv, rects, segs, normals = system.packed
    _hold(np.asarray(state, dtype=np.float64), float(cmd[0]), float(cmd[1]), params.effective(system),
          sysv, rects, segs, normals, system.dt, system.substeps, out)
    _check_finite(out)
    return out


def rollout(x0: State, tape, params: ModelParams, horizon_steps: int | None = None,
            dt: float | None = None, system: PushTSystem = DEFAULT_SYSTEM):
    """Simulate ``tape`` from ``x0``.

    Returns ``(final_state, trace)`` where ``trace[i] = (state_i, command_i)``
    and ``command_i = eval_tape(tape, i * dt)``.
    """
    from .tape import eval_tape, knot_indices

    dt = system.dt if dt is None else dt
    if horizon_steps is None:
        horizon_steps = round(tape.horizon / dt)
    idx = knot_indices(tape, horizon_steps, dt)
    states = np.empty((horizon_steps + 1, STATE_DIM))
    sysv, rects, segs, normals = system.packed
    _rollout_trace(np.asarray(x0, dtype=np.float64), tape.knots, idx, params.effective(system),
                   sysv, rects, segs, normals, dt, system.substeps, states)
    _check_finite(states)
    trace = [(State.from_array(states[i]), eval_tape(tape, i * dt)) for i in range(horizon_steps)]
    return State.from_array(states[-1]), trace


def kinetic_energy(state: State, params: ModelParams, system: PushTSystem = DEFAULT_SYSTEM) -> float:
    """Block translational plus rotational kinetic energy."""
    prm = params.effective(system)
    return 0.5 * prm[_MASS_B] * (state.vx_b**2 + state.vy_b**2) + 0.5 * prm[_INERTIA_B] * state.wb**2
