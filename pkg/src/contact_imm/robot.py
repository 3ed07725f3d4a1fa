"""Quadruped parameters and per-leg kinematics.

Leg chain convention, used consistently by every module that touches legs:
each leg has three revolute joints,

    q[0]  hip roll,  about the body x axis, located at the hip mount point
    q[1]  hip pitch, about the body y axis
    q[2]  knee pitch, about the body y axis (0 = fully extended / singular)

followed by three links: ``l_hip`` pointing laterally toward the leg's side
(+y for left legs FL/RL, -y for right legs FR/RR), then ``l_thigh`` and
``l_calf``, both hanging straight down at q = 0.  With the default geometry
the FL foot at q = 0 sits at hip + (0, l_hip, -(l_thigh + l_calf)).

All positions are expressed in the body frame relative to the trunk CoM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import SingularJacobian, UnreachableTarget


class LegIndex(IntEnum):
    FL = 0
    FR = 1
    RL = 2
    RR = 3


LEG_NAMES = ("FL", "FR", "RL", "RR")

# lateral sign of the hip link per leg, in LegIndex order
SIDE_SIGN = (1.0, -1.0, 1.0, -1.0)

# sampling ranges used by randomized tests; keeps configurations away from
# the straight-knee singularity
JOINT_LIMITS = np.array([[-0.8, 0.8], [-1.0, 3.9], [-2.7, -0.6]])


def _default_inertia() -> np.ndarray:
    return np.diag([0.12, 0.45, 0.50])


def _default_hips() -> np.ndarray:
    return np.array(
        [
            [0.18, 0.13, 0.0],
            [0.18, -0.13, 0.0],
            [-0.18, 0.13, 0.0],
            [-0.18, -0.13, 0.0],
        ]
    )


@dataclass
class RobotParams:
    """Physical trunk and leg parameters.

    ``force_transpose_convention`` selects how joint torques map to foot
    forces: the default inverts the Jacobian directly (f = J^-1 tau); the
    alternative uses the statics relation (f = J^-T tau).  The simulator
    synthesizes torques with the matching convention so the round trip is
    exact either way.
    """

    mass: float = 12.5
    inertia: np.ndarray = field(default_factory=_default_inertia)
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    hip_offsets: np.ndarray = field(default_factory=_default_hips)
    l_hip: float = 0.08
    l_thigh: float = 0.21
    l_calf: float = 0.21
    force_transpose_convention: bool = False

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float)
        self.gravity = np.asarray(self.gravity, dtype=float)
        self.hip_offsets = np.asarray(self.hip_offsets, dtype=float)
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.inertia.shape != (3, 3) or not np.allclose(self.inertia, self.inertia.T):
            raise ValueError("inertia must be a symmetric 3x3 matrix")
        if np.linalg.eigvalsh(self.inertia).min() <= 0:
            raise ValueError("inertia must be positive definite")
        if self.hip_offsets.shape != (4, 3):
            raise ValueError("hip_offsets must be 4x3 (FL, FR, RL, RR)")

    @property
    def max_reach(self) -> float:
        return self.l_hip + self.l_thigh + self.l_calf


@dataclass
class LegState:
    """Joint-level sensor readings of one leg."""

    q: np.ndarray
    q_dot: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.q_dot = np.asarray(self.q_dot, dtype=float)
        self.tau = np.asarray(self.tau, dtype=float)

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.q).all()
            and np.isfinite(self.q_dot).all()
            and np.isfinite(self.tau).all()
        )


def forward_kinematics(leg, q, params: RobotParams) -> np.ndarray:
    """Foot position relative to the trunk CoM, body frame."""
    s = SIDE_SIGN[leg]
    lt, lc = params.l_thigh, params.l_calf
    c1, s1 = math.cos(q[0]), math.sin(q[0])
    s2, c2 = math.sin(q[1]), math.cos(q[1])
    s23, c23 = math.sin(q[1] + q[2]), math.cos(q[1] + q[2])

    ux = -(lt * s2 + lc * s23)
    uz = -(lt * c2 + lc * c23)
    wy = s * params.l_hip

    p = np.array([ux, c1 * wy - s1 * uz, s1 * wy + c1 * uz])
    return params.hip_offsets[leg] + p


def jacobian(leg, q, params: RobotParams) -> np.ndarray:
    """Analytic Jacobian of ``forward_kinematics`` with respect to q."""
    s = SIDE_SIGN[leg]
    lt, lc = params.l_thigh, params.l_calf
    c1, s1 = math.cos(q[0]), math.sin(q[0])
    s2, c2 = math.sin(q[1]), math.cos(q[1])
    s23, c23 = math.sin(q[1] + q[2]), math.cos(q[1] + q[2])

    uz = -(lt * c2 + lc * c23)
    wy = s * params.l_hip
    dux_d2 = -(lt * c2 + lc * c23)
    dux_d3 = -lc * c23
    duz_d2 = lt * s2 + lc * s23
    duz_d3 = lc * s23

    return np.array(
        [
            [0.0, dux_d2, dux_d3],
            [-s1 * wy - c1 * uz, -s1 * duz_d2, -s1 * duz_d3],
            [c1 * wy - s1 * uz, c1 * duz_d2, c1 * duz_d3],
        ]
    )


def foot_velocity(leg, q, q_dot, params: RobotParams) -> np.ndarray:
    """Foot velocity relative to the CoM, body frame: J(q) q_dot."""
    return jacobian(leg, q, params) @ np.asarray(q_dot, dtype=float)


def torque_from_force(leg, q, f, params: RobotParams) -> np.ndarray:
    """Joint torques consistent with the configured force-recovery convention."""
    J = jacobian(leg, q, params)
    if params.force_transpose_convention:
        return J.T @ f
    return J @ f


def estimate_contact_force(leg, q, tau, params: RobotParams):
    """Hypothetical contact force of one leg from its joint torques.

    Returns ``(f_hat, cond)`` where ``cond`` is the condition number of the
    Jacobian at q.  Raises :class:`SingularJacobian` when \|det J\| < 1e-9;
    callers are expected to hold the previous valid estimate for that leg.
    """
    J = jacobian(leg, q, params)
    det = np.linalg.det(J)
    if abs(det) < 1e-9:
        raise SingularJacobian(f"leg {LEG_NAMES[leg]}: |det J| = {abs(det):.3e}")
    A = J.T if params.force_transpose_convention else J
    f_hat = np.linalg.solve(A, np.asarray(tau, dtype=float))
    return f_hat, float(np.linalg.cond(J))


def inverse_kinematics(leg, p_bf, params: RobotParams) -> np.ndarray:
    """Joint angles placing the foot at ``p_bf`` (body frame, rel. CoM).

    Picks the knee-bent-backward branch (knee angle negative), which is the
    branch the gait generator stays on.  Used by the simulator only.
    """
    s = SIDE_SIGN[leg]
    lt, lc = params.l_thigh, params.l_calf
    r = np.asarray(p_bf, dtype=float) - params.hip_offsets[leg]

    rho = math.hypot(r[1], r[2])
    if rho < params.l_hip:
        raise UnreachableTarget(f"leg {LEG_NAMES[leg]}: target inside hip-link cylinder")
    q1 = math.atan2(r[2], r[1]) + math.acos(max(-1.0, min(1.0, s * params.l_hip / rho)))

    c1, s1 = math.cos(q1), math.sin(q1)
    ux = r[0]
    uz = -s1 * r[1] + c1 * r[2]

    a, b = -ux, -uz
    d = (a * a + b * b - lt * lt - lc * lc) / (2.0 * lt * lc)
    if not -1.0 <= d <= 1.0:
        raise UnreachableTarget(f"leg {LEG_NAMES[leg]}: planar reach {math.hypot(a, b):.3f} m")
    q3 = -math.acos(d)
    q2 = math.atan2(a, b) - math.atan2(lc * math.sin(q3), lt + lc * math.cos(q3))
    return np.array([q1, q2, q3])
