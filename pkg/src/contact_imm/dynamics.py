"""Switched trunk model: rotations, mode set, and system-matrix builders.

State vector layout (12-dim, fixed across the package):

    x = [theta (roll, pitch, yaw);  d_com (world);  omega (world);  v_com (world)]

Euler convention: ZYX, i.e. R_bf_to_wf = Rz(yaw) @ Ry(pitch) @ Rx(roll) and
R_wf_to_bf is its transpose.  Attitude kinematics use the simplified mapping
theta_dot = R_wf_to_bf(theta) @ omega_wf everywhere (filter and simulator
ground truth), matching the (1,3) block of the continuous-time A; the exact
Euler-rate matrix is available via :func:`euler_rates_exact` for mismatch
studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .robot import RobotParams

NX = 12  # state dimension
NY = 15  # measurement dimension


def skew(p) -> np.ndarray:
    """Skew matrix such that skew(p) @ f == cross(p, f)."""
    x, y, z = p
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_bf_to_wf(theta) -> np.ndarray:
    """Body-to-world rotation for ZYX Euler angles (roll, pitch, yaw)."""
    cr, sr = math.cos(theta[0]), math.sin(theta[0])
    cp, sp = math.cos(theta[1]), math.sin(theta[1])
    cy, sy = math.cos(theta[2]), math.sin(theta[2])
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def rotation_wf_to_bf(theta) -> np.ndarray:
    return rotation_bf_to_wf(theta).T


def euler_rates_exact(theta, omega_bf) -> np.ndarray:
    """Exact theta_dot for ZYX angles given the body-frame angular rate."""
    cr, sr = math.cos(theta[0]), math.sin(theta[0])
    cp, tp = math.cos(theta[1]), math.tan(theta[1])
    E_inv = np.array(
        [
            [1.0, sr * tp, cr * tp],
            [0.0, cr, -sr],
            [0.0, sr / cp, cr / cp],
        ]
    )
    return E_inv @ omega_bf


@dataclass
class TrunkState:
    """12-dim trunk state split into named blocks."""

    theta: np.ndarray
    pos: np.ndarray
    omega: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.pos = np.asarray(self.pos, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        self.vel = np.asarray(self.vel, dtype=float)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.theta, self.pos, self.omega, self.vel])

    @classmethod
    def from_vector(cls, x) -> "TrunkState":
        x = np.asarray(x, dtype=float)
        return cls(x[0:3].copy(), x[3:6].copy(), x[6:9].copy(), x[9:12].copy())

    def is_valid(self) -> bool:
        x = self.as_vector()
        return bool(np.isfinite(x).all()) and abs(self.theta[0]) < math.pi / 2 and abs(self.theta[1]) < math.pi / 2


@dataclass(frozen=True)
class ContactMode:
    """One assignment of the four binary contact flags (FL, FR, RL, RR)."""

    delta: tuple
    index: int

    @property
    def label(self) -> str:
        return f"m{self.index + 1}"

    @property
    def n_contacts(self) -> int:
        return int(sum(self.delta))


# the 8 validated modes, in their published order (index 0 == mode 1)
DEFAULT_MODE_DELTAS = (
    (0, 0, 0, 0),
    (0, 1, 1, 0),
    (0, 1, 1, 1),
    (1, 0, 0, 1),
    (1, 0, 1, 1),
    (1, 1, 0, 1),
    (1, 1, 1, 0),
    (1, 1, 1, 1),
)


@dataclass
class ModeSet:
    modes: list = field(default_factory=list)

    def __post_init__(self):
        if not self.modes:
            raise ValueError("ModeSet needs at least one mode")
        deltas = [m.delta for m in self.modes]
        if len(set(deltas)) != len(deltas):
            raise ValueError("duplicate contact pattern in ModeSet")
        if [m.index for m in self.modes] != list(range(len(self.modes))):
            raise ValueError("mode indices must be 0..M-1 in order")

    @property
    def M(self) -> int:
        return len(self.modes)

    @property
    def delta_matrix(self) -> np.ndarray:
        """(M, 4) float matrix of contact flags."""
        return np.array([m.delta for m in self.modes], dtype=float)

    def index_of(self, delta) -> int | None:
        key = tuple(int(d) for d in delta)
        for m in self.modes:
            if m.delta == key:
                return m.index
        return None


def default_mode_set() -> ModeSet:
    return ModeSet([ContactMode(d, k) for k, d in enumerate(DEFAULT_MODE_DELTAS)])


@dataclass
class ForceEstimate:
    """Stacked per-leg hypothetical forces (body frame, FL/FR/RL/RR)."""

    forces: np.ndarray  # (4, 3)
    valid: np.ndarray  # (4,) bool

    def __post_init__(self):
        self.forces = np.asarray(self.forces, dtype=float)
        self.valid = np.asarray(self.valid, dtype=bool)

    @classmethod
    def zero(cls) -> "ForceEstimate":
        return cls(np.zeros((4, 3)), np.zeros(4, dtype=bool))

    def stacked(self) -> np.ndarray:
        return self.forces.reshape(12)


def build_A(theta) -> np.ndarray:
    """Continuous-time A(theta): theta_dot <- R_wf_to_bf omega, d_dot <- v."""
    A = np.zeros((NX, NX))
    A[0:3, 6:9] = rotation_wf_to_bf(theta)
    A[3:6, 9:12] = np.eye(3)
    return A


def gravity_input(g) -> np.ndarray:
    """Gravity as a 12-dim drift entering the v_dot block."""
    ghat = np.zeros(NX)
    ghat[9:12] = g
    return ghat


def build_B1(theta, params: RobotParams) -> np.ndarray:
    """Rotation/inertia map from body-frame wrench to state derivatives."""
    R = rotation_bf_to_wf(theta)
    B1 = np.zeros((NX, 6))
    B1[6:9, 0:3] = R @ np.linalg.inv(params.inertia)
    B1[9:12, 3:6] = R / params.mass
    return B1


def build_B2(foot_positions, delta=None) -> np.ndarray:
    """Per-leg force-to-wrench map; legs with delta == 0 are zeroed out."""
    B2 = np.zeros((6, NX))
    for i in range(4):
        d = 1.0 if delta is None else float(delta[i])
        B2[0:3, 3 * i : 3 * i + 3] = d * skew(foot_positions[i])
        B2[3:6, 3 * i : 3 * i + 3] = d * np.eye(3)
    return B2


def build_B(theta, foot_positions, mode: ContactMode, params: RobotParams) -> np.ndarray:
    return build_B1(theta, params) @ build_B2(foot_positions, mode.delta)


def discretize(A, B, g, Ts):
    """First-order Euler discretization: Ad = I + Ts A, Bd = Ts B, gd = Ts ghat."""
    if Ts <= 0:
        raise ValueError("Ts must be positive")
    Ad = np.eye(NX) + Ts * A
    Bd = Ts * B
    gd = Ts * gravity_input(g)
    return Ad, Bd, gd


def build_C(theta) -> np.ndarray:
    """Measurement map for y = [theta; p~; omega_bf; v~; a_bf]."""
    C = np.zeros((NY, NX))
    C[0:3, 0:3] = np.eye(3)
    C[3:6, 3:6] = np.eye(3)
    C[6:9, 6:9] = rotation_wf_to_bf(theta)
    C[9:12, 9:12] = np.eye(3)
    return C


def build_D(mode: ContactMode, mass: float) -> np.ndarray:
    """Force feedthrough: acceleration rows sum the in-contact leg forces."""
    D = np.zeros((NY, NX))
    for i in range(4):
        if mode.delta[i]:
            D[12:15, 3 * i : 3 * i + 3] = np.eye(3) / mass
    return D
