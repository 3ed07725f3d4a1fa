"""Interacting multiple-model layer: mixing, mode probabilities, combination.

The public operations (interact / mode_likelihood / update_probabilities /
combine / contact_probabilities) are small numpy functions over a
:class:`FilterBank` value.  :class:`ImmFilter.step` fuses the same math into
one call through :mod:`contact_imm.kernels` for the per-tick hot path; a
regression test keeps the two routes identical.

Conventions baked in here:

* the Markov matrix is row-stochastic, pi[i, j] = Pr(mode j at t+1 | mode i at t);
* all likelihood arithmetic happens in log space with max-subtraction;
* mode probabilities are floored at 1e-12 and renormalized so no mode dies
  permanently;
* system matrices are linearized at the previous *combined* attitude estimate,
  shared by all modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dynamics import (
    ForceEstimate,
    ModeSet,
    build_A,
    build_B1,
    build_B2,
    build_C,
    default_mode_set,
    gravity_input,
    rotation_bf_to_wf,
)
from .errors import DegenerateBank, NonFiniteState
from .kalman import Gaussian, log_gaussian_density
from .measurements import MeasurementBundle, NoiseConfig, build_R
from .robot import RobotParams, forward_kinematics

MU_FLOOR = 1e-12
MIX_TOL = 1e-12


@dataclass
class TransitionMatrix:
    pi: np.ndarray

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float)
        M = self.pi.shape[0]
        if self.pi.shape != (M, M):
            raise ValueError("transition matrix must be square")
        if (self.pi < 0).any():
            raise ValueError("transition probabilities must be non-negative")
        if not np.allclose(self.pi.sum(axis=1), 1.0, atol=1e-12):
            raise ValueError("transition-matrix rows must sum to 1")


@dataclass
class BiasConfig:
    """Physics-based likelihood biasing weights.

    ``friction_nu`` is stored for the friction-cone constraint but currently
    unused: only the negative-normal-force penalty enters the likelihood.
    """

    c_force: float = 1e-3
    friction_nu: float = 0.6

    def __post_init__(self):
        if self.c_force < 0:
            raise ValueError("c_force must be non-negative")


@dataclass
class FilterBank:
    """Per-mode posteriors, mode probabilities, and the combined estimate."""

    means: np.ndarray  # (M, 12)
    covs: np.ndarray  # (M, 12, 12)
    mu: np.ndarray  # (M,)
    mode_set: ModeSet
    transition: TransitionMatrix
    combined: Gaussian

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        self.covs = np.asarray(self.covs, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)
        M = self.mode_set.M
        if self.means.shape[0] != M or self.covs.shape[0] != M or self.mu.shape[0] != M:
            raise ValueError("bank arrays must match the mode-set size")
        if self.transition.pi.shape[0] != M:
            raise ValueError("transition matrix must match the mode-set size")

    def validate(self, atol: float = 1e-9):
        if (self.mu < -atol).any() or (self.mu > 1 + atol).any():
            raise ValueError("mode probabilities outside [0, 1]")
        if abs(self.mu.sum() - 1.0) > atol:
            raise ValueError("mode probabilities must sum to 1")


def interact(bank: FilterBank):
    """Mixing step; returns (mixed_means, mixed_covs, c).

    Modes with prior mass c below 1e-12 are re-initialized from the combined
    estimate rather than dividing by ~0.
    """
    c_probe = bank.transition.pi.T @ bank.mu
    if (c_probe < MIX_TOL).all():
        raise DegenerateBank("all mode priors collapsed")
    return kernels.mix(
        bank.means,
        bank.covs,
        bank.mu,
        bank.transition.pi,
        bank.combined.mean,
        bank.combined.cov,
        MIX_TOL,
    )


def force_log_bias(delta, f_wf, c_force: float) -> float:
    """-h_f: quadratic penalty on negative normal force of in-contact legs."""
    h = 0.0
    for i in range(4):
        if delta[i]:
            fz = min(0.0, f_wf[i][2])
            h += fz * fz
    return -c_force * h


def mode_likelihood(innovation, S, mode, f_wf, cfg: BiasConfig) -> float:
    """Biased mode likelihood: N(innovation; 0, S) * exp(-h_f)."""
    log_l = log_gaussian_density(innovation, S) + force_log_bias(mode.delta, f_wf, cfg.c_force)
    return math.exp(log_l)


def update_probabilities(bank: FilterBank, likelihoods) -> np.ndarray:
    """mu_k = c_k L_k / sum_i c_i L_i, floored at 1e-12 and renormalized."""
    L = np.asarray(likelihoods, dtype=float)
    if (L < 0).any():
        raise ValueError("likelihoods must be non-negative")
    c = bank.transition.pi.T @ bank.mu
    weights = c * L
    total = weights.sum()
    if total <= 0.0 or not np.isfinite(total):
        raise DegenerateBank("mode probabilities underflowed to zero")
    mu = weights / total
    mu = np.maximum(mu, MU_FLOOR)
    return mu / mu.sum()


def combine(bank: FilterBank) -> Gaussian:
    """Moment-matched combination of the bank with the current mu."""
    mean, cov = kernels.combine(bank.means, bank.covs, bank.mu)
    return Gaussian(mean, cov)


def contact_probabilities(mu, modes: ModeSet) -> np.ndarray:
    """Per-leg contact probability p_i = sum_k mu_k delta_i^k."""
    return np.asarray(mu, dtype=float) @ modes.delta_matrix


@dataclass
class StepResult:
    bank: FilterBank
    combined: Gaussian
    contact_probs: np.ndarray
    mode_priors: np.ndarray = None
    loglik: np.ndarray = None


class ImmFilter:
    """One IMM-KF recursion per measurement bundle.

    Owns the static configuration (robot parameters, mode set, Markov
    transitions, noise and bias weights); the evolving estimate lives in the
    :class:`FilterBank` value passed through :meth:`step`.
    """

    def __init__(
        self,
        params: RobotParams,
        mode_set: ModeSet = None,
        transition: TransitionMatrix = None,
        noise: NoiseConfig = None,
        bias: BiasConfig = None,
        Ts: float = 0.005,
    ):
        from .harness import build_transition_matrix  # default 8-mode trot matrix

        self.params = params
        self.mode_set = mode_set if mode_set is not None else default_mode_set()
        if transition is None:
            if self.mode_set.M != 8:
                raise ValueError("a transition matrix is required for non-default mode sets")
            transition = build_transition_matrix()
        self.transition = transition
        self.noise = noise if noise is not None else NoiseConfig()
        self.bias = bias if bias is not None else BiasConfig()
        self.Ts = Ts
        self._delta = self.mode_set.delta_matrix  # (M, 4)
        self._force_mask = np.repeat(self._delta, 3, axis=1)  # (M, 12)
        self._ghat = gravity_input(params.gravity)

    def initialize(self, bundle: MeasurementBundle, cov_scale: float = 10.0) -> FilterBank:
        """Bank from the first bundle: uniform mu, state read off y, cov = 10 Q."""
        M = self.mode_set.M
        y = bundle.y
        theta0 = y[0:3]
        omega0 = rotation_bf_to_wf(theta0) @ y[6:9]
        x0 = np.concatenate([theta0, y[3:6], omega0, y[9:12]])
        P0 = cov_scale * self.noise.Q
        means = np.tile(x0, (M, 1))
        covs = np.tile(P0, (M, 1, 1))
        mu = np.full(M, 1.0 / M)
        return FilterBank(means, covs, mu, self.mode_set, self.transition, Gaussian(x0, P0))

    def step(
        self,
        bank: FilterBank,
        bundle: MeasurementBundle,
        forces_now: ForceEstimate,
        forces_prev: ForceEstimate = None,
    ) -> StepResult:
        """Full recursion: interact, per-mode filter, mu update, combine.

        ``forces_prev`` enters the process model (input applied over the last
        sampling interval); ``forces_now`` enters the measurement feedthrough
        and the likelihood biasing.  Defaults to forces_now for both.
        """
        if forces_prev is None:
            forces_prev = forces_now
        theta_hat = bank.combined.mean[0:3]

        foot_pos = np.empty((4, 3))
        for i in range(4):
            foot_pos[i] = forward_kinematics(i, bundle.legs[i].q, self.params)

        A = build_A(theta_hat)
        Ad = np.eye(12) + self.Ts * A
        B_full = build_B1(theta_hat, self.params) @ build_B2(foot_pos)
        f_prev = forces_prev.stacked()
        f_now = forces_now.stacked()
        # bd[k] = Ts * (ghat + B1 B2 (f_prev masked by mode k))
        bd = self.Ts * (self._ghat + (self._force_mask * f_prev) @ B_full.T)

        C = build_C(theta_hat)
        dfeed = np.zeros((self.mode_set.M, 15))
        dfeed[:, 12:15] = (self._delta @ forces_now.forces) / self.params.mass

        R = np.diag(build_R(self.noise, bundle.r_scale, bundle.pseudo_valid))

        R_wb = rotation_bf_to_wf(theta_hat)
        fz_wf = forces_now.forces @ R_wb.T[:, 2]  # world z of each leg force
        neg = np.minimum(0.0, fz_wf)
        log_bias = -self.bias.c_force * (self._delta @ (neg * neg))

        c_probe = bank.transition.pi.T @ bank.mu
        if (c_probe < MIX_TOL).all():
            raise DegenerateBank("all mode priors collapsed")

        means, covs, mu, cmb_mean, cmb_cov, c, loglik, _ = kernels.imm_step(
            bank.means,
            bank.covs,
            bank.mu,
            bank.transition.pi,
            Ad,
            np.ascontiguousarray(bd),
            self.noise.Q,
            C,
            dfeed,
            bundle.y,
            R,
            log_bias,
            bank.combined.mean,
            bank.combined.cov,
            MIX_TOL,
            MU_FLOOR,
        )
        if not np.isfinite(mu).all():
            raise DegenerateBank("mode probabilities became non-finite")
        if not (np.isfinite(means).all() and np.isfinite(cmb_mean).all()):
            raise NonFiniteState("IMM step produced non-finite state")

        new_bank = FilterBank(
            means, covs, mu, self.mode_set, self.transition, Gaussian(cmb_mean, cmb_cov)
        )
        p = contact_probabilities(mu, self.mode_set)
        return StepResult(new_bank, new_bank.combined, p, mode_priors=c, loglik=loglik)
