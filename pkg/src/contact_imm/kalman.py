"""Single-model Kalman filter with exposed innovation for the IMM layer.

Stateless: both operations map value types to value types, so the IMM bank
can run its per-mode filters in any order (or concurrently) with identical
results.  The covariance update defaults to Joseph form, which is algebraic
identical to (I - KC) P but keeps the result PSD in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteState, SingularInnovation


def symmetrize(P) -> np.ndarray:
    return 0.5 * (P + P.T)


@dataclass
class Gaussian:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)

    def copy(self) -> "Gaussian":
        return Gaussian(self.mean.copy(), self.cov.copy())


@dataclass
class UpdateResult:
    posterior: Gaussian
    innovation: np.ndarray
    innovation_cov: np.ndarray


def predict(prior: Gaussian, Ad, bd, Q) -> Gaussian:
    """Time update: mean' = Ad mean + bd, cov' = Ad cov Ad^T + Q."""
    mean = Ad @ prior.mean + bd
    cov = symmetrize(Ad @ prior.cov @ Ad.T + Q)
    if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
        raise NonFiniteState("prediction produced non-finite values")
    return Gaussian(mean, cov)


def update(pred: Gaussian, y, C, d_feed, R, joseph: bool = True) -> UpdateResult:
    """Measurement update with feedthrough: innovation = y - C mean - d_feed."""
    P = pred.cov
    innovation = np.asarray(y, dtype=float) - C @ pred.mean - d_feed
    S = symmetrize(C @ P @ C.T + R)
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is not positive definite") from exc

    K = np.linalg.solve(S, C @ P).T  # P C^T S^-1 via the symmetric solve
    mean = pred.mean + K @ innovation
    IKC = np.eye(P.shape[0]) - K @ C
    if joseph:
        cov = IKC @ P @ IKC.T + K @ R @ K.T
    else:
        cov = IKC @ P
    cov = symmetrize(cov)
    if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
        raise NonFiniteState("update produced non-finite values")
    return UpdateResult(Gaussian(mean, cov), innovation, S)


def log_gaussian_density(residual, S) -> float:
    """log N(residual; 0, S) via Cholesky; raises SingularInnovation."""
    r = np.asarray(residual, dtype=float)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is not positive definite") from exc
    z = np.linalg.solve(L, r)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return float(-0.5 * (z @ z + logdet + r.size * np.log(2.0 * np.pi)))
