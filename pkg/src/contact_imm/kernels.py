"""Hot numeric kernels for the per-tick IMM bank recursion.

The functions here are written in plain numpy so they run unmodified in two
backends:

* compiled with ``numba.njit(cache=True)`` (default when numba imports), or
* as-is in pure numpy when ``CONTACT_IMM_NUMBA=0`` is set or numba is absent.

``*_py`` names always refer to the uncompiled originals so the benchmark can
compare both paths in one process.  The kernels share the structure of the
estimation problem: per-mode dynamics differ only through the input vectors
``bd[k]`` (switched forces) and the feedthrough ``dfeed[k]``, while Ad, Q, C
and R are evaluated once per tick at the combined attitude estimate.
"""

from __future__ import annotations

import os

import numpy as np

LOG_2PI = 1.8378770664093453


def _env_numba_enabled() -> bool:
    flag = os.environ.get("CONTACT_IMM_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USING_NUMBA = _env_numba_enabled()


def backend() -> str:
    return "numba" if USING_NUMBA else "numpy"


def mix_py(means, covs, mu, pi, fb_mean, fb_cov, tol):
    """Interaction step: mode-conditioned mixed estimates and priors c.

    Modes whose prior mass c[k] falls below ``tol`` are re-initialized from
    the previous combined estimate (fb_mean, fb_cov).
    """
    M, n = means.shape
    c = np.zeros(M)
    for k in range(M):
        acc = 0.0
        for j in range(M):
            acc += pi[j, k] * mu[j]
        c[k] = acc

    mixed_means = np.zeros((M, n))
    mixed_covs = np.zeros((M, n, n))
    for k in range(M):
        if c[k] < tol:
            mixed_means[k] = fb_mean
            mixed_covs[k] = fb_cov
            continue
        xm = np.zeros(n)
        for j in range(M):
            w = pi[j, k] * mu[j] / c[k]
            xm += w * means[j]
        Pm = np.zeros((n, n))
        for j in range(M):
            w = pi[j, k] * mu[j] / c[k]
            d = xm - means[j]
            Pm += w * (covs[j] + np.outer(d, d))
        mixed_means[k] = xm
        mixed_covs[k] = 0.5 * (Pm + Pm.T)
    return mixed_means, mixed_covs, c


def bank_filter_py(means, covs, Ad, bd, Q, C, dfeed, y, R):
    """Per-mode predict + Joseph-form update; returns log-likelihoods too."""
    M, n = means.shape
    p = y.shape[0]
    post_means = np.zeros((M, n))
    post_covs = np.zeros((M, n, n))
    loglik = np.zeros(M)
    innovations = np.zeros((M, p))
    eye_n = np.eye(n)

    for k in range(M):
        xm = Ad @ means[k] + bd[k]
        Pm = Ad @ covs[k] @ Ad.T + Q
        Pm = 0.5 * (Pm + Pm.T)

        yk = y - C @ xm - dfeed[k]
        S = C @ Pm @ C.T + R
        S = 0.5 * (S + S.T)
        L = np.linalg.cholesky(S)
        logdet = 0.0
        for i in range(p):
            logdet += np.log(L[i, i])
        logdet *= 2.0

        K = np.linalg.solve(S, C @ Pm).T
        xn = xm + K @ yk
        IKC = eye_n - K @ C
        Pn = IKC @ Pm @ IKC.T + K @ R @ K.T
        Pn = 0.5 * (Pn + Pn.T)

        alpha = yk @ np.linalg.solve(S, yk)
        loglik[k] = -0.5 * (alpha + logdet + p * LOG_2PI)
        post_means[k] = xn
        post_covs[k] = Pn
        innovations[k] = yk
    return post_means, post_covs, loglik, innovations


def mu_update_py(c, loglik, log_bias, floor):
    """Log-space probability update with flooring and renormalization."""
    M = c.shape[0]
    w = np.empty(M)
    for k in range(M):
        if c[k] > 0.0:
            w[k] = np.log(c[k]) + loglik[k] + log_bias[k]
        else:
            w[k] = -np.inf
    wmax = w[0]
    for k in range(1, M):
        if w[k] > wmax:
            wmax = w[k]
    mu = np.zeros(M)
    total = 0.0
    for k in range(M):
        mu[k] = np.exp(w[k] - wmax)
        total += mu[k]
    total2 = 0.0
    for k in range(M):
        mu[k] /= total
        if mu[k] < floor:
            mu[k] = floor
        total2 += mu[k]
    for k in range(M):
        mu[k] /= total2
    return mu


def combine_py(means, covs, mu):
    """Moment-matched combination of the bank posteriors."""
    M, n = means.shape
    mean = np.zeros(n)
    for k in range(M):
        mean += mu[k] * means[k]
    cov = np.zeros((n, n))
    for k in range(M):
        d = mean - means[k]
        cov += mu[k] * (covs[k] + np.outer(d, d))
    return mean, 0.5 * (cov + cov.T)


def imm_step_py(means, covs, mu, pi, Ad, bd, Q, C, dfeed, y, R, log_bias,
                cmb_mean, cmb_cov, mix_tol, mu_floor):
    """One full IMM recursion: interact, filter, probability update, combine."""
    mixed_means, mixed_covs, c = mix_py(means, covs, mu, pi, cmb_mean, cmb_cov, mix_tol)
    post_means, post_covs, loglik, innovations = bank_filter_py(
        mixed_means, mixed_covs, Ad, bd, Q, C, dfeed, y, R
    )
    new_mu = mu_update_py(c, loglik, log_bias, mu_floor)
    new_mean, new_cov = combine_py(post_means, post_covs, new_mu)
    return post_means, post_covs, new_mu, new_mean, new_cov, c, loglik, innovations


if USING_NUMBA:
    from numba import njit

    _jit = njit(cache=True, fastmath=False)
    mix = _jit(mix_py)
    bank_filter = _jit(bank_filter_py)
    mu_update = _jit(mu_update_py)
    combine = _jit(combine_py)

    @_jit
    def imm_step(means, covs, mu, pi, Ad, bd, Q, C, dfeed, y, R, log_bias,
                 cmb_mean, cmb_cov, mix_tol, mu_floor):
        mixed_means, mixed_covs, c = mix(means, covs, mu, pi, cmb_mean, cmb_cov, mix_tol)
        post_means, post_covs, loglik, innovations = bank_filter(
            mixed_means, mixed_covs, Ad, bd, Q, C, dfeed, y, R
        )
        new_mu = mu_update(c, loglik, log_bias, mu_floor)
        new_mean, new_cov = combine(post_means, post_covs, new_mu)
        return post_means, post_covs, new_mu, new_mean, new_cov, c, loglik, innovations

else:
    mix = mix_py
    bank_filter = bank_filter_py
    mu_update = mu_update_py
    combine = combine_py
    imm_step = imm_step_py
