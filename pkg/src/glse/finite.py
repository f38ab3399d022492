"""Finite-dimension precoders: convex solver, exhaustive oracles, baselines.

The precoders minimize ||H v - sqrt(rho) s||^2 + sum_n u(v_n) over the
declared per-entry support. Convex scenarios (no l0 weight, full plane or
disk) use an accelerated proximal-gradient method; discrete and l0
scenarios have exact enumeration oracles at small N; the regularized
zero-forcer is the quadratic-penalty closed form used as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .errors import ConfigurationError, DomainError
from .penalties import DISK, FULL, MPSK_ZERO, PenaltySpec, SupportSpec, prox

MAX_ENUM_L0 = 16
MAX_ENUM_DISCRETE = 10**8
DEFAULT_MAX_ITER = 50_000
DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class PrecodeOutput:
    """Solver result with per-realization diagnostics."""

    x: np.ndarray
    objective: float
    distortion: float
    power: float
    activity: float
    iterations: int
    converged: bool


def _check_instance(h, s):
    h = np.asarray(h, dtype=complex)
    s = np.asarray(s, dtype=complex)
    if h.ndim != 2:
        raise ConfigurationError("H must be a 2-D array")
    if s.ndim != 1 or s.shape[0] != h.shape[0]:
        raise ConfigurationError(
            f"s has shape {s.shape}, expected ({h.shape[0]},)")
    return h, s


def objective_value(h, s, rho, penalty, x):
    """Composite objective ||Hx - sqrt(rho) s||^2 + sum_n u(x_n)."""
    resid = h @ x - np.sqrt(rho) * s
    return float(np.vdot(resid, resid).real + np.sum(penalty.value(x)))


def _output(h, s, rho, penalty, x, iterations, converged):
    k, n = h.shape
    resid = h @ x - np.sqrt(rho) * s
    sq = float(np.vdot(resid, resid).real)
    return PrecodeOutput(
        x=x,
        objective=sq + float(np.sum(penalty.value(x))),
        distortion=sq / k,
        power=float(np.vdot(x, x).real) / n,
        activity=float(np.count_nonzero(x)) / n,
        iterations=int(iterations),
        converged=bool(converged),
    )


def _capped_prox(penalty, support, w, step, power_cap):
    """Proximal map with an optional average-power ball constraint.

    The ball prox is exact composition: soft thresholding fixes the active
    set independently of any extra ridge multiplier, so projecting the
    thresholded point radially onto the ball solves the joint subproblem.
    """
    v = prox(penalty, support, w, step)
    if power_cap is not None:
        budget = power_cap * v.size
        nrm2 = float(np.vdot(v, v).real)
        if nrm2 > budget:
            v = v * np.sqrt(budget / nrm2)
    return v


def optimality_residual(h, s, rho, penalty, support, x, power_cap=None):
    """Proximal fixed-point residual ||x - prox(x - grad/L)|| of the iterate."""
    lip = 2.0 * np.linalg.norm(h, 2) ** 2
    grad = 2.0 * (h.conj().T @ (h @ x - np.sqrt(rho) * s))
    step = 1.0 / lip
    return float(np.linalg.norm(
        x - _capped_prox(penalty, support, x - step * grad, step, power_cap)))


def glse_convex(h, s, rho, penalty: PenaltySpec, support: SupportSpec,
                max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL,
                power_cap=None) -> PrecodeOutput:
    """Accelerated proximal-gradient solver for the convex scenarios.

    Args:
        h: K x N channel matrix.
        s: length-K data vector.
        rho: power control factor (nonnegative).
        penalty: weights with lambda0 = 0; lambda2 may be negative as long
            as the proximal subproblem stays convex.
        support: full plane or disk.
        max_iter: iteration cap; hitting it returns converged=False.
        tol: relative objective-decrease stopping threshold.
        power_cap: optional average-power budget per antenna. Iterates are
            kept inside ||x||^2 <= N * power_cap. Required on the full
            plane when a weight is negative, where the unconstrained
            objective is unbounded along the channel null space and the
            negative weights act as multipliers of an active power target.

    Returns:
        PrecodeOutput; x is the best (lowest-objective) iterate seen.
    """
    h, s = _check_instance(h, s)
    if penalty.lambda0 != 0:
        raise ConfigurationError("glse_convex requires lambda0 = 0")
    if support.kind not in (FULL, DISK):
        raise ConfigurationError(
            "glse_convex covers the full-plane and disk supports")
    if rho < 0:
        raise ConfigurationError("rho must be nonnegative")
    if power_cap is not None and not power_cap > 0:
        raise ConfigurationError("power_cap must be positive")
    if (power_cap is None and support.kind == FULL
            and (penalty.lambda2 < 0 or penalty.lambda1 < 0)):
        raise ConfigurationError(
            "negative weights on the full plane need a power_cap: the "
            "unconstrained objective is unbounded below")
    n = h.shape[1]
    lip = 2.0 * np.linalg.norm(h, 2) ** 2
    if lip == 0:
        x = np.zeros(n, dtype=complex)
        return _output(h, s, rho, penalty, x, 0, True)
    step = 1.0 / lip
    hs = np.sqrt(rho) * s
    gram = h.conj().T @ h
    hts = h.conj().T @ hs

    def grad(v):
        return 2.0 * (gram @ v - hts)

    x = np.zeros(n, dtype=complex)
    y = x.copy()
    t = 1.0
    f_best = objective_value(h, s, rho, penalty, x)
    x_best = x.copy()
    f_prev = f_best
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        x_new = _capped_prox(penalty, support, y - step * grad(y), step,
                             power_cap)
        f_new = objective_value(h, s, rho, penalty, x_new)
        if f_new > f_prev:
            # monotone restart: drop momentum and step from the last iterate
            t = 1.0
            y = x.copy()
            x_new = _capped_prox(penalty, support, y - step * grad(y),
                                 step, power_cap)
            f_new = objective_value(h, s, rho, penalty, x_new)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
        if f_new < f_best:
            f_best, x_best = f_new, x_new.copy()
        if abs(f_prev - f_new) <= tol * max(abs(f_prev), 1e-300):
            # objective has plateaued; accept only with a certificate that
            # the proximal fixed-point residual is small as well
            fp = np.linalg.norm(
                x_new - _capped_prox(penalty, support,
                                     x_new - step * grad(x_new), step,
                                     power_cap))
            if fp <= 1e-7 * (1.0 + np.linalg.norm(x_new)):
                f_prev = f_new
                converged = True
                break
        f_prev = f_new
    return _output(h, s, rho, penalty, x_best, it, converged)


def rzf(h, s, rho, lambda2) -> PrecodeOutput:
    """Regularized zero-forcing closed form sqrt(rho) H^H (HH^H + la I)^-1 s."""
    h, s = _check_instance(h, s)
    k = h.shape[0]
    gram = h @ h.conj().T + lambda2 * np.eye(k)
    try:
        z = np.linalg.solve(gram, np.sqrt(rho) * s)
    except np.linalg.LinAlgError as exc:
        raise DomainError(f"singular system with lambda2 = {lambda2}") from exc
    x = h.conj().T @ z
    return _output(h, s, rho, PenaltySpec(lambda2=lambda2), x, 1, True)


def _ridge_on_support(h, hs, idx, lambda2):
    """Minimize ||H_S v - hs||^2 + lambda2 ||v||^2 on the active columns."""
    h_s = h[:, idx]
    if lambda2 > 0:
        gram = h_s.conj().T @ h_s + lambda2 * np.eye(len(idx))
        return np.linalg.solve(gram, h_s.conj().T @ hs)
    return np.linalg.lstsq(h_s, hs, rcond=None)[0]


def glse_exhaustive_l0(h, s, rho, penalty: PenaltySpec,
                       max_n=MAX_ENUM_L0) -> PrecodeOutput:
    """Exact l0-penalized minimizer by enumerating all 2^N supports.

    Args:
        h: K x N channel matrix with N <= 16.
        s: length-K data vector.
        rho: power control factor.
        penalty: weights with lambda1 = 0.

    Returns:
        PrecodeOutput at the global optimum.
    """
    h, s = _check_instance(h, s)
    if penalty.lambda1 != 0:
        raise ConfigurationError("glse_exhaustive_l0 requires lambda1 = 0")
    n = h.shape[1]
    if n > max_n:
        raise ConfigurationError(
            f"N = {n} exceeds the enumeration guard {max_n}; use glse_convex "
            "with an l1 surrogate instead")
    hs = np.sqrt(rho) * s
    base = float(np.vdot(hs, hs).real)  # empty support objective
    best_obj = base
    best_x = np.zeros(n, dtype=complex)
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        v = _ridge_on_support(h, hs, idx, penalty.lambda2)
        resid = h[:, idx] @ v - hs
        obj = (float(np.vdot(resid, resid).real)
               + penalty.lambda2 * float(np.vdot(v, v).real)
               + penalty.lambda0 * len(idx))
        if obj < best_obj - 1e-15:
            best_obj = obj
            best_x = np.zeros(n, dtype=complex)
            best_x[idx] = v
    return _output(h, s, rho, penalty, best_x, 1 << n, True)


def glse_exhaustive_discrete(h, s, rho, lambda2, support: SupportSpec,
                             chunk=1 << 14) -> PrecodeOutput:
    """Exact minimizer over the zero-extended constellation by enumeration.

    Args:
        h: K x N channel matrix with (M+1)^N <= 1e8.
        s: length-K data vector.
        rho: power control factor.
        lambda2: quadratic penalty weight.
        support: zero-extended constellation.

    Returns:
        PrecodeOutput at the global optimum.
    """
    h, s = _check_instance(h, s)
    if support.kind != MPSK_ZERO:
        raise ConfigurationError(
            "glse_exhaustive_discrete requires the constellation support")
    n = h.shape[1]
    points = support.constellation()
    m1 = len(points)
    total = m1**n
    if total > MAX_ENUM_DISCRETE:
        raise ConfigurationError(
            f"(M+1)^N = {total} exceeds the enumeration guard "
            f"{MAX_ENUM_DISCRETE}")
    penalty = PenaltySpec(lambda2=lambda2)
    hs = np.sqrt(rho) * s
    radix = m1 ** np.arange(n)
    best_obj = np.inf
    best_x = None
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = (idx[:, None] // radix[None, :]) % m1
        cand = points[digits]  # (chunk, N)
        resid = cand @ h.T - hs[None, :]
        obj = (np.sum(np.abs(resid) ** 2, axis=1)
               + lambda2 * np.sum(np.abs(cand) ** 2, axis=1))
        j = int(np.argmin(obj))
        if obj[j] < best_obj:
            best_obj = float(obj[j])
            best_x = cand[j].copy()
    return _output(h, s, rho, penalty, best_x, total, True)


def tas_strongest(h, n_active):
    """Indices of the n_active columns with largest norms (ties: lower index)."""
    h = np.asarray(h, dtype=complex)
    n = h.shape[1]
    if not 1 <= n_active <= n:
        raise ConfigurationError(f"n_active must lie in [1, {n}]")
    norms = np.linalg.norm(h, axis=0)
    order = np.argsort(-norms, kind="stable")
    return np.sort(order[:n_active])


def tas_random(n, n_active, seed):
    """Uniformly random n_active-subset of range(n), deterministic in seed."""
    if not 1 <= n_active <= n:
        raise ConfigurationError(f"n_active must lie in [1, {n}]")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=n_active, replace=False))


def block_stack(channels, data):
    """Stack per-block instances into one block-diagonal GLSE instance.

    Args:
        channels: list of K x N channel matrices, all the same shape.
        data: list of length-K data vectors, one per channel.

    Returns:
        (H_t, s_t): block-diagonal (KB x NB) matrix and concatenated vector.
    """
    if len(channels) == 0 or len(channels) != len(data):
        raise ConfigurationError("channels and data must be equal-length, "
                                 "nonempty lists")
    shape = np.asarray(channels[0]).shape
    pairs = [_check_instance(hb, sb) for hb, sb in zip(channels, data)]
    for hb, _ in pairs:
        if hb.shape != shape:
            raise ConfigurationError("all blocks must share the same shape")
    h_t = block_diag(*[hb for hb, _ in pairs])
    s_t = np.concatenate([sb for _, sb in pairs])
    return h_t, s_t
