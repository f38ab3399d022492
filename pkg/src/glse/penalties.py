"""Penalty model and scalar decoupled precoders.

The penalty is u(v) = lambda2*|v|^2 + lambda0*1{v != 0} + lambda1*|v| over a
support that is the full complex plane, a disk of peak power P, or an M-PSK
constellation extended with zero. `decouple` evaluates the closed-form
minimizer of |v - s|^2 + xi*u(v); `decouple_grid` is the brute-force oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError

FULL = "full"
DISK = "disk"
MPSK_ZERO = "mpsk_zero"
CONST_ENVELOPE = "const_envelope"


@dataclass(frozen=True)
class PenaltySpec:
    """Separable penalty weights.

    All weights may be negative: tuning to aggressive targets at light
    loads lands on a continued fixed-point branch where the penalty factor
    xi is negative, so the effective scalar weights xi*lambda stay
    positive while the nominal weights flip sign. Well-posedness of the
    scalar problem (1 + xi*lambda2 > 0, xi*lambda0 >= 0, xi*lambda1 >= 0)
    is checked where the weights are used.
    """

    lambda2: float = 0.0
    lambda0: float = 0.0
    lambda1: float = 0.0

    def value(self, v):
        """u(v), elementwise for arrays."""
        mag = np.abs(v)
        return (self.lambda2 * mag**2 + self.lambda1 * mag
                + self.lambda0 * (mag > 0))


@dataclass(frozen=True)
class SupportSpec:
    """Admissible alphabet for each transmit entry."""

    kind: str
    peak_power: float = np.inf
    order: int = 0

    def __post_init__(self):
        if self.kind not in (FULL, DISK, MPSK_ZERO, CONST_ENVELOPE):
            raise ConfigurationError(f"unknown support kind {self.kind!r}")
        if self.kind != FULL and not self.peak_power > 0:
            raise ConfigurationError("peak_power must be positive")
        if self.kind == MPSK_ZERO and self.order < 2:
            raise ConfigurationError("constellation order must be >= 2")

    @classmethod
    def full_complex(cls):
        return cls(kind=FULL)

    @classmethod
    def disk(cls, peak_power):
        return cls(kind=DISK, peak_power=float(peak_power))

    @classmethod
    def mpsk_zero(cls, order, peak_power):
        return cls(kind=MPSK_ZERO, peak_power=float(peak_power),
                   order=int(order))

    @classmethod
    def constant_envelope(cls, peak_power):
        """Limit of the zero-extended constellation as the order grows."""
        return cls(kind=CONST_ENVELOPE, peak_power=float(peak_power))

    def constellation(self):
        """The finite alphabet {0} u {sqrt(P) e^{j 2k pi/M}}, k = 1..M."""
        if self.kind != MPSK_ZERO:
            raise ConfigurationError("constellation defined only for mpsk_zero")
        k = np.arange(1, self.order + 1)
        points = np.sqrt(self.peak_power) * np.exp(2j * np.pi * k / self.order)
        return np.concatenate(([0.0 + 0.0j], points))

    def contains(self, v, tol=1e-9):
        if self.kind == FULL:
            return True
        if self.kind == DISK:
            return abs(v) <= np.sqrt(self.peak_power) + tol
        if self.kind == CONST_ENVELOPE:
            mag = abs(v)
            return mag <= tol or abs(mag - np.sqrt(self.peak_power)) <= tol
        return bool(np.min(np.abs(self.constellation() - v)) <= tol)


@dataclass(frozen=True)
class DecoupledInput:
    """Realization of the scalar decoupled input and its penalty factor."""

    value: complex
    xi: float

    def __post_init__(self):
        if not (np.isfinite(self.xi) and self.xi > 0):
            raise ConfigurationError("xi must be finite and positive")


def scalar_objective(v, s, xi, penalty: PenaltySpec,
                     support: SupportSpec | None = None):
    """|v - s|^2 + xi*u(v); the quantity minimized by the decoupled precoder."""
    if support is not None and not support.contains(v):
        raise DomainError(f"v = {v} outside support {support.kind}")
    return float(abs(v - s) ** 2 + xi * penalty.value(v))


def _phase(s):
    if s == 0:
        return 1.0 + 0.0j
    return s / abs(s)


def _effective_threshold(value):
    """Validate that an effective (xi-scaled) sparse weight is nonnegative."""
    if value < 0:
        raise DomainError(
            f"effective sparse weight {value} < 0: the scalar problem has "
            "no thresholding minimizer (check signs of xi and the weights)")
    return value


def _shrink_factor(xi, lambda2):
    shrink = 1.0 + xi * lambda2
    if shrink <= 0:
        raise DomainError(
            f"1 + xi*lambda2 = {shrink} <= 0: scalar problem not coercive")
    return shrink


def _decouple_full(s, xi, penalty):
    lam, lam0, lam1 = penalty.lambda2, penalty.lambda0, penalty.lambda1
    if lam0 != 0 and lam1 != 0:
        raise ConfigurationError(
            "combined l0+l1 penalty on the full plane is not a covered "
            "scenario; use decouple_grid")
    shrink = _shrink_factor(xi, lam)
    mag = abs(s)
    if lam1 != 0:
        tau1 = _effective_threshold(xi * lam1 / 2.0)
        if mag > tau1:
            return _phase(s) * (mag - tau1) / shrink
        return 0.0 + 0.0j
    tau0 = np.sqrt(_effective_threshold(xi * lam0 * shrink))
    if mag > tau0:
        return s / shrink
    return 0.0 + 0.0j


def _decouple_disk(s, xi, penalty, peak_power):
    lam, lam0, lam1 = penalty.lambda2, penalty.lambda0, penalty.lambda1
    if lam0 != 0 and lam1 != 0:
        raise ConfigurationError(
            "combined l0+l1 penalty on the disk is not a covered scenario; "
            "use decouple_grid")
    shrink = _shrink_factor(xi, lam)
    root_p = np.sqrt(peak_power)
    mag = abs(s)
    if lam1 != 0:
        tau1 = _effective_threshold(xi * lam1 / 2.0)
        tau1_clip = root_p * shrink + tau1
        if mag > tau1_clip:
            return root_p * _phase(s)
        if mag > tau1:
            return _phase(s) * (mag - tau1) / shrink
        return 0.0 + 0.0j
    tau0 = np.sqrt(_effective_threshold(xi * lam0 * shrink))
    tau0_clip = shrink * root_p
    tau0_hat = max(tau0_clip, shrink * root_p / 2.0 + xi * lam0 / (2.0 * root_p))
    if mag > tau0_hat:
        return root_p * _phase(s)
    if tau0 < mag <= tau0_clip:
        return s / shrink
    return 0.0 + 0.0j


def _mpsk_best_phase(theta, order):
    """Index k in [1:M] maximizing cos(2k pi/M - theta); ties toward smaller k."""
    k = np.arange(1, order + 1)
    scores = np.cos(2 * np.pi * k / order - theta)
    return int(k[np.argmax(scores)])  # argmax returns first max: smaller k


def _decouple_mpsk(s, xi, penalty, peak_power, order):
    if penalty.lambda0 != 0 or penalty.lambda1 != 0:
        raise ConfigurationError(
            "constellation scenario covers the quadratic penalty only")
    shrink = _shrink_factor(xi, penalty.lambda2)
    root_p = np.sqrt(peak_power)
    theta = np.angle(s) if s != 0 else 0.0
    k_star = _mpsk_best_phase(theta, order)
    score = np.cos(2 * np.pi * k_star / order - theta)
    if score <= 0:
        return 0.0 + 0.0j
    tau = root_p * shrink / (2.0 * score)
    if abs(s) > tau:
        return root_p * np.exp(2j * np.pi * k_star / order)
    return 0.0 + 0.0j


def decouple(s, xi, penalty: PenaltySpec, support: SupportSpec):
    """Closed-form minimizer of |v - s|^2 + xi*u(v) over the support.

    Covers the five scenarios: l0 or l1 penalty on the full plane, l0 or l1
    penalty on the disk, and the quadratic penalty on the zero-extended
    constellation. Exact threshold ties resolve to 0.
    """
    if xi == 0:
        raise ConfigurationError("xi must be nonzero")
    s = complex(s)
    if support.kind == FULL:
        return complex(_decouple_full(s, xi, penalty))
    if support.kind == DISK:
        return complex(_decouple_disk(s, xi, penalty, support.peak_power))
    if support.kind == CONST_ENVELOPE:
        if penalty.lambda0 != 0 or penalty.lambda1 != 0:
            raise ConfigurationError(
                "constant-envelope scenario covers the quadratic penalty only")
        return complex(decouple_ce(s, xi, penalty.lambda2, support.peak_power))
    return complex(_decouple_mpsk(s, xi, penalty, support.peak_power,
                                  support.order))


def decouple_grid(s, xi, penalty: PenaltySpec, support: SupportSpec,
                  resolution: int = 256):
    """Brute-force minimizer over a polar grid (oracle for decouple).

    The magnitude axis is truncated where the quadratic term provably
    dominates; for the constellation support the finite set is enumerated
    exactly. Ties break toward smaller |v|, then smaller phase.
    """
    if resolution < 64:
        raise ConfigurationError("resolution must be >= 64")
    s = complex(s)
    if support.kind == MPSK_ZERO:
        candidates = support.constellation()
        # order by (|v|, canonical phase) so argmin tie-breaks correctly
        mags = np.abs(candidates)
        phases = np.mod(np.angle(candidates), 2 * np.pi)
        order = np.lexsort((phases, mags))
        candidates = candidates[order]
    elif support.kind == CONST_ENVELOPE:
        phases = np.linspace(0.0, 2 * np.pi, resolution, endpoint=False)
        ring = np.sqrt(support.peak_power) * np.exp(1j * phases)
        candidates = np.concatenate(([0.0 + 0.0j], ring))
    else:
        r_max = 4 * abs(s) + 4 * np.sqrt(
            xi * penalty.lambda0 + xi * penalty.lambda1 + 1.0)
        if penalty.lambda2 < 0:
            # amplifying quadratic weight: widen so |s|/(1+xi*lambda2) fits
            r_max /= min(1.0, _shrink_factor(xi, penalty.lambda2))
        if support.kind == DISK:
            r_max = min(r_max, np.sqrt(support.peak_power))
        radii = np.linspace(0.0, r_max, resolution)
        phases = np.linspace(0.0, 2 * np.pi, resolution, endpoint=False)
        ring = np.exp(1j * phases)
        candidates = np.concatenate(
            ([0.0 + 0.0j], (radii[1:, None] * ring[None, :]).ravel()))
    obj = (np.abs(candidates - s) ** 2 + xi * penalty.value(candidates))
    return complex(candidates[np.argmin(obj)])


def prox(penalty: PenaltySpec, support: SupportSpec, w, step):
    """Proximal map argmin_v 0.5|v - w|^2 + step*(lambda2|v|^2 + lambda1|v|).

    Convex penalties only (lambda0 = 0) on the full plane or the disk.
    Accepts scalars or arrays; phase of w is preserved.
    """
    if penalty.lambda0 != 0:
        raise ConfigurationError("prox requires lambda0 = 0 (convex penalty)")
    if support.kind == MPSK_ZERO:
        raise ConfigurationError("prox covers full-plane and disk supports")
    if not step > 0:
        raise ConfigurationError("step must be positive")
    w = np.asarray(w, dtype=complex)
    scale = 1.0 + 2.0 * step * penalty.lambda2
    if scale <= 0:
        raise DomainError(
            f"1 + 2*step*lambda2 = {scale} <= 0: prox subproblem not convex")
    mag = np.abs(w)
    shrunk = np.maximum(mag - step * penalty.lambda1, 0.0) / scale
    if support.kind == DISK:
        shrunk = np.minimum(shrunk, np.sqrt(support.peak_power))
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(mag > 0, w / np.where(mag > 0, mag, 1.0), 0.0)
    out = shrunk * unit
    if out.ndim == 0:
        return complex(out)
    return out


def decouple_ce(s, xi, lambda2, peak_power):
    """Constant-envelope limit of the constellation rule (order -> infinity)."""
    if not peak_power > 0:
        raise ConfigurationError("peak_power must be positive")
    s = complex(s)
    root_p = np.sqrt(peak_power)
    tau = root_p * _shrink_factor(xi, lambda2) / 2.0
    if abs(s) > tau:
        return root_p * _phase(s)
    return 0.0 + 0.0j
