"""Channel ensemble sampling and random-matrix transforms.

The downlink channel is H = A^{1/2} G with G i.i.d. zero-mean complex
Gaussian of variance 1/N per entry and A a diagonal path-loss matrix whose
entries are drawn from a finite atom distribution. Spectral quantities of
the Gramian J = H^H H are described through the Stieltjes and R transforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

UNIT_ATOMS = ((1.0, 1.0),)


def _validate_atoms(atoms):
    atoms = [(float(a), float(p)) for a, p in atoms]
    if not atoms:
        raise ConfigurationError("pathloss_atoms must be nonempty")
    total = sum(p for _, p in atoms)
    if abs(total - 1.0) > 1e-12:
        raise ConfigurationError(f"atom probabilities sum to {total}, not 1")
    for a, p in atoms:
        if a < 0 or p < 0:
            raise ConfigurationError("atom gains and probabilities must be >= 0")
    return tuple(atoms)


@dataclass(frozen=True)
class ChannelSpec:
    """Ensemble parameters for one channel draw.

    Args:
        n_tx: number of transmit antennas N.
        n_users: number of single-antenna users K.
        pathloss_atoms: finite distribution of path-loss gains, list of
            (gain, probability) pairs. Defaults to the single unit atom.
        rng_seed: seed for the sampling RNG.
    """

    n_tx: int
    n_users: int
    pathloss_atoms: tuple = field(default=UNIT_ATOMS)
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_tx <= 0 or self.n_users <= 0:
            raise ConfigurationError("n_tx and n_users must be positive")
        object.__setattr__(self, "pathloss_atoms",
                           _validate_atoms(self.pathloss_atoms))

    @property
    def load(self):
        """Load factor alpha = K/N."""
        return self.n_users / self.n_tx


@dataclass(frozen=True)
class ChannelSample:
    """One sampled channel matrix H (shape K x N)."""

    matrix: np.ndarray
    seed_used: int

    @property
    def n_tx(self):
        return self.matrix.shape[1]

    @property
    def n_users(self):
        return self.matrix.shape[0]

    def gramian(self):
        """J = H^H H, an N x N Hermitian matrix."""
        return self.matrix.conj().T @ self.matrix

    def eigenvalues(self):
        """Eigenvalues of the Gramian, ascending (zeros included)."""
        return np.linalg.eigvalsh(self.gramian())


def sample_channel(spec: ChannelSpec) -> ChannelSample:
    """Draw H = A^{1/2} G for one coherence block.

    G has i.i.d. CN(0, 1/N) entries (variance 1/(2N) per real component)
    and A is diagonal with i.i.d. draws from the path-loss atoms.
    Deterministic given spec.rng_seed.
    """
    rng = np.random.default_rng(spec.rng_seed)
    n, k = spec.n_tx, spec.n_users
    scale = np.sqrt(1.0 / (2 * n))
    g = rng.standard_normal((k, n)) * scale + 1j * rng.standard_normal((k, n)) * scale
    gains = np.array([a for a, _ in spec.pathloss_atoms])
    probs = np.array([p for _, p in spec.pathloss_atoms])
    a_diag = rng.choice(gains, size=k, p=probs / probs.sum())
    h = np.sqrt(a_diag)[:, None] * g
    return ChannelSample(matrix=h, seed_used=spec.rng_seed)


def r_transform(load, pathloss_atoms, omega):
    """R-transform of the limiting Gramian spectrum at a real argument.

    R(omega) = alpha * sum_i p_i a_i / (1 - a_i omega). For the unit atom
    this is alpha / (1 - omega). Arguments past a pole evaluate the analytic
    continuation, which the fixed-point equations use on the branch with
    chi < -1/a; only the poles themselves are rejected.
    """
    atoms = _validate_atoms(pathloss_atoms)
    total = 0.0
    for a, p in atoms:
        denom = 1.0 - a * omega
        if a > 0 and denom == 0:
            raise DomainError(f"pole at atom gain {a}: 1 - a*omega = 0")
        if a > 0:
            total += p * a / denom
    return load * total


def r_transform_derivative(load, pathloss_atoms, omega):
    """d/d omega of r_transform: alpha * sum_i p_i a_i^2 / (1 - a_i omega)^2."""
    atoms = _validate_atoms(pathloss_atoms)
    total = 0.0
    for a, p in atoms:
        denom = 1.0 - a * omega
        if a > 0 and denom == 0:
            raise DomainError(f"pole at atom gain {a}: 1 - a*omega = 0")
        if a > 0:
            total += p * a * a / denom**2
    return load * total


def empirical_stieltjes(sample: ChannelSample, s: complex) -> complex:
    """Empirical Stieltjes transform (1/N) sum_n (lambda_n - s)^{-1} of J."""
    if np.imag(s) == 0:
        raise DomainError("s must have nonzero imaginary part")
    lam = sample.eigenvalues()
    return complex(np.mean(1.0 / (lam - s)))


def limiting_stieltjes(load, pathloss_atoms, s, tol=1e-13, max_iter=10000):
    """Limiting Stieltjes transform implied by the atom R-transform.

    Solves s = R(-g) - 1/g for g with Im(g) > 0 when Im(s) > 0, via the
    damped fixed point g = 1/(R(-g) - s). For the unit atom the solution
    is the Marchenko-Pastur transform with ratio alpha.
    """
    if np.imag(s) == 0:
        raise DomainError("s must have nonzero imaginary part")
    atoms = _validate_atoms(pathloss_atoms)
    gains = np.array([a for a, _ in atoms])
    probs = np.array([p for _, p in atoms])

    def r_neg(g):
        return load * np.sum(probs * gains / (1.0 + gains * g))

    g = -1.0 / s
    for _ in range(max_iter):
        g_new = 1.0 / (r_neg(g) - s)
        step = g_new - g
        g = g + 0.5 * step
        if abs(step) < tol:
            return complex(g)
    return complex(g)
