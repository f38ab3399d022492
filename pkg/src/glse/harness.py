"""Experiment orchestration: sweeps, Monte Carlo validation, curve fits.

A sweep config describes one scenario family and a grid of operating
points (inverse load, activity and power targets, power control). For
each point the penalty weights are tuned, the asymptotic predictions are
solved, and optionally a batch of finite-dimension trials is run. Trials
are deterministic: trial i uses seed base_seed + i, and the reduction is
ordered, so results are identical across parallelism levels.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml
from scipy.optimize import minimize_scalar

from .errors import ConfigurationError, ConvergenceError, DomainError
from .finite import (glse_convex, glse_exhaustive_discrete,
                     glse_exhaustive_l0)
from .penalties import DISK, FULL, MPSK_ZERO, PenaltySpec, SupportSpec
from .replica import (ScenarioSpec, lemma2_bound, random_tas_asymptote,
                      rate_lower_bound, tune)
from .rmt import ChannelSpec, sample_channel
from .rsb import solve_rsb1

SPEC_VERSION = "1"

CSV_COLUMNS = ("alpha_inv", "eta_target", "power_target", "rho", "scenario",
               "lambda", "lambda0", "lambda1", "P", "M", "chi", "p", "D_rs",
               "D_rs_dB", "D_rsb", "eta_replica", "rate_lb", "D_lemma2",
               "mc_D_mean", "mc_D_stderr", "mc_power", "mc_eta", "n_trials",
               "seed")


def to_db(x):
    """10 log10 of a positive linear quantity."""
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class GridPoint:
    """One operating point of a sweep."""

    alpha_inv: float
    eta: float
    power: float
    rho: float = 1.0
    papr_db: float | None = None
    sigma2: float | None = None

    def __post_init__(self):
        if not self.alpha_inv > 0:
            raise ConfigurationError("alpha_inv must be positive")
        if not (0 < self.eta <= 1):
            raise ConfigurationError("eta must lie in (0, 1]")
        if not (self.power > 0 and self.rho > 0):
            raise ConfigurationError("power and rho must be positive")


@dataclass(frozen=True)
class SweepConfig:
    """Scenario family, operating grid and Monte Carlo settings."""

    scenario: dict
    grid: tuple
    mc: dict | None = None
    output: str | None = None
    spec_version: str = SPEC_VERSION

    def __post_init__(self):
        if self.spec_version != SPEC_VERSION:
            raise ConfigurationError(
                f"config spec_version {self.spec_version!r} not supported "
                f"(expected {SPEC_VERSION!r})")
        if len(self.grid) == 0:
            raise ConfigurationError("grid must be nonempty")
        kind = self.scenario.get("kind")
        if kind not in (FULL, DISK, MPSK_ZERO):
            raise ConfigurationError(f"unknown scenario kind {kind!r}")
        if self.mc is not None:
            n = int(self.mc.get("n", 0))
            if n <= 0:
                raise ConfigurationError("mc.n must be a positive integer")
            if int(self.mc.get("n_channels", 0)) <= 0:
                raise ConfigurationError("mc.n_channels must be positive")
            for point in self.grid:
                k = n / point.alpha_inv
                if abs(k - round(k)) > 1e-9:
                    raise ConfigurationError(
                        f"K = N/alpha_inv = {k} not integral at "
                        f"alpha_inv = {point.alpha_inv}")


def load_sweep_config(path) -> SweepConfig:
    """Parse a YAML sweep config file."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config {path} is not a mapping")
    try:
        grid = tuple(GridPoint(**point) for point in raw.get("grid", []))
        return SweepConfig(
            scenario=raw.get("scenario", {}),
            grid=grid,
            mc=raw.get("mc"),
            output=raw.get("output"),
            spec_version=str(raw.get("spec_version", "")),
        )
    except TypeError as exc:
        raise ConfigurationError(f"bad config {path}: {exc}") from exc


@dataclass
class ExperimentRecord:
    """One sweep row: inputs echoed, replica and Monte Carlo outputs."""

    alpha_inv: float
    eta_target: float
    power_target: float
    rho: float
    scenario: str
    lambda2: float | None = None
    lambda0: float | None = None
    lambda1: float | None = None
    peak_power: float | None = None
    order: int | None = None
    chi: float | None = None
    p: float | None = None
    d_rs: float | None = None
    d_rsb: float | None = None
    eta_replica: float | None = None
    rate_lb: float | None = None
    d_lemma2: float | None = None
    mc_d_mean: float | None = None
    mc_d_stderr: float | None = None
    mc_power: float | None = None
    mc_eta: float | None = None
    n_trials: int | None = None
    seed: int | None = None
    replica_residual: float | None = None
    error: str | None = None
    elapsed: float = 0.0


def _support_for(scenario, point):
    kind = scenario["kind"]
    if kind == FULL:
        return SupportSpec.full_complex()
    if point.papr_db is not None:
        peak = point.power * 10.0 ** (point.papr_db / 10.0)
    else:
        peak = scenario.get("peak_power")
    if peak is None:
        raise ConfigurationError(
            "bounded supports need peak_power or papr_db")
    if kind == DISK:
        return SupportSpec.disk(peak)
    return SupportSpec.mpsk_zero(int(scenario.get("order", 0)), peak)


def _scenario_label(scenario, support):
    if support.kind == MPSK_ZERO:
        return f"mpsk{support.order}"
    sparsity = scenario.get("sparsity", "l0")
    return f"{support.kind}_{sparsity}"


def run_trial(n, k, rho, penalty, support, seed, power_cap=None):
    """One finite-dimension trial: sample (H, s), precode, report stats.

    Returns (distortion, power, activity). Deterministic in seed. The
    power_cap is forwarded to glse_convex for tunings whose nominal
    weights are negative (power target above the unconstrained optimum).
    """
    h = sample_channel(ChannelSpec(n_tx=n, n_users=k, rng_seed=seed)).matrix
    rng = np.random.default_rng([seed, 0x5EED])
    s = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2.0)
    if support.kind == MPSK_ZERO:
        out = glse_exhaustive_discrete(h, s, rho, penalty.lambda2, support)
    elif penalty.lambda0 != 0:
        out = glse_exhaustive_l0(h, s, rho, penalty)
    else:
        out = glse_convex(h, s, rho, penalty, support, power_cap=power_cap)
    return out.distortion, out.power, out.activity


def _mc_batch(point, penalty, support, mc, n_workers):
    n = int(mc["n"])
    k = int(round(n / point.alpha_inv))
    n_channels = int(mc["n_channels"])
    base_seed = int(mc.get("seed", 0))
    cap = None
    if (support.kind == FULL and penalty.lambda0 == 0
            and (penalty.lambda2 < 0 or penalty.lambda1 < 0)):
        cap = point.power
    args = [(n, k, point.rho, penalty, support, base_seed + i, cap)
            for i in range(n_channels)]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_trial_star, args))
    else:
        results = [_trial_star(a) for a in args]
    d = np.array([r[0] for r in results])
    pw = np.array([r[1] for r in results])
    act = np.array([r[2] for r in results])
    stderr = float(d.std(ddof=1) / np.sqrt(len(d))) if len(d) > 1 else 0.0
    return (float(d.mean()), stderr, float(pw.mean()), float(act.mean()),
            n_channels, base_seed)


def _trial_star(args):
    return run_trial(*args)


def run_sweep(config: SweepConfig, n_workers=1):
    """Tune, solve and (optionally) simulate every grid point.

    Per-point solver failures are recorded in the row's error field and
    the sweep continues. Returns the list of ExperimentRecord.
    """
    records = []
    for point in config.grid:
        t0 = time.time()
        support = None
        try:
            support = _support_for(config.scenario, point)
            rec = ExperimentRecord(
                alpha_inv=point.alpha_inv, eta_target=point.eta,
                power_target=point.power, rho=point.rho,
                scenario=_scenario_label(config.scenario, support),
                peak_power=(None if support.kind == FULL
                            else support.peak_power),
                order=support.order if support.kind == MPSK_ZERO else None)
            base = ScenarioSpec(penalty=PenaltySpec(), support=support,
                                load=1.0 / point.alpha_inv, rho=point.rho)
            pen, sol = tune(base, point.power, point.eta,
                            sparsity=config.scenario.get("sparsity"))
            rec.lambda2, rec.lambda0, rec.lambda1 = (pen.lambda2, pen.lambda0,
                                                     pen.lambda1)
            rec.chi, rec.p = sol.chi, sol.p
            rec.d_rs = sol.distortion
            rec.eta_replica = sol.eta
            rec.replica_residual = max(sol.residuals.values())
            if point.sigma2 is not None:
                rec.rate_lb = rate_lower_bound(sol, point.sigma2)
            if support.kind == MPSK_ZERO:
                rec.d_lemma2 = lemma2_bound(base.load, point.rho, point.eta,
                                            support.peak_power, support.order)
                if config.scenario.get("rsb", True):
                    spec = ScenarioSpec(penalty=pen, support=support,
                                        load=base.load, rho=point.rho)
                    rec.d_rsb = solve_rsb1(spec).distortion
            if config.mc is not None:
                spec_pen = pen
                (rec.mc_d_mean, rec.mc_d_stderr, rec.mc_power, rec.mc_eta,
                 rec.n_trials, rec.seed) = _mc_batch(
                     point, spec_pen, support, config.mc, n_workers)
        except (ConfigurationError, ConvergenceError, DomainError) as exc:
            if support is None:
                rec = ExperimentRecord(
                    alpha_inv=point.alpha_inv, eta_target=point.eta,
                    power_target=point.power, rho=point.rho,
                    scenario=str(config.scenario.get("kind")))
            rec.error = f"{type(exc).__name__}: {exc}"
        rec.elapsed = time.time() - t0
        records.append(rec)
    return records


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def emit_csv(records, path):
    """Write records in the fixed 24-column schema; missing fields empty."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in records:
                d_rs_db = None if r.d_rs is None else to_db(r.d_rs)
                writer.writerow([
                    _fmt(r.alpha_inv), _fmt(r.eta_target),
                    _fmt(r.power_target), _fmt(r.rho), r.scenario or "",
                    _fmt(r.lambda2), _fmt(r.lambda0), _fmt(r.lambda1),
                    _fmt(r.peak_power), _fmt(r.order), _fmt(r.chi),
                    _fmt(r.p), _fmt(r.d_rs), _fmt(d_rs_db), _fmt(r.d_rsb),
                    _fmt(r.eta_replica), _fmt(r.rate_lb), _fmt(r.d_lemma2),
                    _fmt(r.mc_d_mean), _fmt(r.mc_d_stderr), _fmt(r.mc_power),
                    _fmt(r.mc_eta), _fmt(r.n_trials), _fmt(r.seed),
                ])
    except OSError as exc:
        raise ConfigurationError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path):
    """Round-trip reader for the sweep CSV (strings; empty means missing)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_COLUMNS:
            raise ConfigurationError(f"unexpected CSV header in {path}")
        return [dict(zip(header, row)) for row in reader]


def fit_equivalent_eta(alpha_invs, distortions, target_power, rho,
                       bounds=(0.05, 0.999), peak_power=None,
                       subset_power="active"):
    """Best-fit activity fraction of the random-subset baseline.

    Minimizes the mean squared dB gap between the given distortion curve
    and the random-selection baseline family over the shared inverse-load
    grid.

    Args:
        alpha_invs: inverse loads of the target curve.
        distortions: target distortions (linear scale), same length.
        target_power: per-antenna power of the baseline family.
        rho: power control factor.
        bounds: search interval for the activity fraction.
        peak_power: optional per-antenna peak power for a peak-limited
            baseline.
        subset_power: "active" or "total" power convention of the baseline.

    Returns:
        (eta_fit, mean_sq_db_residual).
    """
    alpha_invs = np.asarray(alpha_invs, dtype=float)
    distortions = np.asarray(distortions, dtype=float)
    if alpha_invs.shape != distortions.shape or alpha_invs.size == 0:
        raise ConfigurationError(
            "alpha_invs and distortions must be equal-length and nonempty")
    target_db = to_db(distortions)

    def objective(eta):
        gaps = []
        for ai, t_db in zip(alpha_invs, target_db):
            sol = random_tas_asymptote(1.0 / ai, eta, target_power, rho,
                                       subset_power=subset_power,
                                       peak_power=peak_power)
            gaps.append(to_db(sol.distortion) - t_db)
        return float(np.mean(np.square(gaps)))

    res = minimize_scalar(objective, bounds=bounds, method="bounded",
                          options={"xatol": 1e-6})
    return float(res.x), float(res.fun)
