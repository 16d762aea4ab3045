"""Parameter sweeps and derived analyses over the simulator.

These are the building blocks behind the figure presets: waiting time versus
client count for several agent configurations, the alpha/service-time bubble
grid, the win-win client-ratio search, operator-team scaling, and the
cross-check of simulated means against the closed-form calculator.

All sweeps are deterministic for a fixed master seed.  Comparative searches
(pure vs hybrid) run both sides on the same replication streams — common
random numbers — which makes small differences in means resolvable with far
fewer replications.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace, field

import numpy as np

from . import analytic
from .analytic import AnalyticInputs
from .errors import ConfigError
from .simulator import SystemConfig, SimulationMetrics, replicate
from .stochastic import Distribution

#: Keys a SweepSpec grid may vary.
SWEEPABLE = ("n_clients", "alpha", "s_beta_mean", "n_operators", "c_ratio")


@dataclass(frozen=True)
class SweepSpec:
    """A grid sweep over a base scenario.

    ``grid`` maps sweepable parameter names to value lists; the sweep runs
    every point of the cartesian product.  ``s_beta_mean`` replaces the mean
    of the hard-question service distribution (keeping its spread) and
    ``c_ratio`` scales the base client count.
    """

    base: SystemConfig
    grid: dict = field(default_factory=dict)
    replications: int = 100
    sla_threshold: float = 5.0

    def __post_init__(self):
        if not self.grid:
            raise ConfigError("sweep grid must not be empty")
        for key, values in self.grid.items():
            if key not in SWEEPABLE:
                raise ConfigError(f"cannot sweep {key!r}; choose from {SWEEPABLE}")
            if not list(values):
                raise ConfigError(f"sweep grid for {key!r} is empty")
        if self.replications < 2:
            raise ConfigError("replications must be >= 2")
        if self.sla_threshold <= 0:
            raise ConfigError("sla_threshold must be > 0")


def apply_sweep_value(config: SystemConfig, key: str, value) -> SystemConfig:
    """One grid-point override on a config."""
    if key == "s_beta_mean":
        stddev = config.dist_s_beta.stddev or 0.0
        return replace(config, dist_s_beta=Distribution.normal(float(value), stddev))
    if key == "c_ratio":
        return replace(config, n_clients=max(1, round(float(value) * config.n_clients)))
    if key == "n_clients" or key == "n_operators":
        return replace(config, **{key: int(value)})
    if key == "alpha":
        return replace(config, alpha=float(value))
    raise ConfigError(f"cannot sweep {key!r}")


def run_sweep(spec: SweepSpec, master_seed: int) -> list[dict]:
    """Evaluate every grid point of ``spec``; one row per point."""
    keys = sorted(spec.grid)
    points = [()]
    for key in keys:
        points = [p + (v,) for p in points for v in spec.grid[key]]
    rows = []
    for point in points:
        config = spec.base
        for key, value in zip(keys, point):
            config = apply_sweep_value(config, key, value)
        metrics = replicate(config, spec.replications, master_seed)
        row = {key: value for key, value in zip(keys, point)}
        row.update(_metric_columns(metrics))
        row["meets_sla"] = bool(metrics.mean_wait_hard <= spec.sla_threshold) \
            if not math.isnan(metrics.mean_wait_hard) else False
        rows.append(row)
    return rows


def sweep_wait_vs_n(base: SystemConfig, n_values, variants, replications: int,
                    master_seed: int) -> list[dict]:
    """Replicated waits per (client count, variant).

    ``variants`` is a list of ``(label, overrides)`` pairs applied to the
    base config with :func:`dataclasses.replace`; include a pure-human
    variant for the no-agent baseline.  Overloaded points are flagged via
    the ``unstable`` column, never dropped.
    """
    rows = []
    for n in n_values:
        for label, overrides in variants:
            config = replace(base, n_clients=int(n), **overrides)
            metrics = replicate(config, replications, master_seed)
            rows.append({
                "n": int(n),
                "variant": label,
                **_metric_columns(metrics),
            })
    return rows


def sla_frontier(rows: list[dict], variant: str, threshold: float) -> int | None:
    """Largest client count whose hard-question wait stays at or below the SLA."""
    best = None
    for row in rows:
        if row["variant"] != variant or row["unstable"]:
            continue
        wait = row["mean_wait_hard"]
        if not math.isnan(wait) and wait <= threshold:
            best = row["n"] if best is None else max(best, row["n"])
    return best


def sweep_bubble_grid(base: SystemConfig, alphas, s_beta_means, n: int,
                      replications: int, master_seed: int) -> list[dict]:
    """Hard-question waits for every (alpha, hard-service-mean) combination."""
    rows = []
    for alpha in alphas:
        for mean in s_beta_means:
            config = apply_sweep_value(
                replace(base, n_clients=int(n), alpha=float(alpha)),
                "s_beta_mean", mean)
            metrics = replicate(config, replications, master_seed)
            rows.append({
                "alpha": float(alpha),
                "s_beta_mean": float(mean),
                "n": int(n),
                **_metric_columns(metrics),
            })
    return rows


@dataclass(frozen=True)
class WinWinResult:
    """Largest hybrid client count that still beats the pure-human wait."""

    n_pure: int
    w_pure: float
    n_hybrid_max: int
    achieved_c: float


def win_win_curve(base: SystemConfig, n_pure_values, replications: int,
                  master_seed: int, metric: str = "mean_wait_overall",
                  strict_ci: bool = False, max_c: float = 4.0,
                  patience: int = 2) -> list[WinWinResult]:
    """For each pure-human client count, find the matching hybrid capacity.

    Runs the pure system, then scans hybrid client counts upward (paired
    replication seeds) and keeps the largest count whose mean wait does not
    exceed the pure system's.  The scan is linear because noise makes the
    predicate non-monotone near the boundary; it stops after ``patience``
    consecutive failures or at ``max_c`` times the pure count.  With
    ``strict_ci`` the hybrid must beat the pure wait by both confidence
    half-widths.
    """
    results = []
    for n_pure in n_pure_values:
        pure_cfg = replace(base, mode="pure-human", n_clients=int(n_pure), learning=None)
        pure_metrics = replicate(pure_cfg, replications, master_seed)
        w_pure = getattr(pure_metrics, metric)
        ci_pure = pure_metrics.ci.get(metric, 0.0)
        best = 0
        failures = 0
        n = 1
        limit = max(int(n_pure), int(math.ceil(max_c * n_pure))) + 1
        while n <= limit and failures < patience:
            hybrid_cfg = replace(base, mode="hybrid", n_clients=n, learning=None)
            metrics = replicate(hybrid_cfg, replications, master_seed)
            w_hybrid = getattr(metrics, metric)
            margin = (metrics.ci.get(metric, 0.0) + ci_pure) if strict_ci else 0.0
            if not math.isnan(w_hybrid) and w_hybrid + margin <= w_pure:
                best = n
                failures = 0
            else:
                failures += 1
            n += 1
        results.append(WinWinResult(
            n_pure=int(n_pure),
            w_pure=float(w_pure),
            n_hybrid_max=best,
            achieved_c=best / int(n_pure),
        ))
    return results


def team_scaling(base: SystemConfig, n_over_o_ratios, k_values, s_beta_dists,
                 replications: int, master_seed: int) -> list[dict]:
    """Replicated waits for operator teams of size k serving k*(n/o) clients."""
    rows = []
    for dist in s_beta_dists:
        for ratio in n_over_o_ratios:
            for k in k_values:
                config = replace(base, n_clients=int(k) * int(ratio),
                                 n_operators=int(k), dist_s_beta=dist)
                metrics = replicate(config, replications, master_seed)
                rows.append({
                    "k": int(k),
                    "n_over_o": int(ratio),
                    "s_beta_mean": dist.mean if dist.mean is not None else dist.value,
                    **_metric_columns(metrics),
                })
    return rows


def team_deltas(rows: list[dict], metric: str = "mean_wait_hard") -> list[dict]:
    """Wait reduction when growing the team by one operator, per grid line."""
    by_line: dict[tuple, dict[int, float]] = {}
    for row in rows:
        key = (row["n_over_o"], row["s_beta_mean"])
        by_line.setdefault(key, {})[row["k"]] = row[metric]
    deltas = []
    for (ratio, s_beta_mean), waits in sorted(by_line.items()):
        for k in sorted(waits)[:-1]:
            if k + 1 in waits:
                deltas.append({
                    "n_over_o": ratio,
                    "s_beta_mean": s_beta_mean,
                    "k_from": k,
                    "k_to": k + 1,
                    "delta": waits[k] - waits[k + 1],
                })
    return deltas


def config_to_analytic_inputs(config: SystemConfig, c_ratio: float = 1.0) -> AnalyticInputs:
    """Analytic-model parameters matching a scenario's effective moments."""
    beta = 1.0 - config.alpha
    s_beta = config.dist_s_beta.effective_mean
    sigma_beta = config.dist_s_beta.effective_stddev
    s_alpha = config.dist_s_alpha_human.effective_mean
    sigma_alpha = config.dist_s_alpha_human.effective_stddev
    sigma_mix = analytic.mixture_stddev(beta, s_beta, sigma_beta, s_alpha, sigma_alpha)
    return AnalyticInputs(
        lambda_total=config.n_clients * config.lambda_bar,
        c_ratio=c_ratio,
        beta=beta,
        s_alpha=s_alpha,
        s_beta=s_beta,
        sigma_s_beta=sigma_beta,
        sigma_s=sigma_mix,
        epsilon=config.dist_epsilon.effective_mean,
    )


def validate_against_analytic(config: SystemConfig, replications: int,
                              master_seed: int, flag_threshold: float = 0.05) -> list[dict]:
    """Compare replicated simulation means against the closed-form values.

    For the pure-human mode the references are the M/G/1 wait and the
    utilization ``lambda * s``; for hybrid mode the wait is bracketed by the
    optimistic (classification fully overlapped) and pessimistic
    (classification fully additive) formulas, and the row is flagged when the
    simulated mean falls outside that bracket by more than the threshold.
    """
    if config.mode == "hybrid-learning":
        raise ConfigError("analytic validation covers pure-human and hybrid modes only")
    inputs = config_to_analytic_inputs(config)
    metrics = replicate(config, replications, master_seed)
    rows = []

    def row(metric, simulated, reference, low=None, high=None):
        low = reference if low is None else low
        high = reference if high is None else high
        rel = abs(simulated - reference) / abs(reference) if reference else math.inf
        tol = flag_threshold * abs(reference)
        flagged = not (low - tol <= simulated <= high + tol)
        return {"metric": metric, "simulated": simulated, "analytic": reference,
                "rel_error": rel, "flagged": bool(flagged)}

    if config.mode == "pure-human":
        w = analytic.mg1_wait(inputs.lambda_total, inputs.s_mix, inputs.sigma_s)
        rows.append(row("mean_wait_overall", metrics.mean_wait_overall, w))
        rows.append(row("operator_utilization", metrics.operator_utilization,
                        inputs.rho / config.n_operators))
    else:
        w_full, w_hard_full = analytic.hybrid_wait(inputs, include_classification=True)
        w_bare, w_hard_bare = analytic.hybrid_wait(inputs, include_classification=False)
        rows.append(row("mean_wait_overall", metrics.mean_wait_overall, w_full,
                        low=w_bare, high=w_full))
        rows.append(row("mean_wait_hard", metrics.mean_wait_hard, w_hard_full,
                        low=w_hard_bare, high=w_hard_full))
        rows.append(row("operator_utilization", metrics.operator_utilization,
                        inputs.rho_hat / config.n_operators))
    return rows


@dataclass(frozen=True)
class WinWinCase:
    """One sampled parameter set satisfying the win-win theorem's conditions."""

    inputs: AnalyticInputs
    n_pure: int
    n_hybrid: int
    lambda_bar: float
    dist_s_alpha: Distribution
    dist_s_beta: Distribution


def sample_win_win_cases(count: int, seed: int, for_simulation: bool = False,
                         max_rho: float = 0.85, max_rho_hat: float = 0.92) -> list[WinWinCase]:
    """Random parameter sets under the win-win preconditions.

    Every case has hard questions slower but less variable than the mixture
    (``sigma_s_beta < sigma_s``), zero classification time, a stable pure
    system, a stable hybrid system, and a client ratio within the
    :func:`analytic.win_win_max_ratio` bound.  With ``for_simulation`` the
    ratio comes from integer client counts and the service distributions are
    zero-truncated normals whose truncation is negligible (mean at least four
    standard deviations above zero), so effective and nominal moments agree.
    """
    rng = np.random.default_rng(seed)
    cases = []
    while len(cases) < count:
        beta = rng.uniform(0.15, 0.85)
        s_beta = rng.uniform(2.0, 6.0)
        sigma_beta = s_beta * rng.uniform(0.12, 0.25)
        s_alpha = s_beta * rng.uniform(0.3, 0.8)
        sigma_alpha = s_alpha * rng.uniform(0.05, 0.2)
        dist_beta = Distribution.normal(s_beta, sigma_beta)
        dist_alpha = Distribution.normal(s_alpha, sigma_alpha)
        eff_s_beta = dist_beta.effective_mean
        eff_sigma_beta = dist_beta.effective_stddev
        eff_s_alpha = dist_alpha.effective_mean
        eff_sigma_alpha = dist_alpha.effective_stddev
        sigma_mix = analytic.mixture_stddev(beta, eff_s_beta, eff_sigma_beta,
                                            eff_s_alpha, eff_sigma_alpha)
        if sigma_mix <= 1.05 * eff_sigma_beta:
            continue
        c_star = analytic.win_win_max_ratio(beta, eff_s_beta, eff_s_alpha)
        s_mix = analytic.mixture_mean(beta, eff_s_beta, eff_s_alpha)
        if for_simulation:
            n_pure = int(rng.integers(2, 6))
            c_target = rng.uniform(1.0, c_star)
            n_hybrid = max(n_pure, int(math.floor(c_target * n_pure)))
            while n_hybrid > n_pure and n_hybrid / n_pure > c_star:
                n_hybrid -= 1
            c_ratio = n_hybrid / n_pure
        else:
            n_pure, n_hybrid = 1, 1
            c_ratio = c_star * rng.uniform(0.2, 1.0)
        rho = rng.uniform(0.35, max_rho)
        lambda_total = rho / s_mix
        inputs = AnalyticInputs(
            lambda_total=lambda_total, c_ratio=c_ratio, beta=beta,
            s_alpha=eff_s_alpha, s_beta=eff_s_beta,
            sigma_s_beta=eff_sigma_beta, sigma_s=sigma_mix, epsilon=0.0)
        if inputs.rho_hat >= max_rho_hat:
            continue
        cases.append(WinWinCase(
            inputs=inputs,
            n_pure=n_pure,
            n_hybrid=n_hybrid,
            lambda_bar=lambda_total / n_pure,
            dist_s_alpha=dist_alpha,
            dist_s_beta=dist_beta,
        ))
    return cases


def _metric_columns(metrics: SimulationMetrics) -> dict:
    return {
        "mean_wait_hard": metrics.mean_wait_hard,
        "ci_hard": metrics.ci.get("mean_wait_hard", math.nan),
        "mean_wait_overall": metrics.mean_wait_overall,
        "ci_overall": metrics.ci.get("mean_wait_overall", math.nan),
        "operator_utilization": metrics.operator_utilization,
        "agent_share": metrics.agent_share,
        "unstable": metrics.unstable,
    }
