"""Closed-form waiting times for the pure-human and hybrid service systems.

The model: questions arrive in a Poisson stream and are answered either by a
human operator (single FIFO queue, M/G/1) or, in the hybrid system, partly by
a virtual agent.  Easy ("alpha") questions are a fraction ``1 - beta`` of the
stream and are answered by the agent without queueing; hard ("beta")
questions cost the agent a classification time ``epsilon`` and then queue for
the human.  All times are minutes, all rates per minute.

The central result implemented by :func:`win_win_max_ratio` and
:func:`win_win_check`: as long as the hybrid system serves at most
``s / (beta * s_beta)`` times the clients of the pure-human system (and the
classification overhead is small), its expected waiting time is strictly
lower — serving more clients *and* serving them faster.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict

from .errors import ConfigError, UnstableSystemError


def mixture_mean(beta: float, s_beta: float, s_alpha: float) -> float:
    """Mean human service time of the alpha/beta question mixture."""
    _check_fraction("beta", beta)
    _check_nonnegative(s_beta=s_beta, s_alpha=s_alpha)
    return beta * s_beta + (1.0 - beta) * s_alpha


def mixture_stddev(beta: float, s_beta: float, sigma_s_beta: float,
                   s_alpha: float, sigma_s_alpha: float) -> float:
    """Standard deviation of the two-component service-time mixture.

    Computed from the component moments:
    ``var = beta*(sigma_b^2 + s_b^2) + (1-beta)*(sigma_a^2 + s_a^2) - mean^2``.
    """
    _check_fraction("beta", beta)
    _check_nonnegative(s_beta=s_beta, sigma_s_beta=sigma_s_beta,
                       s_alpha=s_alpha, sigma_s_alpha=sigma_s_alpha)
    mean = mixture_mean(beta, s_beta, s_alpha)
    second_moment = (beta * (sigma_s_beta ** 2 + s_beta ** 2)
                     + (1.0 - beta) * (sigma_s_alpha ** 2 + s_alpha ** 2))
    variance = max(0.0, second_moment - mean ** 2)
    return math.sqrt(variance)


def mg1_wait(lam: float, s: float, sigma_s: float) -> float:
    """Expected M/G/1 queue wait (service time excluded).

    Pollaczek-Khinchine in the two-term form
    ``lam*sigma^2 / (2*(1-rho)) + rho^2 / (2*lam*(1-rho))`` with ``rho = lam*s``.
    Reduces to ``rho*s/(1-rho)`` for exponential service and to
    ``rho*s/(2*(1-rho))`` for deterministic service.

    Raises :class:`UnstableSystemError` when ``rho >= 1``; an empty stream
    (``lam == 0``) waits zero.
    """
    _check_nonnegative(lam=lam, s=s, sigma_s=sigma_s)
    if lam == 0.0:
        return 0.0
    rho = lam * s
    if rho >= 1.0:
        raise UnstableSystemError(rho, system="pure-human queue")
    return (lam * sigma_s ** 2) / (2.0 * (1.0 - rho)) + rho ** 2 / (2.0 * lam * (1.0 - rho))


@dataclass(frozen=True)
class AnalyticInputs:
    """Parameters of the hybrid service model.

    ``lambda_total`` is the total question rate of the *pure-human* system;
    the hybrid system serves ``c_ratio`` times as many clients, so its hard
    questions arrive at ``c_ratio * beta * lambda_total``.  ``sigma_s`` is the
    service stddev of the pure system's question mixture (derivable with
    :func:`mixture_stddev` when only per-type stddevs are known).
    """

    lambda_total: float
    c_ratio: float
    beta: float
    s_alpha: float
    s_beta: float
    sigma_s_beta: float
    sigma_s: float
    epsilon: float = 0.0

    def __post_init__(self):
        _check_fraction("beta", self.beta)
        _check_nonnegative(lambda_total=self.lambda_total, s_alpha=self.s_alpha,
                           s_beta=self.s_beta, sigma_s_beta=self.sigma_s_beta,
                           sigma_s=self.sigma_s, epsilon=self.epsilon)
        if self.c_ratio <= 0:
            raise ConfigError(f"c_ratio must be > 0, got {self.c_ratio}")
        # The win-win bound's proof needs the hard questions to be the less
        # variable component; exploratory inputs may still violate it.
        if 0.0 < self.beta < 1.0 and self.sigma_s_beta >= self.sigma_s:
            warnings.warn(
                "sigma_s_beta >= sigma_s: the win-win guarantee does not cover "
                "these inputs", stacklevel=2)

    @property
    def s_mix(self) -> float:
        return mixture_mean(self.beta, self.s_beta, self.s_alpha)

    @property
    def rho(self) -> float:
        """Utilization of the pure-human system."""
        return self.lambda_total * self.s_mix

    @property
    def lambda_hard(self) -> float:
        """Arrival rate of hard questions in the hybrid system."""
        return self.c_ratio * self.beta * self.lambda_total

    @property
    def rho_hat(self) -> float:
        """Utilization of the hybrid system's operator."""
        return self.lambda_hard * self.s_beta


def hybrid_wait(inputs: AnalyticInputs,
                include_classification: bool = True) -> tuple[float, float]:
    """Expected waits in the hybrid system: ``(overall, hard-question)``.

    The hard-question wait is the M/G/1 wait of the hard-question stream plus
    the agent's classification time ``epsilon``; alpha questions wait zero, so
    the overall wait is the hard wait weighted by ``beta``.  Treating
    ``epsilon`` as fully additive is pessimistic — the simulator models the
    overlap of classification with queueing that this formula ignores.  With
    ``include_classification=False`` the optimistic ``epsilon = 0``
    approximation is returned instead.
    """
    eps = inputs.epsilon if include_classification else 0.0
    lam_hard = inputs.lambda_hard
    if inputs.beta == 0.0:
        return 0.0, eps
    rho_hat = inputs.rho_hat
    if rho_hat >= 1.0:
        raise UnstableSystemError(rho_hat, system="hybrid queue")
    hard = mg1_wait(lam_hard, inputs.s_beta, inputs.sigma_s_beta) + eps
    return inputs.beta * hard, hard


def win_win_max_ratio(beta: float, s_beta: float, s_alpha: float) -> float:
    """Largest client ratio ``s / (beta * s_beta)`` that preserves the win-win.

    Always >= 1, and strictly > 1 whenever ``beta < 1`` and ``s_alpha > 0``.
    Raises :class:`ConfigError` for ``beta == 0`` (no hard questions: the
    ratio is unbounded).
    """
    _check_fraction("beta", beta)
    if beta == 0.0:
        raise ConfigError("client-ratio bound is unbounded when beta == 0")
    if s_beta <= 0.0:
        raise ConfigError(f"s_beta must be > 0, got {s_beta}")
    return mixture_mean(beta, s_beta, s_alpha) / (beta * s_beta)


@dataclass(frozen=True)
class WinWinReport:
    """Outcome of comparing the hybrid system against the pure-human one."""

    c_star: float
    within_bound: bool
    w_pure: float
    w_hybrid: float
    strict_improvement: bool

    def to_dict(self) -> dict:
        return asdict(self)


def win_win_check(inputs: AnalyticInputs,
                  include_classification: bool = True) -> WinWinReport:
    """Evaluate both systems and report whether the hybrid one wins.

    Requires the pure system to be stable; instability on either side raises
    :class:`UnstableSystemError`.  ``within_bound`` states whether ``c_ratio``
    respects the :func:`win_win_max_ratio` bound (infinite for ``beta == 0``).
    """
    w_pure = mg1_wait(inputs.lambda_total, inputs.s_mix, inputs.sigma_s)
    w_hybrid, _ = hybrid_wait(inputs, include_classification=include_classification)
    if inputs.beta == 0.0:
        c_star = math.inf
    else:
        c_star = win_win_max_ratio(inputs.beta, inputs.s_beta, inputs.s_alpha)
    return WinWinReport(
        c_star=c_star,
        within_bound=inputs.c_ratio <= c_star,
        w_pure=w_pure,
        w_hybrid=w_hybrid,
        strict_improvement=w_hybrid < w_pure,
    )


@dataclass(frozen=True)
class AnalyticReport:
    """All derived quantities for one set of :class:`AnalyticInputs`.

    Waits are ``inf`` when the corresponding system is unstable, mirroring
    the stability flags.
    """

    s_mix: float
    tau: float
    rho: float
    rho_hat: float
    w_pure: float
    w_hybrid: float
    w_hybrid_hard: float
    c_star: float
    stable_pure: bool
    stable_hybrid: bool

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(inputs: AnalyticInputs,
             include_classification: bool = True) -> AnalyticReport:
    """Build the full report; unstable sides yield infinite waits, not errors."""
    s = inputs.s_mix
    stable_pure = inputs.rho < 1.0
    stable_hybrid = inputs.rho_hat < 1.0
    try:
        w_pure = mg1_wait(inputs.lambda_total, s, inputs.sigma_s)
    except UnstableSystemError:
        w_pure = math.inf
    try:
        w_hybrid, w_hard = hybrid_wait(inputs, include_classification=include_classification)
    except UnstableSystemError:
        w_hybrid, w_hard = math.inf, math.inf
    if inputs.beta == 0.0:
        c_star = math.inf
    else:
        c_star = win_win_max_ratio(inputs.beta, inputs.s_beta, inputs.s_alpha)
    return AnalyticReport(
        s_mix=s,
        tau=inputs.s_beta / s if s > 0 else math.inf,
        rho=inputs.rho,
        rho_hat=inputs.rho_hat,
        w_pure=w_pure,
        w_hybrid=w_hybrid,
        w_hybrid_hard=w_hard,
        c_star=c_star,
        stable_pure=stable_pure,
        stable_hybrid=stable_hybrid,
    )


def _check_fraction(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must be in [0, 1], got {value}")


def _check_nonnegative(**values: float) -> None:
    for name, value in values.items():
        if value < 0:
            raise ConfigError(f"{name} must be >= 0, got {value}")
