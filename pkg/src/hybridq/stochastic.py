"""Seeded random-variate generation for the simulator.

Two pieces live here:

* :class:`Distribution` — a declarative service/latency time distribution
  (deterministic, exponential, zero-truncated normal or empirical) together
  with its *effective* moments, i.e. the mean/stddev of what sampling
  actually produces.  For the zero-truncated normal these are the truncated
  moments, not the nominal ones, so analytic formulas and simulation configs
  agree on the same numbers.
* :class:`RngStreams` — named, independent random streams derived from one
  master seed, so that e.g. adding service-time draws never perturbs the
  arrival process.  This is what makes common-random-number comparisons
  between scenarios work.

The underlying bit generator is numpy's PCG64, seeded through
``SeedSequence(master_seed, spawn_key=...)``; both are documented, portable
algorithms with stable output across platforms.  ``tests/test_stochastic.py``
pins a short reference sequence to catch any drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConfigError

#: Purposes for which independent streams exist, in fixed order.  The index
#: of a name in this tuple is part of the stream's spawn key, so the order
#: must never change.
STREAM_NAMES = (
    "arrivals",
    "question-type",
    "agent-service",
    "classification",
    "human-service",
    "learning-catalog",
)

DISTRIBUTION_KINDS = (
    "deterministic",
    "exponential",
    "normal-truncated-at-zero",
    "empirical",
)

# Refuse zero-truncated normals whose acceptance probability is below this;
# rejection sampling would effectively never terminate.
_MIN_ACCEPT_PROB = 1e-6
_MAX_REJECTION_ROUNDS = 1000


@dataclass(frozen=True)
class Distribution:
    """A non-negative time distribution plus its effective moments.

    Use the factory classmethods rather than the constructor; they validate
    parameters and fill in ``effective_mean``/``effective_stddev``.
    """

    kind: str
    mean: float | None = None
    stddev: float | None = None
    value: float | None = None
    samples: tuple[float, ...] | None = None
    effective_mean: float = field(default=0.0, compare=False)
    effective_stddev: float = field(default=0.0, compare=False)

    @classmethod
    def deterministic(cls, value: float) -> "Distribution":
        if value < 0:
            raise ConfigError(f"deterministic value must be >= 0, got {value}")
        return cls(kind="deterministic", value=float(value),
                   effective_mean=float(value), effective_stddev=0.0)

    @classmethod
    def exponential(cls, mean: float) -> "Distribution":
        if mean < 0:
            raise ConfigError(f"exponential mean must be >= 0, got {mean}")
        return cls(kind="exponential", mean=float(mean),
                   effective_mean=float(mean), effective_stddev=float(mean))

    @classmethod
    def normal(cls, mean: float, stddev: float) -> "Distribution":
        """Normal(mean, stddev) truncated at zero by rejection resampling."""
        if stddev < 0:
            raise ConfigError(f"normal stddev must be >= 0, got {stddev}")
        if stddev == 0:
            return cls.deterministic(mean)
        accept = float(stats.norm.sf(0.0, loc=mean, scale=stddev))
        if accept < _MIN_ACCEPT_PROB:
            raise ConfigError(
                f"normal({mean}, {stddev}) truncated at zero keeps almost no mass "
                f"(acceptance probability {accept:.3g})")
        trunc = stats.truncnorm(a=-mean / stddev, b=np.inf, loc=mean, scale=stddev)
        return cls(kind="normal-truncated-at-zero", mean=float(mean), stddev=float(stddev),
                   effective_mean=float(trunc.mean()), effective_stddev=float(trunc.std()))

    @classmethod
    def empirical(cls, samples) -> "Distribution":
        arr = np.asarray(list(samples), dtype=float)
        if arr.size == 0:
            raise ConfigError("empirical distribution needs at least one sample")
        if np.any(arr < 0):
            raise ConfigError("empirical samples must be >= 0")
        return cls(kind="empirical", samples=tuple(arr.tolist()),
                   effective_mean=float(arr.mean()),
                   effective_stddev=float(arr.std(ddof=0)))

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Draw ``size`` values (or one scalar when ``size`` is None).

        All draws are non-negative.  The batch draw is canonical: a loop of
        scalar calls consumes the stream exactly like one batch call.
        """
        n = 1 if size is None else int(size)
        if self.kind == "deterministic":
            out = np.full(n, self.value, dtype=float)
        elif self.kind == "exponential":
            out = rng.exponential(self.mean, n)
        elif self.kind == "normal-truncated-at-zero":
            out = rng.normal(self.mean, self.stddev, n)
            for _ in range(_MAX_REJECTION_ROUNDS):
                bad = out < 0
                n_bad = int(bad.sum())
                if n_bad == 0:
                    break
                out[bad] = rng.normal(self.mean, self.stddev, n_bad)
            else:
                raise RuntimeError("rejection sampling did not converge")
        elif self.kind == "empirical":
            out = rng.choice(np.asarray(self.samples, dtype=float), size=n)
        else:
            raise ConfigError(f"unknown distribution kind {self.kind!r}")
        if size is None:
            return float(out[0])
        return out


class RngStreams:
    """Named independent random streams for one replication.

    Every stream is keyed by ``(replication, stream index[, client id])``
    through ``SeedSequence`` spawn keys, so the same master seed always
    yields the same draws on every stream, no matter how many draws other
    streams consumed.  Per-client substreams keep scenarios with a common
    client prefix (e.g. a hybrid run with two extra clients) sharing every
    draw for the clients they have in common.
    """

    def __init__(self, master_seed: int, replication: int = 0):
        self.master_seed = int(master_seed)
        self.replication = int(replication)
        self._generators: dict[tuple, np.random.Generator] = {}

    def _make(self, spawn_key: tuple) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=spawn_key)
        return np.random.Generator(np.random.PCG64(seq))

    def _index(self, name: str) -> int:
        try:
            return STREAM_NAMES.index(name)
        except ValueError:
            raise ConfigError(f"unknown stream name {name!r}; valid: {STREAM_NAMES}") from None

    def stream(self, name: str) -> np.random.Generator:
        """The shared stream for ``name``."""
        key = (name,)
        if key not in self._generators:
            self._generators[key] = self._make((self.replication, self._index(name)))
        return self._generators[key]

    def client_stream(self, name: str, client_id: int) -> np.random.Generator:
        """A per-client substream of ``name``."""
        key = (name, int(client_id))
        if key not in self._generators:
            spawn_key = (self.replication, self._index(name), int(client_id))
            self._generators[key] = self._make(spawn_key)
        return self._generators[key]


def sample(dist: Distribution, stream: np.random.Generator, size: int | None = None):
    """One (or ``size``) non-negative draws from ``dist`` on ``stream``."""
    return dist.sample(stream, size=size)


def poisson_process(rate: float, horizon: float, stream: np.random.Generator) -> np.ndarray:
    """Arrival times of a Poisson process with ``rate`` on [0, horizon).

    Returns a strictly increasing array; empty when ``rate`` is zero.
    """
    if rate < 0:
        raise ConfigError(f"rate must be >= 0, got {rate}")
    if horizon <= 0:
        raise ConfigError(f"horizon must be > 0, got {horizon}")
    if rate == 0:
        return np.empty(0, dtype=float)
    expected = rate * horizon
    chunk = max(16, int(expected + 4.0 * np.sqrt(expected)) + 16)
    gaps = stream.exponential(1.0 / rate, chunk)
    times = np.cumsum(gaps)
    while times[-1] < horizon:
        gaps = stream.exponential(1.0 / rate, chunk)
        times = np.concatenate([times, times[-1] + np.cumsum(gaps)])
    return times[times < horizon]


def bernoulli_type(alpha: float, stream: np.random.Generator, size: int | None = None):
    """True for an agent-answerable (alpha) question, with probability ``alpha``.

    ``alpha=1`` always yields True and ``alpha=0`` always False, because the
    underlying uniforms live in [0, 1).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}")
    n = 1 if size is None else int(size)
    out = stream.random(n) < alpha
    if size is None:
        return bool(out[0])
    return out
