"""Discrete-event simulation of the hybrid customer-service center.

Model semantics
---------------
* Each of ``n_clients`` clients emits questions as an independent Poisson
  process at ``lambda_bar`` per minute over ``[0, horizon)``, regardless of
  whether earlier questions were answered (open arrivals).
* ``pure-human``: every question joins one shared FIFO queue served by
  ``n_operators`` homogeneous operators; the service time is drawn from the
  human distribution matching the question's type.
* ``hybrid``: the question type is known at arrival.  Alpha questions are
  answered by a virtual agent immediately (wait 0) and never touch the
  operator queue.  Beta questions enter the FIFO queue stamped with their
  arrival time while the agent spends a classification time ``epsilon``
  deciding it cannot answer; their human service may start at
  ``max(operator available, arrival + epsilon)``, so classification overlaps
  queueing whenever the queue is busy.
* ``hybrid-learning``: each question carries a type id drawn from a catalog
  popularity distribution.  It is agent-answerable iff its type id is in the
  agent's answer DB; otherwise it is a beta question, and its type id enters
  the DB once the human answer completes.

Queue-position preservation: beta questions are served strictly in arrival
order.  An idle operator waits for the head of the queue to finish
classification rather than serving a later arrival, which keeps human
service starts non-decreasing in arrival order (for a single operator the
two rules coincide exactly).

Determinism: identical ``(config, seed)`` yields an identical trace.  A
single run is sequential; replications use independent derived streams.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats as _sps

from .errors import ConfigError, OverloadError
from .stochastic import Distribution, RngStreams, bernoulli_type, poisson_process

MODES = ("pure-human", "hybrid", "hybrid-learning")

#: Default warmup fraction of the horizon when none is given.
DEFAULT_WARMUP_FRACTION = 0.1


@dataclass(frozen=True)
class LearningConfig:
    """Finite question catalog for the incrementally learning agent.

    ``initial_db_size`` seeds the answer DB with the most popular types
    (under uniform popularity: the lowest type ids).  ``session_length``
    controls the bucketing of the per-session agent-share series; default is
    1/40th of the horizon.
    """

    catalog_size: int
    popularity: str = "uniform"
    zipf_exponent: float = 1.0
    initial_db_size: int = 0
    session_length: float | None = None

    def __post_init__(self):
        if self.catalog_size < 1:
            raise ConfigError(f"catalog_size must be >= 1, got {self.catalog_size}")
        if self.popularity not in ("uniform", "zipf"):
            raise ConfigError(f"popularity must be 'uniform' or 'zipf', got {self.popularity!r}")
        if self.zipf_exponent <= 0:
            raise ConfigError(f"zipf_exponent must be > 0, got {self.zipf_exponent}")
        if not 0 <= self.initial_db_size <= self.catalog_size:
            raise ConfigError("initial_db_size must be in [0, catalog_size]")
        if self.session_length is not None and self.session_length <= 0:
            raise ConfigError("session_length must be > 0")


@dataclass(frozen=True)
class SystemConfig:
    """A full simulation scenario.

    Distribution defaults are the canonical service-center parameters used
    throughout the capacity experiments: hard questions N(5, 1) minutes, easy
    questions N(1, 0.2), classification N(0.5, 0.1), 0.1 questions per minute
    per client.  The agent's own answer time defaults to the human time for
    easy questions (``dist_s_alpha_agent=None``).
    """

    mode: str
    n_clients: int
    lambda_bar: float = 0.1
    alpha: float = 0.5
    n_operators: int = 1
    dist_s_alpha_human: Distribution = Distribution.normal(1.0, 0.2)
    dist_s_alpha_agent: Distribution | None = None
    dist_s_beta: Distribution = Distribution.normal(5.0, 1.0)
    dist_epsilon: Distribution = Distribution.normal(0.5, 0.1)
    horizon: float = 480.0
    warmup: float | None = None
    seed: int = 0
    queue_cap: int = 1_000_000
    learning: LearningConfig | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_clients < 1:
            raise ConfigError(f"n_clients must be >= 1, got {self.n_clients}")
        if self.n_operators < 1:
            raise ConfigError(f"n_operators must be >= 1, got {self.n_operators}")
        if self.lambda_bar < 0:
            raise ConfigError(f"lambda_bar must be >= 0, got {self.lambda_bar}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.horizon <= 0:
            raise ConfigError(f"horizon must be > 0, got {self.horizon}")
        if self.warmup is not None and not 0 <= self.warmup < self.horizon:
            raise ConfigError("warmup must satisfy 0 <= warmup < horizon")
        if self.queue_cap < 1:
            raise ConfigError("queue_cap must be >= 1")
        if self.mode == "hybrid-learning" and self.learning is None:
            raise ConfigError("hybrid-learning mode requires a learning config")
        if self.mode != "hybrid-learning" and self.learning is not None:
            raise ConfigError("learning config is only valid in hybrid-learning mode")

    @property
    def effective_warmup(self) -> float:
        if self.warmup is None:
            return DEFAULT_WARMUP_FRACTION * self.horizon
        return self.warmup

    @property
    def agent_dist(self) -> Distribution:
        if self.dist_s_alpha_agent is None:
            return self.dist_s_alpha_human
        return self.dist_s_alpha_agent


@dataclass(frozen=True)
class QuestionRecord:
    """Per-question event trace entry.  Times in minutes from run start.

    ``classification_end`` is only set for beta questions in the hybrid
    modes.  Questions still in the queue at the horizon keep their projected
    service times (past the horizon); metrics exclude them.
    """

    question_id: int
    client_id: int
    arrival_time: float
    type: str
    classification_end: float | None
    service_start: float
    service_end: float
    answered_by: str
    wait: float


@dataclass
class SimulationMetrics:
    """Aggregate results of one run, or of several replications.

    Means cover questions arriving after warmup and completing before the
    horizon.  When aggregated over replications, ``ci`` holds the 95%
    confidence half-width per metric (t distribution over replication means)
    and ``per_replication`` the individual values.
    """

    mean_wait_overall: float
    mean_wait_hard: float
    mean_response_alpha: float
    operator_utilization: float
    questions_total: float
    answered_by_agent: float
    answered_by_human: float
    still_in_system: float
    agent_share: float
    n_replications: int = 1
    unstable: bool = False
    ci: dict = field(default_factory=dict)
    per_replication: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and math.isnan(v):
                return None
            return v
        out = {k: clean(v) for k, v in asdict(self).items() if k != "per_replication"}
        out["ci"] = {k: clean(v) for k, v in self.ci.items()}
        out["per_replication"] = [
            {k: clean(v) for k, v in rep.items()} for rep in self.per_replication
        ]
        return out


#: Metric names that replicate() averages and attaches CIs to.
_AGGREGATED_FIELDS = (
    "mean_wait_overall",
    "mean_wait_hard",
    "mean_response_alpha",
    "operator_utilization",
    "questions_total",
    "answered_by_agent",
    "answered_by_human",
    "still_in_system",
    "agent_share",
)


@dataclass
class _RunResult:
    """Raw per-question arrays of one run, in global arrival order."""

    arrival: np.ndarray
    client: np.ndarray
    is_alpha: np.ndarray
    answered_by_agent: np.ndarray
    classification_end: np.ndarray
    service_start: np.ndarray
    service_end: np.ndarray
    wait: np.ndarray
    metrics: SimulationMetrics
    type_id: np.ndarray | None = None
    share_series: np.ndarray | None = None


def run(config: SystemConfig, seed: int | None = None,
        collect_trace: bool = True) -> tuple[SimulationMetrics, list[QuestionRecord]]:
    """Simulate one replication; returns metrics and the question trace."""
    result = _simulate(config, RngStreams(_seed_of(config, seed), replication=0))
    trace = _build_trace(result) if collect_trace else []
    return result.metrics, trace


def run_learning(config: SystemConfig, seed: int | None = None
                 ) -> tuple[SimulationMetrics, np.ndarray]:
    """Simulate a hybrid-learning run; returns metrics and the per-session agent share."""
    if config.mode != "hybrid-learning":
        raise ConfigError("run_learning requires mode 'hybrid-learning'")
    result = _simulate(config, RngStreams(_seed_of(config, seed), replication=0))
    return result.metrics, result.share_series


def replicate(config: SystemConfig, n_reps: int,
              master_seed: int | None = None) -> SimulationMetrics:
    """Run independent replications and aggregate their metrics.

    Child streams are derived from the master seed per replication index, so
    no two replications share randomness.  A replication aborting on queue
    overload marks the aggregate as unstable; its metrics are skipped.
    """
    if n_reps < 2:
        raise ConfigError(f"n_reps must be >= 2, got {n_reps}")
    master = _seed_of(config, master_seed)
    per_rep: list[dict] = []
    n_overloaded = 0
    for rep in range(n_reps):
        try:
            result = _simulate(config, RngStreams(master, replication=rep))
        except OverloadError:
            n_overloaded += 1
            continue
        per_rep.append({name: getattr(result.metrics, name) for name in _AGGREGATED_FIELDS})
    if not per_rep:
        raise OverloadError(f"all {n_reps} replications exceeded the queue cap")
    means = {}
    ci = {}
    for name in _AGGREGATED_FIELDS:
        values = np.array([rep[name] for rep in per_rep], dtype=float)
        values = values[~np.isnan(values)]
        means[name] = float(values.mean()) if values.size else math.nan
        ci[name] = _ci_half_width(values)
    return SimulationMetrics(
        **means,
        n_replications=len(per_rep),
        unstable=n_overloaded > 0,
        ci=ci,
        per_replication=per_rep,
    )


def write_trace_csv(records: list[QuestionRecord], path) -> None:
    """Write the question trace as CSV, times with 6 decimal places."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["question_id", "client_id", "arrival", "type", "classification_end",
                         "service_start", "service_end", "answered_by", "wait"])
        for r in records:
            writer.writerow([
                r.question_id,
                r.client_id,
                f"{r.arrival_time:.6f}",
                r.type,
                "" if r.classification_end is None else f"{r.classification_end:.6f}",
                f"{r.service_start:.6f}",
                f"{r.service_end:.6f}",
                r.answered_by,
                f"{r.wait:.6f}",
            ])


def _seed_of(config: SystemConfig, seed: int | None) -> int:
    return config.seed if seed is None else int(seed)


def _ci_half_width(values: np.ndarray) -> float:
    if values.size < 2:
        return math.nan
    spread = float(values.std(ddof=1))
    if spread == 0.0:
        return 0.0
    return float(_sps.t.ppf(0.975, values.size - 1) * spread / math.sqrt(values.size))


# ---------------------------------------------------------------------------
# Question generation
# ---------------------------------------------------------------------------

def _generate_arrivals(config: SystemConfig, streams: RngStreams):
    parts, clients = [], []
    for c in range(config.n_clients):
        arr = poisson_process(config.lambda_bar, config.horizon,
                              streams.client_stream("arrivals", c))
        parts.append(arr)
        clients.append(np.full(arr.size, c, dtype=np.int64))
    arrival = np.concatenate(parts) if parts else np.empty(0)
    client = np.concatenate(clients) if clients else np.empty(0, dtype=np.int64)
    if arrival.size > 10 * config.queue_cap:
        raise OverloadError(
            f"{arrival.size} arrivals exceed 10x the queue cap; scenario too large")
    # Global arrival order; simultaneous arrivals (measure zero) break ties
    # by client id, then per-client emission order.
    order = np.lexsort((client, arrival))
    counts = [p.size for p in parts]
    return arrival[order], client[order], order, counts


def _draw_per_client(config: SystemConfig, streams: RngStreams, counts, order):
    """Per-question draws for pure/hybrid modes, reordered to arrival order.

    Draw order is fixed per client: type uniforms first, then human service
    for the beta subset, then for the alpha subset, then classification and
    agent-service subsets.  Runs that share a client prefix therefore share
    all of that prefix's draws (common random numbers).
    """
    hybrid = config.mode == "hybrid"
    is_alpha_parts, s_human_parts, eps_parts, s_agent_parts = [], [], [], []
    for c, m in enumerate(counts):
        ia = bernoulli_type(config.alpha, streams.client_stream("question-type", c), m)
        n_beta = int((~ia).sum())
        n_alpha = m - n_beta
        s_human = np.empty(m)
        hs = streams.client_stream("human-service", c)
        s_human[~ia] = config.dist_s_beta.sample(hs, n_beta)
        s_human[ia] = config.dist_s_alpha_human.sample(hs, n_alpha)
        eps = np.zeros(m)
        s_agent = np.zeros(m)
        if hybrid:
            eps[~ia] = config.dist_epsilon.sample(
                streams.client_stream("classification", c), n_beta)
            s_agent[ia] = config.agent_dist.sample(
                streams.client_stream("agent-service", c), n_alpha)
        is_alpha_parts.append(ia)
        s_human_parts.append(s_human)
        eps_parts.append(eps)
        s_agent_parts.append(s_agent)
    def merged(parts, dtype=float):
        return (np.concatenate(parts) if parts else np.empty(0, dtype=dtype))[order]
    return (merged(is_alpha_parts, bool), merged(s_human_parts),
            merged(eps_parts), merged(s_agent_parts))


def _draw_type_ids(learning: LearningConfig, stream, m: int) -> np.ndarray:
    if learning.popularity == "uniform":
        return stream.integers(0, learning.catalog_size, m)
    ranks = np.arange(1, learning.catalog_size + 1, dtype=float)
    cum = np.cumsum(ranks ** -learning.zipf_exponent)
    cum /= cum[-1]
    ids = np.searchsorted(cum, stream.random(m), side="right")
    return np.minimum(ids, learning.catalog_size - 1)


# ---------------------------------------------------------------------------
# FIFO queue passes
# ---------------------------------------------------------------------------

def _single_server_pass(ready: np.ndarray, service: np.ndarray) -> np.ndarray:
    """Service starts for one operator: start_i = max(ready_i, end_{i-1})."""
    csum_prev = np.cumsum(service) - service
    return csum_prev + np.maximum.accumulate(ready - csum_prev)


def _multi_server_pass(ready: np.ndarray, service: np.ndarray, k: int) -> np.ndarray:
    """Service starts for ``k`` operators under strict queue-position order.

    The head of the queue blocks later arrivals, so starts are
    non-decreasing; the lowest-indexed operator free at the start time takes
    the question.
    """
    avail = [0.0] * k
    prev_start = 0.0
    start = np.empty(ready.size)
    for i in range(ready.size):
        t = min(avail)
        if ready[i] > t:
            t = ready[i]
        if prev_start > t:
            t = prev_start
        for j in range(k):
            if avail[j] <= t:
                avail[j] = t + service[i]
                break
        start[i] = t
        prev_start = t
    return start


def _check_queue_cap(arrival: np.ndarray, start: np.ndarray, cap: int) -> None:
    if arrival.size == 0:
        return
    # Queue length seen by question i on arrival: earlier arrivals not yet in
    # service, plus itself.  Starts are non-decreasing, so searchsorted works.
    started = np.searchsorted(start, arrival, side="right")
    qlen = np.arange(1, arrival.size + 1) - started
    peak = int(qlen.max())
    if peak > cap:
        raise OverloadError(f"queue length reached {peak}, above the cap of {cap}")


# ---------------------------------------------------------------------------
# Simulation core
# ---------------------------------------------------------------------------

def _simulate(config: SystemConfig, streams: RngStreams) -> _RunResult:
    if config.mode == "hybrid-learning":
        return _simulate_learning(config, streams)

    arrival, client, order, counts = _generate_arrivals(config, streams)
    is_alpha, s_human, eps, s_agent = _draw_per_client(config, streams, counts, order)
    total = arrival.size
    service_start = np.empty(total)
    service_end = np.empty(total)
    classification_end = np.full(total, np.nan)
    answered_by_agent = np.zeros(total, dtype=bool)

    if config.mode == "pure-human":
        queued = np.ones(total, dtype=bool)
        ready = arrival
    else:
        queued = ~is_alpha
        ready = arrival[queued] + eps[queued]
        classification_end[queued] = ready
        answered_by_agent = is_alpha.copy()
        service_start[is_alpha] = arrival[is_alpha]
        service_end[is_alpha] = arrival[is_alpha] + s_agent[is_alpha]

    q_service = s_human[queued]
    if config.n_operators == 1:
        q_start = _single_server_pass(ready, q_service)
    else:
        q_start = _multi_server_pass(ready, q_service, config.n_operators)
    _check_queue_cap(arrival[queued], q_start, config.queue_cap)
    service_start[queued] = q_start
    service_end[queued] = q_start + q_service

    wait = service_start - arrival
    metrics = _metrics_from_arrays(config, arrival, is_alpha, answered_by_agent,
                                   service_start, service_end, wait)
    return _RunResult(arrival=arrival, client=client, is_alpha=is_alpha,
                      answered_by_agent=answered_by_agent,
                      classification_end=classification_end,
                      service_start=service_start, service_end=service_end,
                      wait=wait, metrics=metrics)


def _simulate_learning(config: SystemConfig, streams: RngStreams) -> _RunResult:
    learning = config.learning
    arrival, client, order, counts = _generate_arrivals(config, streams)
    total = arrival.size

    # Routing depends on the evolving DB, so draw every variate for every
    # question up front (one per question and purpose) and use what applies.
    type_parts, eps_parts, s_beta_parts, s_agent_parts = [], [], [], []
    for c, m in enumerate(counts):
        type_parts.append(_draw_type_ids(
            learning, streams.client_stream("learning-catalog", c), m))
        eps_parts.append(config.dist_epsilon.sample(
            streams.client_stream("classification", c), m))
        s_beta_parts.append(config.dist_s_beta.sample(
            streams.client_stream("human-service", c), m))
        s_agent_parts.append(config.agent_dist.sample(
            streams.client_stream("agent-service", c), m))
    def merged(parts, dtype=float):
        return (np.concatenate(parts) if parts else np.empty(0, dtype=dtype))[order]
    type_id = merged(type_parts, np.int64)
    eps = merged(eps_parts)
    s_beta = merged(s_beta_parts)
    s_agent = merged(s_agent_parts)

    db = set(range(learning.initial_db_size))
    pending: list[tuple[float, int, int]] = []  # (completion, seq, type id)
    avail = [0.0] * config.n_operators
    prev_start = 0.0
    is_alpha = np.zeros(total, dtype=bool)
    service_start = np.empty(total)
    service_end = np.empty(total)
    classification_end = np.full(total, np.nan)
    queue_backlog = 0
    peak_backlog = 0

    for i in range(total):
        t_arr = arrival[i]
        while pending and pending[0][0] <= t_arr:
            done = heapq.heappop(pending)
            db.add(done[2])
            queue_backlog -= 1
        if type_id[i] in db:
            is_alpha[i] = True
            service_start[i] = t_arr
            service_end[i] = t_arr + s_agent[i]
            continue
        ready = t_arr + eps[i]
        classification_end[i] = ready
        t = min(avail)
        if ready > t:
            t = ready
        if prev_start > t:
            t = prev_start
        for j in range(config.n_operators):
            if avail[j] <= t:
                avail[j] = t + s_beta[i]
                break
        service_start[i] = t
        service_end[i] = t + s_beta[i]
        prev_start = t
        heapq.heappush(pending, (service_end[i], i, int(type_id[i])))
        queue_backlog += 1
        peak_backlog = max(peak_backlog, queue_backlog)
        if peak_backlog > config.queue_cap:
            raise OverloadError(
                f"queue length reached {peak_backlog}, above the cap of {config.queue_cap}")

    wait = service_start - arrival
    answered_by_agent = is_alpha.copy()
    metrics = _metrics_from_arrays(config, arrival, is_alpha, answered_by_agent,
                                   service_start, service_end, wait)
    share_series = _share_series(config, arrival, answered_by_agent)
    return _RunResult(arrival=arrival, client=client, is_alpha=is_alpha,
                      answered_by_agent=answered_by_agent,
                      classification_end=classification_end,
                      service_start=service_start, service_end=service_end,
                      wait=wait, metrics=metrics, type_id=type_id,
                      share_series=share_series)


def _share_series(config: SystemConfig, arrival: np.ndarray,
                  answered_by_agent: np.ndarray) -> np.ndarray:
    length = config.learning.session_length
    if length is None:
        length = config.horizon / 40.0
    n_sessions = int(math.ceil(config.horizon / length))
    idx = np.minimum((arrival / length).astype(np.int64), n_sessions - 1)
    totals = np.bincount(idx, minlength=n_sessions).astype(float)
    agent = np.bincount(idx, weights=answered_by_agent.astype(float),
                        minlength=n_sessions)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(totals > 0, agent / totals, np.nan)


def _metrics_from_arrays(config: SystemConfig, arrival, is_alpha, answered_by_agent,
                         service_start, service_end, wait) -> SimulationMetrics:
    horizon = config.horizon
    warmup = config.effective_warmup
    in_window = arrival >= warmup
    completed = in_window & (service_end <= horizon)
    still = int((in_window & (service_end > horizon)).sum())
    total = int(in_window.sum())
    agent_done = int((completed & answered_by_agent).sum())
    human_done = int((completed & ~answered_by_agent).sum())

    def safe_mean(values) -> float:
        return float(values.mean()) if values.size else math.nan

    human_served = ~answered_by_agent
    busy = np.maximum(0.0, np.minimum(service_end[human_served], horizon)
                      - np.maximum(service_start[human_served], warmup))
    utilization = float(busy.sum() / (config.n_operators * (horizon - warmup)))

    return SimulationMetrics(
        mean_wait_overall=safe_mean(wait[completed]),
        mean_wait_hard=safe_mean(wait[completed & ~is_alpha]),
        mean_response_alpha=safe_mean((service_end - arrival)[completed & is_alpha]),
        operator_utilization=utilization,
        questions_total=total,
        answered_by_agent=agent_done,
        answered_by_human=human_done,
        still_in_system=still,
        agent_share=agent_done / total if total else 0.0,
    )


def _build_trace(result: _RunResult) -> list[QuestionRecord]:
    records = []
    for i in range(result.arrival.size):
        cls_end = result.classification_end[i]
        records.append(QuestionRecord(
            question_id=i,
            client_id=int(result.client[i]),
            arrival_time=float(result.arrival[i]),
            type="alpha" if result.is_alpha[i] else "beta",
            classification_end=None if math.isnan(cls_end) else float(cls_end),
            service_start=float(result.service_start[i]),
            service_end=float(result.service_end[i]),
            answered_by="agent" if result.answered_by_agent[i] else "human",
            wait=float(result.wait[i]),
        ))
    return records
