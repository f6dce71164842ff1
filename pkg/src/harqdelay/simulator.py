"""Slot-accurate simulation of the ARQ/HARQ transmit queue.

Per slot, in order: a retransmission falling due re-enters at the head of the
queue; the slot boundary is observed (queue-occupancy statistics); a new
arrival joins the tail (or is dropped against q_max); the head packet, if
any, transmits for the whole slot and either completes (success, or discard
at the attempt limit) or is rescheduled ``1 + zeta + delta`` slots after its
transmission slot.  Completion includes the final decoding delay but not the
final feedback.  In-flight packets live outside the queue, so retransmission
storage is unbounded while arrivals respect q_max.

Randomness is pre-drawn from a counter-based generator, so a (seed, config)
pair reproduces every packet record bit-exactly.
"""
from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

DELIVERED = 0
DISCARDED = 1
DROPPED_OVERFLOW = 2
_PENDING = -1

_OUTCOME_NAMES = {DELIVERED: "delivered", DISCARDED: "discarded",
                  DROPPED_OVERFLOW: "dropped_overflow"}

_WILSON_Z = 1.959963984540054  # 95% two-sided


class ConfigError(ValueError):
    """Inconsistent simulation configuration."""


@dataclass(frozen=True)
class SimConfig:
    scheme: str  # "arq" | "harq"
    f: float | None = None  # Bernoulli arrival probability
    arrival_cycle: int | None = None  # deterministic arrivals every c slots
    p: float | None = None  # ARQ per-attempt error rate
    p_vec: tuple[float, ...] | None = None  # HARQ per-attempt error rates
    zeta: int = 1
    delta: int = 2
    max_attempts: int | None = None  # None: persistent (no discards)
    q_max: int | None = None  # None: unbounded queue
    slots: int = 10_000_000
    warmup_slots: int = 10_000
    seed: int = 0
    if_mode: bool = False  # force zeta = delta = 0 (oracle runs)
    slot_ms: float = 1.0
    occupancy_batches: int = 50

    def __post_init__(self):
        if self.scheme not in ("arq", "harq"):
            raise ConfigError(f"scheme must be 'arq' or 'harq', got {self.scheme!r}")
        if (self.f is None) == (self.arrival_cycle is None):
            raise ConfigError("exactly one of f and arrival_cycle must be set")
        if self.f is not None and not 0.0 <= self.f < 1.0:
            raise ConfigError(f"f must be in [0, 1), got {self.f}")
        if self.arrival_cycle is not None and self.arrival_cycle < 1:
            raise ConfigError(f"arrival_cycle must be >= 1, got {self.arrival_cycle}")
        if self.scheme == "arq":
            if self.p is None or self.p_vec is not None:
                raise ConfigError("arq scheme takes a scalar p, not p_vec")
            if not 0.0 <= self.p <= 1.0:
                raise ConfigError(f"p must be in [0, 1], got {self.p}")
        else:
            if self.p_vec is None or self.p is not None:
                raise ConfigError("harq scheme takes p_vec, not a scalar p")
            object.__setattr__(self, "p_vec", tuple(float(x) for x in self.p_vec))
            if any(not 0.0 <= x <= 1.0 for x in self.p_vec):
                raise ConfigError(f"p_vec entries must be in [0, 1]: {self.p_vec}")
            if self.max_attempts is None:
                object.__setattr__(self, "max_attempts", len(self.p_vec))
            elif self.max_attempts != len(self.p_vec):
                raise ConfigError(
                    f"max_attempts {self.max_attempts} != len(p_vec) {len(self.p_vec)}"
                )
        if self.max_attempts is not None and self.max_attempts < 1:
            raise ConfigError(f"max_attempts must be >= 1, got {self.max_attempts}")
        if self.q_max is not None and self.q_max < 1:
            raise ConfigError(f"q_max must be >= 1, got {self.q_max}")
        if self.zeta < 0 or self.delta < 0:
            raise ConfigError(f"zeta/delta must be >= 0, got ({self.zeta}, {self.delta})")
        if self.slots < 10_000:
            raise ConfigError(f"horizon must be >= 10^4 slots, got {self.slots}")
        if not 0 <= self.warmup_slots < self.slots:
            raise ConfigError(
                f"warmup_slots must be in [0, slots), got {self.warmup_slots}"
            )
        if self.slot_ms <= 0:
            raise ConfigError(f"slot_ms must be positive, got {self.slot_ms}")
        if self.occupancy_batches < 1:
            raise ConfigError("occupancy_batches must be >= 1")

    @property
    def zeta_eff(self) -> int:
        return 0 if self.if_mode else self.zeta

    @property
    def delta_eff(self) -> int:
        return 0 if self.if_mode else self.delta

    @property
    def rtt_slots(self) -> int:
        return 1 + self.zeta_eff + self.delta_eff


@dataclass(frozen=True)
class PacketRecord:
    arrival_slot: int
    first_tx_slot: int
    attempts: int
    completion_slot: int
    outcome: str
    wait_slots: int
    service_slots: int
    total_slots: int


@dataclass(frozen=True)
class DvpPoint:
    target_ms: float
    estimate: float
    ci_lo: float
    ci_hi: float
    violations: int
    packets: int


def wilson_interval(successes: int, n: int, z: float = _WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n))
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


@dataclass
class SimStats:
    """Results of one simulation run; per-packet arrays cover every arrival."""

    config: SimConfig
    targets: tuple[float, ...]
    arrival_slots: np.ndarray
    wait_slots: np.ndarray  # -1 for packets never transmitted
    attempts: np.ndarray
    outcome: np.ndarray  # DELIVERED / DISCARDED / DROPPED_OVERFLOW / -1 pending
    occupancy_batches_arr: np.ndarray  # (batches, qlen) boundary counts, post-warmup
    n_arrivals: int
    n_delivered: int
    n_discarded: int
    n_dropped: int
    n_pending: int
    dvp: dict[float, DvpPoint] = field(default_factory=dict)
    throughput_bps: dict[float, float] = field(default_factory=dict)

    def __post_init__(self):
        cfg = self.config
        finalized = (self.outcome == DELIVERED) | (self.outcome == DISCARDED)
        self._measured = finalized & (self.arrival_slots >= cfg.warmup_slots)
        m = self.attempts[self._measured]
        self._m_wait = self.wait_slots[self._measured]
        self._m_service = m * (1 + cfg.zeta_eff) + (m - 1) * cfg.delta_eff
        self._m_total = self._m_wait + self._m_service
        self._m_discarded = self.outcome[self._measured] == DISCARDED
        for d in self.targets:
            self.dvp[d] = self.dvp_at(d)

    @property
    def n_measured(self) -> int:
        return int(self._measured.sum())

    def violation_mask(self, d_ms: float) -> np.ndarray:
        """Measured packets violating target d: late delivery or discard."""
        return self._m_discarded | (self._m_total * self.config.slot_ms > d_ms)

    def dvp_at(self, d_ms: float) -> DvpPoint:
        n = self.n_measured
        viol = int(self.violation_mask(d_ms).sum())
        est = viol / n if n else 0.0
        lo, hi = wilson_interval(viol, n)
        return DvpPoint(d_ms, est, lo, hi, viol, n)

    def wait_histogram(self) -> np.ndarray:
        return np.bincount(self._m_wait)

    def service_histogram(self) -> np.ndarray:
        return np.bincount(self._m_service)

    def total_histogram(self) -> np.ndarray:
        return np.bincount(self._m_total)

    def occupancy(self) -> np.ndarray:
        """Post-warmup slot-boundary queue-length counts."""
        return self.occupancy_batches_arr.sum(axis=0)

    def occupancy_probs(self) -> tuple[np.ndarray, np.ndarray]:
        """Queue-length probabilities with batch-means standard errors."""
        batches = self.occupancy_batches_arr
        per_batch = batches / batches.sum(axis=1, keepdims=True)
        mean = per_batch.mean(axis=0)
        nb = batches.shape[0]
        sem = per_batch.std(axis=0, ddof=1) / math.sqrt(nb) if nb > 1 else 0 * mean
        return mean, sem

    def queue_ccdf_empirical(self, q: int) -> tuple[float, float]:
        """Empirical P(Q > q) at slot boundaries, with batch-means std error."""
        batches = self.occupancy_batches_arr
        totals = batches.sum(axis=1)
        tail = batches[:, q + 1 :].sum(axis=1) if q + 1 < batches.shape[1] else 0 * totals
        per_batch = tail / totals
        nb = batches.shape[0]
        sem = per_batch.std(ddof=1) / math.sqrt(nb) if nb > 1 else 0.0
        return float(per_batch.mean()), float(sem)

    def records(self) -> Iterator[PacketRecord]:
        cfg = self.config
        for i in range(self.n_arrivals):
            out = int(self.outcome[i])
            if out == _PENDING:
                continue
            arr = int(self.arrival_slots[i])
            if out == DROPPED_OVERFLOW:
                yield PacketRecord(arr, -1, 0, -1, _OUTCOME_NAMES[out], -1, 0, -1)
                continue
            m = int(self.attempts[i])
            wait = int(self.wait_slots[i])
            service = m * (1 + cfg.zeta_eff) + (m - 1) * cfg.delta_eff
            first_tx = arr + wait
            last_tx = first_tx + (m - 1) * cfg.rtt_slots
            yield PacketRecord(
                arrival_slot=arr,
                first_tx_slot=first_tx,
                attempts=m,
                completion_slot=last_tx + cfg.zeta_eff,
                outcome=_OUTCOME_NAMES[out],
                wait_slots=wait,
                service_slots=service,
                total_slots=wait + service,
            )

    def write_trace(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["arrival_slot", "first_tx_slot", "attempts", "outcome",
                        "wait_slots", "service_slots", "total_slots"])
            for r in self.records():
                w.writerow([r.arrival_slot, r.first_tx_slot, r.attempts, r.outcome,
                            r.wait_slots, r.service_slots, r.total_slots])


def run(config: SimConfig, targets=(), packet_bits: int | None = None) -> SimStats:
    """Simulate the slotted retransmission system; deterministic given the seed."""
    cfg = config
    slots = cfg.slots
    rng = np.random.Generator(np.random.Philox(cfg.seed))

    if cfg.f is not None:
        arrivals_np = np.flatnonzero(rng.random(slots) < cfg.f)
    else:
        arrivals_np = np.arange(0, slots, cfg.arrival_cycle, dtype=np.int64)
    u_fail = rng.random(slots)
    n_pk = int(arrivals_np.size)

    # Per-packet state as plain lists: values are small ints, writes are cheap.
    wait = [-1] * n_pk
    attempts = [0] * n_pk
    outcome = [_PENDING] * n_pk

    if cfg.scheme == "arq":
        p_of = [cfg.p] * (cfg.max_attempts or 1)
        persistent = cfg.max_attempts is None
        p_const = cfg.p
    else:
        p_of = list(cfg.p_vec)
        persistent = False
        p_const = None
    max_m = cfg.max_attempts  # None for persistent

    rtt = cfg.rtt_slots
    ring_n = rtt + 1
    retx_ring = [-1] * ring_n

    q_max = cfg.q_max
    warmup = cfg.warmup_slots
    measured_slots = slots - warmup
    nb = cfg.occupancy_batches
    occ_cap = (q_max + 2) if q_max is not None else 4096
    occ_rows = [[0] * occ_cap for _ in range(nb)]
    batch_edges = [warmup + ((b + 1) * measured_slots) // nb for b in range(nb)]
    occ_cur = occ_rows[0]
    next_edge = batch_edges[0]
    bi = 0

    queue = deque()
    ai = 0
    next_arr = int(arrivals_np[0]) if n_pk else slots
    n_dropped = 0

    for k in range(slots):
        # 1. retransmission due this slot goes to the head of the queue
        ri = k % ring_n
        pid = retx_ring[ri]
        if pid >= 0:
            retx_ring[ri] = -1
            queue.appendleft(pid)
        # 2. slot boundary: record occupancy
        if k >= warmup:
            while k >= next_edge:
                bi += 1
                occ_cur = occ_rows[bi]
                next_edge = batch_edges[bi]
            ql = len(queue)
            occ_cur[ql if ql < occ_cap else occ_cap - 1] += 1
        # 3. arrival
        if k == next_arr:
            if q_max is None or len(queue) < q_max:
                queue.append(ai)
            else:
                outcome[ai] = DROPPED_OVERFLOW
                n_dropped += 1
            ai += 1
            next_arr = int(arrivals_np[ai]) if ai < n_pk else slots
        # 4.+5. head transmits for the whole slot; outcome at slot end
        if queue:
            pid = queue.popleft()
            m = attempts[pid] + 1
            attempts[pid] = m
            if wait[pid] < 0:
                wait[pid] = k - int(arrivals_np[pid])
            p_m = p_const if persistent else p_of[m - 1]
            if u_fail[k] < p_m:
                if persistent or m < max_m:
                    retx_ring[(k + rtt) % ring_n] = pid
                else:
                    outcome[pid] = DISCARDED
            else:
                outcome[pid] = DELIVERED

    outcome_np = np.asarray(outcome, dtype=np.int8)
    stats = SimStats(
        config=cfg,
        targets=tuple(targets),
        arrival_slots=arrivals_np,
        wait_slots=np.asarray(wait, dtype=np.int64),
        attempts=np.asarray(attempts, dtype=np.int64),
        outcome=outcome_np,
        occupancy_batches_arr=np.asarray(occ_rows, dtype=np.int64),
        n_arrivals=n_pk,
        n_delivered=int((outcome_np == DELIVERED).sum()),
        n_discarded=int((outcome_np == DISCARDED).sum()),
        n_dropped=n_dropped,
        n_pending=int((outcome_np == _PENDING).sum()),
    )
    if packet_bits is not None:
        for d in stats.targets:
            stats.throughput_bps[d] = throughput(stats, d, packet_bits, cfg.slot_ms)
    return stats


def throughput(stats: SimStats, d_ms: float, packet_bits: int, slot_ms: float) -> float:
    """Delivered-in-time bits per second over the post-warmup window."""
    delivered = ~stats._m_discarded & (stats._m_total * slot_ms <= d_ms)
    seconds = (stats.config.slots - stats.config.warmup_slots) * slot_ms / 1000.0
    return int(delivered.sum()) * packet_bits / seconds


def empirical_wait_ccdf(stats: SimStats, n_batches: int = 50) -> dict[int, tuple[float, float]]:
    """P(D_w > j) per j with batch-means standard errors over packet order."""
    waits = stats._m_wait
    n = waits.size
    if n == 0:
        return {}
    jmax = int(waits.max())
    nb = min(n_batches, n)
    edges = np.linspace(0, n, nb + 1).astype(int)
    out = {}
    for j in range(jmax + 1):
        exceed = waits > j
        per_batch = np.array(
            [exceed[a:b].mean() for a, b in zip(edges[:-1], edges[1:]) if b > a]
        )
        sem = per_batch.std(ddof=1) / math.sqrt(per_batch.size) if per_batch.size > 1 else 0.0
        out[j] = (float(exceed.mean()), float(sem))
    return out
