"""Closed-form delay analytics for persistent ARQ with i.i.d. attempt failures.

The queue of the immediate-feedback (IF) idealisation admits a geometric
steady state; its wait delay upper-bounds the wait of the real delayed
feedback system, and combining it with the geometric service delay yields a
closed-form bound on the delay violation probability.  All tail expressions
are evaluated in log space so results far below 1e-300 in intermediate
ratios neither overflow nor vanish prematurely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

_LOG_TIE_TOL = 1e-300  # treat |log ratio| below this as an exact tie


class UnstableQueue(ValueError):
    """Arrival rate meets or exceeds the retransmission-limited service rate."""


@dataclass(frozen=True)
class ArqParams:
    """Persistent-ARQ system: Bernoulli(f) arrivals, attempt failure p."""

    f: float  # per-slot arrival probability
    p: float  # per-attempt error rate
    zeta: int = 1  # decoding delay, slots
    delta: int = 2  # feedback delay, slots
    slot_ms: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.f < 1.0:
            raise ValueError(f"f must be in [0, 1), got {self.f}")
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must be in [0, 1), got {self.p}")
        if self.zeta < 0 or self.delta < 0:
            raise ValueError(f"zeta/delta must be >= 0, got ({self.zeta}, {self.delta})")
        if self.slot_ms <= 0:
            raise ValueError(f"slot_ms must be positive, got {self.slot_ms}")

    def rtt_slots(self) -> int:
        return 1 + self.zeta + self.delta


def _require_stable(params: ArqParams):
    if params.f + params.p >= 1.0:
        raise UnstableQueue(
            f"f + p = {params.f + params.p:.6g} >= 1 "
            f"(stability ratio p/(1-f) = {stability_ratio(params):.6g})"
        )


def _kd(d_ms: float, params: ArqParams) -> int:
    return math.floor(
        (d_ms / params.slot_ms + params.delta) / params.rtt_slots()
    )


def bar_kd(d_ms: float, params: ArqParams) -> int:
    """Attempts that fit within the target when the packet never queues."""
    if d_ms < 0:
        raise ValueError(f"d must be >= 0, got {d_ms}")
    return _kd(d_ms, params)


def bar_dvp(d_ms: float, params: ArqParams) -> float:
    """Violation probability of the no-queue (bounded-arrival) regime: p^k_d."""
    kd = bar_kd(d_ms, params)
    if kd == 0:
        return 1.0
    return params.p**kd


def stability_ratio(params: ArqParams) -> float:
    """p / (1 - f); the queue is stable when this does not exceed 1."""
    return params.p / (1.0 - params.f)


def queue_mean(params: ArqParams) -> float:
    """Expected IF queue length f*p / (1 - f - p)."""
    _require_stable(params)
    return params.f * params.p / (1.0 - params.f - params.p)


def queue_ccdf(q: int, params: ArqParams) -> float:
    """P(Q > q) for the IF queue: (f*p / ((1-f)(1-p)))^(q+1)."""
    if q < 0:
        raise ValueError(f"q must be >= 0, got {q}")
    _require_stable(params)
    f, p = params.f, params.p
    if p == 0.0 or f == 0.0:
        return 0.0
    log_rho = math.log(f) + math.log(p) - math.log1p(-f) - math.log1p(-p)
    return math.exp((q + 1) * log_rho)


def negbin_pmf(k: int, q: int, p: float) -> float:
    """P(q-th success on trial k) with failure probability p.

    The sum of q i.i.d. geometric attempt counts: C(k-1, q-1) (1-p)^q p^(k-q).
    Returns 0 outside the support 1 <= q <= k.
    """
    if q < 1 or k < q:
        return 0.0
    if p == 0.0:
        return 1.0 if k == q else 0.0
    if p >= 1.0:
        return 0.0
    if k <= 300:
        return math.comb(k - 1, q - 1) * (1.0 - p) ** q * p ** (k - q)
    log_pmf = (
        math.lgamma(k)
        - math.lgamma(q)
        - math.lgamma(k - q + 1)
        + q * math.log1p(-p)
        + (k - q) * math.log(p)
    )
    return math.exp(log_pmf)


def wait_ccdf_bound(j: int, params: ArqParams) -> float:
    """Upper bound on P(D_w > j): the IF-queue wait tail (f/(1-p)) (p/(1-f))^(j+1)."""
    if j < 0:
        raise ValueError(f"j must be >= 0, got {j}")
    _require_stable(params)
    f, p = params.f, params.p
    if p == 0.0 or f == 0.0:
        return 0.0
    log_val = (
        math.log(f)
        - math.log1p(-p)
        + (j + 1) * (math.log(p) - math.log1p(-f))
    )
    return min(1.0, math.exp(log_val))


def service_pmf(k: int, params: ArqParams) -> tuple[int, float]:
    """Delay (slots) and probability of success at exactly the k-th attempt."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    delay_slots = k * (params.zeta + 1) + params.delta * (k - 1)
    prob = params.p ** (k - 1) * (1.0 - params.p)
    return delay_slots, prob


def arq_kd(d_ms: float, params: ArqParams) -> int:
    """Attempts whose service delay alone still meets the target d."""
    if d_ms < 0:
        raise ValueError(f"d must be >= 0, got {d_ms}")
    return _kd(d_ms, params)


def _log_geom_sum(log_x: float, n_terms: int) -> float:
    """log(sum_{i=0}^{n_terms-1} x^i) for x = exp(log_x), robust for any log_x."""
    if n_terms <= 0:
        return -math.inf
    if n_terms == 1 or log_x == -math.inf:
        return 0.0
    if abs(log_x) < _LOG_TIE_TOL:
        # x == 1 to double precision; the term-by-term sum is exactly n_terms.
        return math.log(n_terms)
    if log_x < 0.0:
        num = math.log(-math.expm1(n_terms * log_x))
        den = math.log(-math.expm1(log_x))
    else:
        num = n_terms * log_x + math.log(-math.expm1(-n_terms * log_x))
        den = log_x + math.log(-math.expm1(-log_x))
    return num - den


def arq_dvp(d_ms: float, params: ArqParams) -> float:
    """Upper bound on P(total delay > d) for persistent ARQ.

    Evaluates the unsimplified geometric sum

        p^k_d + f r^(floor(d/T) - zeta) * sum_{i=0}^{k_d - 1} (p r^-RTT)^i,

    with r = p/(1-f), which is immune to sign transcription issues in the
    fully simplified form and degrades gracefully to the term count when the
    geometric ratio is 1.  The result is clamped to [0, 1].
    """
    if d_ms < 0:
        raise ValueError(f"d must be >= 0, got {d_ms}")
    _require_stable(params)
    f, p = params.f, params.p
    kd = arq_kd(d_ms, params)
    if kd == 0:
        return 1.0
    if p == 0.0:
        return 0.0
    log_p = math.log(p)
    service_term = math.exp(kd * log_p)
    if f == 0.0:
        return min(1.0, service_term)
    rtt = params.rtt_slots()
    log_r = log_p - math.log1p(-f)
    log_x = log_p - rtt * log_r
    log_wait_term = (
        math.log(f)
        + (math.floor(d_ms / params.slot_ms) - params.zeta) * log_r
        + _log_geom_sum(log_x, kd)
    )
    return min(1.0, service_term + math.exp(log_wait_term))
