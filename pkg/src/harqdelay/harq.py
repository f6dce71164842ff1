"""HARQ-IR delay analytics: queue/attempt Markov chain, wait pmf, DVP.

The immediate-feedback system is a Markov chain over states (q, m): queue
length q in 0..q_max and attempt number m in 1..M of the head packet.  Its
steady state gives the queue-length marginal; conditioning on the queue
length, the wait delay of an arriving packet is the total slot count consumed
by the packets ahead, each of which occupies between 1 and M slots (discard
at the M-th attempt included).  Combining the wait pmf with the service-delay
tail (a product of per-attempt failure rates) yields the DVP.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class NoConvergence(RuntimeError):
    """Power iteration failed to reach the residual tolerance."""


@dataclass(frozen=True)
class HarqParams:
    """HARQ-IR system: Bernoulli(f) arrivals, attempt error rates p_vec."""

    f: float
    p_vec: tuple[float, ...]
    q_max: int = 16
    zeta: int = 1
    delta: int = 2
    slot_ms: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "p_vec", tuple(float(p) for p in self.p_vec))
        if not 0.0 <= self.f < 1.0:
            raise ValueError(f"f must be in [0, 1), got {self.f}")
        if len(self.p_vec) < 1:
            raise ValueError("p_vec must have at least one entry")
        if any(not 0.0 <= p <= 1.0 for p in self.p_vec):
            raise ValueError(f"attempt error rates must be in [0, 1]: {self.p_vec}")
        if any(b > a + 1e-12 for a, b in zip(self.p_vec, self.p_vec[1:])):
            raise ValueError(f"p_vec must be nonincreasing, got {self.p_vec}")
        if self.q_max < 1:
            raise ValueError(f"q_max must be >= 1, got {self.q_max}")
        if self.zeta < 0 or self.delta < 0:
            raise ValueError(f"zeta/delta must be >= 0, got ({self.zeta}, {self.delta})")
        if self.slot_ms <= 0:
            raise ValueError(f"slot_ms must be positive, got {self.slot_ms}")

    @property
    def max_attempts(self) -> int:
        return len(self.p_vec)

    def rtt_slots(self) -> int:
        return 1 + self.zeta + self.delta


@dataclass(frozen=True)
class HarqChain:
    """Dense row-stochastic transition matrix over (q, m) states."""

    transition: np.ndarray
    max_attempts: int
    q_max: int

    @property
    def n_states(self) -> int:
        return (self.q_max + 1) * self.max_attempts

    def state_index(self, q: int, m: int) -> int:
        """0-based row/column of state (q, m), m in 1..M."""
        if not (0 <= q <= self.q_max and 1 <= m <= self.max_attempts):
            raise ValueError(f"state ({q}, {m}) out of range")
        return q * self.max_attempts + (m - 1)


def build_chain(params: HarqParams) -> HarqChain:
    """Transition matrix of the immediate-feedback (q, m) chain.

    Failures advance m (and q on arrival), successes and M-th attempts reset
    the head to a fresh packet, and arrivals at a full queue are dropped so a
    failure at q_max only advances m.  States (0, m) for m >= 2 are unreachable
    self-loops kept for uniform indexing.
    """
    M, qmax, f = params.max_attempts, params.q_max, params.f
    p = params.p_vec
    n = (qmax + 1) * M
    P = np.zeros((n, n))

    def idx(q, m):
        return q * M + (m - 1)

    # Empty queue: an arriving packet is served next slot; it re-enters the
    # queue (on attempt 2) only if it fails and retries are allowed.
    if M >= 2:
        P[idx(0, 1), idx(1, 2)] = f * p[0]
        P[idx(0, 1), idx(0, 1)] = 1.0 - f * p[0]
    else:
        P[idx(0, 1), idx(0, 1)] = 1.0
    for m in range(2, M + 1):
        P[idx(0, m), idx(0, m)] = 1.0

    for q in range(1, qmax + 1):
        for m in range(1, M):
            pm = p[m - 1]
            if q < qmax:
                P[idx(q, m), idx(q, m + 1)] += (1.0 - f) * pm
                P[idx(q, m), idx(q + 1, m + 1)] += f * pm
            else:
                P[idx(q, m), idx(qmax, m + 1)] += pm  # overflow: arrival dropped
            P[idx(q, m), idx(q, 1)] += f * (1.0 - pm)
            P[idx(q, m), idx(q - 1, 1)] += (1.0 - f) * (1.0 - pm)
        # m = M: the packet departs regardless (success or discard).
        P[idx(q, M), idx(q, 1)] += f
        P[idx(q, M), idx(q - 1, 1)] += 1.0 - f

    # Residual mass (exact zero for the rows above) stays on the diagonal.
    residual = 1.0 - P.sum(axis=1)
    P[np.diag_indices(n)] += residual
    return HarqChain(transition=P, max_attempts=M, q_max=qmax)


def steady_state(
    chain: HarqChain, tol: float = 1e-12, max_iter: int = 1_000_000
) -> np.ndarray:
    """Stationary distribution by power iteration from the empty-queue state.

    Starting at (0, 1) keeps the unreachable dummy states at probability 0.
    Returns the first iterate pi with  max |pi P - pi| <= tol.

    Raises:
        NoConvergence: after max_iter iterations (reducible/periodic corner).
    """
    P = chain.transition
    pi = np.zeros(chain.n_states)
    pi[chain.state_index(0, 1)] = 1.0
    # Converge to half the tolerance so the returned iterate's residual
    # stays under tol despite the renormalisation rounding.
    inner_tol = 0.5 * tol
    for _ in range(max_iter):
        nxt = pi @ P
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) <= inner_tol:
            return pi
        pi = nxt
    raise NoConvergence(f"no steady state after {max_iter} iterations (tol={tol})")


def queue_marginal(pi: np.ndarray, max_attempts: int, q_max: int) -> np.ndarray:
    """Sum the steady state over m: probabilities of queue lengths 0..q_max."""
    return pi.reshape(q_max + 1, max_attempts).sum(axis=1)


def wait_prob(
    k: int,
    q: int,
    p_vec: tuple[float, ...],
    max_attempts: int | None = None,
    max_attempts_orig: int | None = None,
) -> float:
    """P(the q packets ahead take exactly k slots in total), recursively.

    Each packet takes j slots by failing j-1 times and then, for j below the
    cap, succeeding; a packet using the full original cap occupies its last
    slot regardless of outcome (discard case).  The recursion peels off the
    n packets that use the current cap and recurses with the cap reduced.
    Memoised on (k, q, cap); exponential without it.
    """
    p_vec = tuple(p_vec)
    M0 = max_attempts_orig if max_attempts_orig is not None else len(p_vec)
    M = max_attempts if max_attempts is not None else M0
    return _wait_prob(k, q, p_vec, M, M0)


@lru_cache(maxsize=None)
def _wait_prob(k, q, p_vec, M, M0):
    if k == q:
        # One slot per packet.  With any retries available (M0 > 1) that
        # means q first-attempt successes; with a single-attempt cap the slot
        # is consumed regardless of outcome.
        return 1.0 if M0 == 1 else (1.0 - p_vec[0]) ** q
    if k < q or k > M * q:
        return 0.0
    total = 0.0
    n_max = min((k - q) // (M - 1), q)
    fail = math.prod(p_vec[: M - 1])
    succ = 1.0 if M == M0 else 1.0 - p_vec[M - 1]
    for n in range(n_max + 1):
        sub = _wait_prob(k - M * n, q - n, p_vec, M - 1, M0)
        if sub:
            total += math.comb(q, n) * (fail * succ) ** n * sub
    return total


def attempt_slot_pmf(p_vec: tuple[float, ...]) -> np.ndarray:
    """pmf of slots one packet occupies: index j = exactly j attempts, j in 1..M."""
    M = len(p_vec)
    g = np.zeros(M + 1)
    prefix = 1.0
    for j in range(1, M):
        g[j] = prefix * (1.0 - p_vec[j - 1])
        prefix *= p_vec[j - 1]
    g[M] = prefix  # M-th slot is occupied whether it succeeds or discards
    return g


@dataclass(frozen=True)
class WaitPmf:
    """Wait-delay pmf on slots 0..M*q_max; mass[k] = P(D_w = k)."""

    mass: np.ndarray

    def total(self) -> float:
        return float(self.mass.sum())

    def ccdf(self, j: int) -> float:
        """P(D_w > j)."""
        if j < 0:
            return self.total()
        return float(self.mass[j + 1 :].sum())

    def as_dict(self) -> dict[int, float]:
        return {k: float(v) for k, v in enumerate(self.mass) if v > 0.0}


def wait_pmf(params: HarqParams, queue_probs: np.ndarray) -> WaitPmf:
    """Marginalise the conditional wait pmf over the queue-length distribution.

    The conditional pmf given q packets ahead is the q-fold convolution of the
    single-packet slot pmf, which equals the wait_prob recursion but costs
    O(M^2 q_max^2) overall instead of re-running the recursion per point.
    """
    M, qmax = params.max_attempts, params.q_max
    g = attempt_slot_pmf(params.p_vec)
    mass = np.zeros(M * qmax + 1)
    conv = np.ones(1)  # q = 0: the packet transmits immediately
    mass[0] += queue_probs[0]
    for q in range(1, qmax + 1):
        conv = np.convolve(conv, g)
        pq = queue_probs[q]
        if pq > 0.0:
            mass[: conv.size] += pq * conv
    return WaitPmf(mass=mass)


def harq_kd(d_ms: float, params: HarqParams) -> int:
    """Attempts fitting the target, capped by the retransmission limit M."""
    if d_ms < 0:
        raise ValueError(f"d must be >= 0, got {d_ms}")
    raw = math.floor(
        (d_ms / params.slot_ms + params.delta) / params.rtt_slots()
    )
    return min(params.max_attempts, raw)


def harq_service_dvp(d_ms: float, params: HarqParams) -> float:
    """P(service delay alone exceeds d): the first k_d attempts all fail."""
    kd = harq_kd(d_ms, params)
    return math.prod(params.p_vec[:kd]) if kd > 0 else 1.0


def harq_dvp(d_ms: float, params: HarqParams, pmf: WaitPmf | None = None) -> float:
    """P(total delay > d), combining the wait pmf with per-attempt failures.

    A wait of k slots leaves a target of d - kT; when not even one attempt
    fits the remainder, the packet violates regardless of outcomes.
    ``pmf`` may be passed to reuse a solved steady state; it is computed from
    ``params`` otherwise.
    """
    if d_ms < 0:
        raise ValueError(f"d must be >= 0, got {d_ms}")
    if pmf is None:
        pmf = HarqAnalysis(params).wait_pmf
    d_slots = d_ms / params.slot_ms
    rtt = params.rtt_slots()
    M = params.max_attempts
    prefix = [1.0]
    for p in params.p_vec:
        prefix.append(prefix[-1] * p)
    total = 0.0
    for k, mass_k in enumerate(pmf.mass):
        if mass_k == 0.0:
            continue
        kd_rem = min(M, math.floor((d_slots - k + params.delta) / rtt))
        total += mass_k * (prefix[kd_rem] if kd_rem > 0 else 1.0)
    return min(1.0, max(0.0, total))


class HarqAnalysis:
    """Solved analysis context; immutable once built, shareable across queries."""

    def __init__(self, params: HarqParams, tol: float = 1e-12):
        self.params = params
        self.chain = build_chain(params)
        self.steady = steady_state(self.chain, tol=tol)
        self.queue_probs = queue_marginal(
            self.steady, params.max_attempts, params.q_max
        )
        self.wait_pmf = wait_pmf(params, self.queue_probs)

    def dvp(self, d_ms: float) -> float:
        return harq_dvp(d_ms, self.params, self.wait_pmf)

    def service_dvp(self, d_ms: float) -> float:
        return harq_service_dvp(d_ms, self.params)

    def kd(self, d_ms: float) -> int:
        return harq_kd(d_ms, self.params)
