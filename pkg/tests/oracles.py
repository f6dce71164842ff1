"""Independent reference implementations used only by the test suite.

Each oracle takes a route through the math that shares nothing with the
library path it checks: adaptive quadrature against the Monte Carlo PER,
exhaustive tuple enumeration against the wait-delay recursion, and literal
term-by-term summation against the closed-form DVP bound.
"""
import itertools
import math

import numpy as np
from scipy import integrate

from harqdelay import arq
from harqdelay.arq import ArqParams


def q_erfc(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def per_arq_quadrature(gamma: float, eta: float, blocklength: float,
                       dispersion: float = 1.0) -> float:
    """Fading-averaged single-attempt PER by adaptive quadrature.

    Splits at the capacity threshold where the Q argument changes sign, then
    integrates the smooth tail to infinity; absolute error well below 1e-6.
    """
    scale = math.sqrt(blocklength / dispersion)

    def integrand(s):
        return q_erfc((math.log2(1.0 + s) - eta) * scale) * math.exp(-s / gamma) / gamma

    s_star = 2.0**eta - 1.0
    head, e1 = integrate.quad(
        integrand, 0.0, 4.0 * s_star,
        points=[0.8 * s_star, s_star, 1.2 * s_star], limit=200,
    )
    tail, e2 = integrate.quad(integrand, 4.0 * s_star, np.inf, limit=200)
    assert e1 + e2 < 1e-8
    return head + tail


def per_harq2_quadrature(gamma: float, eta: float, blocklength_per_slot: float,
                         dispersion: float = 1.0) -> float:
    """Two-attempt joint-decoding PER by nested adaptive quadrature."""
    scale = math.sqrt(2.0 * blocklength_per_slot / dispersion)

    def inner(s1):
        c1 = math.log2(1.0 + s1)

        def f(s2):
            arg = ((c1 + math.log2(1.0 + s2)) / 2.0 - eta / 2.0) * scale
            return q_erfc(arg) * math.exp(-s2 / gamma) / gamma

        # the Q transition sits where c1 + c2 = eta
        thresh = 2.0 ** max(eta - c1, 0.0) - 1.0
        pts = sorted({0.5 * thresh, thresh, 2.0 * thresh} - {0.0})
        hi = max(6.0 * gamma, 4.0 * thresh)
        v1, _ = integrate.quad(f, 0.0, hi, points=[p for p in pts if p < hi], limit=200)
        v2, _ = integrate.quad(f, hi, np.inf, limit=200)
        return v1 + v2

    def outer(s1):
        return inner(s1) * math.exp(-s1 / gamma) / gamma

    s_star = 2.0**eta - 1.0
    v1, _ = integrate.quad(outer, 0.0, 4.0 * s_star, points=[s_star], limit=200)
    v2, _ = integrate.quad(outer, 4.0 * s_star, np.inf, limit=200)
    return v1 + v2


def per_harq_plain_mc(gamma: float, eta: float, blocklength_per_slot: float, m: int,
                      samples: int = 2_000_000, seed: int = 987654321,
                      dispersion: float = 1.0) -> tuple[float, float]:
    """Plain (non-shared-draw) Monte Carlo with an unrelated seed stream."""
    rng = np.random.default_rng(seed + m)
    snr = rng.exponential(gamma, size=(samples, m))
    cap = np.log2(1.0 + snr).mean(axis=1)
    from scipy.special import erfc

    vals = 0.5 * erfc(
        (cap - eta / m) * math.sqrt(m * blocklength_per_slot / dispersion) / math.sqrt(2.0)
    )
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def enumeration_wait_pmf(q: int, p_vec: tuple[float, ...]) -> dict[int, float]:
    """f_W(.|q) by summing every attempt-count tuple in {1..M}^q.

    A packet ending at attempt a < M must succeed there; a packet using all M
    attempts occupies its last slot whether it succeeds or is discarded.
    """
    M = len(p_vec)
    if q == 0:
        return {0: 1.0}

    def seq_prob(a: int) -> float:
        pr = math.prod(p_vec[: a - 1])
        return pr if a == M else pr * (1.0 - p_vec[a - 1])

    out: dict[int, float] = {}
    for tup in itertools.product(range(1, M + 1), repeat=q):
        k = sum(tup)
        out[k] = out.get(k, 0.0) + math.prod(seq_prob(a) for a in tup)
    return out


def arq_dvp_term_sum(d_ms: float, params: ArqParams) -> float:
    """Theorem-style DVP as the literal finite sum over success attempts."""
    kd = arq.arq_kd(d_ms, params)
    if kd == 0:
        return 1.0
    total = params.p**kd
    for i in range(1, kd + 1):
        j = math.floor(d_ms / params.slot_ms) - (
            i * (params.zeta + 1) + (i - 1) * params.delta
        )
        total += (1.0 - params.p) * params.p ** (i - 1) * arq.wait_ccdf_bound(j, params)
    return min(1.0, total)
