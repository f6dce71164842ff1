"""Delay violation probability toolkit for slotted ARQ/HARQ-IR retransmissions.

Closed-form/algorithmic analytics and a slot-accurate simulator for the delay
of 5G-style retransmission schemes under decoding and feedback latencies.
"""
from harqdelay.arq import (
    ArqParams,
    UnstableQueue,
    arq_dvp,
    arq_kd,
    bar_dvp,
    bar_kd,
    negbin_pmf,
    queue_ccdf,
    queue_mean,
    service_pmf,
    stability_ratio,
    wait_ccdf_bound,
)
from harqdelay.error_model import (
    ChannelParams,
    PerEstimate,
    PerVector,
    per_arq_avg,
    per_arq_instant,
    per_harq_avg,
    per_harq_instant,
    q_function,
)
from harqdelay.harq import (
    HarqAnalysis,
    HarqChain,
    HarqParams,
    NoConvergence,
    WaitPmf,
    build_chain,
    harq_dvp,
    harq_kd,
    harq_service_dvp,
    queue_marginal,
    steady_state,
    wait_pmf,
    wait_prob,
)
from harqdelay.phy import (
    InfeasibleAllocation,
    McsEntry,
    Numerology,
    PhyConfig,
    ResourceGrid,
    mcs_table,
    nrb_range,
    select_mcs,
)
from harqdelay.simulator import (
    ConfigError,
    DvpPoint,
    PacketRecord,
    SimConfig,
    SimStats,
    empirical_wait_ccdf,
    run,
    throughput,
    wilson_interval,
)

__version__ = "0.1.0"
