import pytest

from harqdelay import ChannelParams

# Table V-style default operating point: 100-byte packets on 10 RBs at 10 dB
# resolve to MCS-3 (eta = 0.4902) and an 1800-symbol blocklength.
DEFAULT_ETA = 0.4902
DEFAULT_BLOCKLENGTH = 1800
DEFAULT_F = 1.0 / 3.0
PIN_SEED = 7

# Pinned regression constants: per_*_avg output at seed 7, 1e6 samples.
# Each value is cross-checked against an independent oracle in the tests; the
# literals exist so silent estimator drift fails loudly.
P_ARQ_DEFAULT = 0.03945063934222182
P_ARQ_DEFAULT_SE = 0.00019146282791051664

PVEC_NRB10 = (
    0.03951025137922006,
    0.0006955169155101204,
    7.11552748590659e-06,
    5.981045818855294e-42,
)

# 100-byte packets on 5 RBs: MCS-7 (eta = 1.0273), blocklength 900.
NRB5_ETA = 1.0273
NRB5_BLOCKLENGTH = 900
PVEC_NRB5 = (
    0.09864993091439923,
    0.003764143509331732,
    8.782334453479054e-05,
    2.249929198277289e-07,
)


@pytest.fixture(scope="session")
def channel() -> ChannelParams:
    return ChannelParams.from_snr_db(10.0)
