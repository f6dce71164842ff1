"""5G NR physical-layer arithmetic: numerology, resource grids, MCS selection.

The slot model is deliberately simple: a slot of duration ``2**-nu`` ms carries
``SYMBOLS_PER_SLOT`` OFDM symbols on each of the 12 subcarriers of a resource
block, so one slot on ``n_rb`` blocks offers ``180 * n_rb`` channel uses.
Cyclic-prefix effects (12/14 usable symbols) are ignored; override
``symbols_per_slot`` on the grid if you need them.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

SYMBOLS_PER_SLOT = 15
SUBCARRIERS_PER_RB = 12

# Transport blocks above this need code block segmentation, which is out of scope.
MAX_PACKET_BITS = 8448


class InfeasibleAllocation(ValueError):
    """No MCS can carry the requested payload on the given resources."""


@dataclass(frozen=True)
class Numerology:
    """OFDM numerology index; fixes subcarrier spacing and slot duration."""

    nu: int = 0

    def __post_init__(self):
        if not 0 <= self.nu <= 4:
            raise ValueError(f"numerology index must be in [0, 4], got {self.nu}")

    @property
    def slot_duration_ms(self) -> float:
        return 2.0 ** (-self.nu)

    @property
    def scs_khz(self) -> int:
        return 15 * 2**self.nu


@dataclass(frozen=True)
class McsEntry:
    index: int
    modulation_order: int
    coding_rate: float  # dimensionless, coding_rate_x1024 / 1024
    spectral_efficiency: float  # information bits per symbol

    @property
    def coding_rate_x1024(self) -> int:
        return round(self.coding_rate * 1024)

    def _se_x10000(self) -> int:
        # Exact integer form of the 4-decimal table value, for exact comparisons.
        return round(self.spectral_efficiency * 10000)


@dataclass(frozen=True)
class ResourceGrid:
    """Per-slot frequency/time resources granted to the link."""

    n_rb: int
    symbols_per_slot: int = SYMBOLS_PER_SLOT

    def __post_init__(self):
        if self.n_rb < 1:
            raise ValueError(f"n_rb must be >= 1, got {self.n_rb}")

    @property
    def n_re(self) -> int:
        return SUBCARRIERS_PER_RB * self.n_rb

    @property
    def blocklength_per_slot(self) -> int:
        """Channel uses available for one transmission attempt."""
        return SUBCARRIERS_PER_RB * self.symbols_per_slot * self.n_rb


@dataclass(frozen=True)
class PhyConfig:
    numerology: Numerology
    grid: ResourceGrid
    mcs: McsEntry
    packet_bits: int

    def __post_init__(self):
        if not 1 <= self.packet_bits <= MAX_PACKET_BITS:
            raise ValueError(
                f"packet_bits must be in [1, {MAX_PACKET_BITS}], got {self.packet_bits}"
            )
        capacity = 180 * self.grid.n_rb * self.mcs.spectral_efficiency
        if capacity < self.packet_bits:
            raise InfeasibleAllocation(
                f"{self.packet_bits} bits do not fit one slot on {self.grid.n_rb} RB "
                f"at MCS-{self.mcs.index} (capacity {capacity:.1f} bits)"
            )


# Compiled-in copy of data/mcs_table.csv; used when the asset cannot be loaded.
_MCS_ROWS = (
    (0, 2, 120, 0.2344),
    (1, 2, 157, 0.3066),
    (2, 2, 193, 0.3770),
    (3, 2, 251, 0.4902),
    (4, 2, 308, 0.6016),
    (5, 2, 379, 0.7402),
    (6, 2, 449, 0.8770),
    (7, 2, 526, 1.0273),
    (8, 2, 602, 1.1758),
    (9, 2, 679, 1.3262),
    (10, 4, 340, 1.3281),
    (11, 4, 378, 1.4766),
    (12, 4, 434, 1.6953),
    (13, 4, 490, 1.9141),
    (14, 4, 553, 2.1602),
    (15, 4, 616, 2.4063),
    (16, 4, 658, 2.5703),
    (17, 6, 438, 2.5664),
    (18, 6, 466, 2.7305),
    (19, 6, 517, 3.0293),
    (20, 6, 567, 3.3223),
    (21, 6, 616, 3.6094),
    (22, 6, 666, 3.9023),
    (23, 6, 719, 4.2129),
    (24, 6, 772, 4.5234),
    (25, 6, 822, 4.8164),
    (26, 6, 873, 5.1152),
    (27, 6, 910, 5.3320),
    (28, 6, 948, 5.5547),
)

_table_cache: tuple[McsEntry, ...] | None = None


def _load_table() -> tuple[McsEntry, ...]:
    try:
        text = resources.files("harqdelay").joinpath("data/mcs_table.csv").read_text()
        rows = []
        for rec in csv.DictReader(
            line for line in text.splitlines() if not line.startswith("#")
        ):
            rows.append(
                McsEntry(
                    index=int(rec["index"]),
                    modulation_order=int(rec["modulation_order"]),
                    coding_rate=int(rec["coding_rate_x1024"]) / 1024.0,
                    spectral_efficiency=float(rec["spectral_efficiency"]),
                )
            )
    except (FileNotFoundError, KeyError, ValueError):
        rows = [
            McsEntry(i, qm, r1024 / 1024.0, se) for i, qm, r1024, se in _MCS_ROWS
        ]
    if [e.index for e in rows] != list(range(29)):
        raise RuntimeError("MCS table asset corrupt: expected indices 0..28")
    return tuple(rows)


def mcs_table() -> tuple[McsEntry, ...]:
    """The 29 entries (indices 0-28) of the NR 64QAM MCS table."""
    global _table_cache
    if _table_cache is None:
        _table_cache = _load_table()
    return _table_cache


def select_mcs(packet_bits: int, n_rb: int) -> McsEntry:
    """Pick the lowest-index MCS able to carry ``packet_bits`` in one slot.

    An MCS is feasible when ``180 * n_rb * spectral_efficiency >= packet_bits``.
    Comparisons use the exact 4-decimal table values (integer arithmetic), so
    boundary payload sizes resolve deterministically.

    Raises:
        InfeasibleAllocation: if even the highest MCS cannot carry the payload.
    """
    if packet_bits < 1:
        raise ValueError(f"packet_bits must be >= 1, got {packet_bits}")
    if n_rb < 1:
        raise ValueError(f"n_rb must be >= 1, got {n_rb}")
    need = packet_bits * 10000
    for entry in mcs_table():
        if 180 * n_rb * entry._se_x10000() >= need:
            return entry
    raise InfeasibleAllocation(
        f"{packet_bits} bits exceed one-slot capacity of {n_rb} RB even at MCS-28"
    )


def nrb_range(packet_bits: int) -> tuple[int, int]:
    """Smallest and largest useful RB allocations for a payload.

    The lower end is the fewest RBs on which the payload fits at the highest
    spectral efficiency; the upper end is the allocation at which the lowest
    MCS suffices (more RBs buy nothing).
    """
    if packet_bits < 1:
        raise ValueError(f"packet_bits must be >= 1, got {packet_bits}")
    table = mcs_table()
    se_max = table[-1]._se_x10000()
    se_min = table[0]._se_x10000()
    need = packet_bits * 10000
    min_nrb = -(-need // (180 * se_max))
    max_nrb = -(-need // (180 * se_min))
    return min_nrb, max_nrb
