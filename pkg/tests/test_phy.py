import math

import pytest

from harqdelay.phy import (
    InfeasibleAllocation,
    Numerology,
    PhyConfig,
    ResourceGrid,
    mcs_table,
    nrb_range,
    select_mcs,
)


class TestNumerology:
    @pytest.mark.parametrize("nu", range(5))
    def test_slot_duration_and_scs(self, nu):
        num = Numerology(nu)
        assert num.slot_duration_ms == 2.0 ** (-nu)
        assert num.scs_khz == 15 * 2**nu

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            Numerology(5)


class TestMcsTable:
    def test_29_entries(self):
        assert len(mcs_table()) == 29

    def test_eta_endpoints(self):
        table = mcs_table()
        assert table[0].spectral_efficiency == 0.2344
        assert table[28].spectral_efficiency == 5.5547

    def test_spectral_efficiency_consistent_with_rate(self):
        # eta = Qm * R, with R stored in 1024ths; table prints 4 decimals
        for e in mcs_table():
            assert e.spectral_efficiency == pytest.approx(
                e.modulation_order * e.coding_rate, abs=5e-5
            )

    def test_monotone_except_documented_dip(self):
        # The real table dips once at the 16QAM -> 64QAM handover (16 -> 17).
        table = mcs_table()
        for a, b in zip(table, table[1:]):
            if a.index == 16:
                assert b.spectral_efficiency < a.spectral_efficiency
            else:
                assert b.spectral_efficiency > a.spectral_efficiency


class TestResourceGrid:
    def test_counts(self):
        grid = ResourceGrid(10)
        assert grid.n_re == 120
        assert grid.blocklength_per_slot == 1800

    def test_symbols_override(self):
        assert ResourceGrid(10, symbols_per_slot=14).blocklength_per_slot == 1680

    def test_requires_positive_nrb(self):
        with pytest.raises(ValueError):
            ResourceGrid(0)


class TestSelectMcs:
    def test_default_point_is_mcs3(self):
        assert select_mcs(800, 10).index == 3

    def test_widest_allocation_is_mcs0(self):
        assert select_mcs(800, 19).index == 0

    def test_single_rb(self):
        # smallest entry with 180 * eta >= 800 is MCS-24 (eta 4.5234)
        assert select_mcs(800, 1).index == 24

    def test_infeasible(self):
        with pytest.raises(InfeasibleAllocation):
            select_mcs(5000, 1)

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            select_mcs(0, 1)
        with pytest.raises(ValueError):
            select_mcs(1, 0)

    @pytest.mark.parametrize("bits", [1, 100, 240, 800, 2400, 8448])
    def test_minimality_and_feasibility(self, bits):
        lo, hi = nrb_range(bits)
        for nrb in range(lo, hi + 1):
            entry = select_mcs(bits, nrb)
            assert 180 * nrb * entry.spectral_efficiency >= bits - 1e-9
            if entry.index > 0:
                below = mcs_table()[entry.index - 1]
                assert 180 * nrb * below.spectral_efficiency < bits

    @pytest.mark.parametrize("bits", [100, 800, 2400])
    def test_monotone_in_nrb(self, bits):
        lo, hi = nrb_range(bits)
        prev = None
        for nrb in range(lo, hi + 1):
            idx = select_mcs(bits, nrb).index
            if prev is not None:
                assert idx <= prev
            prev = idx


class TestNrbRange:
    def test_hand_values(self):
        assert nrb_range(800) == (1, 19)
        assert nrb_range(1) == (1, 1)
        assert nrb_range(240) == (1, 6)

    def test_matches_ceiling_definition(self):
        for bits in (1, 50, 800, 3000, 8448):
            lo, hi = nrb_range(bits)
            assert lo == math.ceil(bits / (180 * 5.5547))
            assert hi == math.ceil(bits / (180 * 0.2344))

    @pytest.mark.parametrize("bits", [37, 240, 800, 1234])
    def test_endpoints_are_boundary_allocations(self, bits):
        lo, hi = nrb_range(bits)
        # below the lower end nothing fits; at it, something does
        select_mcs(bits, lo)
        if lo > 1:
            with pytest.raises(InfeasibleAllocation):
                select_mcs(bits, lo - 1)
        # the upper end is the first allocation served by MCS-0
        assert select_mcs(bits, hi).index == 0
        if hi > lo:
            assert select_mcs(bits, hi - 1).index > 0


class TestPhyConfig:
    def _config(self, bits, nrb):
        return PhyConfig(
            numerology=Numerology(0),
            grid=ResourceGrid(nrb),
            mcs=select_mcs(bits, nrb),
            packet_bits=bits,
        )

    def test_valid(self):
        cfg = self._config(800, 10)
        assert cfg.grid.blocklength_per_slot == 1800

    def test_rejects_segmentation_sizes(self):
        with pytest.raises(ValueError):
            self._config(8449, 19)

    def test_rejects_overfull_slot(self):
        with pytest.raises(InfeasibleAllocation):
            PhyConfig(
                numerology=Numerology(0),
                grid=ResourceGrid(1),
                mcs=mcs_table()[0],
                packet_bits=800,
            )
