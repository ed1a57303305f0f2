"""Tests for path loss, SNR, MCS lookup and coverage distance."""

import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fapsim.errors import LinkBudgetError, ValidationError
from fapsim.radio_link import (
    LinkBudget,
    McsEntry,
    McsTable,
    capacity_for_snr,
    load_mcs_table,
    max_distance_for_snr,
    min_mcs_for_rate,
    path_loss,
    rates_for_snr,
    snr_at,
)


@pytest.fixture(scope="module")
def table():
    return load_mcs_table()


class TestPathLoss:
    def test_free_space_at_one_metre(self):
        expected = 20 * math.log10(5250) - 27.55
        assert path_loss(1.0, 5250.0) == pytest.approx(expected)

    def test_six_db_per_doubling(self):
        assert path_loss(20.0, 5250.0) - path_loss(10.0, 5250.0) == pytest.approx(20 * math.log10(2))

    def test_exponent_scales_distance_term(self):
        assert path_loss(100.0, 5250.0, exponent=3.0) - path_loss(100.0, 5250.0) == pytest.approx(20.0)

    def test_vectorised(self):
        losses = path_loss(np.array([1.0, 10.0, 100.0]), 5250.0)
        assert np.allclose(np.diff(losses), 20.0)

    @pytest.mark.parametrize("distance", [0.0, -1.0, math.inf, math.nan])
    def test_invalid_distance(self, distance):
        with pytest.raises(ValidationError, match="distance"):
            path_loss(distance, 5250.0)


class TestSnr:
    def test_budget(self):
        """20 dBm transmit power over a -85 dBm noise floor."""
        assert LinkBudget().budget_db == 105.0

    def test_snr_at_fap_altitude(self):
        assert snr_at(6.0, LinkBudget()) == pytest.approx(105 - path_loss(6.0, 5250.0))

    @given(st.floats(min_value=1.0, max_value=1000.0), st.floats(min_value=1.0, max_value=1000.0))
    def test_snr_non_increasing_with_distance(self, d1, d2):
        near, far = sorted((d1, d2))
        assert snr_at(far, LinkBudget()) <= snr_at(near, LinkBudget())


class TestMcsTable:
    def test_embedded_table(self, table):
        assert len(table) == 10
        assert table[0].rate_mbps == 65.0
        assert table.top_rate == 866.7
        assert list(table.thresholds) == [13.1, 13.6, 16.1, 19.5, 22.6, 27.1, 28.4, 29.9, 34.1, 35.3]

    def test_thresholds_must_increase(self):
        with pytest.raises(ValidationError, match="min_snr_db"):
            McsTable((McsEntry(0, 10.0, 65.0), McsEntry(1, 9.0, 130.0)))

    def test_empty_table_rejected(self):
        with pytest.raises(ValidationError, match="at least one"):
            McsTable(())

    def test_missing_columns(self):
        with pytest.raises(ValidationError, match="rate_mbps"):
            McsTable.from_frame(pd.DataFrame({"mcs": [0], "min_snr_db": [1.0]}))

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "mcs.csv"
        path.write_text("mcs,min_snr_db,rate_mbps\n1,5.0,20.0\n0,2.0,10.0\n", encoding="utf-8")
        loaded = load_mcs_table(path)
        assert [e.mcs for e in loaded.entries] == [0, 1]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="cannot read"):
            load_mcs_table(tmp_path / "nope.csv")


class TestCapacity:
    def test_directly_below(self, table):
        """A GU 6 m under the FAP gets the top rate."""
        assert capacity_for_snr(snr_at(6.0, LinkBudget()), table) == 866.7

    def test_out_of_range(self, table):
        """200 m away the SNR falls below MCS0."""
        assert capacity_for_snr(snr_at(200.0, LinkBudget()), table) == 0.0

    @pytest.mark.parametrize(
        "snr,rate", [(13.1, 65.0), (13.59, 65.0), (13.6, 130.0), (22.6, 390.0), (100.0, 866.7), (-5.0, 0.0)]
    )
    def test_thresholds_inclusive(self, table, snr, rate):
        assert capacity_for_snr(snr, table) == rate

    def test_vectorised_matches_scalar(self, table):
        snrs = np.linspace(0.0, 40.0, 401)
        expected = [capacity_for_snr(s, table) for s in snrs]
        assert list(rates_for_snr(snrs, table)) == expected

    def test_nan_rejected(self, table):
        with pytest.raises(ValidationError):
            capacity_for_snr(math.nan, table)


class TestMaxDistance:
    def test_inverts_snr_with_margin(self):
        budget = LinkBudget()
        distance = max_distance_for_snr(22.6, budget)
        assert snr_at(distance, budget) == pytest.approx(22.6 + budget.snr_margin_db)

    def test_top_mcs_distance(self):
        assert max_distance_for_snr(35.3, LinkBudget()) == pytest.approx(12.37, abs=0.01)

    def test_margin_shrinks_distance(self):
        assert max_distance_for_snr(20.0, LinkBudget(snr_margin_db=3.0)) < max_distance_for_snr(20.0, LinkBudget())

    def test_unreachable_target(self):
        with pytest.raises(LinkBudgetError, match="shorter than"):
            max_distance_for_snr(80.0, LinkBudget())


def test_min_mcs_for_rate(table):
    assert min_mcs_for_rate(317.0, table).mcs == 4
    assert min_mcs_for_rate(0.0, table).mcs == 0
    assert min_mcs_for_rate(900.0, table) is None
