"""Invariant and property tests of the analytic source/detector model."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heraldlab import (
    FockTruncation,
    SqueezingParam,
    g2_heralded,
    g2_of_distribution,
    heralded_state,
    improvement_ratio,
    improvement_ratio_small_lam,
    povm_click,
    povm_pnr,
    povm_ppnr,
)

LAM_SQ_GRID = np.linspace(0.005, 0.9, 20)
ETA_GRID = np.linspace(0.05, 0.95, 20)


def _trunc(x):
    return FockTruncation.adequate(SqueezingParam.from_pair_param(x))


class TestDetectorOrdering:
    def test_g2_ordering_over_grid(self):
        """PNR never exceeds pseudo-PNR(M=2), which never exceeds click."""
        for x in LAM_SQ_GRID:
            sq = SqueezingParam.from_pair_param(x)
            trunc = _trunc(x)
            for eta in ETA_GRID:
                g_pnr = g2_heralded(sq, povm_pnr(1, eta, trunc))
                g_ppnr = g2_heralded(sq, povm_ppnr(1, eta, 2, trunc))
                g_click = g2_heralded(sq, povm_click(True, eta, trunc))
                assert g_pnr <= g_ppnr + 1e-12
                assert g_ppnr <= g_click + 1e-12

    def test_ppnr_converges_to_pnr_monotonically(self):
        sq = SqueezingParam.from_pair_param(0.1)
        trunc = _trunc(0.1)
        for eta in (0.2, 0.6, 0.9):
            g_pnr = g2_heralded(sq, povm_pnr(1, eta, trunc))
            values = [g2_heralded(sq, povm_ppnr(1, eta, m, trunc)) for m in (2, 4, 8, 16, 64)]
            assert all(a >= b - 1e-13 for a, b in zip(values, values[1:]))
            assert all(v >= g_pnr - 1e-13 for v in values)
            # the excess over PNR shrinks like 1/M
            assert values[-1] - g_pnr < 0.05 * (values[0] - g_pnr)

    def test_click_g2_nondecreasing_in_lam(self):
        for eta in (0.16, 0.3, 0.8):
            values = []
            for x in np.linspace(0.01, 0.8, 30):
                sq = SqueezingParam.from_pair_param(x)
                values.append(g2_heralded(sq, povm_click(True, eta, _trunc(x))))
            assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


class TestRatioLamIndependence:
    def test_ratio_stays_within_5pct_of_limit(self):
        """r(lam, eta) deviates from its lam->0 limit by <5% at moderate squeezing."""
        worst = 0.0
        for eta in np.linspace(0.05, 0.9, 12):
            limit = improvement_ratio_small_lam(eta)
            for x in (0.01, 0.05, 0.1):
                r = improvement_ratio(SqueezingParam.from_pair_param(x), eta, _trunc(x))
                worst = max(worst, abs(r / limit - 1.0))
        assert worst < 0.05


class TestConsistency:
    @settings(max_examples=60, deadline=None)
    @given(
        x=st.floats(min_value=1e-4, max_value=0.85),
        eta=st.floats(min_value=0.01, max_value=1.0),
        detector=st.sampled_from(["click", "pnr", "ppnr"]),
    )
    def test_direct_series_matches_composed_route(self, x, eta, detector):
        """g2_heralded equals g2 of the explicitly constructed heralded state."""
        sq = SqueezingParam.from_pair_param(x)
        trunc = _trunc(x)
        if detector == "click":
            povm = povm_click(True, eta, trunc)
        elif detector == "pnr":
            povm = povm_pnr(1, eta, trunc)
        else:
            povm = povm_ppnr(1, eta, 2, trunc)
        direct = g2_heralded(sq, povm)
        composed = g2_of_distribution(heralded_state(sq, povm).distribution)
        assert direct == pytest.approx(composed, rel=1e-12, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(
        x=st.floats(min_value=1e-6, max_value=0.85),
        eta=st.floats(min_value=1e-6, max_value=1.0),
    )
    def test_heralded_state_normalized(self, x, eta):
        sq = SqueezingParam.from_pair_param(x)
        povm = povm_click(True, eta, _trunc(x))
        state = heralded_state(sq, povm)
        assert np.isclose(state.distribution.probs.sum(), 1.0, atol=1e-10)
        assert 0.0 <= state.herald_probability <= 1.0
