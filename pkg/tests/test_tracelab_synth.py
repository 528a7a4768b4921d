"""Tests for waveform synthesis, slope extraction, and the corpus file formats."""

import numpy as np
import pytest

from heraldlab import ConfigError, SchemaError, TraceError
from heraldlab.tracelab import (
    Trace,
    TraceContainer,
    TraceSynthConfig,
    extract_slope,
    extract_slopes,
    read_trace_container,
    read_traces_csv,
    synthesize_trace,
    synthesize_traces,
    write_slopes_csv,
    write_trace_container,
    write_traces_csv,
)

NOISELESS = TraceSynthConfig(noise_rms_mv=0.0,
                             slope_sigmas_mv_ns=(1e-9, 1e-9, 1e-9, 1e-9))


class TestTrace:
    def test_requires_two_samples(self):
        with pytest.raises(ConfigError):
            Trace(np.array([1.0]), 40.0)

    def test_requires_positive_dt(self):
        with pytest.raises(ConfigError):
            Trace(np.zeros(10), 0.0)

    def test_requires_finite_samples(self):
        with pytest.raises(ConfigError):
            Trace(np.array([0.0, np.inf]), 40.0)


class TestSynthConfig:
    def test_means_must_increase(self):
        with pytest.raises(ConfigError):
            TraceSynthConfig(slope_means_mv_ns=(0.4, 0.4), slope_sigmas_mv_ns=(0.1, 0.1))

    def test_edge_needs_five_samples(self):
        with pytest.raises(ConfigError):
            TraceSynthConfig(sample_rate_gsps=1.0)  # 0.4 samples on a 400 ps edge

    def test_photon_number_capped_at_table(self):
        cfg = TraceSynthConfig()
        assert cfg.slope_params(9) == cfg.slope_params(4)
        with pytest.raises(ConfigError):
            cfg.slope_params(0)


class TestSynthesize:
    def test_noiseless_slope_matches_mean(self):
        rng = np.random.default_rng(1)
        for n, mean in ((1, 0.40), (2, 0.76), (3, 1.06), (4, 1.32)):
            trace = synthesize_trace(NOISELESS, n, rng)
            sample = extract_slope(trace)
            assert sample.slope_mv_per_ns == pytest.approx(mean, rel=1e-3)
            assert trace.true_photon_number == n

    def test_two_photon_edge_is_steeper(self):
        rng = np.random.default_rng(2)
        one = extract_slope(synthesize_trace(NOISELESS, 1, rng)).slope_mv_per_ns
        two = extract_slope(synthesize_trace(NOISELESS, 2, rng)).slope_mv_per_ns
        assert two > one

    def test_histogram_valley_sits_near_default_edge(self):
        """At realistic class weights, the n=1/n=2 valley lies near 0.58 mV/ns."""
        rng = np.random.default_rng(3)
        labels = 1 + (rng.random(40_000) < 0.08).astype(int)
        samples, _ = synthesize_traces(TraceSynthConfig(), labels, rng)
        slopes = extract_slopes(samples, TraceSynthConfig().dt_ps).slopes
        counts, edges = np.histogram(slopes, bins=120, range=(0.2, 1.0))
        centers = 0.5 * (edges[:-1] + edges[1:])
        window = (centers > 0.5) & (centers < 0.7)
        valley = centers[window][counts[window].argmin()]
        assert valley == pytest.approx(0.58, abs=0.08)

    def test_batch_matches_scalar_distribution(self):
        rng = np.random.default_rng(4)
        samples, drawn = synthesize_traces(TraceSynthConfig(), np.ones(5000, dtype=int), rng)
        assert samples.shape == (5000, TraceSynthConfig().num_samples)
        assert drawn.mean() == pytest.approx(0.40, abs=0.01)
        assert drawn.std() == pytest.approx(0.075, rel=0.1)

    def test_rejects_zero_photons(self):
        with pytest.raises(ConfigError):
            synthesize_trace(TraceSynthConfig(), 0, np.random.default_rng(0))


class TestExtractSlope:
    def test_pure_ramp(self):
        # 0 -> 1 mV over 1 ns at 25 GS/s embedded in a longer trace
        dt_ns = 0.04
        t = np.arange(200) * dt_ns
        v = np.clip((t - 2.0) * 1.0, 0.0, 1.0)
        sample = extract_slope(Trace(v, 40.0))
        assert sample.slope_mv_per_ns == pytest.approx(1.0, rel=1e-9)
        assert sample.fit_residual_rms_mv == pytest.approx(0.0, abs=1e-12)

    def test_flat_trace_has_no_edge(self):
        with pytest.raises(TraceError, match="no rising edge"):
            extract_slope(Trace(np.zeros(100), 40.0))

    def test_too_few_window_points(self):
        # a two-sample step: window between 10% and 60% has < 3 points
        v = np.concatenate([np.zeros(50), np.ones(50)])
        with pytest.raises(TraceError, match="too few samples"):
            extract_slope(Trace(v, 40.0))

    def test_round_trip_accuracy_at_stated_snr(self):
        """Recovered slope within 3% of the drawn one on >= 99% of traces."""
        cfg = TraceSynthConfig(noise_rms_mv=0.01 * 0.45, sample_rate_gsps=100.0)
        rng = np.random.default_rng(11)
        samples, drawn = synthesize_traces(cfg, np.ones(10_000, dtype=int), rng)
        result = extract_slopes(samples, cfg.dt_ps)
        assert result.valid.all()
        rel_err = np.abs(result.slopes / drawn - 1.0)
        assert (rel_err < 0.03).mean() >= 0.99

    def test_batch_equals_scalar(self):
        rng = np.random.default_rng(12)
        samples, _ = synthesize_traces(TraceSynthConfig(), np.array([1, 2, 3]), rng)
        batch = extract_slopes(samples, TraceSynthConfig().dt_ps)
        for i in range(3):
            single = extract_slope(Trace(samples[i], TraceSynthConfig().dt_ps), trace_id=i)
            assert single.slope_mv_per_ns == pytest.approx(batch.slopes[i], rel=1e-12)
            assert single.fit_residual_rms_mv == pytest.approx(batch.residual_rms[i], rel=1e-9)
            assert single.source_trace_id == i

    def test_noise_spike_in_baseline_does_not_hijack_window(self):
        dt_ns = 0.04
        t = np.arange(250) * dt_ns
        v = np.clip((t - 4.0) * 0.5, 0.0, 0.5)
        v[10] = 0.08  # spike above the 10% level, far before the edge
        sample = extract_slope(Trace(v, 40.0))
        assert sample.slope_mv_per_ns == pytest.approx(0.5, rel=0.02)


class TestContainerIO:
    def test_binary_round_trip(self, tmp_path):
        rng = np.random.default_rng(21)
        samples = rng.normal(size=(40, 64)).astype(np.float32)
        labels = rng.integers(1, 5, 40).astype(np.uint8)
        container = TraceContainer(samples, 40.0, labels)
        path = tmp_path / "corpus.trcl"
        write_trace_container(path, container)
        loaded = read_trace_container(path)
        np.testing.assert_array_equal(loaded.samples, samples)
        np.testing.assert_array_equal(loaded.labels, labels)
        assert loaded.dt_ps == 40.0

    def test_binary_round_trip_unlabeled(self, tmp_path):
        container = TraceContainer(np.zeros((3, 8), dtype=np.float32), 20.0)
        path = tmp_path / "c.trcl"
        write_trace_container(path, container)
        assert read_trace_container(path).labels is None

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.trcl"
        path.write_bytes(b"NOPE" + b"\x00" * 40)
        with pytest.raises(SchemaError):
            read_trace_container(path)

    def test_truncated_payload_rejected(self, tmp_path):
        container = TraceContainer(np.zeros((4, 16), dtype=np.float32), 40.0)
        path = tmp_path / "t.trcl"
        write_trace_container(path, container)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(SchemaError):
            read_trace_container(path)

    def test_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(22)
        samples = rng.normal(size=(12, 10)).astype(np.float32)
        labels = rng.integers(1, 4, 12).astype(np.uint8)
        path = tmp_path / "corpus.csv"
        write_traces_csv(path, TraceContainer(samples, 40.0, labels))
        loaded = read_traces_csv(path)
        np.testing.assert_allclose(loaded.samples, samples, rtol=1e-4, atol=1e-6)
        np.testing.assert_array_equal(loaded.labels, labels)

    def test_slopes_csv_schema(self, tmp_path):
        path = tmp_path / "slopes.csv"
        write_slopes_csv(path, [0, 1], [0.4, 0.8], [1, 2], [0.01, 0.02])
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# schema=slopes.v1")
        assert lines[1] == "trace_id,slope_mV_per_ns,assigned_n,residual_rms"
        assert lines[2].startswith("0,0.4,1,")
