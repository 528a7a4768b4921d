"""Detector-pulse waveform lab: synthesis, slope extraction, and number binning."""

from .binning import (
    BinEdges,
    GaussianMixture,
    MixtureComponent,
    assign_photon_numbers,
    compute_bin_edges,
    confusion_from_mixture,
    fit_mixture,
    total_variation_distance,
)
from .io import (
    TraceContainer,
    read_trace_container,
    read_traces_csv,
    write_slopes_csv,
    write_trace_container,
    write_traces_csv,
)
from .slopes import SlopeExtraction, SlopeSample, extract_slope, extract_slopes
from .sweep import SweepPoint, quantile_edge_grid, threshold_sweep
from .synth import Trace, TraceSynthConfig, synthesize_trace, synthesize_traces
