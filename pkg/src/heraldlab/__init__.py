"""heraldlab: simulator and analysis toolkit for photon-number-resolved heralding.

Layers:

* :mod:`heraldlab.photon_stats` - exact truncated-series source/detector model;
* :mod:`heraldlab.montecarlo` - shot-level simulation of the herald + HBT setup;
* :mod:`heraldlab.tracelab` - detector-pulse synthesis and slope discrimination;
* :mod:`heraldlab.scenarios` / :mod:`heraldlab.cli` - reproduction scenarios,
  deterministic CSV/JSON/SVG outputs.
"""

from .confusion import ConfusionMatrix
from .errors import (
    ConfigError,
    ConsistencyError,
    DivergentRatioError,
    EmptyAcceptanceError,
    EstimatorError,
    HeraldLabError,
    MixtureFitError,
    SchemaError,
    TraceError,
    TruncationError,
    UndefinedG2Error,
    ZeroHeraldError,
)
from .montecarlo import (
    ClickHerald,
    CountRecord,
    ExperimentConfig,
    PnrHerald,
    PpnrHerald,
    ShotOutcome,
    collect_herald_events,
    g2_empirical,
    klyshko_efficiency,
    klyshko_intercept,
    run_experiment,
    run_shot,
    squeezing_from_pump,
)
from .photon_stats import (
    FockTruncation,
    HeraldedState,
    PhotonNumberDistribution,
    PovmCoefficients,
    SqueezingParam,
    apply_confusion,
    g2_heralded,
    g2_of_distribution,
    herald_probability,
    heralded_state,
    improvement_ratio,
    improvement_ratio_small_lam,
    povm_click,
    povm_pnr,
    povm_pnr_reported,
    povm_ppnr,
    thermal_distribution,
)

__version__ = "0.1.0"
