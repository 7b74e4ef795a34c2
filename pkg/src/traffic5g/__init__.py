"""Instantaneous data-rate models and Monte Carlo tools for mm-wave hotspot cells."""

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    ErlangParams, ExponentialParams, ParameterError, TruncationUnderflowError,
    TruncLognormalParams, TruncParetoParams,
)
from .kernels import BACKEND  # noqa: E402
from .mixture import (  # noqa: E402
    ConfigError, EmpiricalDistribution, EngagingRates, ScenarioConfig,
    aggregate_simulate, bandwidth_required, mixture_cdf, mixture_law, mixture_pdf,
    percentile, sample_user_rate,
)
from .rate_models import (  # noqa: E402
    AnalyticPdf, BatchTrafficParams, UhdTrafficParams, VideoFormat, WebBrowsingParams,
    uhd_avg_rate, uhd_rate_table,
)
from .rng import RngStream  # noqa: E402
from .scenario import parse_scenario, scenario_hash  # noqa: E402
