"""Exact luckiness-normalized-maximum-likelihood codes for multivariate normal data."""

from .capacity import log_capacity_general, log_capacity_simple
from .changepoint import Segmentation, detect_multi_change, detect_single_change, segment_cost
from .codelength import (
    LnmlReport,
    code_length,
    lnml_report,
    log_lnml,
    log_lnml_closed,
    log_lnml_many,
    log_lnml_ratio,
    tilted_regret,
)
from .errors import DimensionError, DomainError, NotPositiveDefiniteError
from .mapest import MapEstimate, map_batch, map_initial, map_stream, map_stream_update
from .model import (
    GaussParams,
    LuckinessParams,
    SuffStats,
    default_luckiness,
    log_density_f,
    log_luckiness_pi,
    suffstats_update,
)
from .sequential import (
    CoderState,
    PredictiveT,
    coder_step,
    init_coder,
    log_mvt_pdf,
    predictive_params,
    sequential_code_lengths,
)
from .special import log_gamma, log_multigamma

__version__ = "0.1.0"
