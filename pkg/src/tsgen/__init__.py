"""Synthetic time series by ancestral sampling of dynamic Bayesian networks."""

from .dist import RngStream, derive_stream, sample_gaussian, sample_multinomial
from .errors import (
    CycleError,
    InternalError,
    InvalidDistribution,
    NotAnHmm,
    ParseError,
    RangeError,
    SchemaError,
    SemanticError,
    StructureMismatch,
    TsgenError,
)
from .hmm_eval import HmmParams, decode_accuracy, extract_hmm_params, forward_loglik, viterbi
from .model import (
    STEADY,
    ConditionalGaussian,
    Dataset,
    DiscreteCpd,
    EpochCpdSet,
    GenerationConfig,
    Kind,
    NetworkSpec,
    NodeCpd,
    NodeSpec,
    ParentRef,
    ValidationReport,
    parent_config_index,
    topo_order,
    validate_spec,
)
from .sampler import epoch_for, generate_dataset, generate_sequence, sample_node
from .spec_io import load_spec, parse_spec, serialize_spec
from .stats import build_report, chi_square_gof, empirical_discrete, gaussian_moments, kl_divergence

__version__ = "0.1.0"
