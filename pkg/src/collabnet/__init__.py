"""Country collaboration networks: construction, descriptives, disparity
backbones, and binary, temporal and valued exponential random graph models."""
from .backbone import disparity_alpha, extract_backbone, trim_report
from .descriptives import (closed_triads, degree_centralization, democracy_summary, density,
                           possible_triads, summarize, summary_table)
from .estimation import (BootstrapResult, DegeneracyError, FitResult, McmleConfig, exact_mle_small,
                         fit_mcmle, fit_mple, fit_tergm_bootstrap, fit_valued_mple, fit_vergm_mcmle,
                         vif_diagnostics)
from .gof import GofReport, UnsupportedModeError, gof_binary, gof_valued
from .graph import (AttributePanel, BinaryNetwork, EdgeCovariateMatrix, NetworkSeries, ValuedNetwork,
                    align_node_sets, binarize, build_network)
from .layout import layout_fr
from .pipeline import (ImputationRule, PipelineConfig, PublicationRecord, apply_imputation,
                       build_distance_covariate, ingest_publications, quantize_weights)
from .report import render_report
from .sampler import SamplerConfig, enumerate_exact, sample, sample_binary, sample_valued
from .synthetic import SynthConfig, generate_synthetic
from .terms import ModelSpec, TermSpec, bind, evaluate
from .workflow import run_pipeline

__version__ = "0.1.0"
