"""Cluster-level semi-supervised prediction from unpaired pools.

Cluster the input and output pools independently, learn a sparse
cluster-to-cluster bridge from a few paired examples, and predict with the
linked cluster's centroid, in either direction.  Ships with entropic-OT,
Gromov-Wasserstein, and KNN baselines, a synthetic mixture generator, and a
seeded experiment harness.
"""

__version__ = "0.1.0"

from .core import (DataSplit, DimensionError, EvaluationError, NumericError,
                   PairedSet, ParseError, PointSet, SplitError, load_pointset,
                   make_split, save_pointset)
from .clustering import (ClusterModel, assign, assign_many, fit_balanced,
                         fit_lloyd, fit_minibatch, kmeanspp_init)
from .bridge import (Bridge, UNRESOLVED, VoteMatrix, bridging_accuracy,
                     build_votes, learn_hungarian, learn_majority, learn_margin)
from .predictor import (PipelineConfig, PipelineResult, Prediction,
                        predict_forward, predict_inverse, run_pipeline,
                        save_predictions)
from .synth import BoundReport, MixtureSpec, eval_bound, make_separated_spec, sample_mixture
from .baselines import (GwConfig, TransportPlan, barycentric_projection,
                        eot_predict, gw_align, gw_predict, knn_predict, sinkhorn)
from .metrics import (MetricsReport, ami, d_y_mean, misclustering_rate, mse,
                      retrieval_mse, winrate)
from .harness import ExperimentConfig, TrialRecord, run_experiment, run_scaling_bench

__all__ = [
    "PointSet", "PairedSet", "DataSplit", "load_pointset", "save_pointset", "make_split",
    "ParseError", "DimensionError", "SplitError", "NumericError", "EvaluationError",
    "ClusterModel", "kmeanspp_init", "fit_lloyd", "fit_balanced", "fit_minibatch",
    "assign", "assign_many",
    "VoteMatrix", "Bridge", "UNRESOLVED", "build_votes", "learn_majority",
    "learn_hungarian", "learn_margin", "bridging_accuracy",
    "Prediction", "PipelineConfig", "PipelineResult", "predict_forward",
    "predict_inverse", "run_pipeline", "save_predictions",
    "MixtureSpec", "BoundReport", "sample_mixture", "make_separated_spec", "eval_bound",
    "TransportPlan", "GwConfig", "knn_predict", "sinkhorn", "eot_predict",
    "gw_align", "gw_predict", "barycentric_projection",
    "MetricsReport", "mse", "retrieval_mse", "ami", "misclustering_rate",
    "d_y_mean", "winrate",
    "ExperimentConfig", "TrialRecord", "run_experiment", "run_scaling_bench",
]
