from stratsynth.evaluation.backends import (
    ExternalBackend, SimulatedBackend, evaluate_set, execute, rewrite_instance,
)
from stratsynth.evaluation.features import (
    FEATURES, eval_predicate, extract_features, load_benchmarks, load_instance,
)
from stratsynth.evaluation.records import SOLVED, EvalCache, EvalRecord, FeatureMap, Instance
from stratsynth.evaluation.scoring import (
    ScoreReport, classify, par_score, reward_from_par10, score, vbs_par10,
)

__all__ = [
    "ExternalBackend", "SimulatedBackend", "evaluate_set", "execute", "rewrite_instance",
    "FEATURES", "eval_predicate", "extract_features", "load_benchmarks", "load_instance",
    "SOLVED", "EvalCache", "EvalRecord", "FeatureMap", "Instance",
    "ScoreReport", "classify", "par_score", "reward_from_par10", "score", "vbs_par10",
]
