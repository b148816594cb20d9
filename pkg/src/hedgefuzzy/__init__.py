"""Neuro-fuzzy classification with linguistic hedges and hedge-based feature selection."""

__version__ = "0.1.0"

from .data import Dataset, load_csv, load_thyroid_csv, normalize, stratified_split, kfold
from .network import RuleBase, forward, predict
from .initialize import InitConfig, init_rulebase
from .scg import Budget, minimize
from .train import TrainConfig, fit
from .select import SelectionConfig, hedge_scores, select_features, lhnfcsf_pipeline
from .evaluation import evaluate, holdout, cross_validate

__all__ = [
    "Dataset", "load_csv", "load_thyroid_csv", "normalize", "stratified_split", "kfold",
    "RuleBase", "forward", "predict", "InitConfig", "init_rulebase", "Budget", "minimize",
    "TrainConfig", "fit", "SelectionConfig", "hedge_scores", "select_features",
    "lhnfcsf_pipeline", "evaluate", "holdout", "cross_validate",
]
