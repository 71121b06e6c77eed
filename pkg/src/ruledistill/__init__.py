"""Distil reinforcement-learning policies into ordered rule lists."""
from .core import (
    Condition,
    DataSet,
    EmptyDataError,
    Feature,
    FeatureSchema,
    Instance,
    Rule,
    RuleList,
    RuleStats,
    SchemaError,
)
from .learner import LearnerConfig, find_best_rule, learn

__version__ = "0.1.0"

__all__ = [
    "Condition", "DataSet", "EmptyDataError", "Feature", "FeatureSchema", "Instance",
    "LearnerConfig", "Rule", "RuleList", "RuleStats", "SchemaError", "find_best_rule", "learn",
]
