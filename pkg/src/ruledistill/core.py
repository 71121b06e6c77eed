"""Datasets with set-valued labels and ordered rule lists.

A rule list is read top to bottom; the first rule whose antecedent holds
fires.  The last rule always has an empty antecedent, so prediction is total.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DISCRETE = "discrete"
CONTINUOUS = "continuous"

OPERATORS = ("==", "!=", ">=", "<=")
DISCRETE_OPS = frozenset({"==", "!="})
CONTINUOUS_OPS = frozenset({">=", "<="})


class SchemaError(ValueError):
    """Raised when data or rules do not conform to a feature schema."""


class EmptyDataError(ValueError):
    """Raised when an operation needs at least one instance."""


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str = CONTINUOUS
    domain: tuple = ()

    def __post_init__(self):
        if not self.name:
            raise SchemaError("feature name must be nonempty")
        if self.kind not in (DISCRETE, CONTINUOUS):
            raise SchemaError(f"unknown feature kind {self.kind!r}")
        if self.kind == DISCRETE and not self.domain:
            raise SchemaError(f"discrete feature {self.name!r} needs a nonempty domain")
        object.__setattr__(self, "domain", tuple(self.domain))

    @property
    def is_discrete(self) -> bool:
        return self.kind == DISCRETE


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "labels", tuple(self.labels))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate feature names in {names}")
        if not self.labels:
            raise SchemaError("label set must be nonempty")
        if len(set(self.labels)) != len(self.labels):
            raise SchemaError(f"duplicate labels in {self.labels}")

    @cached_property
    def index(self) -> dict[str, int]:
        return {f.name: i for i, f in enumerate(self.features)}

    @cached_property
    def label_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.labels)}

    def feature(self, name: str) -> Feature:
        try:
            return self.features[self.index[name]]
        except KeyError:
            raise SchemaError(f"unknown feature {name!r}") from None

    def check_condition(self, cond: "Condition") -> None:
        feat = self.feature(cond.feature)
        allowed = DISCRETE_OPS if feat.is_discrete else CONTINUOUS_OPS
        if cond.op not in allowed:
            raise SchemaError(
                f"operator {cond.op!r} not allowed on {feat.kind} feature {feat.name!r}")
        if feat.is_discrete and cond.value not in feat.domain:
            raise SchemaError(f"{cond.value!r} is not in the domain of {feat.name!r}")

    def check_instance(self, inst: "Instance") -> None:
        if len(inst.values) != len(self.features):
            raise SchemaError(
                f"instance has {len(inst.values)} values, schema has {len(self.features)}")
        for feat, v in zip(self.features, inst.values):
            if feat.is_discrete and v not in feat.domain:
                raise SchemaError(f"{v!r} is not in the domain of {feat.name!r}")
        extra = inst.labelset - set(self.labels)
        if extra:
            raise SchemaError(f"unknown labels {sorted(extra)}")

    @classmethod
    def grid(cls, labels: Sequence[str], names: Sequence[str] = ("X", "Y")) -> "FeatureSchema":
        """Schema of integer coordinates, modeled as continuous features."""
        return cls(tuple(Feature(n, CONTINUOUS) for n in names), tuple(labels))


@dataclass(frozen=True)
class Instance:
    values: tuple
    labelset: frozenset

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "labelset", frozenset(self.labelset))
        if not self.labelset:
            raise SchemaError("labelset must contain at least one label")


@dataclass(frozen=True)
class DataSet:
    """Instances in recording order.  Duplicates are kept and counted."""

    schema: FeatureSchema
    instances: tuple[Instance, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        for inst in self.instances:
            self.schema.check_instance(inst)

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def subset(self, mask: Iterable[bool]) -> "DataSet":
        keep = [inst for inst, m in zip(self.instances, mask) if m]
        return DataSet._trusted(self.schema, keep)

    def take(self, indices: Iterable[int]) -> "DataSet":
        return DataSet._trusted(self.schema, [self.instances[i] for i in indices])

    def concat(self, other: "DataSet") -> "DataSet":
        if other.schema != self.schema:
            raise SchemaError("cannot concatenate datasets with different schemas")
        return DataSet._trusted(self.schema, self.instances + other.instances)

    @classmethod
    def _trusted(cls, schema, instances) -> "DataSet":
        # skips per-instance validation for subsets of validated data
        ds = object.__new__(cls)
        object.__setattr__(ds, "schema", schema)
        object.__setattr__(ds, "instances", tuple(instances))
        return ds

    @cached_property
    def matrix(self) -> np.ndarray:
        """Feature values as floats; discrete values become domain indices."""
        out = np.empty((len(self.instances), len(self.schema.features)), dtype=float)
        for j, feat in enumerate(self.schema.features):
            if feat.is_discrete:
                code = {v: i for i, v in enumerate(feat.domain)}
                out[:, j] = [code[inst.values[j]] for inst in self.instances]
            else:
                out[:, j] = [float(inst.values[j]) for inst in self.instances]
        return out

    @cached_property
    def label_matrix(self) -> np.ndarray:
        """Boolean (n_instances, n_labels) membership of each label."""
        out = np.zeros((len(self.instances), len(self.schema.labels)), dtype=bool)
        idx = self.schema.label_index
        for i, inst in enumerate(self.instances):
            for a in inst.labelset:
                out[i, idx[a]] = True
        return out


@dataclass(frozen=True)
class Condition:
    feature: str
    op: str
    value: object

    def __post_init__(self):
        if self.op not in OPERATORS:
            raise SchemaError(f"unknown operator {self.op!r}")

    def holds(self, v) -> bool:
        if self.op == "==":
            return v == self.value
        if self.op == "!=":
            return v != self.value
        if self.op == "<=":
            return v <= self.value
        return v >= self.value

    def mask(self, data: DataSet) -> np.ndarray:
        """Vectorized evaluation over every instance of ``data``."""
        j = data.schema.index[self.feature]
        col = data.matrix[:, j]
        feat = data.schema.features[j]
        if feat.is_discrete:
            code = feat.domain.index(self.value)
            return col == code if self.op == "==" else col != code
        return col <= self.value if self.op == "<=" else col >= self.value


@dataclass(frozen=True)
class RuleStats:
    covered: int = 0
    positives: int = 0
    heuristic: float = 0.0

    def __post_init__(self):
        if not 0 <= self.positives <= self.covered:
            raise ValueError(f"need 0 <= positives <= covered, got {self}")


@dataclass(frozen=True)
class Rule:
    antecedent: tuple[Condition, ...]
    consequent: str
    stats: RuleStats = field(default=RuleStats(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "antecedent", tuple(self.antecedent))

    @property
    def is_default(self) -> bool:
        return not self.antecedent

    def __len__(self) -> int:
        return len(self.antecedent)

    def has_prefix(self, other: "Rule") -> bool:
        n = len(other.antecedent)
        return self.antecedent[:n] == other.antecedent

    def mask(self, data: DataSet) -> np.ndarray:
        out = np.ones(len(data), dtype=bool)
        for cond in self.antecedent:
            data.schema.check_condition(cond)
            out &= cond.mask(data)
        return out

    def __str__(self) -> str:
        from .io import render_rule
        return render_rule(self)


def matches(rule: Rule, instance: Instance, schema: FeatureSchema) -> bool:
    for cond in rule.antecedent:
        schema.check_condition(cond)
        if not cond.holds(instance.values[schema.index[cond.feature]]):
            return False
    return True


@dataclass(frozen=True)
class RuleList:
    rules: tuple[Rule, ...]

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if not self.rules or not self.rules[-1].is_default:
            raise SchemaError("a rule list must end with a default rule (empty antecedent)")
        if any(r.is_default for r in self.rules[:-1]):
            raise SchemaError("only the last rule may have an empty antecedent")

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    @property
    def body(self) -> tuple[Rule, ...]:
        return self.rules[:-1]

    @property
    def default(self) -> Rule:
        return self.rules[-1]

    def predict(self, instance: Instance, schema: FeatureSchema) -> tuple[str, int]:
        return predict(self, instance, schema)

    def first_match(self, data: DataSet) -> np.ndarray:
        """Index of the first matching rule for every instance of ``data``."""
        out = np.full(len(data), len(self.rules) - 1, dtype=int)
        open_ = np.ones(len(data), dtype=bool)
        for i, rule in enumerate(self.body):
            hit = open_ & rule.mask(data)
            out[hit] = i
            open_ &= ~hit
        return out

    def __str__(self) -> str:
        from .io import render_rulelist
        return render_rulelist(self)


def predict(rulelist: RuleList, instance: Instance, schema: FeatureSchema) -> tuple[str, int]:
    for i, rule in enumerate(rulelist.rules):
        if matches(rule, instance, schema):
            return rule.consequent, i
    raise AssertionError("unreachable: the default rule always matches")


def coverage_split(rule: Rule, data: DataSet) -> tuple[DataSet, DataSet]:
    mask = rule.mask(data)
    return data.subset(mask), data.subset(~mask)
