"""Ordered CN2: separate-and-conquer with a beam search per rule.

Each iteration searches for the best-scoring rule on the examples that are
still uncovered, appends it, and removes everything it covers.  Base rates
used by the heuristic stay those of the full training set, so a rule on a
pure remainder still scores above zero as long as its class is not the only
class in the whole set.

A *seed* rule turns the search into a refinement: its conditions are a fixed
prefix of every candidate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CONTINUOUS_OPS,
    DISCRETE_OPS,
    OPERATORS,
    Condition,
    DataSet,
    EmptyDataError,
    Rule,
    RuleList,
    RuleStats,
)
from .heuristics import majority_class

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LearnerConfig:
    max_conditions: int = 5
    min_covered: int = 20
    beam_width: int = 10
    heuristic: str = "wra_set"
    min_heuristic: float = 0.0
    operators: tuple[str, ...] = ("==", ">=", "<=")
    # alpha of the likelihood-ratio significance test; None disables it
    significance: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "operators", tuple(self.operators))
        for name in ("max_conditions", "min_covered", "beam_width"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.heuristic not in ("wra", "wra_set"):
            raise ValueError(f"heuristic must be 'wra' or 'wra_set', got {self.heuristic!r}")
        if self.min_heuristic < 0:
            raise ValueError("min_heuristic must be >= 0")
        bad = set(self.operators) - set(OPERATORS)
        if bad or not self.operators:
            raise ValueError(f"operators must be a nonempty subset of {OPERATORS}")
        if self.significance is not None and not 0 < self.significance <= 1:
            raise ValueError("significance must lie in (0, 1]")


@dataclass
class _Candidate:
    antecedent: tuple[Condition, ...]
    mask: np.ndarray
    order: int
    score: float = 0.0
    label: str = ""
    covered: int = 0
    positives: int = 0


@dataclass
class BeamState:
    """Beam contents between two specialization rounds."""

    candidates: list = field(default_factory=list)
    best: _Candidate | None = None


def _conditions(antecedent, n_fixed, data, mask, config):
    """Single conditions that may be appended to ``antecedent``."""
    present = set(antecedent)
    used = {(c.feature, c.op) for c in antecedent[n_fixed:]}
    ops = config.operators
    for j, feat in enumerate(data.schema.features):
        if feat.is_discrete:
            fops = [op for op in ops if op in DISCRETE_OPS]
            values = feat.domain
        else:
            fops = [op for op in ops if op in CONTINUOUS_OPS]
            values = np.unique(data.matrix[mask, j]).tolist() if fops else []
        for op in fops:
            if (feat.name, op) in used:
                continue
            for v in values:
                cond = Condition(feat.name, op, v)
                if cond not in present:
                    yield cond


def refine_candidates(rule: Rule, data: DataSet, config: LearnerConfig,
                      n_fixed: int = 0) -> list[Rule]:
    """All one-condition specializations of ``rule`` over ``data``.

    Continuous thresholds are the distinct values of the covered instances.
    The first ``n_fixed`` conditions (a seed prefix) may repeat a
    feature/operator pair that the search itself may not.
    """
    if len(rule.antecedent) >= config.max_conditions:
        raise ValueError(
            f"rule already has {len(rule.antecedent)} conditions (max {config.max_conditions})")
    mask = rule.mask(data)
    return [Rule(rule.antecedent + (c,), rule.consequent)
            for c in _conditions(rule.antecedent, n_fixed, data, mask, config)]


def _score(cands, data, reference, config):
    masks = np.stack([c.mask for c in cands]).astype(np.float32)
    lm = data.label_matrix.astype(np.float32)
    p_hat = np.rint(masks @ lm).astype(np.int64)
    covered = np.rint(masks.sum(axis=1)).astype(np.int64)

    ref_lm = reference.label_matrix
    P = ref_lm.sum(axis=0).astype(np.int64)
    labels = data.schema.labels
    k = len(labels)
    # majority class with ties to the more frequent label overall, then schema order
    tie_rank = np.empty(k, dtype=np.int64)
    tie_rank[sorted(range(k), key=lambda j: (P[j], -j))] = np.arange(k)
    winner = np.argmax(p_hat * k + tie_rank, axis=1)
    rows = np.arange(len(cands))
    ph = p_hat[rows, winner]
    pc = P[winner]

    if config.heuristic == "wra_set":
        total = np.full(len(cands), len(reference), dtype=np.int64)
        chat = covered
    else:
        ref_neg = (ref_lm.sum(axis=1)[:, None] - ref_lm) > 0
        neg = ((data.label_matrix.sum(axis=1)[:, None] - data.label_matrix) > 0)
        n_hat = np.rint(masks @ neg.astype(np.float32)).astype(np.int64)
        N = ref_neg.sum(axis=0).astype(np.int64)
        total = pc + N[winner]
        chat = ph + n_hat[rows, winner]
    total = np.maximum(total, 1)
    scores = (ph * total - chat * pc) / total.astype(float) ** 2

    for i, c in enumerate(cands):
        c.score = float(scores[i])
        c.label = labels[winner[i]]
        c.covered = int(covered[i])
        c.positives = int(ph[i])


def _significant(cand, data, reference, alpha) -> bool:
    from scipy.stats import chi2

    obs = data.label_matrix[cand.mask].sum(axis=0).astype(float)
    exp = reference.label_matrix.sum(axis=0).astype(float)
    obs = np.where(obs == 0, 1e-5, obs)
    exp = np.where(exp == 0, 1e-5, exp)
    exp *= obs.sum() / exp.sum()
    lrs = 2.0 * float((obs * np.log(obs / exp)).sum())
    return lrs > 0 and chi2.sf(lrs, len(obs) - 1) <= alpha


def _canonical(antecedent, n_fixed):
    """Place ``X<=v`` right after ``X>=v`` so the pair prints as ``X=v``."""
    head, tail = list(antecedent[:n_fixed]), list(antecedent[n_fixed:])
    out = []
    for c in tail:
        if c in out:
            continue
        partner = None
        if c.op in (">=", "<="):
            other = "<=" if c.op == ">=" else ">="
            partner = next((d for d in tail if d.feature == c.feature
                            and d.op == other and d.value == c.value), None)
        if partner is not None and c.op == "<=":
            continue
        out.append(c)
        if partner is not None:
            out.append(partner)
    return tuple(head + out)


def find_best_rule(data: DataSet, config: LearnerConfig, seed: Rule | None = None,
                   reference: DataSet | None = None) -> Rule | None:
    """Beam search for the best rule on ``data``.

    Every candidate is labelled with the majority class of what it covers.
    Only strict specializations of the starting rule are returned, and only
    when they cover at least ``min_covered`` instances and score above
    ``min_heuristic``.
    """
    if len(data) == 0:
        raise EmptyDataError("cannot search rules on an empty dataset")
    reference = data if reference is None else reference
    start = seed.antecedent if seed is not None else ()
    n_fixed = len(start)
    mask0 = np.ones(len(data), dtype=bool)
    for c in start:
        data.schema.check_condition(c)
        mask0 &= c.mask(data)

    state = BeamState([_Candidate(start, mask0, 0)])
    cond_masks: dict[Condition, np.ndarray] = {}
    order = 1
    while state.candidates:
        children, seen = [], set()
        for cand in state.candidates:
            if len(cand.antecedent) >= config.max_conditions:
                continue
            for cond in _conditions(cand.antecedent, n_fixed, data, cand.mask, config):
                ante = cand.antecedent + (cond,)
                key = frozenset(ante)
                if key in seen:
                    continue
                seen.add(key)
                if cond not in cond_masks:
                    cond_masks[cond] = cond.mask(data)
                children.append(_Candidate(ante, cand.mask & cond_masks[cond], order))
                order += 1
        if not children:
            break
        _score(children, data, reference, config)

        for c in children:
            if (c.covered >= config.min_covered and c.score > config.min_heuristic
                    and (state.best is None or c.score > state.best.score)
                    and (config.significance is None
                         or _significant(c, data, reference, config.significance))):
                state.best = c

        viable = [c for c in children if c.covered >= config.min_covered]
        viable.sort(key=lambda c: (-c.score, len(c.antecedent), c.order))
        beam, covers = [], set()
        for c in viable:
            sig = c.mask.tobytes()
            if sig in covers:
                continue
            covers.add(sig)
            beam.append(c)
            if len(beam) == config.beam_width:
                break
        state.candidates = beam

    best = state.best
    if best is None:
        return None
    return Rule(_canonical(best.antecedent, n_fixed), best.label,
                RuleStats(best.covered, best.positives, best.score))


def learn(data: DataSet, config: LearnerConfig, seed: Rule | None = None) -> RuleList:
    """Induce an ordered rule list ending in a default rule."""
    if len(data) == 0:
        raise EmptyDataError("cannot learn rules from an empty dataset")
    remaining = data
    body: list[Rule] = []
    while len(remaining) >= config.min_covered:
        rule = find_best_rule(remaining, config, seed=seed, reference=data)
        if rule is None:
            break
        body.append(rule)
        remaining = remaining.subset(~rule.mask(remaining))
        log.debug("rule %d: %s (%d left)", len(body), rule, len(remaining))
    label = majority_class(remaining if len(remaining) else data, data)
    hits = int(remaining.label_matrix[:, data.schema.label_index[label]].sum())
    default = Rule((), label, RuleStats(len(remaining), hits, 0.0))
    return RuleList(tuple(body) + (default,))
