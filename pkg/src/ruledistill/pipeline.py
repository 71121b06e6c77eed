"""Two-phase distillation of a policy into an ordered rule list.

Phase 1 learns rules from the policy's near-optimal actions.  Phase 2 rolls
the policy out again, notes which rule fired whenever the list disagrees with
it, and mines more specific rules under that rule.  Rules are never edited:
a refined rule becomes a node whose children are the mined rules followed by
the rule itself.
"""
from __future__ import annotations

import csv
import random
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .core import DataSet, Instance, Rule, RuleList, SchemaError
from .extraction import (
    ExtractionConfig,
    action_set,
    build_dataset,
    check_tau,
    episode_rng,
    record_trajectories,
    sample_action,
    sample_single_labels,
)
from .io import render_rule, rule_from_dict, rule_to_dict, rulelist_from_dict, rulelist_to_dict
from .learner import LearnerConfig, learn


class RefinementWarning(UserWarning):
    """A rule was left unrefined."""


# -- refinement tree ----------------------------------------------------------

@dataclass(frozen=True)
class Node:
    rule: Rule
    children: tuple["Node", ...] = ()
    phase: int = 1

    def leaves(self) -> list["Node"]:
        if not self.children:
            return [self]
        return [leaf for c in self.children for leaf in c.leaves()]


@dataclass(frozen=True)
class RefinementTree:
    """A phase-1 rule list with some rules expanded into children."""

    phase1: RuleList
    nodes: tuple[Node, ...] = ()

    def __post_init__(self):
        if not self.nodes:
            object.__setattr__(self, "nodes", tuple(Node(r) for r in self.phase1.rules))
        if tuple(n.rule for n in self.nodes) != self.phase1.rules:
            raise SchemaError("tree roots must be the phase-1 rules in order")
        for n in self.nodes:
            _check_node(n)
        self.flatten()

    def children(self, index: int) -> tuple[Rule, ...]:
        """Direct children of phase-1 rule ``index`` (0-based)."""
        return tuple(c.rule for c in self.nodes[index].children)

    def leaves(self) -> list[Node]:
        return [leaf for n in self.nodes for leaf in n.leaves()]

    def flatten(self) -> RuleList:
        return RuleList(tuple(leaf.rule for leaf in self.leaves()))

    def expand(self, expansions: dict[int, Sequence[Rule]], phase: int) -> "RefinementTree":
        """Replace leaf ``i`` (index into ``flatten()``) by the given children."""
        counter = iter(range(len(self.leaves())))

        def grow(node: Node) -> Node:
            if node.children:
                return replace(node, children=tuple(grow(c) for c in node.children))
            i = next(counter)
            if i not in expansions:
                return node
            kids = tuple(Node(r, phase=phase) for r in expansions[i])
            return replace(node, children=kids)

        return RefinementTree(self.phase1, tuple(grow(n) for n in self.nodes))

    def numbered(self) -> list[tuple[str, int, Node]]:
        """(number, depth, node) in reading order, numbered 1, 1.1, 1.2, 2, ..."""
        out = []

        def walk(nodes, prefix, depth):
            for k, n in enumerate(nodes, 1):
                num = f"{prefix}{k}"
                out.append((num, depth, n))
                walk(n.children, num + ".", depth + 1)

        walk(self.nodes, "", 0)
        return out


def _check_node(node: Node) -> None:
    if not node.children:
        return
    if node.children[-1].rule != node.rule:
        raise SchemaError(f"last child of {render_rule(node.rule)} must be the rule itself")
    for c in node.children:
        if not c.rule.has_prefix(node.rule):
            raise SchemaError(
                f"child {render_rule(c.rule)} does not extend {render_rule(node.rule)}")
        _check_node(c)


def render_tree(tree: RefinementTree) -> str:
    lines = [f"{'  ' * depth}{num}. {render_rule(n.rule)}" for num, depth, n in tree.numbered()]
    return "\n".join(lines) + "\n"


def tree_to_dict(tree: RefinementTree, schema=None) -> dict:
    def node(num, n, parent):
        d = rule_to_dict(n.rule)
        d.update(number=num, phase=n.phase, parent=parent,
                 children=[node(f"{num}.{k}", c, num) for k, c in enumerate(n.children, 1)])
        return d

    return {
        "phase1": rulelist_to_dict(tree.phase1, schema),
        "tree": [node(str(k), n, None) for k, n in enumerate(tree.nodes, 1)],
        "flat": rulelist_to_dict(tree.flatten())["rules"],
    }


def tree_from_dict(d: dict) -> RefinementTree:
    def node(nd) -> Node:
        return Node(rule_from_dict(nd), tuple(node(c) for c in nd.get("children", ())),
                    int(nd.get("phase", 1)))

    phase1 = rulelist_from_dict(d["phase1"])
    nodes = tuple(node(n) for n in d["tree"]) if "tree" in d else ()
    return RefinementTree(phase1, nodes)


# -- phase 1 --------------------------------------------------------------------

def phase1_dataset(policy, env, extraction: ExtractionConfig, seed: int) -> DataSet:
    trajectories = record_trajectories(policy, env, extraction, seed)
    return build_dataset(trajectories, env.schema, extraction.tau)


def phase1_distill(policy, env, extraction: ExtractionConfig, learner: LearnerConfig,
                   seed: int = 0, single_label: bool = False) -> tuple[RuleList, DataSet]:
    """Record the policy, build the set-valued dataset and learn a rule list.

    Returns the list together with the training data, which phase 2 needs.
    """
    data = phase1_dataset(policy, env, extraction, seed)
    if single_label:
        data = sample_single_labels(data, seed)
    return learn(data, learner), data


# -- phase 2 --------------------------------------------------------------------

@dataclass(frozen=True)
class DisagreementSet:
    """States where a rule list left the policy's action set, per fired rule."""

    rulelist: RuleList
    buckets: dict

    def __len__(self) -> int:
        return sum(len(b) for b in self.buckets.values())

    def counts(self) -> dict[int, int]:
        return {i: len(b) for i, b in sorted(self.buckets.items())}


def collect_disagreements(policy, env, rulelist: RuleList, episodes: int, seed: int,
                          tau: float = 0.9, greedy: bool = False, mode: str = "distribution",
                          max_steps: int = 1_000) -> DisagreementSet:
    """Let the policy drive and record where the rule list would have deviated.

    A step counts as a disagreement when the consequent of the first matching
    rule is outside the policy's near-optimal action set for that state.
    The policy samples its actions unless ``greedy``; greedy rollouts of a
    tabular policy keep retracing the same paths and rarely pass the states
    that need refining.
    """
    check_tau(tau)
    schema = env.schema
    labels = schema.labels
    found: dict[int, list[Instance]] = {}
    for ep in range(episodes):
        rng = episode_rng(seed, ep)
        state = env.reset(rng)
        for _ in range(max_steps):
            probs = policy.distribution(state)
            scores = policy.q_scores(state) if mode == "q_values" else probs
            allowed = action_set(scores, tau, labels)
            inst = Instance(tuple(float(v) for v in env.encode(state)), allowed)
            label, idx = rulelist.predict(inst, schema)
            if label not in allowed:
                found.setdefault(idx, []).append(inst)
            a = int(np.argmax(probs)) if greedy else sample_action(probs, rng)
            state, _, done = env.step(state, env.actions[a])
            if done:
                break
    buckets = {i: DataSet(schema, tuple(v)) for i, v in sorted(found.items())}
    return DisagreementSet(rulelist, buckets)


def balanced_set(bucket: DataSet, rule_index: int, rulelist: RuleList, phase1_data: DataSet,
                 seed: int) -> DataSet:
    """The bucket plus as many correctly handled phase-1 samples of the same rule."""
    fired = rulelist.first_match(phase1_data) == rule_index
    j = phase1_data.schema.label_index[rulelist.rules[rule_index].consequent]
    ok = np.flatnonzero(fired & phase1_data.label_matrix[:, j])
    k = min(len(bucket), len(ok))
    chosen = sorted(random.Random(f"{seed}/{rule_index}").sample(ok.tolist(), k))
    return bucket.concat(phase1_data.take(chosen))


def refine(tree: RefinementTree | RuleList, disagreements: DisagreementSet,
           phase1_data: DataSet, learner: LearnerConfig, min_covered: int | None = 5,
           seed: int = 0) -> RefinementTree:
    """One refinement round over the current leaves of ``tree``.

    ``disagreements`` must have been collected against ``tree.flatten()``.
    ``min_covered`` overrides the learner's value for the small balanced sets;
    ``None`` keeps it.
    """
    if isinstance(tree, RuleList):
        tree = RefinementTree(tree)
    flat = tree.flatten()
    if disagreements.rulelist != flat:
        raise ValueError("disagreements were collected against a different rule list")
    config = learner if min_covered is None else replace(learner, min_covered=min_covered)
    phase = 1 + max(leaf.phase for leaf in tree.leaves())

    expansions = {}
    for i, bucket in sorted(disagreements.buckets.items()):
        rule = flat.rules[i]
        if len(bucket) < config.min_covered:
            warnings.warn(f"rule {i + 1} ({render_rule(rule)}): only {len(bucket)} "
                          f"disagreements, below min_covered={config.min_covered}; skipped",
                          RefinementWarning, stacklevel=2)
            continue
        data = balanced_set(bucket, i, flat, phase1_data, seed)
        mined = learn(data, config, seed=rule if rule.antecedent else None).body
        if mined:
            expansions[i] = tuple(mined) + (rule,)
    return tree.expand(expansions, phase)


# -- evaluation -------------------------------------------------------------------

@dataclass(frozen=True)
class EvaluationReport:
    agent: str
    returns: tuple[float, ...]
    truncated: int = 0

    def summary(self) -> dict:
        r = np.asarray(self.returns, dtype=float)
        q1, med, q3 = np.percentile(r, [25, 50, 75])
        return {"agent": self.agent, "episodes": len(r), "mean": float(r.mean()),
                "median": float(med), "q1": float(q1), "q3": float(q3),
                "min": float(r.min()), "max": float(r.max()), "truncated": self.truncated}


def rulelist_agent(rulelist: RuleList, env) -> Callable:
    schema = env.schema

    def act(state):
        inst = Instance(tuple(float(v) for v in env.encode(state)), frozenset(schema.labels[:1]))
        return rulelist.predict(inst, schema)[0]

    return act


def policy_agent(policy) -> Callable:
    return lambda state: policy.actions[int(np.argmax(policy.distribution(state)))]


def rollout(act: Callable, env, start, max_steps: int = 1_000) -> tuple[float, int, bool]:
    """Undiscounted return, step count and truncation flag of a greedy episode."""
    state, total = tuple(start), 0.0
    if env.is_terminal(state):
        return 0.0, 0, False
    for t in range(1, max_steps + 1):
        state, reward, done = env.step(state, act(state))
        total += reward
        if done:
            return total, t, False
    return total, max_steps, True


def evaluate(act: Callable, env, episodes: int, seed: int, name: str = "agent",
             max_steps: int = 1_000) -> EvaluationReport:
    """Greedy episodes from seeded random starts; equal seeds give equal starts."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    returns, truncated = [], 0
    for ep in range(episodes):
        start = env.reset(episode_rng(seed, ep))
        ret, _, cut = rollout(act, env, start, max_steps)
        returns.append(ret)
        truncated += cut
    return EvaluationReport(name, tuple(returns), truncated)


def render_reports(reports: Sequence[EvaluationReport]) -> str:
    cols = ("agent", "episodes", "mean", "median", "q1", "q3", "min", "max", "truncated")
    rows = [[str(s[c]) if not isinstance(s[c], float) else f"{s[c]:.3f}" for c in cols]
            for s in (r.summary() for r in reports)]
    widths = [max(len(c), *(len(row[k]) for row in rows)) for k, c in enumerate(cols)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return "\n".join([fmt.format(*cols)] + [fmt.format(*row) for row in rows]) + "\n"


def write_episodes_csv(reports: Sequence[EvaluationReport], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["episode"] + [r.agent for r in reports])
        for ep in range(len(reports[0].returns)):
            w.writerow([ep] + [repr(r.returns[ep]) for r in reports])
