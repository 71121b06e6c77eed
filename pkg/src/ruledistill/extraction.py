"""From a stochastic policy to a dataset with set-valued labels.

Roll the policy out, record the action distribution at every visited state,
and keep for each state the actions whose probability reaches a fraction
``tau`` of the best one.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .core import DataSet, FeatureSchema, Instance, SchemaError


class TranslationError(SchemaError):
    """A recorded state cannot be expressed in the feature schema."""


class Policy(Protocol):
    actions: tuple[str, ...]

    def distribution(self, state) -> np.ndarray: ...


class Environment(Protocol):
    actions: tuple[str, ...]

    def reset(self, rng: random.Random): ...

    def step(self, state, action: str): ...

    def encode(self, state) -> tuple: ...


@dataclass(frozen=True)
class ExtractionConfig:
    tau: float = 0.9
    episodes: int = 50
    mode: str = "distribution"
    greedy: bool = False
    max_steps: int = 1_000

    def __post_init__(self):
        check_tau(self.tau)
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if self.mode not in ("distribution", "q_values"):
            raise ValueError(f"mode must be 'distribution' or 'q_values', got {self.mode!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


def check_tau(tau: float) -> None:
    if not 0 < tau <= 1:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")


def check_distribution(probs, raw: bool = False) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("an action distribution needs at least one action")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError(f"action scores must be finite and nonnegative: {p}")
    if not raw and abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    return p


def action_set(probs, tau: float, labels: Sequence[str]) -> frozenset:
    """Actions scoring at least ``tau`` times the best score."""
    check_tau(tau)
    p = np.asarray(probs, dtype=float)
    if p.size == 0 or p.size != len(labels):
        raise ValueError(f"need one score per action: {p.size} scores, {len(labels)} actions")
    cut = tau * p.max()
    return frozenset(a for a, v in zip(labels, p) if v >= cut)


def softmax(values, temperature: float = 1.0) -> np.ndarray:
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    z = np.asarray(values, dtype=float) / temperature
    z = np.exp(z - z.max())
    return z / z.sum()


class QTablePolicy:
    """Boltzmann policy over a tabular value function."""

    def __init__(self, qtable, temperature: float = 1.0):
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        self.qtable = qtable
        self.actions = tuple(qtable.actions)
        self.temperature = temperature

    def distribution(self, state) -> np.ndarray:
        return softmax(self.qtable.values(state), self.temperature)

    def q_scores(self, state) -> np.ndarray:
        """Action values shifted so the worst action scores zero."""
        q = np.asarray(self.qtable.values(state), dtype=float)
        return q - q.min()


@dataclass(frozen=True)
class Step:
    state: tuple
    probs: tuple[float, ...]
    action: str
    reward: float


@dataclass(frozen=True)
class Trajectory:
    steps: tuple[Step, ...] = ()
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def ret(self) -> float:
        return float(sum(s.reward for s in self.steps))


def episode_rng(seed: int, episode: int) -> random.Random:
    """Independent generator per episode so episodes can be replayed alone."""
    return random.Random(f"{seed}/{episode}")


def sample_action(probs: np.ndarray, rng: random.Random) -> int:
    cdf = np.cumsum(probs)
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    i = min(i, len(probs) - 1)
    while probs[i] == 0:  # guard against a zero-width bin at the top
        i -= 1
    return i


def record_trajectories(policy: Policy, env: Environment, config: ExtractionConfig,
                        seed: int) -> list[Trajectory]:
    """Run ``config.episodes`` episodes and record every step.

    Actions are sampled from the policy unless ``config.greedy``.  Each step
    stores the full score vector that later decides the labelset: the
    probabilities, or shifted action values in ``q_values`` mode.
    """
    if tuple(policy.actions) != tuple(env.actions):
        raise SchemaError(f"policy actions {policy.actions} differ from env actions {env.actions}")
    out = []
    for ep in range(config.episodes):
        rng = episode_rng(seed, ep)
        state = env.reset(rng)
        steps = []
        truncated = True
        for _ in range(config.max_steps):
            probs = policy.distribution(state)
            a = int(np.argmax(probs)) if config.greedy else sample_action(probs, rng)
            scores = policy.q_scores(state) if config.mode == "q_values" else probs
            nxt, reward, done = env.step(state, env.actions[a])
            steps.append(Step(env.encode(state), tuple(float(v) for v in scores),
                              env.actions[a], float(reward)))
            state = nxt
            if done:
                truncated = False
                break
        out.append(Trajectory(tuple(steps), truncated))
    return out


def build_dataset(trajectories: Sequence[Trajectory], schema: FeatureSchema,
                  tau: float = 0.9) -> DataSet:
    """One instance per recorded step, labelled with its near-optimal actions."""
    check_tau(tau)
    insts = []
    for e, traj in enumerate(trajectories):
        for t, step in enumerate(traj.steps):
            where = f"episode {e}, step {t}"
            if len(step.state) != len(schema.features):
                raise TranslationError(
                    f"{where}: state has {len(step.state)} values, schema has "
                    f"{len(schema.features)} features")
            vals = []
            for feat, v in zip(schema.features, step.state):
                if feat.is_discrete:
                    if v not in feat.domain:
                        raise TranslationError(f"{where}: {v!r} not in domain of {feat.name!r}")
                    vals.append(v)
                else:
                    try:
                        vals.append(float(v))
                    except (TypeError, ValueError):
                        raise TranslationError(
                            f"{where}: {v!r} is not numeric for {feat.name!r}") from None
            try:
                labels = action_set(step.probs, tau, schema.labels)
            except ValueError as e:
                raise TranslationError(f"{where}: {e}") from None
            insts.append(Instance(tuple(vals), labels))
    return DataSet(schema, tuple(insts))


def sample_single_labels(data: DataSet, seed: int) -> DataSet:
    """Replace each labelset by one of its labels drawn uniformly at random."""
    rng = random.Random(seed)
    order = data.schema.label_index
    insts = [Instance(inst.values,
                      {rng.choice(sorted(inst.labelset, key=order.__getitem__))})
             for inst in data]
    return DataSet(data.schema, tuple(insts))


# -- trajectory files -------------------------------------------------------
# One JSON object per line:
#   {"episode": 0, "step": 0, "state": [3, 17], "probs": [...], "action": "UP", "reward": -1.0}
# The final step of a truncated episode carries "truncated": true.

def write_trajectories(trajectories: Sequence[Trajectory], path) -> None:
    with open(path, "w") as fh:
        for e, traj in enumerate(trajectories):
            for t, s in enumerate(traj.steps):
                rec = {"episode": e, "step": t, "state": list(s.state),
                       "probs": list(s.probs), "action": s.action, "reward": s.reward}
                if traj.truncated and t == len(traj.steps) - 1:
                    rec["truncated"] = True
                fh.write(json.dumps(rec) + "\n")


def read_trajectories(path) -> list[Trajectory]:
    episodes: dict[int, list] = {}
    truncated: set[int] = set()
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            ep, t = int(rec["episode"]), int(rec["step"])
            step = Step(tuple(rec["state"]), tuple(float(p) for p in rec["probs"]),
                        str(rec["action"]), float(rec["reward"]))
        except (ValueError, KeyError, TypeError) as e:
            raise TranslationError(f"{path}:{lineno}: malformed record ({e})") from None
        episodes.setdefault(ep, []).append((t, step))
        if rec.get("truncated"):
            truncated.add(ep)
    out = []
    for ep in sorted(episodes):
        steps = [s for _, s in sorted(episodes[ep], key=lambda p: p[0])]
        out.append(Trajectory(tuple(steps), ep in truncated))
    return out
