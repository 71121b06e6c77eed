"""Muddy gridworld and tabular Q-learning.

Coordinates: X grows to the right, Y grows upward, both 0-based.  The goal
is the top-right cell.  Entering a mud cell costs -10, any other move -1;
bumping into the border leaves the agent in place and still costs a step.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import FeatureSchema

ACTIONS = ("UP", "DOWN", "LEFT", "RIGHT")
MOVES = {"UP": (0, 1), "DOWN": (0, -1), "LEFT": (-1, 0), "RIGHT": (1, 0)}
DEFAULT_MUD = frozenset({(9, 10), (8, 10), (10, 10), (9, 9), (9, 11)})


class TerminalStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridWorld:
    width: int = 20
    height: int = 20
    goal: tuple[int, int] | None = None
    mud: frozenset = DEFAULT_MUD
    step_reward: float = -1.0
    mud_reward: float = -10.0
    actions: tuple[str, ...] = ACTIONS

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        if self.goal is None:
            object.__setattr__(self, "goal", (self.width - 1, self.height - 1))
        object.__setattr__(self, "goal", tuple(self.goal))
        object.__setattr__(self, "mud", frozenset(tuple(c) for c in self.mud))
        for cell in self.mud | {self.goal}:
            if not self.inside(cell):
                raise ValueError(f"cell {cell} lies outside the {self.width}x{self.height} grid")
        if self.goal in self.mud:
            raise ValueError("the goal cannot be a mud cell")
        if set(self.actions) - set(MOVES):
            raise ValueError(f"actions must be drawn from {tuple(MOVES)}")

    @classmethod
    def mud_free(cls, width: int = 20, height: int = 20) -> "GridWorld":
        return cls(width, height, mud=frozenset())

    @property
    def schema(self) -> FeatureSchema:
        return FeatureSchema.grid(self.actions)

    @property
    def n_states(self) -> int:
        return self.width * self.height

    def inside(self, cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def states(self):
        return [(x, y) for x in range(self.width) for y in range(self.height)]

    def starts(self):
        """Cells an episode may start from."""
        return [s for s in self.states() if s != self.goal and s not in self.mud]

    def is_terminal(self, state) -> bool:
        return tuple(state) == self.goal

    def encode(self, state) -> tuple:
        """Symbolic feature values (X, Y) of a state."""
        return (int(state[0]), int(state[1]))

    def decode(self, values) -> tuple[int, int]:
        x, y = (int(round(float(v))) for v in values)
        if not self.inside((x, y)):
            raise ValueError(f"state {values} lies outside the grid")
        return (x, y)

    def step(self, state, action: str):
        """Deterministic transition: returns (next_state, reward, done)."""
        state = tuple(state)
        if self.is_terminal(state):
            raise TerminalStateError(f"cannot act from terminal state {state}")
        if not self.inside(state):
            raise ValueError(f"state {state} lies outside the grid")
        dx, dy = MOVES[action]
        nxt = (state[0] + dx, state[1] + dy)
        if not self.inside(nxt):
            nxt = state
        reward = self.mud_reward if nxt in self.mud else self.step_reward
        return nxt, reward, nxt == self.goal

    def reset(self, rng: random.Random):
        return rng.choice(self.starts())

    # -- persistence --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "width": self.width, "height": self.height, "goal": list(self.goal),
            "mud": sorted(list(c) for c in self.mud),
            "step_reward": self.step_reward, "mud_reward": self.mud_reward,
            "actions": list(self.actions),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridWorld":
        known = {"width", "height", "goal", "mud", "step_reward", "mud_reward", "actions"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown environment keys: {sorted(extra)}")
        kw = dict(d)
        if "mud" in kw:
            kw["mud"] = frozenset(tuple(c) for c in kw["mud"])
        if "actions" in kw:
            kw["actions"] = tuple(kw["actions"])
        return cls(**kw)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "GridWorld":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class QParams:
    # transitions are deterministic, so a full step converges exactly
    alpha: float = 1.0
    gamma: float = 0.95
    epsilon: float = 0.1
    episodes: int = 20_000
    max_steps: int = 1_000

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 <= self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.episodes < 0 or self.max_steps < 1:
            raise ValueError("episodes must be >= 0 and max_steps >= 1")


@dataclass
class QTable:
    """Action values indexed as ``q[x, y, action_index]``."""

    q: np.ndarray
    actions: tuple[str, ...] = ACTIONS
    params: QParams = field(default_factory=QParams)

    def values(self, state) -> np.ndarray:
        return self.q[state[0], state[1]]

    def greedy(self, state) -> str:
        return self.actions[int(np.argmax(self.values(state)))]

    def state_values(self) -> np.ndarray:
        return self.q.max(axis=2)

    def save(self, path) -> None:
        w, h, _ = self.q.shape
        lines = ["x\ty\taction\tq"]
        for x in range(w):
            for y in range(h):
                for a, name in enumerate(self.actions):
                    lines.append(f"{x}\t{y}\t{name}\t{float(self.q[x, y, a])!r}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path, params: QParams | None = None) -> "QTable":
        rows = Path(path).read_text().splitlines()
        if not rows or rows[0].split("\t") != ["x", "y", "action", "q"]:
            raise ValueError(f"{path}: not a Q-table file")
        entries, actions = [], []
        for line in rows[1:]:
            if not line.strip():
                continue
            x, y, a, v = line.split("\t")
            entries.append((int(x), int(y), a, float(v)))
            if a not in actions:
                actions.append(a)
        w = max(e[0] for e in entries) + 1
        h = max(e[1] for e in entries) + 1
        q = np.zeros((w, h, len(actions)))
        for x, y, a, v in entries:
            q[x, y, actions.index(a)] = v
        return cls(q, tuple(actions), params or QParams())


def q_learn(env: GridWorld, params: QParams = QParams(), seed: int = 0) -> QTable:
    """One-step Q-learning with epsilon-greedy behaviour and random starts.

    Values start at zero, which is optimistic here since every reward is
    negative.  Greedy ties are broken uniformly at random.
    """
    rng = random.Random(seed)
    n_a = len(env.actions)
    w, h = env.width, env.height
    # flat transition tables: index = x * h + y
    nxt = [[0] * n_a for _ in range(w * h)]
    rew = [[0.0] * n_a for _ in range(w * h)]
    done = [False] * (w * h)
    for (x, y) in env.states():
        s = x * h + y
        done[s] = env.is_terminal((x, y))
        if done[s]:
            continue
        for a, name in enumerate(env.actions):
            (nx, ny), r, _ = env.step((x, y), name)
            nxt[s][a] = nx * h + ny
            rew[s][a] = r
    q = [[0.0] * n_a for _ in range(w * h)]
    starts = [x * h + y for (x, y) in env.starts()]
    alpha, gamma, eps = params.alpha, params.gamma, params.epsilon
    actions = range(n_a)

    for _ in range(params.episodes):
        s = rng.choice(starts)
        for _ in range(params.max_steps):
            qs = q[s]
            if rng.random() < eps:
                a = rng.randrange(n_a)
            else:
                m = max(qs)
                best = [i for i in actions if qs[i] == m]
                a = best[0] if len(best) == 1 else rng.choice(best)
            s2 = nxt[s][a]
            target = rew[s][a] if done[s2] else rew[s][a] + gamma * max(q[s2])
            qs[a] += alpha * (target - qs[a])
            s = s2
            if done[s]:
                break

    table = np.array(q, dtype=float).reshape(w, h, n_a)
    return QTable(table, tuple(env.actions), params)


def optimal_action_sets(qtable: QTable, env: GridWorld, tau: float = 0.9,
                        mode: str = "distribution", temperature: float = 1.0) -> dict:
    """Near-optimal actions of every non-terminal state."""
    from .extraction import QTablePolicy, action_set

    policy = QTablePolicy(qtable, temperature=temperature)
    out = {}
    for s in env.states():
        if env.is_terminal(s):
            continue
        scores = policy.q_scores(s) if mode == "q_values" else policy.distribution(s)
        out[s] = action_set(scores, tau, qtable.actions)
    return out
