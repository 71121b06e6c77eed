"""Rule quality: weighted relative accuracy for single and set-valued labels.

With set-valued labels an instance is *positive* for class ``c`` whenever its
labelset contains ``c``.  The classical score treats every instance that
carries some other label as negative as well, so a multi-labelled instance can
be counted twice; the set-valued score counts samples instead.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataSet, EmptyDataError


@dataclass(frozen=True)
class HeuristicCounts:
    E: int
    E_hat: int
    P: int
    P_hat: int
    N: int = 0
    N_hat: int = 0

    def __post_init__(self):
        if not 0 <= self.E_hat <= self.E:
            raise ValueError(f"need 0 <= E_hat <= E: {self}")
        if not 0 <= self.P_hat <= min(self.E_hat, self.P):
            raise ValueError(f"need 0 <= P_hat <= min(E_hat, P): {self}")

    @classmethod
    def of(cls, label: str, covered: np.ndarray, data: DataSet) -> "HeuristicCounts":
        """Counts for ``label`` given a boolean coverage mask over ``data``."""
        lm = data.label_matrix
        j = data.schema.label_index[label]
        pos = lm[:, j]
        neg = (lm.sum(axis=1) - pos) > 0
        return cls(
            E=len(data), E_hat=int(covered.sum()),
            P=int(pos.sum()), P_hat=int((pos & covered).sum()),
            N=int(neg.sum()), N_hat=int((neg & covered).sum()),
        )


def wra(counts: HeuristicCounts) -> float:
    """Classical weighted relative accuracy from positive/negative counts."""
    total = counts.P + counts.N
    if counts.E == 0 or total == 0:
        raise EmptyDataError("weighted relative accuracy of an empty dataset")
    covered = counts.P_hat + counts.N_hat
    if covered == 0:
        return 0.0
    return (covered / total) * (counts.P_hat / covered - counts.P / total)


def wra_set(counts: HeuristicCounts) -> float:
    """Weighted relative accuracy over sample counts (set-valued labels)."""
    if counts.E == 0:
        raise EmptyDataError("weighted relative accuracy of an empty dataset")
    if counts.E_hat == 0:
        return 0.0
    return (counts.E_hat / counts.E) * (counts.P_hat / counts.E_hat - counts.P / counts.E)


HEURISTICS = {"wra": wra, "wra_set": wra_set}


def majority_class(covered: DataSet, full: DataSet | None = None) -> str:
    """Label contained in the most labelsets of ``covered``.

    Ties go to the label more frequent in ``full`` (default: ``covered``),
    then to the earlier label in the schema.
    """
    if len(covered) == 0:
        raise EmptyDataError("majority class of an empty set is undefined")
    counts = covered.label_matrix.sum(axis=0)
    glob = (full if full is not None else covered).label_matrix.sum(axis=0)
    return _pick(counts, glob, covered.schema.labels)


def _pick(counts, glob, labels) -> str:
    best = max(range(len(labels)), key=lambda j: (counts[j], glob[j], -j))
    return labels[best]
