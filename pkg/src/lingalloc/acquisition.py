"""Uncertainty scoring and budget-constrained batch selection.

Every strategy produces scores where *lower means acquired first*, so one
selection rule serves them all: sort ascending by (score, instance id), then
walk the ranking first-fit, taking each instance whose cost still fits the
remaining budget and skipping the ones that do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ScoringError
from .graph import Arborescence, ArcScores, log_partition, tree_log_prob
from .tasks import TaskKind


class StrategyKind(Enum):
    RANDOM = "random"
    LC = "lc"
    MNLP = "mnlp"
    NLPDT = "nlpdt"
    NLPDT_N2 = "nlpdt_n2"
    NLPDT_GLOBAL = "nlpdt_global"


_COMPATIBLE = {
    StrategyKind.RANDOM: set(TaskKind),
    StrategyKind.LC: {TaskKind.CLASSIFICATION},
    StrategyKind.MNLP: {TaskKind.SEQUENCE_TAGGING},
    StrategyKind.NLPDT: {TaskKind.DEPENDENCY_PARSING},
    StrategyKind.NLPDT_N2: {TaskKind.DEPENDENCY_PARSING},
    StrategyKind.NLPDT_GLOBAL: {TaskKind.DEPENDENCY_PARSING},
}


def strategy_compatible(strategy: StrategyKind, task: TaskKind) -> bool:
    return task in _COMPATIBLE[strategy]


@dataclass(frozen=True)
class AcquisitionScore:
    instance_id: int
    score: float
    language: str
    cost: int

    def __post_init__(self):
        if math.isnan(self.score) or self.score == float("inf"):
            raise ScoringError(f"instance {self.instance_id}: score must be finite or -inf")


def lc_score(distribution) -> float:
    """Confidence of the predicted class: max probability, acquired ascending."""
    dist = np.asarray(distribution, dtype=np.float64)
    if dist.ndim != 1 or dist.size == 0 or (dist < 0).any() or abs(dist.sum() - 1.0) > 1e-6:
        raise ScoringError("class distribution must be non-negative and sum to 1")
    return float(dist.max())


def mnlp_score(tag_distributions) -> float:
    """Mean over tokens of the log probability of the argmax tag."""
    probas = np.asarray(tag_distributions, dtype=np.float64)
    if probas.ndim != 2 or probas.shape[0] == 0:
        raise ScoringError("need one tag distribution per token of a non-empty sentence")
    confidences = probas.max(axis=1)
    if (confidences <= 0).any():
        return float("-inf")
    return float(np.log(confidences).mean())


def nlpdt_score(
    arc_probas: np.ndarray,
    tree: Arborescence,
    n_tokens: int,
    variant: StrategyKind = StrategyKind.NLPDT,
) -> float:
    """Log probability of the decoded tree under one of three normalizations.

    Plain: divide by token count. N2: divide by its square. Global: subtract
    the log partition over all single-root trees, giving the tree's log share
    of the total mass (always <= 0, no length normalization needed).
    """
    logp = tree_log_prob(arc_probas, tree)
    if variant is StrategyKind.NLPDT:
        return logp / n_tokens
    if variant is StrategyKind.NLPDT_N2:
        return logp / (n_tokens * n_tokens)
    if variant is StrategyKind.NLPDT_GLOBAL:
        with np.errstate(divide="ignore"):
            log_scores = np.log(np.asarray(arc_probas, dtype=np.float64))
        return logp - log_partition(ArcScores(log_scores))
    raise ScoringError(f"{variant} is not a tree-probability variant")


def random_scores(instance_ids: Sequence[int], round_rng: np.random.Generator) -> dict[int, float]:
    """Uniform scores in [0, 1), drawn in ascending instance-id order."""
    return {iid: float(round_rng.random()) for iid in sorted(instance_ids)}


def select_batch(
    scores: Sequence[AcquisitionScore], budget: int
) -> tuple[list[int], int]:
    """First-fit selection over the ascending (score, id) ranking.

    Returns the chosen ids in selection order and the total cost spent, which
    never exceeds the budget. Instances that do not fit the remaining budget
    are skipped and the walk continues.
    """
    if budget < 1:
        raise ScoringError("budget must be positive")
    ranked = sorted(scores, key=lambda s: (s.score, s.instance_id))
    selected: list[int] = []
    spent = 0
    for entry in ranked:
        if entry.cost <= budget - spent:
            selected.append(entry.instance_id)
            spent += entry.cost
    return selected, spent
