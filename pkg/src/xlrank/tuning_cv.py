"""Five-fold cross-validation with exhaustive grid search.

Parameters are chosen by mean AP on the training folds only; the
selected point for a fold is a pure function of data outside that fold.
Ties break deterministically: smaller k, then larger alpha, then
lexicographically smaller weights.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import DataError
from .evidence_fusion import FusionParams

# eval_fn(params, topic_ids) -> AP per topic id
EvalFn = Callable[[FusionParams, Sequence[str]], dict[str, float]]


@dataclass(frozen=True)
class Grid:
    alpha_values: tuple[float, ...]
    weight_values: tuple[float, ...]
    k_values: tuple[int, ...] = (1, 2, 3)

    def __post_init__(self):
        object.__setattr__(self, "alpha_values", tuple(float(a) for a in self.alpha_values))
        object.__setattr__(self, "weight_values", tuple(float(w) for w in self.weight_values))
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        for name, values in (("alpha_values", self.alpha_values),
                             ("weight_values", self.weight_values)):
            if not values:
                raise DataError(f"{name} must be non-empty")
            if any(not 0.0 <= v <= 1.0 for v in values):
                raise DataError(f"{name} must lie in [0, 1]")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise DataError(f"{name} must be strictly increasing")
        if not self.k_values or any(k not in (1, 2, 3) for k in self.k_values):
            raise DataError("k_values must be a non-empty subset of {1, 2, 3}")

    def as_dict(self) -> dict:
        return {"alpha_values": list(self.alpha_values),
                "weight_values": list(self.weight_values),
                "k_values": list(self.k_values)}

    @classmethod
    def from_dict(cls, data: dict) -> "Grid":
        return cls(tuple(data["alpha_values"]), tuple(data["weight_values"]),
                   tuple(data.get("k_values", (1, 2, 3))))


def default_grid() -> Grid:
    steps = tuple(round(0.1 * i, 1) for i in range(11))
    return Grid(alpha_values=steps, weight_values=steps, k_values=(1, 2, 3))


def grid_points(grid: Grid) -> list[FusionParams]:
    """All parameter combinations, in deterministic tie-break order:
    k ascending, alpha descending, weights ascending.  w_1 is pinned to 1."""
    points: list[FusionParams] = []
    for k in sorted(grid.k_values):
        for alpha in sorted(grid.alpha_values, reverse=True):
            if k == 1:
                points.append(FusionParams(alpha, (1.0,), 1))
            elif k == 2:
                for w2 in grid.weight_values:
                    points.append(FusionParams(alpha, (1.0, w2), 2))
            else:
                for w2 in grid.weight_values:
                    for w3 in grid.weight_values:
                        points.append(FusionParams(alpha, (1.0, w2, w3), 3))
    return points


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: dict[str, int]
    n_folds: int
    seed: int

    def topics_in(self, fold: int) -> list[str]:
        return sorted(t for t, f in self.fold_of.items() if f == fold)

    def topics_outside(self, fold: int) -> list[str]:
        return sorted(t for t, f in self.fold_of.items() if f != fold)


def assign_folds(topic_ids: Iterable[str], n_folds: int = 5, seed: int = 0) -> FoldAssignment:
    """Balanced seeded assignment: sort topics lexicographically, shuffle
    with the seed, then deal round-robin.  Fold sizes differ by at most 1."""
    topics = sorted(set(topic_ids))
    if len(topics) < n_folds:
        raise DataError(f"{len(topics)} topics cannot fill {n_folds} folds")
    rng = random.Random(seed)
    rng.shuffle(topics)
    return FoldAssignment(
        fold_of={t: i % n_folds for i, t in enumerate(topics)},
        n_folds=n_folds, seed=seed)


def grid_search(grid: Grid, train_topics: Sequence[str], eval_fn: EvalFn) -> FusionParams:
    """The grid point with the highest mean AP over the training topics."""
    if not train_topics:
        raise DataError("empty training set")
    best: FusionParams | None = None
    best_ap = float("-inf")
    for params in grid_points(grid):
        per_topic = eval_fn(params, train_topics)
        mean_ap = sum(per_topic[t] for t in train_topics) / len(train_topics)
        if mean_ap > best_ap:
            best, best_ap = params, mean_ap
    assert best is not None
    return best


@dataclass
class CVResult:
    assignment: FoldAssignment
    grid: Grid
    fold_params: list[FusionParams] = field(default_factory=list)
    test_scores: dict[str, float] = field(default_factory=dict)

    @property
    def mean_test_score(self) -> float:
        return sum(self.test_scores.values()) / len(self.test_scores)

    def as_dict(self) -> dict:
        return {
            "seed": self.assignment.seed,
            "n_folds": self.assignment.n_folds,
            "grid": self.grid.as_dict(),
            "folds": [
                {"fold": f, "params": p.as_dict(),
                 "test_topics": self.assignment.topics_in(f)}
                for f, p in enumerate(self.fold_params)
            ],
            "per_topic_ap": dict(sorted(self.test_scores.items())),
            "mean_ap": self.mean_test_score,
        }


def cross_validate(assignment: FoldAssignment, grid: Grid, eval_fn: EvalFn) -> CVResult:
    """For each fold, tune on the other folds and score the held-out
    topics with the chosen parameters."""
    result = CVResult(assignment=assignment, grid=grid)
    for fold in range(assignment.n_folds):
        train = assignment.topics_outside(fold)
        test = assignment.topics_in(fold)
        params = grid_search(grid, train, eval_fn)
        result.fold_params.append(params)
        held_out = eval_fn(params, test)
        for topic_id in test:
            result.test_scores[topic_id] = held_out[topic_id]
    return result


def write_tuning_report(path: str | Path, results: dict[int, CVResult]) -> None:
    """JSON report keyed by k (one tuning row per sentence count)."""
    payload = {str(k): r.as_dict() for k, r in sorted(results.items())}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
