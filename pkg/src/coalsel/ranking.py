"""Feature rankings shared by the game-based and filter selectors."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

METHODS = ("shapley-mpe", "shapley-exact", "chi2", "info-gain", "gain-ratio", "relief")


def rank_order(values) -> np.ndarray:
    """Player indices by descending value; ties go to the smaller index."""
    values = np.asarray(values, dtype=np.float64)
    return np.lexsort((np.arange(values.size), -values))


@dataclass(frozen=True)
class RankingReport:
    method: str
    values: np.ndarray
    names: tuple
    L: int | None = None
    rounds: int | None = None
    seed: int | None = None
    evaluations: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.names),):
            raise ValueError("one value per feature name is required")
        if not np.all(np.isfinite(values)):
            raise ValueError("ranking values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def order(self) -> np.ndarray:
        return rank_order(self.values)

    def top(self, k: int) -> list:
        if k > len(self.names):
            raise ValueError(f"top_k={k} exceeds the {len(self.names)} features")
        return self.order[:k].tolist()

    def ranks(self) -> np.ndarray:
        """1-based rank of each feature."""
        r = np.empty(len(self.names), dtype=np.int64)
        r[self.order] = np.arange(1, len(self.names) + 1)
        return r

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "L": self.L,
            "rounds": self.rounds,
            "seed": self.seed,
            "scores": [
                {"feature": self.names[i], "value": float(self.values[i]), "rank": r + 1}
                for r, i in enumerate(self.order.tolist())
            ],
            "evaluations": int(self.evaluations),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, raw: dict) -> "RankingReport":
        scores = raw["scores"]
        return cls(
            raw["method"],
            [s["value"] for s in scores],
            [s["feature"] for s in scores],
            raw.get("L"),
            raw.get("rounds"),
            raw.get("seed"),
            raw.get("evaluations", 0),
        )


def rank_features(estimate, top_k: int, names=None, method: str | None = None) -> RankingReport:
    """Wrap a Shapley result as a report; ``top_k`` must not exceed the player count."""
    values = np.asarray(estimate.values, dtype=np.float64)
    if top_k > values.size:
        raise ValueError(f"top_k={top_k} exceeds the {values.size} players")
    if names is None:
        names = [str(i) for i in range(values.size)]
    if method is None:
        method = "shapley-mpe" if hasattr(estimate, "rounds_used") else "shapley-exact"
    return RankingReport(
        method,
        values,
        names,
        getattr(estimate, "L", None),
        getattr(estimate, "rounds_used", None),
        getattr(estimate, "seed", None),
        getattr(estimate, "evaluations", 0),
    )
