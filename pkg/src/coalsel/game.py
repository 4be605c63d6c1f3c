"""Transferable-utility coalition games over features and their Shapley values.

Players are integers ``0..n-1``. A coalition is passed to the payoff function
as a sorted tuple; the empty coalition is worth 0 and is never evaluated.
"""

from __future__ import annotations

import math
import threading
from functools import lru_cache
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from coalsel.dataset import make_rng

EXACT_CEILING = 20
DEFAULT_L = 4
DEFAULT_ROUNDS = 100
RNG_NAME = "numpy.PCG64"


class CoalitionGame:
    """Player set plus a memoized characteristic function.

    ``evaluations`` counts payoff-function calls (cache misses). With
    ``n_jobs > 1`` the missing coalitions of a batch are evaluated on a thread
    pool; results and counts do not depend on the thread count.
    """

    def __init__(self, n: int, payoff: Callable[[tuple], float], n_jobs: int = 1):
        if n < 1:
            raise ValueError("a game needs at least one player")
        self.n = int(n)
        self._payoff = payoff
        self.n_jobs = max(1, int(n_jobs))
        self._cache: dict = {(): 0.0}
        self._lock = threading.Lock()
        self.evaluations = 0

    def _key(self, coalition: Iterable[int]) -> tuple:
        key = tuple(sorted(set(int(p) for p in coalition)))
        if key and (key[0] < 0 or key[-1] >= self.n):
            raise ValueError(f"player index out of range 0..{self.n - 1}: {key}")
        return key

    def value(self, coalition: Iterable[int]) -> float:
        key = self._key(coalition)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        v = float(self._payoff(key))
        with self._lock:
            if key not in self._cache:
                self._cache[key] = v
                self.evaluations += 1
            return self._cache[key]

    __call__ = value

    def evaluate_many(self, coalitions: Iterable[Iterable[int]]) -> list:
        """Fill the cache for ``coalitions``; returns the newly evaluated keys in order."""
        with self._lock:
            todo = []
            seen = set()
            for c in coalitions:
                key = self._key(c)
                if key not in self._cache and key not in seen:
                    seen.add(key)
                    todo.append(key)
        if not todo:
            return []
        if self.n_jobs > 1 and len(todo) > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                values = list(pool.map(self._payoff, todo))
        else:
            values = [self._payoff(k) for k in todo]
        with self._lock:
            for key, v in zip(todo, values):
                self._cache[key] = float(v)
            self.evaluations += len(todo)
        return todo

    def cached(self, coalition: Iterable[int]) -> float:
        return self._cache[self._key(coalition)]


@dataclass(frozen=True)
class ExactShapley:
    values: np.ndarray
    evaluations: int = 0


@dataclass(frozen=True)
class ShapleyEstimate:
    values: np.ndarray
    rounds_used: int
    L: int
    seed: int
    evaluation_counts: np.ndarray  # fresh evaluations whose coalition held the player
    evaluations: int = 0
    evaluations_per_round: tuple = field(default=(), repr=False)


def marginal_importance(game: CoalitionGame, i: int, S: Iterable[int]) -> float:
    """``v(S + {i}) - v(S)``."""
    S = set(int(p) for p in S)
    if i in S:
        raise ValueError(f"player {i} already belongs to the coalition")
    return game.value(S | {i}) - game.value(S)


@lru_cache(maxsize=None)
def _shapley_weights(g: int) -> np.ndarray:
    # weight of a coalition of size s not containing the player, in a g-player game
    return np.array(
        [math.factorial(s) * math.factorial(g - s - 1) / math.factorial(g) for s in range(g)]
    )


_POPCOUNT_CACHE: dict = {}


def _popcounts(g: int) -> np.ndarray:
    if g not in _POPCOUNT_CACHE:
        masks = np.arange(1 << g)
        _POPCOUNT_CACHE[g] = np.array([bin(m).count("1") for m in masks.tolist()], dtype=np.int64)
    return _POPCOUNT_CACHE[g]


def _shapley_from_table(table: np.ndarray, g: int) -> np.ndarray:
    """Shapley values of a g-player game given ``table[mask] = v(mask)``."""
    weights = _shapley_weights(g)
    sizes = _popcounts(g)
    masks = np.arange(1 << g)
    out = np.empty(g)
    for i in range(g):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        out[i] = np.sum(weights[sizes[without]] * (table[without | bit] - table[without]))
    return out


def _group_coalitions(members: list) -> list:
    g = len(members)
    return [tuple(members[b] for b in range(g) if mask >> b & 1) for mask in range(1 << g)]


def _coalition_table(game: CoalitionGame, coalitions: list) -> np.ndarray:
    return np.array([game.cached(c) for c in coalitions])


def exact_shapley(game: CoalitionGame, max_players: int = EXACT_CEILING) -> ExactShapley:
    """Shapley values from the subset-weighted sum over all coalitions."""
    if game.n > max_players:
        raise ValueError(
            f"{game.n} players exceed the exact-computation ceiling of {max_players}; "
            "use multi_perturbation_shapley instead"
        )
    before = game.evaluations
    coalitions = _group_coalitions(list(range(game.n)))
    game.evaluate_many(coalitions)
    table = _coalition_table(game, coalitions)
    return ExactShapley(_shapley_from_table(table, game.n), game.evaluations - before)


def random_groups(n: int, L: int, rng: np.random.Generator) -> list:
    """Uniform shuffle of ``0..n-1`` cut into consecutive blocks of ``L``
    (the last block holds the remainder). Members of each block are sorted."""
    perm = rng.permutation(n)
    return [sorted(perm[s : s + L].tolist()) for s in range(0, n, L)]


def multi_perturbation_shapley(
    game: CoalitionGame,
    L: int = DEFAULT_L,
    rounds: int = DEFAULT_ROUNDS,
    seed: int = 0,
    allow_singletons: bool = False,
) -> ShapleyEstimate:
    """Average within-group Shapley value over ``rounds`` random partitions.

    Each round splits the players into random groups of size ``L`` and computes
    every member's Shapley value in the game restricted to its group. The
    estimate is the per-player mean over rounds, reduced in round order.
    """
    n = game.n
    if L > n:
        raise ValueError(f"group size L={L} exceeds the {n} players")
    if L < 2 and not (allow_singletons and L == 1):
        raise ValueError("group size L must be at least 2 (L=1 needs allow_singletons=True)")
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    rng = make_rng(seed)
    totals = np.zeros(n)
    counts = np.zeros(n, dtype=np.int64)
    per_round = []
    start = game.evaluations
    for _ in range(rounds):
        groups = random_groups(n, L, rng)
        coalitions = [_group_coalitions(members) for members in groups]
        fresh = game.evaluate_many(c for group in coalitions for c in group)
        for key in fresh:
            counts[list(key)] += 1
        per_round.append(len(fresh))
        contrib = np.zeros(n)
        for members, group in zip(groups, coalitions):
            contrib[members] = _shapley_from_table(_coalition_table(game, group), len(members))
        totals += contrib
    return ShapleyEstimate(
        totals / rounds,
        rounds,
        L,
        int(seed),
        counts,
        game.evaluations - start,
        tuple(per_round),
    )


def accuracy_game(scorer, n_jobs: int = 1) -> CoalitionGame:
    """Game whose payoff is cross-validated accuracy minus the majority-class rate."""
    base = scorer.majority_rate

    def payoff(coalition):
        return scorer.accuracy(coalition) - base

    return CoalitionGame(scorer.X.shape[1], payoff, n_jobs=n_jobs)
