"""Shared generators for randomized tests.

All randomness is seeded per test, so the suite is deterministic.
"""

from __future__ import annotations

import random
from fractions import Fraction

from seqgames.core import FiniteGame, Leaf, Node, PayoffVector
from seqgames.finite import profile_space_size
from seqgames.graphs import Decision, GameGraph, Terminal

PLAYERS = ("A", "B")
ACTION_NAMES = ("a", "b", "c")


def random_payoffs(rng: random.Random, low: int = 0, high: int = 5) -> PayoffVector:
    return PayoffVector({p: rng.randint(low, high) for p in PLAYERS})


def random_finite_game(
    rng: random.Random,
    max_depth: int = 4,
    max_branching: int = 3,
    low: int = 0,
    high: int = 5,
    max_profiles: int = 2048,
) -> FiniteGame:
    """A random small game whose profile space stays enumerable."""

    def build(depth_left: int) -> FiniteGame:
        if depth_left == 0 or rng.random() < 0.3:
            return Leaf(random_payoffs(rng, low, high))
        width = rng.randint(1, max_branching)
        branches = tuple(
            (ACTION_NAMES[i], build(depth_left - 1)) for i in range(width)
        )
        return Node(rng.choice(PLAYERS), branches)

    while True:
        game = build(max_depth)
        if isinstance(game, Node) and profile_space_size(game) <= max_profiles:
            return game


def random_distinct_payoff_game(
    rng: random.Random, max_depth: int = 3, max_branching: int = 3
) -> FiniteGame:
    """A game whose leaf payoffs are pairwise distinct for every player."""
    counter = [0]

    def build(depth_left: int) -> FiniteGame:
        if depth_left == 0 or (depth_left < max_depth and rng.random() < 0.3):
            counter[0] += 1
            values = {p: Fraction(counter[0] * 7 + i) for i, p in enumerate(PLAYERS)}
            return Leaf(PayoffVector(values))
        width = rng.randint(2, max_branching)
        branches = tuple(
            (ACTION_NAMES[i], build(depth_left - 1)) for i in range(width)
        )
        return Node(rng.choice(PLAYERS), branches)

    game = build(max_depth)
    if isinstance(game, Leaf):
        return build(max_depth)
    return game


def random_game_graph(
    rng: random.Random,
    max_internal: int = 3,
    max_terminals: int = 3,
    low: int = 0,
    high: int = 3,
) -> GameGraph:
    """A random small (possibly cyclic) game graph with binary choices."""
    n_internal = rng.randint(1, max_internal)
    n_terminal = rng.randint(1, max_terminals)
    internal_ids = [f"S{i}" for i in range(n_internal)]
    terminal_ids = [f"T{i}" for i in range(n_terminal)]
    states: dict[str, object] = {}
    for sid in internal_ids:
        width = rng.randint(1, 2)
        edges = []
        for j in range(width):
            target = rng.choice(internal_ids + terminal_ids)
            edges.append((ACTION_NAMES[j], target))
        states[sid] = Decision(rng.choice(PLAYERS), tuple(edges))
    for tid in terminal_ids:
        states[tid] = Terminal(random_payoffs(rng, low, high))
    return GameGraph(name="random", states=states, start=internal_ids[0])
