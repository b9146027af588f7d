"""Domain types for sequential games: payoffs, finite game trees, profiles.

Payoffs are exact rationals (`fractions.Fraction`) and the solvers only ever
compare them, never add them, so every result is invariant under strictly
monotone re-encodings of the payoff scale.  All values in this module are
immutable after construction and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union


class GameError(Exception):
    """Base class for game construction and evaluation errors."""


class UnknownPlayerError(GameError, KeyError):
    """A payoff vector was queried for a player it does not cover."""

    def __str__(self) -> str:  # KeyError quotes its repr, which reads badly
        return self.args[0] if self.args else ""


class ProfileError(GameError):
    """A strategy profile does not fit the game it is applied to."""


class CapExceededError(GameError):
    """An exhaustive enumeration would exceed the configured cap."""


RationalLike = Union[Fraction, int, str]


def as_fraction(value: RationalLike) -> Fraction:
    """Coerce ints, strings like ``"-3/4"``, and Fractions to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise TypeError(f"not an exact rational: {value!r}")


class PayoffVector(Mapping[str, Fraction]):
    """Immutable map from player id to an exact rational payoff.

    Entries are stored sorted by player id, so two vectors with the same
    content compare and hash equal regardless of construction order.
    """

    __slots__ = ("_entries",)

    def __init__(
        self,
        entries: Mapping[str, RationalLike] | Iterable[tuple[str, RationalLike]] = (),
        **named: RationalLike,
    ) -> None:
        items: dict[str, Fraction] = {}
        pairs = entries.items() if isinstance(entries, Mapping) else entries
        for player, value in pairs:
            items[player] = as_fraction(value)
        for player, value in named.items():
            items[player] = as_fraction(value)
        self._entries: tuple[tuple[str, Fraction], ...] = tuple(sorted(items.items()))

    def __getitem__(self, player: str) -> Fraction:
        for pid, value in self._entries:
            if pid == player:
                return value
        raise UnknownPlayerError(f"no payoff entry for player {player!r}")

    def __iter__(self) -> Iterator[str]:
        return iter(pid for pid, _ in self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, PayoffVector):
            return self._entries == other._entries
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._entries)

    def __repr__(self) -> str:
        inner = ", ".join(f"{pid}:{value}" for pid, value in self._entries)
        return f"PayoffVector({inner})"

    @property
    def players(self) -> frozenset[str]:
        return frozenset(pid for pid, _ in self._entries)


class Comparison(Enum):
    """Outcome of comparing two payoffs from one player's point of view."""

    BETTER = "better"
    EQUAL = "equal"
    WORSE = "worse"


def prefers(p: PayoffVector, q: PayoffVector, who: str) -> Comparison:
    """Compare ``p`` against ``q`` for player ``who``; comparison only.

    Raises UnknownPlayerError if either vector lacks an entry for ``who``.
    """
    mine, theirs = p[who], q[who]
    if mine > theirs:
        return Comparison.BETTER
    if mine < theirs:
        return Comparison.WORSE
    return Comparison.EQUAL


@dataclass(frozen=True)
class Leaf:
    """Terminal position distributing the payoffs."""

    payoffs: PayoffVector


@dataclass(frozen=True)
class Node:
    """Decision position: ``mover`` picks one of the labelled branches."""

    mover: str
    branches: tuple[tuple[str, "FiniteGame"], ...]


FiniteGame = Union[Leaf, Node]

# A node address is the path of action labels leading to it from the root.
Address = tuple[str, ...]


def leaf(entries: Mapping[str, RationalLike] | None = None, **named: RationalLike) -> Leaf:
    return Leaf(PayoffVector(entries or {}, **named))


def node(
    mover: str,
    *pairs: tuple[str, FiniteGame],
    **named: FiniteGame,
) -> Node:
    """Build a decision node; branch order follows the argument order."""
    branches = tuple(pairs) + tuple(named.items())
    return Node(mover, branches)


def is_leaf(game: FiniteGame) -> bool:
    return isinstance(game, Leaf)


def subgame_at(game: FiniteGame, address: Address) -> FiniteGame:
    """Return the subgame rooted at ``address``; raises on a bad path."""
    current = game
    for step, label in enumerate(address):
        if isinstance(current, Leaf):
            raise GameError(f"address {address!r} descends below a leaf at step {step}")
        for action, child in current.branches:
            if action == label:
                current = child
                break
        else:
            raise GameError(f"no action {label!r} at address {address[:step]!r}")
    return current


def walk(game: FiniteGame) -> Iterator[tuple[Address, FiniteGame]]:
    """Yield every position with its address, parents before children."""
    stack: list[tuple[Address, FiniteGame]] = [((), game)]
    while stack:
        address, sub = stack.pop()
        yield address, sub
        if isinstance(sub, Node):
            for action, child in reversed(sub.branches):
                stack.append((address + (action,), child))


def internal_addresses(game: FiniteGame) -> list[Address]:
    """Addresses of all decision nodes, in depth-first (preorder) order."""
    return [address for address, sub in walk(game) if isinstance(sub, Node)]


def depth(game: FiniteGame) -> int:
    if isinstance(game, Leaf):
        return 0
    return 1 + max(depth(child) for _, child in game.branches)


def declared_players(game: FiniteGame) -> frozenset[str]:
    """Players appearing as movers or in leaf payoffs."""
    players: set[str] = set()
    for _, sub in walk(game):
        if isinstance(sub, Leaf):
            players.update(sub.payoffs.players)
        else:
            players.add(sub.mover)
    return frozenset(players)


@dataclass(frozen=True)
class Violation:
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.where}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _format_address(address: Address) -> str:
    return ".".join(address) if address else "."


def validate_game(game: FiniteGame, players: Iterable[str] | None = None) -> ValidationReport:
    """Check structural invariants; returns violations instead of raising.

    With ``players`` given, every leaf must carry exactly that player set;
    otherwise the set is inferred as the union over all leaves and movers.
    """
    expected = frozenset(players) if players is not None else declared_players(game)
    found: list[Violation] = []
    for address, sub in walk(game):
        where = _format_address(address)
        if isinstance(sub, Leaf):
            missing = expected - sub.payoffs.players
            extra = sub.payoffs.players - expected
            for pid in sorted(missing):
                found.append(Violation(where, f"missing payoff for {pid}"))
            for pid in sorted(extra):
                found.append(Violation(where, f"payoff for undeclared player {pid}"))
            continue
        if not sub.branches:
            found.append(Violation(where, "empty branch list"))
        seen: set[str] = set()
        for action, _ in sub.branches:
            if action in seen:
                found.append(Violation(where, f"duplicate action label {action!r}"))
            seen.add(action)
        if players is not None and sub.mover not in expected:
            found.append(Violation(where, f"undeclared mover {sub.mover}"))
    return ValidationReport(tuple(found))


class TreeProfile(Mapping[Address, str]):
    """One chosen action per decision node, keyed by node address."""

    __slots__ = ("_choices",)

    def __init__(
        self,
        choices: Mapping[Address, str] | Iterable[tuple[Address, str]] = (),
    ) -> None:
        pairs = choices.items() if isinstance(choices, Mapping) else choices
        items = {tuple(addr): action for addr, action in pairs}
        self._choices: tuple[tuple[Address, str], ...] = tuple(sorted(items.items()))

    def __getitem__(self, address: Address) -> str:
        for addr, action in self._choices:
            if addr == address:
                return action
        raise KeyError(address)

    def __iter__(self) -> Iterator[Address]:
        return iter(addr for addr, _ in self._choices)

    def __len__(self) -> int:
        return len(self._choices)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, TreeProfile):
            return self._choices == other._choices
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._choices)

    def __repr__(self) -> str:
        inner = ", ".join(f"{_format_address(a)}:{act}" for a, act in self._choices)
        return f"TreeProfile({inner})"

    def action_at(self, address: Address) -> str:
        try:
            return self[address]
        except KeyError:
            raise ProfileError(
                f"profile not total: no choice at address {_format_address(address)}"
            ) from None


def check_profile_total(game: FiniteGame, profile: TreeProfile) -> None:
    """Raise ProfileError unless ``profile`` covers exactly the decision nodes."""
    needed = set(internal_addresses(game))
    given = set(profile)
    missing = needed - given
    extra = given - needed
    if missing:
        worst = _format_address(min(missing, key=lambda a: (len(a), a)))
        raise ProfileError(f"profile not total: no choice at address {worst}")
    if extra:
        worst = _format_address(min(extra, key=lambda a: (len(a), a)))
        raise ProfileError(f"profile has a choice at non-decision address {worst}")
    for address in needed:
        sub = subgame_at(game, address)
        assert isinstance(sub, Node)
        chosen = profile[address]
        if chosen not in {action for action, _ in sub.branches}:
            raise ProfileError(
                f"profile chooses unknown action {chosen!r} at {_format_address(address)}"
            )


def play_finite(game: FiniteGame, profile: TreeProfile) -> PayoffVector:
    """Follow the profile's chosen action at each node; return the leaf payoffs."""
    current = game
    address: Address = ()
    while isinstance(current, Node):
        chosen = profile.action_at(address)
        for action, child in current.branches:
            if action == chosen:
                current = child
                break
        else:
            raise ProfileError(
                f"profile chooses unknown action {chosen!r} at {_format_address(address)}"
            )
        address = address + (chosen,)
    return current.payoffs


def format_address(address: Address) -> str:
    """Render an address for display: ``.`` for the root, else ``c.l``."""
    return _format_address(address)
