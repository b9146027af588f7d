"""Finitely-represented infinite games.

A ``GameGraph`` is a finite set of named states with labelled edges, possibly
cyclic; it denotes its infinite unfolding from the start state.  A
``ParamGraph`` additionally threads a stage counter k through the play: edges
may increment it and terminal payoffs are affine expressions in it, which is
enough to express auctions whose stakes grow by a fixed step each round.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Union

from seqgames.core import (
    GameError,
    Leaf,
    Node,
    PayoffVector,
    RationalLike,
    ValidationReport,
    Violation,
    as_fraction,
    FiniteGame,
)


class MissingClosureError(GameError):
    """Truncation reached an internal state with no closure payoff."""


@dataclass(frozen=True)
class AffineExpr:
    """``intercept + slope * k`` for a stage counter k ranging over 0, 1, ..."""

    intercept: Fraction
    slope: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "intercept", as_fraction(self.intercept))
        object.__setattr__(self, "slope", as_fraction(self.slope))

    def at(self, k: int) -> Fraction:
        return self.intercept + self.slope * k

    def shifted(self, delta: int) -> "AffineExpr":
        """The same quantity as a function of j, where k = j + delta."""
        return AffineExpr(self.intercept + self.slope * delta, self.slope)

    @property
    def is_constant(self) -> bool:
        return self.slope == 0

    def __str__(self) -> str:
        if self.slope == 0:
            return str(self.intercept)
        sign = "+" if self.slope > 0 else "-"
        return f"{self.intercept} {sign} {abs(self.slope)}*k"


class AffinePayoffs(Mapping[str, AffineExpr]):
    """Immutable map from player id to an affine payoff expression."""

    __slots__ = ("_entries",)

    def __init__(
        self,
        entries: Mapping[str, AffineExpr] | Iterable[tuple[str, AffineExpr]] = (),
        **named: AffineExpr,
    ) -> None:
        items: dict[str, AffineExpr] = {}
        pairs = entries.items() if isinstance(entries, Mapping) else entries
        for player, expr in pairs:
            items[player] = expr
        for player, expr in named.items():
            items[player] = expr
        self._entries: tuple[tuple[str, AffineExpr], ...] = tuple(sorted(items.items()))

    def __getitem__(self, player: str) -> AffineExpr:
        for pid, expr in self._entries:
            if pid == player:
                return expr
        raise KeyError(player)

    def __iter__(self) -> Iterator[str]:
        return iter(pid for pid, _ in self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, AffinePayoffs):
            return self._entries == other._entries
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._entries)

    def __repr__(self) -> str:
        inner = ", ".join(f"{pid}:{expr}" for pid, expr in self._entries)
        return f"AffinePayoffs({inner})"

    def at_stage(self, k: int) -> PayoffVector:
        return PayoffVector({pid: expr.at(k) for pid, expr in self._entries})

    def shifted(self, delta: int) -> "AffinePayoffs":
        return AffinePayoffs({pid: expr.shifted(delta) for pid, expr in self._entries})


@dataclass(frozen=True)
class Terminal:
    payoffs: PayoffVector


@dataclass(frozen=True)
class Decision:
    mover: str
    edges: tuple[tuple[str, str], ...]  # (action, target state)


GraphState = Union[Terminal, Decision]


@dataclass(frozen=True, eq=True)
class GameGraph:
    """Named states with labelled edges; denotes its infinite unfolding."""

    name: str
    states: dict[str, GraphState]
    start: str

    def state(self, sid: str) -> GraphState:
        try:
            return self.states[sid]
        except KeyError:
            raise GameError(f"unknown state {sid!r}") from None

    def internal_ids(self) -> list[str]:
        return [sid for sid, st in self.states.items() if isinstance(st, Decision)]


@dataclass(frozen=True)
class ParamTerminal:
    payoffs: AffinePayoffs


@dataclass(frozen=True)
class ParamDecision:
    mover: str
    edges: tuple[tuple[str, str, int], ...]  # (action, target state, stage delta)


ParamState = Union[ParamTerminal, ParamDecision]


@dataclass(frozen=True, eq=True)
class ParamGraph:
    """Game graph with a stage counter; deltas are 0 or 1 per edge."""

    name: str
    states: dict[str, ParamState]
    start: str

    def state(self, sid: str) -> ParamState:
        try:
            return self.states[sid]
        except KeyError:
            raise GameError(f"unknown state {sid!r}") from None

    def internal_ids(self) -> list[str]:
        return [sid for sid, st in self.states.items() if isinstance(st, ParamDecision)]


AnyGraph = Union[GameGraph, ParamGraph]


def _edge_views(state: GraphState | ParamState) -> tuple[tuple[str, str, int], ...]:
    """Uniform (action, target, delta) view over both graph kinds."""
    if isinstance(state, Decision):
        return tuple((a, t, 0) for a, t in state.edges)
    if isinstance(state, ParamDecision):
        return state.edges
    return ()


def graph_players(graph: AnyGraph) -> frozenset[str]:
    players: set[str] = set()
    for state in graph.states.values():
        if isinstance(state, (Terminal, ParamTerminal)):
            players.update(state.payoffs)
        else:
            players.add(state.mover)
    return frozenset(players)


def validate_graph(graph: AnyGraph) -> ValidationReport:
    """Structural checks shared by plain and parametrized graphs."""
    found: list[Violation] = []
    if graph.start not in graph.states:
        found.append(Violation(graph.name, f"start state {graph.start!r} is not defined"))
    expected = graph_players(graph)
    for sid, state in graph.states.items():
        if isinstance(state, (Terminal, ParamTerminal)):
            missing = expected - set(state.payoffs)
            for pid in sorted(missing):
                found.append(Violation(sid, f"missing payoff for {pid}"))
            continue
        edges = _edge_views(state)
        if not edges:
            found.append(Violation(sid, "empty edge list"))
        seen: set[str] = set()
        for action, target, delta in edges:
            if action in seen:
                found.append(Violation(sid, f"duplicate action label {action!r}"))
            seen.add(action)
            if target not in graph.states:
                found.append(Violation(sid, f"edge {action!r} targets unknown state {target!r}"))
            if delta not in (0, 1):
                found.append(Violation(sid, f"edge {action!r} has stage delta {delta}, expected 0 or 1"))
    return ValidationReport(tuple(found))


def require_valid_graph(graph: AnyGraph) -> None:
    report = validate_graph(graph)
    if not report.ok:
        first = report.violations[0]
        raise GameError(f"invalid graph: {first} ({len(report.violations)} violation(s))")


ClosureMap = Union[Mapping[str, PayoffVector], Callable[[str], PayoffVector]]


def unfold(graph: GameGraph, depth: int, closure: ClosureMap) -> FiniteGame:
    """Tree of all plays of length <= depth from the start state.

    Internal states cut at the depth limit become leaves carrying the closure
    payoff supplied for that state.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    require_valid_graph(graph)
    lookup = closure if callable(closure) else None

    def closure_for(sid: str) -> PayoffVector:
        if lookup is not None:
            return lookup(sid)
        try:
            return closure[sid]  # type: ignore[index]
        except KeyError:
            raise MissingClosureError(f"no closure payoff for cut state {sid!r}") from None

    def build(sid: str, d: int) -> FiniteGame:
        state = graph.state(sid)
        if isinstance(state, Terminal):
            return Leaf(state.payoffs)
        if d == depth:
            return Leaf(closure_for(sid))
        return Node(
            state.mover,
            tuple((action, build(target, d + 1)) for action, target in state.edges),
        )

    return build(graph.start, 0)


def unfold_param(
    graph: ParamGraph,
    depth: int,
    closure: Callable[[str, int], PayoffVector],
) -> FiniteGame:
    """Like ``unfold`` but tracks the stage counter; terminals are evaluated
    at their concrete stage and the closure gets (state, stage)."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    require_valid_graph(graph)

    def build(sid: str, stage: int, d: int) -> FiniteGame:
        state = graph.state(sid)
        if isinstance(state, ParamTerminal):
            return Leaf(state.payoffs.at_stage(stage))
        if d == depth:
            return Leaf(closure(sid, stage))
        return Node(
            state.mover,
            tuple(
                (action, build(target, stage + delta, d + 1))
                for action, target, delta in state.edges
            ),
        )

    return build(graph.start, 0, 0)


def zero_one_graph() -> GameGraph:
    """The alternating continue-or-leave game, compactly: two decision states
    feeding each other, each with an exit worth 1 to the opponent only."""
    return GameGraph(
        name="zero_one",
        states={
            "SA": Decision("A", (("c", "SB"), ("l", "TA"))),
            "TA": Terminal(PayoffVector(A=0, B=1)),
            "SB": Decision("B", (("c", "SA"), ("l", "TB"))),
            "TB": Terminal(PayoffVector(A=1, B=0)),
        },
        start="SA",
    )


def dollar_auction(stake: RationalLike = 100) -> ParamGraph:
    """Two-bidder auction over a prize worth ``stake``, increment 1.

    At a decision state with stage k the decider has committed k and the
    opponent k+1; quitting forfeits the committed amount and hands the
    opponent the prize minus her commitment, raising commits k+2.  The
    opening state lets the first bidder pass (nobody pays) or open at 1.
    """
    prize = as_fraction(stake)
    if prize < 2:
        raise ValueError("stake must be at least 2 for raising to stay attractive")
    zero = AffineExpr(Fraction(0))
    committed = AffineExpr(Fraction(0), Fraction(-1))
    winner = AffineExpr(prize - 1, Fraction(-1))
    return ParamGraph(
        name="dollar_auction",
        states={
            "S0": ParamDecision("A", (("pass", "T0", 0), ("bid", "DB", 0))),
            "T0": ParamTerminal(AffinePayoffs(A=zero, B=zero)),
            "DB": ParamDecision("B", (("quit", "QB", 0), ("raise", "DA", 1))),
            "QB": ParamTerminal(AffinePayoffs(A=winner, B=committed)),
            "DA": ParamDecision("A", (("quit", "QA", 0), ("raise", "DB", 1))),
            "QA": ParamTerminal(AffinePayoffs(A=committed, B=winner)),
        },
        start="S0",
    )


_LAYER_LIMIT = 4096


class StageReachability:
    """Which stage-counter values each state of a ParamGraph can be entered
    with, starting from the start state at stage 0.

    The per-stage state sets are eventually periodic (there are finitely many
    subsets of states), so the whole structure is computed exactly: a finite
    prefix of layers plus an optional repeating cycle of layers.
    """

    def __init__(self, graph: ParamGraph) -> None:
        require_valid_graph(graph)
        self._graph = graph
        layers: list[frozenset[str]] = []
        seen: dict[frozenset[str], int] = {}
        current = self._saturate(frozenset({graph.start}))
        loop_start: int | None = None
        while current:
            if current in seen:
                loop_start = seen[current]
                break
            if len(layers) >= _LAYER_LIMIT:
                raise GameError("stage reachability layer limit exceeded")
            seen[current] = len(layers)
            layers.append(current)
            current = self._saturate(self._step(current))
        self.layers = layers
        self.loop_start = loop_start
        self.period = None if loop_start is None else len(layers) - loop_start

    def _saturate(self, states: frozenset[str]) -> frozenset[str]:
        # Close under zero-delta edges: same stage.
        result = set(states)
        queue = list(states)
        while queue:
            sid = queue.pop()
            for _, target, delta in _edge_views(self._graph.states[sid]):
                if delta == 0 and target not in result:
                    result.add(target)
                    queue.append(target)
        return frozenset(result)

    def _step(self, states: frozenset[str]) -> frozenset[str]:
        # Follow delta-1 edges: next stage.
        return frozenset(
            target
            for sid in states
            for _, target, delta in _edge_views(self._graph.states[sid])
            if delta == 1
        )

    def _layer(self, k: int) -> frozenset[str]:
        if k < len(self.layers):
            return self.layers[k]
        if self.loop_start is None or self.period is None:
            return frozenset()
        return self.layers[self.loop_start + (k - self.loop_start) % self.period]

    def reachable_at(self, sid: str, k: int) -> bool:
        return sid in self._layer(k)

    def min_offset(self, sid: str) -> int | None:
        for k, layer in enumerate(self.layers):
            if sid in layer:
                return k
        return None

    def is_unbounded(self, sid: str) -> bool:
        if self.loop_start is None:
            return False
        return any(sid in self.layers[i] for i in range(self.loop_start, len(self.layers)))

    def max_offset(self, sid: str) -> int | None:
        """Largest reachable stage; None when unbounded or unreachable."""
        if self.is_unbounded(sid):
            return None
        best: int | None = None
        for k, layer in enumerate(self.layers):
            if sid in layer:
                best = k
        return best

    def least_at_least(self, sid: str, k0: int) -> int | None:
        """Smallest reachable stage >= k0 for ``sid``, or None."""
        for k in range(max(k0, 0), len(self.layers)):
            if sid in self.layers[k]:
                return k
        if self.loop_start is None or self.period is None:
            return None
        base = max(k0, self.loop_start)
        candidates = []
        for t in range(self.period):
            if sid in self.layers[self.loop_start + t]:
                offset = (t - (base - self.loop_start)) % self.period
                candidates.append(base + offset)
        return min(candidates) if candidates else None
