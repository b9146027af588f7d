"""Equilibrium verification on cyclic and stage-parametrized game graphs.

A stationary profile is accepted as subgame perfect when play under it
reaches a terminal from every state and no one-shot deviation (take one
alternative edge, then follow the profile again) strictly improves the
deviating mover anywhere.  On parametrized graphs the deviation inequalities
are affine in the stage counter and are required to hold at every stage the
state can actually be entered with; stages a state never sees impose no
constraint.  Profiles whose play cycles forever carry no payoff and are
rejected as not admissible rather than compared.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

from seqgames.core import (
    CapExceededError,
    FiniteGame,
    GameError,
    Leaf,
    Node,
    PayoffVector,
    ProfileError,
    TreeProfile,
)
from seqgames.finite import SpeCheck, is_spe_finite
from seqgames.graphs import (
    AffineExpr,
    AffinePayoffs,
    AnyGraph,
    Decision,
    GameGraph,
    ParamDecision,
    ParamGraph,
    ParamTerminal,
    StageReachability,
    Terminal,
    _edge_views,
    require_valid_graph,
)

DEFAULT_STATIONARY_CAP = 2**16
DEFAULT_CROSS_CHECK_DEPTH = 20


class CrossCheckError(GameError):
    """The symbolic verdict disagreed with its concrete unfolding check."""


class StationaryProfile(Mapping[str, str]):
    """One chosen action per decision state; history-independent."""

    __slots__ = ("_choices",)

    def __init__(
        self,
        choices: Mapping[str, str] | Iterable[tuple[str, str]] = (),
        **named: str,
    ) -> None:
        items: dict[str, str] = {}
        pairs = choices.items() if isinstance(choices, Mapping) else choices
        for sid, action in pairs:
            items[sid] = action
        for sid, action in named.items():
            items[sid] = action
        self._choices: tuple[tuple[str, str], ...] = tuple(sorted(items.items()))

    def __getitem__(self, sid: str) -> str:
        for state, action in self._choices:
            if state == sid:
                return action
        raise KeyError(sid)

    def __iter__(self) -> Iterator[str]:
        return iter(sid for sid, _ in self._choices)

    def __len__(self) -> int:
        return len(self._choices)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, StationaryProfile):
            return self._choices == other._choices
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._choices)

    def __repr__(self) -> str:
        inner = ", ".join(f"{sid}:{action}" for sid, action in self._choices)
        return f"StationaryProfile({inner})"

    def action_at(self, sid: str) -> str:
        try:
            return self[sid]
        except KeyError:
            raise ProfileError(f"profile not total: no choice at state {sid!r}") from None


def check_stationary_total(graph: AnyGraph, profile: StationaryProfile) -> None:
    internal = set(graph.internal_ids())
    given = set(profile)
    missing = sorted(internal - given)
    extra = sorted(given - internal)
    if missing:
        raise ProfileError(f"profile not total: no choice at state {missing[0]!r}")
    if extra:
        raise ProfileError(f"profile has a choice at non-decision state {extra[0]!r}")
    for sid in sorted(internal):
        labels = {action for action, _, _ in _edge_views(graph.states[sid])}
        if profile[sid] not in labels:
            raise ProfileError(
                f"profile chooses unknown action {profile[sid]!r} at state {sid!r}"
            )


@dataclass(frozen=True)
class Converges:
    """Play reached a terminal; payoffs are exact (or affine in the stage
    offset of the origin state, for parametrized graphs)."""

    payoffs: PayoffVector | AffinePayoffs
    steps: int

    @property
    def converged(self) -> bool:
        return True


@dataclass(frozen=True)
class Diverges:
    """Play revisited a state before any terminal; the repeating cycle."""

    cycle: tuple[str, ...]

    @property
    def converged(self) -> bool:
        return False


PlayResult = Union[Converges, Diverges]


@dataclass(frozen=True)
class SpeOk:
    """No admissibility failure and no profitable one-shot deviation."""

    ok = True

    def describe(self) -> str:
        return "SPE"


@dataclass(frozen=True)
class NotAdmissible:
    """Play under the profile never terminates from this state."""

    state: str
    cycle: tuple[str, ...]

    ok = False

    def describe(self) -> str:
        loop = " -> ".join(self.cycle + (self.cycle[0],))
        return f"not admissible: play from {self.state} cycles through {loop}"


@dataclass(frozen=True)
class Refuted:
    """A profitable one-shot deviation, with the stage it occurs at (None on
    plain graphs, where payoffs are stage-independent)."""

    state: str
    stage: int | None
    player: str
    action: str
    profile_payoffs: PayoffVector
    deviation_payoffs: PayoffVector

    ok = False

    @property
    def gain(self) -> Fraction:
        return self.deviation_payoffs[self.player] - self.profile_payoffs[self.player]

    def describe(self) -> str:
        at_stage = "" if self.stage is None else f" at stage k={self.stage}"
        return (
            f"refuted: {self.player} gains {self.gain} at {self.state}{at_stage} "
            f"by deviating to {self.action!r} "
            f"({self.deviation_payoffs[self.player]} over {self.profile_payoffs[self.player]})"
        )


SpeVerdict = Union[SpeOk, NotAdmissible, Refuted]


def _walk_states(
    graph: AnyGraph, profile: StationaryProfile, start: str
) -> tuple[list[tuple[str, int]], str | None]:
    """Follow the profile from ``start``; returns the visited (state, delta)
    path and the terminal id reached, or None when a state repeats."""
    path: list[tuple[str, int]] = []
    seen: dict[str, int] = {}
    sid = start
    while True:
        state = graph.states.get(sid)
        if state is None:
            raise GameError(f"unknown state {sid!r}")
        if isinstance(state, (Terminal, ParamTerminal)):
            return path, sid
        if sid in seen:
            return path[seen[sid]:], None
        seen[sid] = len(path)
        chosen = profile.action_at(sid)
        for action, target, delta in _edge_views(state):
            if action == chosen:
                path.append((sid, delta))
                sid = target
                break
        else:
            raise ProfileError(f"profile chooses unknown action {chosen!r} at state {sid!r}")


def play_graph(
    graph: GameGraph, profile: StationaryProfile, from_state: str | None = None
) -> PlayResult:
    """Follow chosen edges until a terminal or a repeated state.

    Terminates within ``len(graph.states) + 1`` steps.
    """
    start = graph.start if from_state is None else from_state
    path, terminal = _walk_states(graph, profile, start)
    if terminal is None:
        return Diverges(tuple(sid for sid, _ in path))
    state = graph.state(terminal)
    assert isinstance(state, Terminal)
    return Converges(state.payoffs, steps=len(path))


def play_param(
    graph: ParamGraph, profile: StationaryProfile, from_state: str | None = None
) -> PlayResult:
    """Like ``play_graph``; payoffs come back affine in the entry stage of
    the origin state (edge deltas en route shift the terminal's expressions).
    """
    start = graph.start if from_state is None else from_state
    path, terminal = _walk_states(graph, profile, start)
    if terminal is None:
        return Diverges(tuple(sid for sid, _ in path))
    state = graph.state(terminal)
    assert isinstance(state, ParamTerminal)
    total_delta = sum(delta for _, delta in path)
    return Converges(state.payoffs.shifted(total_delta), steps=len(path))


def check_spe_graph(graph: GameGraph, profile: StationaryProfile) -> SpeVerdict:
    """One-shot deviation check over every decision state of a cyclic graph.

    Admissibility first: play must converge from every state.  Then, for
    every state and alternative edge, taking that edge once and following the
    profile from its target must not strictly improve the mover.
    """
    require_valid_graph(graph)
    check_stationary_total(graph, profile)
    values: dict[str, PayoffVector] = {}
    for sid, state in graph.states.items():
        if isinstance(state, Terminal):
            values[sid] = state.payoffs
            continue
        result = play_graph(graph, profile, sid)
        if isinstance(result, Diverges):
            return NotAdmissible(sid, result.cycle)
        assert isinstance(result.payoffs, PayoffVector)
        values[sid] = result.payoffs
    for sid, state in graph.states.items():
        if not isinstance(state, Decision):
            continue
        chosen = profile[sid]
        current = values[sid]
        for action, target in state.edges:
            if action == chosen:
                continue
            deviation = values[target]
            if deviation[state.mover] > current[state.mover]:
                return Refuted(sid, None, state.mover, action, current, deviation)
    return SpeOk()


def affine_leq_all(a: AffineExpr, b: AffineExpr) -> int | None:
    """Decide ``a(k) <= b(k)`` for every k in 0, 1, 2, ...

    Returns None when the inequality holds everywhere, else the least
    violating k: 0 when the intercepts already violate it, otherwise the
    first integer past the crossing point of the two lines.
    """
    violations = _violation_interval(a, b)
    if violations is None:
        return None
    low, _ = violations
    return low


def _violation_interval(a: AffineExpr, b: AffineExpr) -> tuple[int, int | None] | None:
    """The set {k : a(k) > b(k)} as an interval of naturals.

    Returns None when empty, else (low, high) with high=None for unbounded.
    An affine difference changes sign at most once, so an interval suffices.
    """
    slope = b.slope - a.slope
    intercept = b.intercept - a.intercept  # diff(k) = intercept + slope*k; violation iff < 0
    if slope == 0:
        return (0, None) if intercept < 0 else None
    if slope > 0:
        if intercept >= 0:
            return None
        # diff < 0 exactly for k*slope < -intercept
        bound = -intercept / slope
        last = int(bound) if bound != int(bound) else int(bound) - 1
        return (0, last) if last >= 0 else None
    # slope < 0: diff eventually negative
    bound = intercept / -slope  # diff(k) < 0 iff k > bound
    first = int(bound) + 1 if bound >= 0 else 0
    return (first, None)


def _param_values(
    graph: ParamGraph, profile: StationaryProfile
) -> dict[str, AffinePayoffs] | NotAdmissible:
    values: dict[str, AffinePayoffs] = {}
    for sid, state in graph.states.items():
        if isinstance(state, ParamTerminal):
            values[sid] = state.payoffs
            continue
        result = play_param(graph, profile, sid)
        if isinstance(result, Diverges):
            return NotAdmissible(sid, result.cycle)
        assert isinstance(result.payoffs, AffinePayoffs)
        values[sid] = result.payoffs
    return values


def check_spe_param(
    graph: ParamGraph,
    profile: StationaryProfile,
    cross_check_depth: int | None = DEFAULT_CROSS_CHECK_DEPTH,
) -> SpeVerdict:
    """One-shot deviation check on a parametrized graph, exact in the stage.

    Divergence is stage-independent, so admissibility is checked on the state
    quotient.  Each deviation inequality is affine in the entry stage k of
    its state and must hold at every k the state is reachable with; the
    refutation witness is the least reachable violating stage.  Unless
    disabled, the verdict is re-validated against a concrete unfolding of
    ``cross_check_depth`` rounds solved by the finite checker.
    """
    require_valid_graph(graph)
    check_stationary_total(graph, profile)
    values = _param_values(graph, profile)
    if isinstance(values, NotAdmissible):
        return values
    reach = StageReachability(graph)
    verdict: SpeVerdict = SpeOk()
    for sid, state in graph.states.items():
        if not isinstance(state, ParamDecision):
            continue
        if reach.min_offset(sid) is None:
            continue  # never entered; no subgame constrains it
        chosen = profile[sid]
        current = values[sid]
        found: Refuted | None = None
        for action, target, delta in state.edges:
            if action == chosen:
                continue
            deviation = values[target].shifted(delta)
            witness = _least_reachable_violation(
                reach, sid, deviation[state.mover], current[state.mover]
            )
            if witness is not None:
                found = Refuted(
                    sid,
                    witness,
                    state.mover,
                    action,
                    current.at_stage(witness),
                    deviation.at_stage(witness),
                )
                break
        if found is not None:
            verdict = found
            break
    if cross_check_depth is not None:
        _cross_check(graph, profile, values, verdict, cross_check_depth)
    return verdict


def _least_reachable_violation(
    reach: StageReachability, sid: str, deviation: AffineExpr, current: AffineExpr
) -> int | None:
    """Least stage k reachable at ``sid`` with deviation(k) > current(k)."""
    interval = _violation_interval(deviation, current)
    if interval is None:
        return None
    low, high = interval
    least = reach.least_at_least(sid, low)
    if least is None:
        return None
    if high is not None and least > high:
        return None
    return least


def concrete_unfolding_check(
    graph: ParamGraph, profile: StationaryProfile, depth: int
) -> SpeCheck:
    """Check the profile on a depth-limited concrete unfolding.

    Cut states are closed with the payoff of continuing to follow the profile
    from them, so the finite game agrees with the infinite one along and off
    the profile's play.  Raises if play diverges anywhere.
    """
    require_valid_graph(graph)
    check_stationary_total(graph, profile)
    values = _param_values(graph, profile)
    if isinstance(values, NotAdmissible):
        raise GameError(values.describe())
    tree, induced, _ = _concrete_unfolding(graph, profile, values, depth)
    return is_spe_finite(tree, induced)


def _concrete_unfolding(
    graph: ParamGraph,
    profile: StationaryProfile,
    values: dict[str, AffinePayoffs],
    depth: int,
) -> tuple[FiniteGame, TreeProfile, set[tuple[str, int]]]:
    choices: dict[tuple[str, ...], str] = {}
    seen: set[tuple[str, int]] = set()

    def build(sid: str, stage: int, d: int, address: tuple[str, ...]) -> FiniteGame:
        state = graph.state(sid)
        if isinstance(state, ParamTerminal):
            return Leaf(state.payoffs.at_stage(stage))
        if d == depth:
            return Leaf(values[sid].at_stage(stage))
        seen.add((sid, stage))
        choices[address] = profile[sid]
        return Node(
            state.mover,
            tuple(
                (action, build(target, stage + delta, d + 1, address + (action,)))
                for action, target, delta in state.edges
            ),
        )

    tree = build(graph.start, 0, 0, ())
    return tree, TreeProfile(choices), seen


def _cross_check(
    graph: ParamGraph,
    profile: StationaryProfile,
    values: dict[str, AffinePayoffs],
    verdict: SpeVerdict,
    depth: int,
) -> None:
    tree, induced, seen = _concrete_unfolding(graph, profile, values, depth)
    concrete = is_spe_finite(tree, induced)
    if isinstance(verdict, SpeOk) and not concrete.ok:
        raise CrossCheckError(
            f"symbolic check accepts but depth-{depth} unfolding refutes: "
            f"{concrete.counterexample}"
        )
    if isinstance(verdict, Refuted) and (verdict.state, verdict.stage) in seen:
        if concrete.ok:
            raise CrossCheckError(
                f"symbolic check refutes at {verdict.state} (stage {verdict.stage}) "
                f"but the depth-{depth} unfolding accepts"
            )


def check_spe(
    graph: AnyGraph,
    profile: StationaryProfile,
    cross_check_depth: int | None = None,
) -> SpeVerdict:
    """Dispatch to the plain or parametrized checker."""
    if isinstance(graph, ParamGraph):
        return check_spe_param(graph, profile, cross_check_depth)
    return check_spe_graph(graph, profile)


def stationary_profiles(graph: AnyGraph) -> Iterator[StationaryProfile]:
    """All stationary profiles, lexicographic by state id, branch order."""
    internal = sorted(graph.internal_ids())
    options = [
        [action for action, _, _ in _edge_views(graph.states[sid])] for sid in internal
    ]
    for combo in itertools.product(*options):
        yield StationaryProfile(zip(internal, combo))


def stationary_profile_count(graph: AnyGraph) -> int:
    count = 1
    for sid in graph.internal_ids():
        count *= len(_edge_views(graph.states[sid]))
    return count


def enumerate_stationary_spe(
    graph: AnyGraph,
    cap: int = DEFAULT_STATIONARY_CAP,
    cross_check_depth: int | None = None,
) -> list[tuple[StationaryProfile, SpeVerdict]]:
    """Verdict for every stationary profile, in deterministic order."""
    require_valid_graph(graph)
    total = stationary_profile_count(graph)
    if total > cap:
        raise CapExceededError(f"stationary profile space {total} exceeds cap {cap}")
    return [
        (profile, check_spe(graph, profile, cross_check_depth))
        for profile in stationary_profiles(graph)
    ]


def stationary_closure(
    graph: GameGraph, profile: StationaryProfile
) -> dict[str, PayoffVector]:
    """Closure payoffs for truncation: each state's play value under the
    profile.  Raises when play diverges from any state."""
    require_valid_graph(graph)
    check_stationary_total(graph, profile)
    closure: dict[str, PayoffVector] = {}
    for sid, state in graph.states.items():
        if isinstance(state, Terminal):
            closure[sid] = state.payoffs
            continue
        result = play_graph(graph, profile, sid)
        if isinstance(result, Diverges):
            raise GameError(
                f"no closure payoff: play from {sid} diverges under the profile"
            )
        assert isinstance(result.payoffs, PayoffVector)
        closure[sid] = result.payoffs
    return closure


def induced_tree_profile(
    graph: GameGraph, profile: StationaryProfile, depth: int
) -> TreeProfile:
    """The profile's choices copied onto the depth-limited unfolding."""
    require_valid_graph(graph)
    check_stationary_total(graph, profile)
    choices: dict[tuple[str, ...], str] = {}

    def visit(sid: str, d: int, address: tuple[str, ...]) -> None:
        state = graph.state(sid)
        if isinstance(state, Terminal) or d == depth:
            return
        choices[address] = profile[sid]
        for action, target in state.edges:
            visit(target, d + 1, address + (action,))

    visit(graph.start, 0, ())
    return TreeProfile(choices)


@dataclass(frozen=True)
class AuditFinding:
    """A profitable deviation changing the profile at several states at once."""

    player: str
    changes: tuple[tuple[str, str], ...]
    from_state: str
    stage: int | None
    profile_payoff: Fraction
    deviation_payoff: Fraction


def multi_shot_audit(
    graph: AnyGraph,
    profile: StationaryProfile,
    max_changes: int = 3,
) -> tuple[AuditFinding, ...]:
    """Diagnostic: search for profitable deviations that change one player's
    choices at up to ``max_changes`` states simultaneously.

    One-shot closure does not automatically rule these out on infinite games,
    so this bounded audit gives extra confidence in accepted profiles.
    Deviations whose play diverges carry no payoff and never count as gains.
    """
    require_valid_graph(graph)
    check_stationary_total(graph, profile)
    param = isinstance(graph, ParamGraph)
    reach = StageReachability(graph) if param else None
    base_values = _param_values(graph, profile) if param else None
    if isinstance(base_values, NotAdmissible):
        raise GameError(f"cannot audit a divergent profile: {base_values.describe()}")
    if not param:
        for sid in graph.internal_ids():
            result = play_graph(graph, profile, sid)  # type: ignore[arg-type]
            if isinstance(result, Diverges):
                raise GameError(
                    f"cannot audit a divergent profile: play from {sid} cycles"
                )
    findings: list[AuditFinding] = []
    movers = sorted(
        {graph.states[sid].mover for sid in graph.internal_ids()}  # type: ignore[union-attr]
    )
    for player in movers:
        own = [
            sid
            for sid in graph.internal_ids()
            if graph.states[sid].mover == player  # type: ignore[union-attr]
        ]
        for r in range(1, max_changes + 1):
            for combo in itertools.combinations(own, r):
                alternative_lists = []
                for sid in combo:
                    labels = [
                        action
                        for action, _, _ in _edge_views(graph.states[sid])
                        if action != profile[sid]
                    ]
                    alternative_lists.append(labels)
                for picks in itertools.product(*alternative_lists):
                    changed = dict(profile)
                    changed.update(zip(combo, picks))
                    deviant = StationaryProfile(changed)
                    findings.extend(
                        _audit_one(graph, profile, deviant, player, tuple(zip(combo, picks)), reach, base_values)
                    )
    return tuple(findings)


def _audit_one(
    graph: AnyGraph,
    profile: StationaryProfile,
    deviant: StationaryProfile,
    player: str,
    changes: tuple[tuple[str, str], ...],
    reach: StageReachability | None,
    base_values,
) -> list[AuditFinding]:
    found: list[AuditFinding] = []
    for sid in graph.internal_ids():
        if isinstance(graph, ParamGraph):
            assert reach is not None and not isinstance(base_values, NotAdmissible)
            if reach.min_offset(sid) is None:
                continue
            after = play_param(graph, deviant, sid)
            if isinstance(after, Diverges):
                continue
            assert isinstance(after.payoffs, AffinePayoffs)
            witness = _least_reachable_violation(
                reach, sid, after.payoffs[player], base_values[sid][player]
            )
            if witness is not None:
                found.append(
                    AuditFinding(
                        player,
                        changes,
                        sid,
                        witness,
                        base_values[sid][player].at(witness),
                        after.payoffs[player].at(witness),
                    )
                )
        else:
            before = play_graph(graph, profile, sid)
            after = play_graph(graph, deviant, sid)
            if isinstance(before, Diverges) or isinstance(after, Diverges):
                continue
            assert isinstance(before.payoffs, PayoffVector)
            assert isinstance(after.payoffs, PayoffVector)
            if after.payoffs[player] > before.payoffs[player]:
                found.append(
                    AuditFinding(
                        player,
                        changes,
                        sid,
                        None,
                        before.payoffs[player],
                        after.payoffs[player],
                    )
                )
    return found
