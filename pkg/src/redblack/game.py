"""Game instances, the state space, action sets, payoffs and the law of motion.

A state is a plain tuple of integer fortunes, one per player. Players are
indexed from 0.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from redblack.models import WinProbModel

State = tuple[int, ...]

PROB_TOL = 1e-12


class ConfigError(ValueError):
    """Raised for an invalid game instance; the message names the broken condition."""


class IllegalBetError(ValueError):
    pass


class ProbabilityError(ValueError):
    """Win probabilities of a round add up to more than one."""


@dataclass(frozen=True)
class GameConfig:
    n_players: int
    initial_fortunes: tuple[int, ...]
    goal: int

    @property
    def total(self) -> int:
        return sum(self.initial_fortunes)

    @property
    def initial_state(self) -> State:
        return tuple(self.initial_fortunes)

    def to_dict(self) -> dict:
        return {"n": self.n_players, "fortunes": list(self.initial_fortunes), "goal": self.goal}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> GameConfig:
        try:
            n, fortunes, goal = data["n"], data["fortunes"], data["goal"]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"game config needs keys 'n', 'fortunes', 'goal': {exc}") from None
        return validate_config(n, fortunes, goal)

    @classmethod
    def from_json(cls, text: str) -> GameConfig:
        return cls.from_dict(json.loads(text))


def validate_config(n: int, fortunes: Sequence[int], goal: int) -> GameConfig:
    if not isinstance(n, int) or n < 2:
        raise ConfigError(f"player count must be at least 2, got {n!r}")
    fortunes = tuple(fortunes)
    if len(fortunes) != n:
        raise ConfigError(f"expected {n} initial fortunes, got {len(fortunes)}")
    for j, x in enumerate(fortunes):
        if not isinstance(x, int) or x < 1:
            raise ConfigError(f"initial fortune of player {j} must be a positive integer, got {x!r}")
    if not isinstance(goal, int) or goal < 1:
        raise ConfigError(f"goal must be a positive integer, got {goal!r}")
    total = sum(fortunes)
    if total < goal:
        raise ConfigError(f"goal condition G <= M < 2G violated: M < G ({total} < {goal})")
    if total >= 2 * goal:
        raise ConfigError(f"goal condition G <= M < 2G violated: M >= 2G ({total} >= {2 * goal})")
    return GameConfig(n, fortunes, goal)


def enumerate_states(cfg: GameConfig) -> list[State]:
    """All fortune vectors with coordinate sum at most M, in lexicographic order."""
    n, m = cfg.n_players, cfg.total
    out: list[State] = []

    def rec(prefix: list[int], left: int) -> None:
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for x in range(left + 1):
            prefix.append(x)
            rec(prefix, left - x)
            prefix.pop()

    rec([], m)
    return out


class Kind(enum.Enum):
    WINNER = "winner"
    DEAD = "dead"
    ACTIVE = "active"


@dataclass(frozen=True)
class StateClass:
    kind: Kind
    winner: int | None = None

    @property
    def absorbing(self) -> bool:
        return self.kind is not Kind.ACTIVE

    def __str__(self) -> str:
        if self.kind is Kind.WINNER:
            return f"winner({self.winner})"
        return self.kind.value


DEAD = StateClass(Kind.DEAD)
ACTIVE = StateClass(Kind.ACTIVE)


def classify_state(cfg: GameConfig, s: State) -> StateClass:
    winners = [j for j, x in enumerate(s) if x >= cfg.goal]
    if winners:
        # at most one coordinate can reach G because M < 2G
        assert len(winners) == 1, s
        return StateClass(Kind.WINNER, winners[0])
    if sum(s) < cfg.goal:
        return DEAD
    return ACTIVE


def action_set(cfg: GameConfig, s: State, j: int) -> range:
    x = s[j]
    if 1 <= x <= cfg.goal - 1:
        return range(1, x + 1)
    # x == 0 or x == G; beyond G the state is absorbing and nobody bets
    return range(0, 1)


def payoff(cfg: GameConfig, s: State, j: int) -> int:
    return int(s[j] >= cfg.goal)


def _check_bets(cfg: GameConfig, s: State, bets: Sequence[int]) -> None:
    if len(bets) != cfg.n_players:
        raise IllegalBetError(f"expected {cfg.n_players} bets, got {len(bets)}")
    for j, a in enumerate(bets):
        if a not in action_set(cfg, s, j):
            raise IllegalBetError(f"bet {a} of player {j} is not legal at state {s}")


def transitions(
    cfg: GameConfig,
    s: State,
    bets: Sequence[int],
    model: WinProbModel,
) -> list[tuple[State, float]]:
    """One-round outcome distribution from an active state.

    Player j wins with probability F_j(bets) and collects every other stake;
    with the remaining probability the house takes all stakes. Zero-probability
    outcomes are dropped and coinciding successors are merged. The result is
    sorted by successor state.
    """
    if classify_state(cfg, s).absorbing:
        raise ValueError(f"state {s} is absorbing; no further rounds are played")
    bets = tuple(bets)
    _check_bets(cfg, s, bets)
    probs = model(bets, s)
    total_p = sum(probs)
    if total_p > 1 + PROB_TOL:
        raise ProbabilityError(f"win probabilities at bets {bets} add up to {total_p} > 1")

    after = [x - a for x, a in zip(s, bets)]
    stakes = sum(bets)
    dist: dict[State, float] = {}
    for j, p in enumerate(probs):
        if p <= 0.0:
            continue
        nxt = list(after)
        nxt[j] = s[j] + stakes - bets[j]
        key = tuple(nxt)
        dist[key] = dist.get(key, 0.0) + p
    house = max(0.0, 1.0 - total_p)
    if house > 0.0:
        key = tuple(after)
        dist[key] = dist.get(key, 0.0) + house
    return sorted(dist.items())


def bold_bets(cfg: GameConfig, s: State) -> tuple[int, ...]:
    return tuple(max(action_set(cfg, s, j)) for j in range(cfg.n_players))
