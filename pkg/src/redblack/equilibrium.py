"""Exact evaluation of strategy profiles, best responses and bold-play certificates.

Everything runs over the full finite state space of an instance. Profile
values come from a sparse linear solve of the absorbing-chain equations; best
responses from value iteration on the single-player decision problem left
when the other players' stationary strategies are fixed.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from redblack.game import (
    GameConfig,
    Kind,
    State,
    action_set,
    classify_state,
    enumerate_states,
    transitions,
)
from redblack.inequality import hypothesis_check
from redblack.models import WinProbModel

VI_TOL = 1e-12
VI_MAX_SWEEPS = 10**6
NASH_TOL = 1e-9
TIE_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """The chain or decision problem does not settle: some play never ends."""


@dataclass(frozen=True)
class Strategy:
    """Stationary pure strategy: ``bet(state, j)`` returns a legal stake."""

    name: str
    bet: Callable[[State, int], int]

    def __call__(self, s: State, j: int) -> int:
        return self.bet(s, j)


def bold_strategy(cfg: GameConfig) -> Strategy:
    return Strategy("bold", lambda s, j: max(action_set(cfg, s, j)))


def timid_strategy(cfg: GameConfig) -> Strategy:
    return Strategy("timid", lambda s, j: min(action_set(cfg, s, j)))


def table_strategy(cfg: GameConfig, bets: dict[State, int], name: str = "table") -> Strategy:
    """Strategy read from a state -> stake table; unlisted states get the smallest legal stake."""

    def bet(s: State, j: int) -> int:
        if s in bets:
            return bets[s]
        return min(action_set(cfg, s, j))

    return Strategy(name, bet)


STRATEGIES = {"bold": bold_strategy, "timid": timid_strategy}


class _Space:
    """Indexed state space with absorbing classes precomputed."""

    def __init__(self, cfg: GameConfig):
        self.cfg = cfg
        self.states = enumerate_states(cfg)
        self.index = {s: i for i, s in enumerate(self.states)}
        self.classes = [classify_state(cfg, s) for s in self.states]
        self.active = [i for i, c in enumerate(self.classes) if c.kind is Kind.ACTIVE]

    def winner_mask(self, j: int) -> np.ndarray:
        return np.array([c.kind is Kind.WINNER and c.winner == j for c in self.classes])

    def dead_mask(self) -> np.ndarray:
        return np.array([c.kind is Kind.DEAD for c in self.classes])


def _profile_bets(profile: Sequence[Strategy], s: State) -> tuple[int, ...]:
    return tuple(strat(s, j) for j, strat in enumerate(profile))


@dataclass
class ProfileValue:
    """Win probability of every player from every state, plus the mass that ends with nobody winning."""

    cfg: GameConfig
    states: list[State]
    q: np.ndarray  # shape (n_players, n_states)
    house_mass: np.ndarray
    rounds_bound: int | None = None  # longest play from the initial state, None if cyclic

    def __post_init__(self):
        self._index = {s: k for k, s in enumerate(self.states)}

    def value(self, s: State, j: int) -> float:
        return float(self.q[j, self._index[tuple(s)]])

    def at(self, s: State) -> tuple[float, ...]:
        return tuple(float(v) for v in self.q[:, self._index[tuple(s)]])

    def house_at(self, s: State) -> float:
        return float(self.house_mass[self._index[tuple(s)]])

    def conservation_error(self) -> float:
        return float(np.max(np.abs(self.q.sum(axis=0) + self.house_mass - 1.0)))

    def to_dict(self) -> dict:
        return {
            "states": [list(s) for s in self.states],
            "q": self.q.tolist(),
            "house_mass": self.house_mass.tolist(),
        }

    def to_csv(self) -> str:
        n = self.cfg.n_players
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(n)] + ["class"] + [f"q{j}" for j in range(n)] + ["house"])
        for k, s in enumerate(self.states):
            cls = classify_state(self.cfg, s)
            w.writerow(list(s) + [str(cls)] + [repr(float(v)) for v in self.q[:, k]] + [repr(float(self.house_mass[k]))])
        return buf.getvalue()


def _can_reach(space: _Space, succ: dict[int, list[int]], targets: set[int]) -> set[int]:
    pred: dict[int, list[int]] = {}
    for i, outs in succ.items():
        for k in outs:
            pred.setdefault(k, []).append(i)
    seen = set(targets)
    queue = deque(targets)
    while queue:
        k = queue.popleft()
        for i in pred.get(k, ()):
            if i not in seen:
                seen.add(i)
                queue.append(i)
    return seen


def _longest_path(succ: dict[int, list[int]], start: int) -> int | None:
    """Rounds on the longest path from ``start`` to absorption, or None if a cycle is reachable."""
    depth: dict[int, int] = {}
    state: dict[int, int] = {}  # 1 = open, 2 = done
    stack = [(start, iter(succ.get(start, ())))]
    state[start] = 1
    while stack:
        i, it = stack[-1]
        k = next(it, None)
        if k is None:
            stack.pop()
            state[i] = 2
            depth[i] = max((depth[k] + 1 for k in succ.get(i, ())), default=0)
            continue
        if state.get(k) == 1:
            return None
        if k not in state:
            state[k] = 1
            stack.append((k, iter(succ.get(k, ()))))
    return depth[start]


def evaluate_profile(cfg: GameConfig, model: WinProbModel, profile: Sequence[Strategy]) -> ProfileValue:
    if len(profile) != cfg.n_players:
        raise ValueError(f"profile has {len(profile)} strategies for {cfg.n_players} players")
    space = _Space(cfg)
    n_states = len(space.states)
    pos = {i: k for k, i in enumerate(space.active)}
    rows, cols, vals = [], [], []
    rhs = np.zeros((len(space.active), cfg.n_players + 1))
    succ: dict[int, list[int]] = {}
    for i in space.active:
        s = space.states[i]
        outs = transitions(cfg, s, _profile_bets(profile, s), model)
        succ[i] = [space.index[t] for t, _ in outs]
        for t, p in outs:
            k = space.index[t]
            cls = space.classes[k]
            if cls.kind is Kind.ACTIVE:
                rows.append(pos[i])
                cols.append(pos[k])
                vals.append(p)
            elif cls.kind is Kind.WINNER:
                rhs[pos[i], cls.winner] += p
            else:
                rhs[pos[i], cfg.n_players] += p

    absorbing = {i for i in range(n_states) if space.classes[i].absorbing}
    stuck = set(space.active) - _can_reach(space, succ, absorbing)
    if stuck:
        example = space.states[min(stuck)]
        raise ConvergenceError(f"play never ends from {len(stuck)} state(s), e.g. {example}")

    q = np.zeros((cfg.n_players, n_states))
    house = np.zeros(n_states)
    for i, c in enumerate(space.classes):
        if c.kind is Kind.WINNER:
            q[c.winner, i] = 1.0
        elif c.kind is Kind.DEAD:
            house[i] = 1.0
    if space.active:
        t = len(space.active)
        mat = sp.identity(t, format="csc") - sp.csc_matrix((vals, (rows, cols)), shape=(t, t))
        sol = splu(mat).solve(rhs)
        idx = np.array(space.active)
        q[:, idx] = sol[:, : cfg.n_players].T
        house[idx] = sol[:, cfg.n_players]
    init = space.index.get(cfg.initial_state)
    bound = _longest_path(succ, init) if init is not None else None
    return ProfileValue(cfg, space.states, q, house, bound)


@dataclass
class BestResponse:
    """Optimal values and smallest-stake optimal policy of one player."""

    cfg: GameConfig
    player: int
    states: list[State]
    values: np.ndarray
    policy: dict[State, int]
    sweeps: int
    _q: dict[State, dict[int, float]] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        self._index = {s: k for k, s in enumerate(self.states)}

    def value(self, s: State) -> float:
        return float(self.values[self._index[tuple(s)]])

    def action_values(self, s: State) -> dict[int, float]:
        return dict(self._q[tuple(s)])

    def optimal_bets(self, s: State, tol: float = TIE_TOL) -> list[int]:
        qs = self._q[tuple(s)]
        best = max(qs.values())
        return sorted(a for a, v in qs.items() if v >= best - tol)

    def strategy(self) -> Strategy:
        return table_strategy(self.cfg, self.policy, name=f"best-response[{self.player}]")

    def to_dict(self) -> dict:
        return {
            "player": self.player,
            "sweeps": self.sweeps,
            "states": [list(s) for s in self.states],
            "values": self.values.tolist(),
            "policy": [{"state": list(s), "bet": a} for s, a in sorted(self.policy.items())],
        }

    def to_csv(self) -> str:
        n = self.cfg.n_players
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(n)] + ["value", "bet"])
        for k, s in enumerate(self.states):
            bet = self.policy.get(s, "")
            w.writerow(list(s) + [repr(float(self.values[k])), bet])
        return buf.getvalue()


def best_response(
    cfg: GameConfig,
    model: WinProbModel,
    j: int,
    others: Sequence[Strategy | None],
    tol: float = VI_TOL,
    max_sweeps: int = VI_MAX_SWEEPS,
) -> BestResponse:
    """Value iteration for player j with the other players' strategies fixed.

    ``others`` is a full-length profile; its entry at ``j`` is ignored.
    """
    if len(others) != cfg.n_players:
        raise ValueError(f"profile has {len(others)} entries for {cfg.n_players} players")
    space = _Space(cfg)
    n_states = len(space.states)
    rows, cols, vals = [], [], []
    sa: list[tuple[int, int]] = []  # (state index, stake) per row
    for i in space.active:
        s = space.states[i]
        bets = [0 if k == j else others[k](s, k) for k in range(cfg.n_players)]
        for a in action_set(cfg, s, j):
            bets[j] = a
            r = len(sa)
            sa.append((i, a))
            for t, p in transitions(cfg, s, bets, model):
                rows.append(r)
                cols.append(space.index[t])
                vals.append(p)
    p_sa = sp.csr_matrix((vals, (rows, cols)), shape=(len(sa), n_states))
    sa_state = np.array([i for i, _ in sa], dtype=int)
    starts = np.flatnonzero(np.r_[True, sa_state[1:] != sa_state[:-1]]) if sa else np.array([], dtype=int)
    group_state = sa_state[starts] if sa else np.array([], dtype=int)

    v = space.winner_mask(j).astype(float)
    sweeps = 0
    if sa:
        while True:
            sweeps += 1
            new = np.maximum.reduceat(p_sa @ v, starts)
            delta = float(np.max(np.abs(new - v[group_state])))
            v[group_state] = new
            if delta < tol:
                break
            if sweeps >= max_sweeps:
                raise ConvergenceError(f"value iteration did not settle within {max_sweeps} sweeps")

    q_sa = p_sa @ v if sa else np.array([])
    q: dict[State, dict[int, float]] = {}
    for r, (i, a) in enumerate(sa):
        q.setdefault(space.states[i], {})[a] = float(q_sa[r])
    policy = {}
    for s, qs in q.items():
        best = max(qs.values())
        policy[s] = min(a for a, val in qs.items() if val >= best - TIE_TOL)
    return BestResponse(cfg, j, space.states, v, policy, sweeps, q)


def _all_bold(cfg: GameConfig) -> list[Strategy]:
    return [bold_strategy(cfg)] * cfg.n_players


def one_shot_deviation_value(cfg: GameConfig, model: WinProbModel, s: State, j: int, a: int) -> float:
    """Return of staking ``a`` once against bold opponents, as the textbook bound writes it.

    Win now with F_j; if another player wins, the continuation is F_j at the
    stake vector where j holds x_j - a and everybody else still shows the
    pre-round fortune. Probabilities are evaluated in the fortune context ``s``.
    """
    s = tuple(s)
    if classify_state(cfg, s).absorbing:
        raise ValueError(f"state {s} is absorbing")
    if a not in action_set(cfg, s, j):
        raise ValueError(f"bet {a} of player {j} is not legal at {s}")
    dev = list(s)
    dev[j] = a
    p = model(tuple(dev), s)
    cont = list(s)
    cont[j] = s[j] - a
    p_cont = model(tuple(cont), s)
    others = sum(pi for i, pi in enumerate(p) if i != j)
    return p[j] + others * p_cont[j]


@dataclass
class DeviationCheck:
    state: State
    player: int
    bet: int
    formula_value: float
    dp_value: float
    continuation_active: bool

    @property
    def gap(self) -> float:
        return self.formula_value - self.dp_value


def deviation_check(
    cfg: GameConfig, model: WinProbModel, s: State, j: int, a: int, bold: ProfileValue | None = None
) -> DeviationCheck:
    """Compare the one-shot formula with the exact value of "stake a, then bold".

    ``continuation_active`` is set when every positive-probability outcome in
    which another player wins leaves an active state, so play really goes on.
    """
    s = tuple(s)
    if bold is None:
        bold = evaluate_profile(cfg, model, _all_bold(cfg))
    bets = list(s)
    bets[j] = a
    dp = sum(p * bold.value(t, j) for t, p in transitions(cfg, s, bets, model))
    probs = model(tuple(bets), s)
    stakes = sum(bets)
    continuation_active = True
    for i, p in enumerate(probs):
        if i == j or p <= 0.0:
            continue
        t = [x - b for x, b in zip(s, bets)]
        t[i] = s[i] + stakes - bets[i]
        continuation_active &= not classify_state(cfg, tuple(t)).absorbing
    return DeviationCheck(s, j, a, one_shot_deviation_value(cfg, model, s, j, a), dp, continuation_active)


@dataclass
class Witness:
    state: State
    bet: int
    gain: float


@dataclass
class PlayerCheck:
    player: int
    bold_value: float
    best_value: float
    witness: Witness | None = None
    failing_states: list[State] = field(default_factory=list)

    @property
    def improves(self) -> bool:
        return self.witness is not None


@dataclass
class Certificate:
    is_nash: bool
    players: list[PlayerCheck]
    tol: float
    all_states: bool
    hypothesis_holds: bool | None

    def to_dict(self) -> dict:
        return {
            "is_nash": self.is_nash,
            "tol": self.tol,
            "all_states": self.all_states,
            "hypothesis_holds": self.hypothesis_holds,
            "players": [
                {
                    "player": pc.player,
                    "bold_value": pc.bold_value,
                    "best_response_value": pc.best_value,
                    "witness": None
                    if pc.witness is None
                    else {"state": list(pc.witness.state), "bet": pc.witness.bet, "gain": pc.witness.gain},
                    "failing_states": [list(s) for s in pc.failing_states],
                }
                for pc in self.players
            ],
        }


def certify_bold_nash(
    cfg: GameConfig,
    model: WinProbModel,
    tol: float = NASH_TOL,
    all_states: bool = False,
    check_hypothesis: bool = True,
) -> Certificate:
    """Is all-bold a Nash equilibrium from the initial state (or every active state)?"""
    profile = _all_bold(cfg)
    bold = evaluate_profile(cfg, model, profile)
    init = cfg.initial_state
    checks = []
    for j in range(cfg.n_players):
        br = best_response(cfg, model, j, profile)
        pc = PlayerCheck(j, bold.value(init, j), br.value(init))
        if not classify_state(cfg, init).absorbing and pc.best_value > pc.bold_value + tol:
            pc.witness = Witness(init, br.policy[init], pc.best_value - pc.bold_value)
        if all_states:
            for s in br.policy:
                if br.value(s) > bold.value(s, j) + tol:
                    pc.failing_states.append(s)
                    if pc.witness is None:
                        pc.witness = Witness(s, br.policy[s], br.value(s) - bold.value(s, j))
        checks.append(pc)
    hyp = hypothesis_check(model, cfg).holds if check_hypothesis else None
    return Certificate(not any(pc.improves for pc in checks), checks, tol, all_states, hyp)
