"""Seeded Monte Carlo play of the game and comparison with exact values.

Runs are grouped in fixed blocks of ``BLOCK`` consecutive run indices. Block
``b`` draws from ``Generator(Philox(SeedSequence(seed, spawn_key=(b,))))`` and
takes one uniform per run per round, whether or not the run is still going.
A run's randomness therefore depends only on (seed, run index), whatever the
number of runs or the order in which blocks are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from redblack.equilibrium import ProfileValue, Strategy, _profile_bets
from redblack.game import GameConfig, Kind, classify_state, enumerate_states, transitions
from redblack.models import WinProbModel

BLOCK = 1024
ROUND_CAP = 10**7
DEGENERATE_TOL = 1e-12


@dataclass
class SimReport:
    runs: int
    wins: list[int]
    house_wins: int
    mean_rounds: float
    seed: int

    @property
    def empirical_probs(self) -> list[float]:
        return [w / self.runs for w in self.wins]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["empirical_probs"] = self.empirical_probs
        return d


class _Chain:
    """Padded successor tables of the profile's Markov chain."""

    def __init__(self, cfg: GameConfig, model: WinProbModel, profile: Sequence[Strategy]):
        states = enumerate_states(cfg)
        self.states = states
        index = {s: i for i, s in enumerate(states)}
        width = cfg.n_players + 1
        self.succ = np.tile(np.arange(len(states))[:, None], (1, width))
        self.cum = np.ones((len(states), width))
        self.active = np.zeros(len(states), dtype=bool)
        self.money = np.array([sum(s) for s in states])
        self.winner = np.full(len(states), -1)
        for i, s in enumerate(states):
            cls = classify_state(cfg, s)
            if cls.kind is Kind.WINNER:
                self.winner[i] = cls.winner
            if cls.absorbing:
                continue
            self.active[i] = True
            outs = transitions(cfg, s, _profile_bets(profile, s), model)
            c = np.cumsum([p for _, p in outs])
            k = len(outs)
            self.succ[i, :k] = [index[t] for t, _ in outs]
            self.succ[i, k:] = index[outs[-1][0]]
            self.cum[i, :k] = c
            self.cum[i, k - 1 :] = np.inf  # rounding in the cumulative sum never escapes the row
        self.start = index[cfg.initial_state]


def _run_block(chain: _Chain, rng: np.random.Generator, size: int, debug: bool) -> tuple[np.ndarray, np.ndarray]:
    pos = np.full(size, chain.start)
    rounds = np.zeros(size, dtype=np.int64)
    r = 0
    while True:
        live = chain.active[pos]
        if not live.any():
            break
        if r >= ROUND_CAP:
            raise RuntimeError(f"a game exceeded {ROUND_CAP} rounds; the profile never absorbs")
        u = rng.random(BLOCK)[:size]
        idx = np.flatnonzero(live)
        k = (u[idx, None] >= chain.cum[pos[idx]]).sum(axis=1)
        nxt = chain.succ[pos[idx], k]
        if debug:
            assert np.all(chain.money[nxt] <= chain.money[pos[idx]]), "total money increased"
        pos[idx] = nxt
        rounds[idx] += 1
        r += 1
    return pos, rounds


def run_games(
    cfg: GameConfig,
    model: WinProbModel,
    profile: Sequence[Strategy],
    runs: int,
    seed: int,
    debug: bool = False,
) -> SimReport:
    if runs < 1:
        raise ValueError("runs must be at least 1")
    chain = _Chain(cfg, model, profile)
    wins = np.zeros(cfg.n_players, dtype=np.int64)
    house = 0
    total_rounds = 0
    for b in range(math.ceil(runs / BLOCK)):
        size = min(BLOCK, runs - b * BLOCK)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(b,))))
        final, rounds = _run_block(chain, rng, size, debug)
        w = chain.winner[final]
        wins += np.bincount(w[w >= 0], minlength=cfg.n_players)
        house += int(np.sum(w < 0))
        total_rounds += int(rounds.sum())
    return SimReport(runs, [int(x) for x in wins], house, total_rounds / runs, seed)


@dataclass
class Comparison:
    player: int
    empirical: float
    analytic: float
    bound: float
    passed: bool


def compare_empirical(sim: SimReport, analytic: ProfileValue | Sequence[float], z: float = 3.0) -> list[Comparison]:
    """Per-player check |empirical - analytic| <= z * standard error.

    ``analytic`` is either the profile value (read at the initial state) or
    the per-player probabilities directly. Analytic values of exactly 0 or 1
    require an exact match.
    """
    if isinstance(analytic, ProfileValue):
        values = analytic.at(analytic.cfg.initial_state)
    else:
        values = tuple(float(v) for v in analytic)
    out = []
    for j, (emp, p) in enumerate(zip(sim.empirical_probs, values)):
        if p <= DEGENERATE_TOL or p >= 1.0 - DEGENERATE_TOL:
            p = round(p)
            out.append(Comparison(j, emp, p, 0.0, emp == p))
            continue
        bound = z * math.sqrt(p * (1.0 - p) / sim.runs)
        out.append(Comparison(j, emp, p, bound, abs(emp - p) <= bound))
    return out
