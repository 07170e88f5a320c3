"""Win-probability families and their validation.

A model is called as ``model(bets, fortunes)`` and returns one win probability
per player. ``fortunes`` is the state the round is played from; families that
ignore it say so.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from redblack.game import PROB_TOL, GameConfig, State, action_set, classify_state, enumerate_states


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Phi:
    """Shape function on [0, 1] used by the proportional family.

    ``linear`` is s -> w*s (w <= 1), ``power`` is s -> s**p (p >= 1) and
    ``table`` looks exact rationals up in a finite grid.
    """

    shape: str
    param: float = 1.0
    table: Mapping[Fraction, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.shape == "linear":
            if not 0.0 <= self.param <= 1.0:
                raise ModelError(f"linear phi needs 0 <= w <= 1, got {self.param}")
        elif self.shape == "power":
            if self.param < 1.0:
                raise ModelError(f"power phi needs p >= 1, got {self.param}")
        elif self.shape == "table":
            if not self.table:
                raise ModelError("table phi needs a non-empty table")
            for k, v in self.table.items():
                if not (0 <= k <= 1 and 0.0 <= v <= 1.0):
                    raise ModelError(f"table phi entry {k} -> {v} leaves [0, 1]")
        else:
            raise ModelError(f"unknown phi shape {self.shape!r}")

    @classmethod
    def linear(cls, w: float = 1.0) -> Phi:
        return cls("linear", float(w))

    @classmethod
    def power(cls, p: float) -> Phi:
        return cls("power", float(p))

    @classmethod
    def from_function(cls, fn: Callable[[Fraction], float], max_den: int) -> Phi:
        """Tabulate ``fn`` on every fraction in [0, 1] with denominator <= max_den."""
        grid = {Fraction(k, d) for d in range(1, max_den + 1) for k in range(d + 1)}
        return cls("table", 0.0, {q: float(fn(q)) for q in sorted(grid)})

    def __call__(self, num: int, den: int) -> float:
        if self.shape == "linear":
            return self.param * num / den
        if self.shape == "power":
            return (num / den) ** self.param
        q = Fraction(num, den)
        try:
            return self.table[q]
        except KeyError:
            raise ModelError(f"table phi has no value at {q}") from None

    def to_dict(self) -> dict:
        if self.shape == "table":
            return {"shape": "table", "values": {str(k): v for k, v in self.table.items()}}
        return {"shape": self.shape, "param": self.param}

    @classmethod
    def from_dict(cls, data: Mapping) -> Phi:
        shape = data.get("shape")
        if shape == "table":
            return cls("table", 0.0, {Fraction(k): float(v) for k, v in data["values"].items()})
        return cls(shape, float(data.get("param", 1.0)))


class WinProbModel:
    """Base class; subclasses implement ``__call__`` and ``to_dict``."""

    family: str = ""

    def __call__(self, bets: Sequence[int], fortunes: Sequence[int]) -> tuple[float, ...]:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __str__(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in self.to_dict().items() if k != "family")
        return f"{self.family}({params})"


@dataclass(frozen=True)
class ProportionalModel(WinProbModel):
    """F_i = phi(a_i / (a_i + opposing money)).

    With ``denominator="fortunes"`` the opposing money is the other players'
    current fortunes (the state passed at evaluation, falling back to
    ``context`` when none is given). With ``denominator="bets"`` it is the
    other players' stakes.
    """

    phi: Phi
    context: tuple[int, ...] | None = None
    denominator: str = "fortunes"
    family = "proportional"

    def __post_init__(self):
        if self.denominator not in ("fortunes", "bets"):
            raise ModelError(f"denominator must be 'fortunes' or 'bets', got {self.denominator!r}")

    def __call__(self, bets, fortunes=None):
        if self.denominator == "bets":
            opp_src = bets
        else:
            opp_src = fortunes if fortunes is not None else self.context
            if opp_src is None:
                raise ModelError("proportional model needs a fortune context")
        total = sum(opp_src)
        out = []
        for i, a in enumerate(bets):
            opp = total - opp_src[i]
            if a == 0 or a + opp == 0:
                out.append(0.0)
            else:
                out.append(self.phi(a, a + opp))
        return tuple(out)

    def to_dict(self) -> dict:
        d = {"family": self.family, "phi": self.phi.to_dict(), "denominator": self.denominator}
        if self.context is not None:
            d["context"] = list(self.context)
        return d


@dataclass(frozen=True)
class ConstantModel(WinProbModel):
    """F_j = c whenever player j stakes something; ignores fortunes."""

    c: float
    n: int
    family = "constant"

    def __call__(self, bets, fortunes=None):
        return tuple(self.c if a >= 1 else 0.0 for a in bets)

    def to_dict(self) -> dict:
        return {"family": self.family, "c": self.c, "n": self.n}


@dataclass(frozen=True)
class ThresholdModel(WinProbModel):
    """Player ``player`` wins surely once the stake reaches ``threshold``; nobody else can win."""

    player: int
    threshold: int
    n: int
    family = "threshold"

    def __call__(self, bets, fortunes=None):
        out = [0.0] * len(bets)
        if bets[self.player] >= self.threshold:
            out[self.player] = 1.0
        return tuple(out)

    def to_dict(self) -> dict:
        return {"family": self.family, "player": self.player, "threshold": self.threshold, "n": self.n}


@dataclass(frozen=True)
class ExponentialModel(WinProbModel):
    """F_j = (1 - exp(-epsilon * a_j)) / n; ignores fortunes."""

    epsilon: float
    n: int
    family = "exponential"

    def __call__(self, bets, fortunes=None):
        return tuple(-math.expm1(-self.epsilon * a) / self.n for a in bets)

    def to_dict(self) -> dict:
        return {"family": self.family, "epsilon": self.epsilon, "n": self.n}


def make_proportional_fixed_opp(
    phi: Phi, context_fortunes: Sequence[int] | None = None, denominator: str = "fortunes"
) -> ProportionalModel:
    if context_fortunes is not None:
        context_fortunes = tuple(int(x) for x in context_fortunes)
        if any(x < 0 for x in context_fortunes):
            raise ModelError("context fortunes must be non-negative")
    return ProportionalModel(phi, context_fortunes, denominator)


def make_constant(c: float, n: int) -> ConstantModel:
    if n < 2:
        raise ModelError(f"need at least 2 players, got {n}")
    if c < 0:
        raise ModelError(f"constant probability must be non-negative, got {c}")
    if c * n > 1 + PROB_TOL:
        raise ModelError(f"total win probability {c} * {n} exceeds one")
    return ConstantModel(float(c), n)


def make_threshold_surewin(j: int, threshold: int, n: int = 2) -> ThresholdModel:
    if threshold < 1:
        raise ModelError(f"threshold must be at least 1, got {threshold}")
    if not 0 <= j < n:
        raise ModelError(f"player {j} out of range for {n} players")
    return ThresholdModel(j, int(threshold), n)


def make_scaled_exponential(epsilon: float, n: int) -> ExponentialModel:
    if epsilon <= 0:
        raise ModelError(f"epsilon must be positive, got {epsilon}")
    if n < 2:
        raise ModelError(f"need at least 2 players, got {n}")
    return ExponentialModel(float(epsilon), n)


def model_from_dict(data: Mapping) -> WinProbModel:
    family = data.get("family")
    try:
        if family == "proportional":
            phi = Phi.from_dict(data.get("phi", {"shape": "linear", "param": 1.0}))
            return make_proportional_fixed_opp(phi, data.get("context"), data.get("denominator", "fortunes"))
        if family == "constant":
            return make_constant(float(data["c"]), int(data["n"]))
        if family == "threshold":
            return make_threshold_surewin(int(data["player"]), int(data["threshold"]), int(data["n"]))
        if family == "exponential":
            return make_scaled_exponential(float(data["epsilon"]), int(data["n"]))
    except KeyError as exc:
        raise ModelError(f"{family} model descriptor is missing {exc}") from None
    raise ModelError(f"unknown model family {family!r}")


@dataclass
class Violation:
    condition: str  # "sum" or "zero-bet"
    bets: tuple[int, ...]
    fortunes: tuple[int, ...]
    value: float
    player: int | None = None


@dataclass
class ModelValidation:
    violations: list[Violation]
    checked: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checked": self.checked,
            "violations": [vars(v) | {"bets": list(v.bets), "fortunes": list(v.fortunes)} for v in self.violations],
        }


def _bet_grid(n: int, m: int):
    for bets in itertools.product(range(m + 1), repeat=n):
        if sum(bets) <= m:
            yield bets


def _scan(model, bets, fortunes, violations):
    probs = model(bets, fortunes)
    total = sum(probs)
    if total > 1 + PROB_TOL:
        violations.append(Violation("sum", bets, fortunes, total))
    for j, (a, p) in enumerate(zip(bets, probs)):
        if a == 0 and p != 0.0:
            violations.append(Violation("zero-bet", bets, fortunes, p, j))
        if not 0.0 <= p <= 1.0:
            violations.append(Violation("range", bets, fortunes, p, j))


def validate_model(model: WinProbModel, cfg: GameConfig, all_states: bool = False) -> ModelValidation:
    """Check the probability constraints exhaustively.

    By default every bet vector with sum at most M is evaluated against the
    initial fortunes. With ``all_states`` every active state is used as the
    context instead, together with every legal bet profile there.
    """
    violations: list[Violation] = []
    checked = 0
    if not all_states:
        ctx = cfg.initial_state
        for bets in _bet_grid(cfg.n_players, cfg.total):
            _scan(model, bets, ctx, violations)
            checked += 1
    else:
        for s in enumerate_states(cfg):
            if classify_state(cfg, s).absorbing:
                continue
            sets = [action_set(cfg, s, j) for j in range(cfg.n_players)]
            for bets in itertools.product(*sets):
                _scan(model, bets, s, violations)
                checked += 1
    return ModelValidation(violations, checked)


@dataclass
class FGSlice:
    f: np.ndarray
    g: np.ndarray
    state: State
    player: int


def slice_fg(model: WinProbModel, cfg: GameConfig, s: State, j: int) -> FGSlice:
    """Tabulate player j's win chance and the others' total as j's stake varies.

    Every other player stakes the whole fortune held in ``s``.
    """
    m = cfg.total
    f = np.empty(m + 1)
    g = np.empty(m + 1)
    bets = list(s)
    for t in range(m + 1):
        bets[j] = t
        probs = model(tuple(bets), s)
        f[t] = probs[j]
        g[t] = sum(p for i, p in enumerate(probs) if i != j)
    return FGSlice(f, g, tuple(s), j)
