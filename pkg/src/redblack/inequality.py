"""Checks of f(x) - f(a) >= g(a) * f(x - a) on tabulated functions.

Tables are numpy arrays indexed by 0..M. Besides the inequality check this
module builds the largest admissible g for a given f, classifies exact
solutions of the matching functional equation, and runs the whole-instance
hypothesis check for a win-probability model.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from redblack.game import GameConfig, State, classify_state, enumerate_states
from redblack.models import WinProbModel, slice_fg

VIOLATION_TOL = 1e-12


@dataclass
class InequalityReport:
    """Violations are kept as parallel arrays; ``violations`` materialises tuples."""

    m: int
    restricted: bool
    a: np.ndarray
    x: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def holds(self) -> bool:
        return self.a.size == 0

    @property
    def n_violations(self) -> int:
        return int(self.a.size)

    @property
    def violations(self) -> list[tuple[int, int, float, float]]:
        return self._rows(None)

    def _rows(self, limit: int | None) -> list[tuple[int, int, float, float]]:
        sl = slice(None, limit)
        return [
            (int(a), int(x), float(l), float(r))
            for a, x, l, r in zip(self.a[sl], self.x[sl], self.lhs[sl], self.rhs[sl])
        ]

    def find(self, a: int, x: int) -> tuple[float, float] | None:
        hit = np.flatnonzero((self.a == a) & (self.x == x))
        if hit.size == 0:
            return None
        k = hit[0]
        return float(self.lhs[k]), float(self.rhs[k])

    def worst(self) -> tuple[int, int, float, float] | None:
        if self.holds:
            return None
        k = int(np.argmax(self.rhs - self.lhs))
        return int(self.a[k]), int(self.x[k]), float(self.lhs[k]), float(self.rhs[k])

    def to_dict(self, limit: int | None = 100) -> dict:
        viol = self._rows(limit)
        return {
            "holds": self.holds,
            "M": self.m,
            "restricted": self.restricted,
            "n_violations": self.n_violations,
            "violations": [{"a": a, "x": x, "lhs": l, "rhs": r} for a, x, l, r in viol],
        }


def _as_table(t: Sequence[float] | np.ndarray) -> np.ndarray:
    return np.asarray(t, dtype=float)


def check_inequality(
    f: Sequence[float],
    g: Sequence[float],
    restrict_a_le_x: bool = True,
    f_ext: Callable[[np.ndarray], np.ndarray] | None = None,
    tol: float = VIOLATION_TOL,
) -> InequalityReport:
    """Scan every pair (a, x) of 0..M for f(x) - f(a) < g(a) f(x - a) - tol.

    When ``restrict_a_le_x`` is off, pairs with a > x are included too and
    f is needed at negative arguments; ``f_ext`` supplies it (a closed form
    evaluated elementwise).
    """
    f, g = _as_table(f), _as_table(g)
    if f.shape != g.shape or f.ndim != 1:
        raise ValueError(f"f and g tables must have equal length, got {f.shape} and {g.shape}")
    m = f.size - 1
    a, x = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
    if restrict_a_le_x:
        keep = a <= x
        a, x = a[keep], x[keep]
    else:
        if f_ext is None:
            raise ValueError("checking pairs with a > x needs f at negative arguments (f_ext)")
        a, x = a.ravel(), x.ravel()
    d = x - a
    f_d = np.empty(d.shape, dtype=float)
    pos = d >= 0
    f_d[pos] = f[d[pos]]
    if not pos.all():
        f_d[~pos] = np.asarray(f_ext(d[~pos]), dtype=float)
    lhs = f[x] - f[a]
    rhs = g[a] * f_d
    bad = lhs < rhs - tol
    # lexicographic (a, x) order
    order = np.lexsort((x[bad], a[bad]))
    return InequalityReport(
        m, restrict_a_le_x, a[bad][order], x[bad][order], lhs[bad][order], rhs[bad][order]
    )


@dataclass
class GminTable:
    """Largest g compatible with f, on y = 0..M-1; ``witness[y]`` is the minimising x."""

    values: np.ndarray
    witness: np.ndarray
    f: np.ndarray

    def as_g(self, last: float = 0.0) -> np.ndarray:
        """Full-length table usable as g; the entry at y = M has no constraint."""
        return np.append(self.values, last)


def gmin(f: Sequence[float]) -> GminTable:
    f = _as_table(f)
    m = f.size - 1
    if m < 1:
        raise ValueError("f needs at least two entries")
    if np.any(f[1:] <= 0):
        bad = int(np.flatnonzero(f[1:] <= 0)[0]) + 1
        raise ValueError(f"f must be positive on 1..M; f[{bad}] = {f[bad]}")
    y = np.arange(m)[:, None]
    x = np.arange(m + 1)[None, :]
    d = x - y
    valid = d >= 1
    ratio = np.full((m, m + 1), np.inf)
    ratio[valid] = (f[np.broadcast_to(x, d.shape)[valid]] - f[np.broadcast_to(y, d.shape)[valid]]) / f[d[valid]]
    witness = np.argmin(ratio, axis=1)
    return GminTable(ratio[np.arange(m), witness], witness, f)


class Family(enum.Enum):
    G_ZERO_F_CONSTANT = "g-zero-f-constant"
    F_ZERO = "f-zero"
    LINEAR_F_G_ONE = "linear-f-g-one"
    NONE = "none"


@dataclass
class EquationClassification:
    max_residual: float
    family: Family

    def to_dict(self) -> dict:
        return {"max_residual": self.max_residual, "family": self.family.value}


def equation_residual(f: Sequence[float], g: Sequence[float]) -> float:
    f, g = _as_table(f), _as_table(g)
    m = f.size - 1
    a, x = np.triu_indices(m + 1)
    return float(np.max(np.abs(f[x] - f[a] - g[a] * f[x - a])))


def check_equation(f: Sequence[float], g: Sequence[float], tol: float = 1e-9) -> EquationClassification:
    f, g = _as_table(f), _as_table(g)
    if f.shape != g.shape:
        raise ValueError("f and g tables must have equal length")
    res = equation_residual(f, g)
    family = Family.NONE
    if res <= tol:
        t = np.arange(f.size)
        if np.all(np.abs(f) <= tol):
            family = Family.F_ZERO
        elif np.all(np.abs(g) <= tol) and np.ptp(f) <= tol:
            family = Family.G_ZERO_F_CONSTANT
        elif np.all(np.abs(g - 1) <= tol) and np.all(np.abs(f - f[1] * t) <= tol):
            family = Family.LINEAR_F_G_ONE
    return EquationClassification(res, family)


@dataclass
class HypothesisReport:
    """Inequality reports for every (active state, player) context of an instance."""

    contexts: dict[tuple[State, int], InequalityReport] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.contexts.values())

    def failing(self) -> list[tuple[State, int]]:
        return [k for k, r in self.contexts.items() if not r.holds]

    def find(self, a: int, x: int) -> list[tuple[State, int, float, float]]:
        """Every context that records a violation at the pair (a, x)."""
        out = []
        for (s, j), r in self.contexts.items():
            hit = r.find(a, x)
            if hit is not None:
                out.append((s, j, *hit))
        return out

    def to_dict(self, limit: int | None = 20) -> dict:
        return {
            "holds": self.holds,
            "n_contexts": len(self.contexts),
            "n_failing": len(self.failing()),
            "contexts": [
                {"state": list(s), "player": j, **r.to_dict(limit)} for (s, j), r in self.contexts.items()
            ],
        }


def hypothesis_check(model: WinProbModel, cfg: GameConfig) -> HypothesisReport:
    report = HypothesisReport()
    for s in enumerate_states(cfg):
        if classify_state(cfg, s).absorbing:
            continue
        for j in range(cfg.n_players):
            sl = slice_fg(model, cfg, s, j)
            report.contexts[(s, j)] = check_inequality(sl.f, sl.g)
    return report


# closed forms -------------------------------------------------------------


@dataclass(frozen=True)
class ClosedForm:
    """A named function of an integer argument that can be tabulated on 0..M."""

    form: str
    params: tuple[float, ...] = ()

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.form == "exp":
            return -np.expm1(-p[0] * t)
        if self.form == "truncated-linear":
            eps, cutoff = p
            return np.where(t < cutoff, 1.0 - eps * t, 0.0)
        if self.form == "linear":
            return p[0] * t
        if self.form == "const":
            return np.full(t.shape, p[0])
        if self.form == "zero":
            return np.zeros(t.shape)
        if self.form == "ratio":
            # t / (t + c)
            return t / (t + p[0])
        raise ValueError(f"unknown closed form {self.form!r}")

    def table(self, m: int) -> np.ndarray:
        return self(np.arange(m + 1))

    def to_dict(self) -> dict:
        return {"form": self.form, **dict(zip(_PARAMS[self.form], self.params))}


_PARAMS = {
    "exp": ("epsilon",),
    "truncated-linear": ("epsilon", "cutoff"),
    "linear": ("slope",),
    "const": ("value",),
    "ratio": ("offset",),
    "zero": (),
}


def parse_form(descriptor: str | Mapping) -> ClosedForm:
    """Parse ``name:param[:param]`` or ``{"form": name, ...}`` into a ClosedForm."""
    if isinstance(descriptor, Mapping):
        form = descriptor.get("form")
        if form not in _PARAMS:
            raise ValueError(f"unknown closed form {form!r}")
        try:
            return ClosedForm(form, tuple(float(descriptor[k]) for k in _PARAMS[form]))
        except KeyError as exc:
            raise ValueError(f"closed form {form!r} is missing parameter {exc}") from None
    name, *params = descriptor.split(":")
    if name not in _PARAMS:
        raise ValueError(f"unknown closed form {name!r}; expected one of {sorted(_PARAMS)}")
    if len(params) != len(_PARAMS[name]):
        raise ValueError(f"closed form {name!r} takes {len(_PARAMS[name])} parameter(s), got {len(params)}")
    return ClosedForm(name, tuple(float(p) for p in params))


def example_exp_pair(epsilon: float = 0.01, cutoff: int = 100) -> tuple[ClosedForm, ClosedForm]:
    """Exponential f with its truncated-linear companion g."""
    return ClosedForm("exp", (epsilon,)), ClosedForm("truncated-linear", (epsilon, float(cutoff)))
