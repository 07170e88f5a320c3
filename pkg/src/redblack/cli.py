"""Command-line front end.

Closed-form tables use ``name:param[:param]``:

  exp:EPS                   f(t) = 1 - exp(-EPS t)
  truncated-linear:EPS:CUT  g(t) = 1 - EPS t for t < CUT, else 0
  linear:K                  f(t) = K t
  const:C                   constant C
  ratio:C                   t / (t + C)
  zero                      constant 0

A JSON array (inline or ``@file.json``) is accepted wherever a closed form is.
Exit codes: 0 success, 1 negative verdict under ``--expect``, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from redblack import equilibrium, inequality, models, simulate
from redblack.game import ConfigError, GameConfig

EXIT_OK, EXIT_REFUTED, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunSpec:
    command: str
    game: dict | None = None
    model: dict | None = None
    strategies: list[str] | None = None
    options: dict[str, Any] = field(default_factory=dict)


@dataclass
class Outcome:
    payload: dict
    csv_rows: list[list]
    table: str
    verdict: bool


def _load_json(text: str) -> Any:
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    elif not text.lstrip().startswith(("{", "[")) and Path(text).is_file():
        text = Path(text).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}") from None


def _game(args) -> GameConfig:
    if args.game is None:
        raise InputError("--game is required")
    return GameConfig.from_dict(_load_json(args.game))


def _phi(text: str) -> models.Phi:
    shape, _, param = text.partition(":")
    return models.Phi(shape, float(param) if param else 1.0)


def _model(args, cfg: GameConfig) -> models.WinProbModel:
    if args.model_json:
        return models.model_from_dict(_load_json(args.model_json))
    fam = args.model
    if fam is None:
        raise InputError("--model or --model-json is required")
    if fam == "proportional":
        return models.make_proportional_fixed_opp(_phi(args.phi), cfg.initial_fortunes, args.denominator)
    if fam == "constant":
        if args.c is None:
            raise InputError("constant model needs --c")
        return models.make_constant(args.c, cfg.n_players)
    if fam == "threshold":
        thr = args.threshold if args.threshold is not None else cfg.initial_fortunes[args.threshold_player]
        return models.make_threshold_surewin(args.threshold_player, thr, cfg.n_players)
    if fam == "exponential":
        return models.make_scaled_exponential(args.epsilon, cfg.n_players)
    raise InputError(f"unknown model family {fam!r}")


def _profile(args, cfg: GameConfig) -> list[equilibrium.Strategy]:
    names = args.strategies.split(",") if args.strategies else ["bold"] * cfg.n_players
    if len(names) != cfg.n_players:
        raise InputError(f"{len(names)} strategies given for {cfg.n_players} players")
    try:
        return [equilibrium.STRATEGIES[n](cfg) for n in names]
    except KeyError as exc:
        raise InputError(f"unknown strategy {exc}; expected one of {sorted(equilibrium.STRATEGIES)}") from None


def _player(args, cfg: GameConfig) -> int:
    if not 0 <= args.player < cfg.n_players:
        raise InputError(f"player index {args.player} out of range for {cfg.n_players} players")
    return args.player


def _table_arg(text: str, m: int | None) -> tuple[np.ndarray, inequality.ClosedForm | None]:
    if text.startswith(("[", "@", "{")):
        data = _load_json(text)
        if isinstance(data, dict):
            form = inequality.parse_form(data)
        else:
            return np.asarray(data, dtype=float), None
    else:
        form = inequality.parse_form(text)
    if m is None:
        raise InputError("--M is required with closed-form tables")
    return form.table(m), form


def _fg(args) -> tuple[np.ndarray, np.ndarray, inequality.ClosedForm | None, dict]:
    f_src, g_src = args.f, args.g
    if getattr(args, "tables", None):
        data = _load_json(args.tables)
        f_src = json.dumps(data["f"])
        g_src = json.dumps(data["g"])
    if f_src is None or g_src is None:
        raise InputError("both f and g are required")
    f, f_form = _table_arg(f_src, args.M)
    g, g_form = _table_arg(g_src, args.M)
    if f.shape != g.shape:
        raise InputError(f"f has {f.size} entries but g has {g.size}")
    resolved = {
        "f": f_form.to_dict() if f_form else f.tolist(),
        "g": g_form.to_dict() if g_form else g.tolist(),
        "M": int(f.size - 1),
    }
    return f, g, f_form, resolved


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _rows_table(header: Sequence[str], rows: list[Sequence]) -> str:
    cells = [[str(h) for h in header]] + [[_fmt(c) if isinstance(c, float) else str(c) for c in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


# commands ----------------------------------------------------------------


def cmd_validate(args, run_spec: RunSpec) -> Outcome:
    cfg = _game(args)
    model = _model(args, cfg)
    run_spec.game, run_spec.model = cfg.to_dict(), model.to_dict()
    run_spec.options = {"all_states": args.all_states}
    rep = models.validate_model(model, cfg, all_states=args.all_states)
    rows = [[v.condition, " ".join(map(str, v.bets)), " ".join(map(str, v.fortunes)), v.value, v.player] for v in rep.violations]
    header = ["condition", "bets", "fortunes", "value", "player"]
    table = f"config ok: M={cfg.total} G={cfg.goal}\nmodel ok: {rep.ok} ({rep.checked} bet vectors)\n"
    if rows:
        table += _rows_table(header, rows)
    return Outcome({"config": cfg.to_dict(), "M": cfg.total, "model": rep.to_dict()}, [header] + rows, table, rep.ok)


def cmd_check_inequality(args, run_spec: RunSpec) -> Outcome:
    f, g, f_form, resolved = _fg(args)
    run_spec.options = resolved | {"restricted": not args.unrestricted}
    f_ext = f_form if f_form is not None else None
    if args.unrestricted and f_ext is None:
        raise InputError("--unrestricted needs f as a closed form (f at negative arguments)")
    rep = inequality.check_inequality(f, g, restrict_a_le_x=not args.unrestricted, f_ext=f_ext)
    header = ["a", "x", "lhs", "rhs"]
    rows = [list(v) for v in rep.violations]
    table = f"holds: {rep.holds}  violations: {rep.n_violations}  M={rep.m}\n"
    if rows:
        table += _rows_table(header, rows[:20])
    return Outcome(rep.to_dict(limit=args.limit), [header] + rows, table, rep.holds)


def cmd_gmin(args, run_spec: RunSpec) -> Outcome:
    f, form = _table_arg(args.f, args.M)
    run_spec.options = {"f": form.to_dict() if form else f.tolist(), "M": int(f.size - 1)}
    tab = inequality.gmin(f)
    rows = [[y, float(v), int(w)] for y, (v, w) in enumerate(zip(tab.values, tab.witness))]
    payload = {"M": int(f.size - 1), "values": tab.values.tolist(), "witness": tab.witness.tolist()}
    return Outcome(payload, [["y", "g", "argmin_x"]] + rows, _rows_table(["y", "g", "argmin_x"], rows), True)


def cmd_check_equation(args, run_spec: RunSpec) -> Outcome:
    f, g, _, resolved = _fg(args)
    run_spec.options = resolved | {"tol": args.tol}
    res = inequality.check_equation(f, g, tol=args.tol)
    row = [res.max_residual, res.family.value]
    return Outcome(
        res.to_dict(),
        [["max_residual", "family"], row],
        _rows_table(["max_residual", "family"], [row]),
        res.family is not inequality.Family.NONE,
    )


def cmd_hypothesis(args, run_spec: RunSpec) -> Outcome:
    cfg = _game(args)
    model = _model(args, cfg)
    run_spec.game, run_spec.model = cfg.to_dict(), model.to_dict()
    rep = inequality.hypothesis_check(model, cfg)
    header = ["state", "player", "holds", "n_violations", "worst_a", "worst_x", "worst_lhs", "worst_rhs"]
    rows = []
    for (s, j), r in rep.contexts.items():
        w = r.worst() or ("", "", "", "")
        rows.append([" ".join(map(str, s)), j, r.holds, r.n_violations, *w])
    table = f"hypothesis holds: {rep.holds}  ({len(rep.failing())} of {len(rep.contexts)} contexts fail)\n"
    table += _rows_table(header, rows)
    return Outcome(rep.to_dict(limit=args.limit), [header] + rows, table, rep.holds)


def cmd_evaluate(args, run_spec: RunSpec) -> Outcome:
    cfg = _game(args)
    model = _model(args, cfg)
    profile = _profile(args, cfg)
    run_spec.game, run_spec.model, run_spec.strategies = cfg.to_dict(), model.to_dict(), [p.name for p in profile]
    val = equilibrium.evaluate_profile(cfg, model, profile)
    init = cfg.initial_state
    payload = {
        "initial_state": list(init),
        "q_initial": list(val.at(init)),
        "house_initial": val.house_at(init),
        "rounds_bound": val.rounds_bound,
        **val.to_dict(),
    }
    rows = list(csv.reader(io.StringIO(val.to_csv())))
    table = _rows_table(
        ["player", "win_probability"], [[j, v] for j, v in enumerate(val.at(init))] + [["house", val.house_at(init)]]
    )
    return Outcome(payload, rows, table, True)


def cmd_best_response(args, run_spec: RunSpec) -> Outcome:
    cfg = _game(args)
    model = _model(args, cfg)
    profile = _profile(args, cfg)
    j = _player(args, cfg)
    run_spec.game, run_spec.model, run_spec.strategies = cfg.to_dict(), model.to_dict(), [p.name for p in profile]
    run_spec.options = {"player": j}
    br = equilibrium.best_response(cfg, model, j, profile)
    init = cfg.initial_state
    payload = {"initial_state": list(init), "value_initial": br.value(init), **br.to_dict()}
    if init in br.policy:
        payload["optimal_bets_initial"] = br.optimal_bets(init)
    rows = list(csv.reader(io.StringIO(br.to_csv())))
    table = f"player {j} best-response value from {init}: {_fmt(br.value(init))}\n"
    if init in br.policy:
        table += _rows_table(["bet", "value"], sorted(br.action_values(init).items()))
    return Outcome(payload, rows, table, True)


def cmd_certify(args, run_spec: RunSpec) -> Outcome:
    cfg = _game(args)
    model = _model(args, cfg)
    run_spec.game, run_spec.model = cfg.to_dict(), model.to_dict()
    run_spec.options = {"tol": args.tol, "all_states": args.all_states}
    cert = equilibrium.certify_bold_nash(cfg, model, tol=args.tol, all_states=args.all_states)
    header = ["player", "bold_value", "best_response_value", "witness_state", "witness_bet", "gain"]
    rows = []
    for pc in cert.players:
        w = pc.witness
        rows.append([pc.player, pc.bold_value, pc.best_value,
                     " ".join(map(str, w.state)) if w else "", w.bet if w else "", w.gain if w else ""])
    table = f"bold profile is Nash: {cert.is_nash}  (hypothesis holds: {cert.hypothesis_holds})\n"
    table += _rows_table(header, rows)
    return Outcome(cert.to_dict(), [header] + rows, table, cert.is_nash)


def cmd_simulate(args, run_spec: RunSpec) -> Outcome:
    cfg = _game(args)
    model = _model(args, cfg)
    profile = _profile(args, cfg)
    run_spec.game, run_spec.model, run_spec.strategies = cfg.to_dict(), model.to_dict(), [p.name for p in profile]
    run_spec.options = {"runs": args.runs, "seed": args.seed, "z": args.z}
    sim = simulate.run_games(cfg, model, profile, args.runs, args.seed)
    exact = equilibrium.evaluate_profile(cfg, model, profile)
    cmp = simulate.compare_empirical(sim, exact, z=args.z)
    header = ["player", "wins", "empirical", "analytic", "bound", "pass"]
    rows = [[c.player, sim.wins[c.player], c.empirical, c.analytic, c.bound, c.passed] for c in cmp]
    table = _rows_table(header, rows)
    table += f"house wins: {sim.house_wins}  runs: {sim.runs}  mean rounds: {_fmt(sim.mean_rounds)}  seed: {sim.seed}\n"
    payload = {"simulation": sim.to_dict(), "comparison": [asdict(c) for c in cmp]}
    return Outcome(payload, [header] + rows, table, all(c.passed for c in cmp))


COMMANDS = {
    "validate": cmd_validate,
    "check-inequality": cmd_check_inequality,
    "gmin": cmd_gmin,
    "check-equation": cmd_check_equation,
    "hypothesis": cmd_hypothesis,
    "evaluate": cmd_evaluate,
    "best-response": cmd_best_response,
    "certify": cmd_certify,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="redblack", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    sub = parser.add_subparsers(dest="command", required=True)

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--format", choices=["json", "csv", "table"], default="json")
    out.add_argument("--out", help="write the report here instead of stdout")
    out.add_argument("--expect", action="store_true", help="exit 1 when the verdict is negative")

    game = argparse.ArgumentParser(add_help=False)
    game.add_argument("--game", help='inline JSON {"n":..,"fortunes":[..],"goal":..} or a path')
    game.add_argument("--model", choices=["proportional", "constant", "threshold", "exponential"])
    game.add_argument("--model-json", help="model descriptor as inline JSON or a path")
    game.add_argument("--phi", default="linear:1", help="linear:W or power:P (proportional model)")
    game.add_argument("--denominator", choices=["fortunes", "bets"], default="fortunes")
    game.add_argument("--c", type=float, help="constant win probability")
    game.add_argument("--threshold", type=int, help="sure-win stake (default: the player's initial fortune)")
    game.add_argument("--threshold-player", type=int, default=0)
    game.add_argument("--epsilon", type=float, default=0.01)

    tables = argparse.ArgumentParser(add_help=False)
    tables.add_argument("--f", help="closed form or JSON array")
    tables.add_argument("--g", help="closed form or JSON array")
    tables.add_argument("--tables", help='JSON {"f": .., "g": ..} inline or a path')
    tables.add_argument("--M", type=int, help="table domain 0..M for closed forms")

    strat = argparse.ArgumentParser(add_help=False)
    strat.add_argument("--strategies", help="comma-separated per-player strategies (bold, timid)")

    sub.add_parser("validate", parents=[out, game], help="validate a game config and model").add_argument(
        "--all-states", action="store_true", help="scan every active state as the fortune context"
    )
    p = sub.add_parser("check-inequality", parents=[out, tables], help="check the functional inequality")
    p.add_argument("--unrestricted", action="store_true", help="also scan pairs with a > x")
    p.add_argument("--limit", type=int, default=100, help="violations listed in JSON output")
    p = sub.add_parser("gmin", parents=[out], help="largest admissible g for a given f")
    p.add_argument("--f", required=True)
    p.add_argument("--M", type=int)
    p = sub.add_parser("check-equation", parents=[out, tables], help="classify solutions of the functional equation")
    p.add_argument("--tol", type=float, default=1e-9)
    p = sub.add_parser("hypothesis", parents=[out, game], help="check the inequality on every context of an instance")
    p.add_argument("--limit", type=int, default=20)
    sub.add_parser("evaluate", parents=[out, game, strat], help="exact win probabilities of a profile")
    p = sub.add_parser("best-response", parents=[out, game, strat], help="best response of one player")
    p.add_argument("--player", type=int, default=0)
    p = sub.add_parser("certify", parents=[out, game], help="certify or refute the all-bold Nash equilibrium")
    p.add_argument("--tol", type=float, default=equilibrium.NASH_TOL)
    p.add_argument("--all-states", action="store_true", help="require no improvement from every active state")
    p = sub.add_parser("simulate", parents=[out, game, strat], help="Monte Carlo play checked against exact values")
    p.add_argument("--runs", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--z", type=float, default=3.0)
    return parser


def _render(outcome: Outcome, run_spec: RunSpec, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"run_spec": asdict(run_spec), **outcome.payload}, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in outcome.csv_rows:
            w.writerow([repr(c) if isinstance(c, float) else c for c in row])
        return buf.getvalue()
    return outcome.table


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    run_spec = RunSpec(args.command)
    try:
        outcome = COMMANDS[args.command](args, run_spec)
    except (InputError, ConfigError, models.ModelError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = _render(outcome, run_spec, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.expect and not outcome.verdict:
        return EXIT_REFUTED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
