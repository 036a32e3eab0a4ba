"""Operator command line.

Seven subcommands cover the training and evaluation workflows:

* ``train-single`` — Q-learning against one scripted CPU level,
* ``train-pop`` — population self-play (``--algo ippo|2timescale|fsp|psro|league``),
* ``tournament`` — round-robin Elo over checkpoints and CPU levels,
* ``exploit`` — exploitability of a checkpoint (exact or learned exploiter),
* ``ladder`` — curriculum training across the CPU ladder,
* ``replay`` — re-simulate a recorded match and report the outcome,
* ``serve-play`` — live human-versus-agent play service.

Every command writes its artifacts into a fresh run directory under the runs
root (``$ARENALADDER_RUNS`` or ``./runs``) and prints the manifest path as its
last line.  Exit status 0 = success, 1 = runtime failure, 2 = usage error;
failures print a single diagnostic line to stderr.

Options resolve as defaults < config file < flags.  The ``--config`` file is
an INI with one flat section per module: ``[engine]`` (EngineConfig fields),
``[learn]`` (LearnConfig fields), ``[league]`` (LeagueConfig fields) and
``[cli]``, whose keys equal the long flag names with dashes as underscores.
"""

from __future__ import annotations

import argparse
import csv
import sys
from configparser import ConfigParser, Error as IniError
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

from .engine import EngineConfig
from .errors import ArenaLadderError, ConfigError, UsageError
from .eval import exploitability, full_game_train, run_tournament
from .league import LeagueConfig, run_league
from .learn import LearnConfig, independent_learn, rl_best_response
from .match import replay_match
from .metagame import exact_br, learned_br, population_loop
from .policy import CPU_LEVELS, PolicyId, ScriptedCPU, TabularPolicy
from .rngutil import derive_seed, make_rng
from .store import (
    _engine_overrides,
    load_policy,
    load_replay,
    new_run,
    save_manifest,
    save_payoff,
    save_policy,
)

ALGOS = ("ippo", "2timescale", "fsp", "psro", "league")
SIDES = ("left", "right")


class _CliError(Exception):
    """A bad invocation; dispatch turns it into exit status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _CliError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# flag table (every flag has a [cli] config-file equivalent via its dest)

@dataclass(frozen=True)
class _Opt:
    flag: str
    kind: type | str  # int | float | str | "int-list" | "str-list"
    default: object
    help: str
    choices: tuple | None = None
    required: bool = False

    @property
    def dest(self) -> str:
        return self.flag.lstrip("-").replace("-", "_")


_COMMON = (
    _Opt("--config", str, None, "INI file with [engine]/[learn]/[league]/[cli] sections"),
    _Opt("--seed", int, 0, "root seed; equal seeds reproduce every artifact"),
    _Opt("--workers", int, None, "match-simulation fan-out (default: all cores)"),
)

_COMMANDS: dict[str, tuple[str, tuple[_Opt, ...]]] = {
    "train-single": (
        "Q-learning against one scripted CPU level",
        (
            _Opt("--level", int, 3, "CPU difficulty level", choices=CPU_LEVELS),
            _Opt("--steps", int, None, "training budget (default: [learn] budget_steps)"),
            _Opt("--side", str, "left", "side the learner plays", choices=SIDES),
            _Opt("--eval-matches", int, 200, "evaluation games for the final policy"),
        ),
    ),
    "train-pop": (
        "population self-play training",
        (
            _Opt("--algo", str, None, "population algorithm", choices=ALGOS, required=True),
            _Opt("--iters", int, 6, "iterations (population growth steps or league cycles)"),
            _Opt("--steps", int, None, "per-response training budget"),
            _Opt("--matches", int, 64, "games per payoff-matrix pair"),
            _Opt("--br", str, "learned", "best-response oracle for fsp/psro",
                 choices=("learned", "exact")),
            _Opt("--eval-matches", int, 200, "evaluation games per learned response"),
            _Opt("--step-ratio", float, 0.1, "slow-side step-size ratio for 2timescale"),
        ),
    ),
    "tournament": (
        "round-robin Elo tournament",
        (
            _Opt("--ckpt", "str-list", (), "policy checkpoint files (one or more)"),
            _Opt("--cpu", "int-list", (), "scripted CPU level entrants (one or more)"),
            _Opt("--rounds", int, 2, "round-robin rounds (both orderings per round)"),
            _Opt("--k", float, 32.0, "Elo K-factor"),
        ),
    ),
    "exploit": (
        "exploitability of a checkpoint",
        (
            _Opt("--target", str, None, "policy checkpoint to attack", required=True),
            _Opt("--side", str, "left", "side the target plays", choices=SIDES),
            _Opt("--method", str, "exact", "exploiter kind", choices=("exact", "rl")),
            _Opt("--matches", int, 400, "evaluation games per window (rl method)"),
            _Opt("--windows", int, 6, "training windows (rl method)"),
            _Opt("--steps", int, None, "exploiter budget (rl method)"),
            _Opt("--max-entries", int, None, "state-space cap for the exact oracle"),
        ),
    ),
    "ladder": (
        "curriculum training across the CPU ladder",
        (
            _Opt("--levels", "int-list", CPU_LEVELS, "CPU levels in the curriculum"),
            _Opt("--epochs", int, 4, "reschedule-and-train epochs"),
            _Opt("--steps", int, None, "training budget per epoch"),
            _Opt("--eval-matches", int, 100, "evaluation games per level per epoch"),
            _Opt("--side", str, "left", "side the learner plays", choices=SIDES),
        ),
    ),
    "replay": (
        "re-simulate a recorded match",
        (
            _Opt("--file", str, None, "replay file to verify", required=True),
        ),
    ),
    "serve-play": (
        "live human-versus-agent play service",
        (
            _Opt("--checkpoint", str, None, "agent policy checkpoint", required=True),
            _Opt("--human-side", str, "left", "side the human controls", choices=SIDES),
            _Opt("--tick-rate", int, 8, "engine steps per second (1..30)"),
            _Opt("--host", str, "127.0.0.1", "bind address"),
            _Opt("--port", int, 8000, "bind port"),
            _Opt("--assets", str, None, "static directory with the browser client"),
        ),
    ),
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="arenaladder", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, (summary, opts) in _COMMANDS.items():
        cmd = sub.add_parser(name, help=summary, description=summary)
        for opt in _COMMON + opts:
            kwargs: dict = {"help": opt.help, "default": None, "dest": opt.dest}
            if opt.kind == "int-list":
                kwargs.update(type=int, nargs="+")
            elif opt.kind == "str-list":
                kwargs.update(type=str, nargs="+")
            else:
                kwargs.update(type=opt.kind)
            if opt.choices is not None:
                kwargs["choices"] = opt.choices
            cmd.add_argument(opt.flag, **kwargs)
    return parser


# ---------------------------------------------------------------------------
# config-file merging: defaults < file < flags

def _parse_file_value(opt: _Opt, raw: str):
    try:
        if opt.kind == "int-list":
            return tuple(int(tok) for tok in raw.replace(",", " ").split())
        if opt.kind == "str-list":
            return tuple(raw.replace(",", " ").split())
        value = opt.kind(raw)
    except ValueError:
        raise ConfigError(f"bad value for [cli] {opt.dest}: {raw!r}") from None
    if opt.choices is not None and value not in opt.choices:
        raise ConfigError(
            f"[cli] {opt.dest} must be one of {', '.join(map(str, opt.choices))}"
        )
    return value


def _resolve_options(ns: argparse.Namespace, parser_file: ConfigParser) -> None:
    file_cli = dict(parser_file.items("cli")) if parser_file.has_section("cli") else {}
    known = {opt.dest for opts in ([_COMMON] + [o for _, o in _COMMANDS.values()])
             for opt in opts}
    for key in file_cli:
        if key not in known:
            raise ConfigError(f"unknown [cli] key {key!r}")
    for opt in _COMMON + _COMMANDS[ns.command][1]:
        if getattr(ns, opt.dest, None) is not None:
            continue
        if opt.dest in file_cli:
            setattr(ns, opt.dest, _parse_file_value(opt, file_cli[opt.dest]))
        elif opt.required:
            raise UsageError(f"missing required option --{opt.dest.replace('_', '-')}")
        else:
            setattr(ns, opt.dest, opt.default)


def _section_overrides(parser_file: ConfigParser, section: str, cls) -> dict:
    if not parser_file.has_section(section):
        return {}
    from dataclasses import fields

    by_name = {f.name: f for f in fields(cls)}
    out: dict = {}
    for key, raw in parser_file.items(section):
        if key not in by_name:
            raise ConfigError(f"unknown [{section}] key {key!r}")
        default = by_name[key].default
        try:
            if isinstance(default, bool):
                out[key] = parser_file.getboolean(section, key)
            elif isinstance(default, int):
                out[key] = int(raw)
            elif isinstance(default, float):
                out[key] = float(raw)
            elif isinstance(default, Fraction):
                out[key] = Fraction(raw)
            elif isinstance(default, str):
                out[key] = raw
            else:
                raise ConfigError(f"[{section}] {key} cannot be set from a file")
        except ValueError:
            raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from None
    return out


@dataclass(frozen=True)
class _Invocation:
    config: EngineConfig
    lc: LearnConfig
    league_config: LeagueConfig
    seed: int
    workers: int | None


def _load_invocation(ns: argparse.Namespace) -> _Invocation:
    parser_file = ConfigParser()
    if ns.config is not None:
        try:
            with open(ns.config, encoding="utf-8") as handle:
                parser_file.read_file(handle)
        except IniError as err:
            raise ConfigError(f"{ns.config}: {err}") from None
    _resolve_options(ns, parser_file)
    config = EngineConfig(**_engine_overrides(parser_file))
    lc = LearnConfig(**_section_overrides(parser_file, "learn", LearnConfig))
    league_config = LeagueConfig(
        **_section_overrides(parser_file, "league", LeagueConfig))
    return _Invocation(config, lc, league_config, ns.seed, ns.workers)


# ---------------------------------------------------------------------------
# artifact helpers

def _write_csv(path: Path, header: tuple[str, ...], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _finish(manifest, run_dir: Path, *relpaths: str) -> Path:
    for rel in relpaths:
        manifest.add_artifact(run_dir, rel)
    return save_manifest(run_dir, manifest)


def _checkpoint(run_dir: Path, ident: PolicyId, policy, config: EngineConfig) -> str | None:
    if not isinstance(policy, TabularPolicy):
        return None  # exact responders are belief-indexed; only the payoff persists
    rel = f"policies/{ident.name}.ckpt"
    save_policy(run_dir / rel, policy, config, ident)
    return rel


def _budget(ns, inv: _Invocation) -> int:
    return ns.steps if ns.steps is not None else inv.lc.budget_steps


# ---------------------------------------------------------------------------
# command handlers (each returns the saved manifest path)

def _cmd_train_single(ns, inv: _Invocation) -> Path:
    opponent = ScriptedCPU(ns.level)
    lc = replace(inv.lc, budget_steps=_budget(ns, inv), seed=derive_seed(ns.seed, 1))
    curve: list[list[str]] = []
    manifest, run_dir = new_run("train-single", ns.seed, inv.config)
    found = rl_best_response(
        inv.config, opponent, ns.side, lc,
        eval_matches=ns.eval_matches,
        diagnostics=lambda line: curve.append(line.split()),
    )
    ident = PolicyId(f"single-vs-cpu{ns.level}", side=ns.side)
    rel = _checkpoint(run_dir, ident, found.policy, inv.config)
    _write_csv(run_dir / "curve.csv", ("episode", "return", "table_change"), curve)
    print(f"win_prob={float(found.win_prob):.12g} value={float(found.value):.12g} "
          f"states={found.states}")
    return _finish(manifest, run_dir, rel, "curve.csv")


def _cmd_train_pop(ns, inv: _Invocation) -> Path:
    manifest, run_dir = new_run(f"train-pop-{ns.algo}", ns.seed, inv.config)
    rng = make_rng(ns.seed, 0)
    artifacts: list[str] = []
    if ns.algo in ("ippo", "2timescale"):
        ratio = 1.0 if ns.algo == "ippo" else ns.step_ratio
        lc_left = replace(inv.lc, budget_steps=_budget(ns, inv),
                          seed=derive_seed(ns.seed, 1))
        lc_right = replace(lc_left, seed=derive_seed(ns.seed, 2), step_ratio=ratio)
        outcome = independent_learn(inv.config, lc_left, lc_right)
        for side, policy in (("left", outcome.left), ("right", outcome.right)):
            rel = _checkpoint(run_dir, PolicyId(f"{ns.algo}_{side}", side=side),
                              policy, inv.config)
            artifacts.append(rel)
        rows = [(i, f"{l:.6f}", f"{r:.6f}") for i, (l, r) in enumerate(
            zip(outcome.change_left, outcome.change_right))]
        _write_csv(run_dir / "curves.csv",
                   ("episode", "change_left", "change_right"), rows)
        artifacts.append("curves.csv")
    elif ns.algo in ("fsp", "psro"):
        if ns.br == "exact":
            br = exact_br()
        else:
            br = learned_br(replace(inv.lc, budget_steps=_budget(ns, inv)),
                            eval_matches=ns.eval_matches)
        uniform = TabularPolicy.uniform(inv.config)
        result = population_loop(
            ns.algo, ns.iters, br, inv.config, rng,
            initial=(uniform, uniform), matches_per_pair=ns.matches,
            workers=ns.workers,
        )
        save_payoff(run_dir / "payoff.csv", result.payoff, inv.config)
        artifacts.append("payoff.csv")
        for ident, policy in result.mu + result.nu:
            rel = _checkpoint(run_dir, ident, policy, inv.config)
            if rel is not None:
                artifacts.append(rel)
        meta_rows = [
            (side, i, f"{float(w):.12g}")
            for side, meta in (("left", result.meta_mu), ("right", result.meta_nu))
            for i, w in enumerate(meta.weights)
        ]
        _write_csv(run_dir / "meta.csv", ("side", "member", "weight"), meta_rows)
        artifacts.append("meta.csv")
    else:  # league
        result = run_league(
            ns.iters, _budget(ns, inv), inv.config, rng,
            league_config=inv.league_config,
            lc=replace(inv.lc, budget_steps=0),
            matches_per_pair=ns.matches, workers=ns.workers,
        )
        save_payoff(run_dir / "payoff.csv", result.payoff, inv.config)
        artifacts.append("payoff.csv")
        for side in SIDES:
            for ident, policy in result.roster.history(side):
                rel = _checkpoint(run_dir, ident, policy, inv.config)
                if rel is not None:
                    artifacts.append(rel)
        _write_csv(run_dir / "resets.csv", ("cycle", "side"), result.resets)
        artifacts.append("resets.csv")
    return _finish(manifest, run_dir, *artifacts)


def _load_entrants(ns, config: EngineConfig) -> list:
    entrants: list = []
    for path in ns.ckpt:
        ident, policy = load_policy(path, config)
        entrants.append((ident, policy))
    for level in ns.cpu:
        entrants.append((PolicyId(f"cpu{level}"), ScriptedCPU(level)))
    if len(entrants) < 2:
        raise UsageError("a tournament needs at least two entrants "
                         "(--ckpt and/or --cpu)")
    return entrants


def _cmd_tournament(ns, inv: _Invocation) -> Path:
    entrants = _load_entrants(ns, inv.config)
    manifest, run_dir = new_run("tournament", ns.seed, inv.config)
    table = run_tournament(entrants, ns.rounds, ns.k, inv.config,
                           make_rng(ns.seed, 0), workers=ns.workers)
    standings = table.standings()
    _write_csv(
        run_dir / "standings.csv",
        ("name", "side", "checkpoint", "elo", "matches"),
        [(i.name, i.side, i.checkpoint, f"{elo:.12g}", n)
         for i, elo, n in standings],
    )
    _write_csv(
        run_dir / "rating_history.csv",
        ("a", "b", "outcome", "pre_a", "pre_b", "post_a", "post_b"),
        [(u.a.name, u.b.name, u.outcome,
          f"{u.pre[0]:.12g}", f"{u.pre[1]:.12g}",
          f"{u.post[0]:.12g}", f"{u.post[1]:.12g}")
         for u in table.history],
    )
    for ident, elo, n in standings:
        print(f"{ident.name} elo={elo:.12g} matches={n}")
    return _finish(manifest, run_dir, "standings.csv", "rating_history.csv")


def _cmd_exploit(ns, inv: _Invocation) -> Path:
    ident, policy = load_policy(ns.target, inv.config)
    lc = replace(inv.lc, budget_steps=_budget(ns, inv), seed=derive_seed(ns.seed, 1))
    manifest, run_dir = new_run("exploit", ns.seed, inv.config)
    report = exploitability(
        (ident, policy), ns.side, ns.method, lc, inv.config,
        matches=ns.matches, windows=ns.windows, max_entries=ns.max_entries,
    )
    lines = [
        f"target: {report.target.name} (side={report.side}, "
        f"checkpoint={report.target.checkpoint})",
        f"method: {report.method}",
        f"exploit_winrate: {report.exploit_winrate} "
        f"(= {float(report.exploit_winrate):.12g})",
        f"exploit_gap: {report.exploit_gap} (= {float(report.exploit_gap):.12g})",
        f"matches: {report.matches}",
        f"stderr: {float(report.stderr):.12g}",
    ]
    for line in lines:
        print(line)
    (run_dir / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return _finish(manifest, run_dir, "report.txt")


def _cmd_ladder(ns, inv: _Invocation) -> Path:
    levels = tuple(ns.levels)
    lc = replace(inv.lc, budget_steps=_budget(ns, inv), seed=derive_seed(ns.seed, 1))
    manifest, run_dir = new_run("ladder", ns.seed, inv.config)
    policy, curves, schedules = full_game_train(
        levels, lc, ns.epochs, ns.eval_matches, inv.config,
        make_rng(ns.seed, 0), side=ns.side,
    )
    rel = _checkpoint(run_dir, PolicyId("ladder-final", side=ns.side),
                      policy, inv.config)
    _write_csv(
        run_dir / "curves.csv",
        ("epoch", "level", "win_rate"),
        [(e, level, f"{float(rate):.12g}")
         for e, rates in enumerate(curves)
         for level, rate in zip(levels, rates)],
    )
    _write_csv(
        run_dir / "schedules.csv",
        ("epoch", "level", "weight"),
        [(e, level, f"{float(w):.12g}")
         for e, meta in enumerate(schedules)
         for level, w in zip(levels, meta.weights)],
    )
    if curves:
        summary = " ".join(
            f"cpu{level}={float(rate):.12g}"
            for level, rate in zip(levels, curves[-1]))
        print(f"final-epoch win rates: {summary}")
    return _finish(manifest, run_dir, rel, "curves.csv", "schedules.csv")


def _cmd_replay(ns, inv: _Invocation) -> Path:
    config, seed, actions = load_replay(ns.file)
    outcome = replay_match(config, actions)
    manifest, run_dir = new_run("replay", ns.seed, config)
    lines = [
        f"winner: {outcome.winner}",
        f"hp: {outcome.hp_left} {outcome.hp_right}",
        f"length: {outcome.length}",
        f"seed: {seed}",
        f"final_digest: {outcome.final_digest}",
    ]
    for line in lines:
        print(line)
    (run_dir / "outcome.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return _finish(manifest, run_dir, "outcome.txt")


def _cmd_serve_play(ns, inv: _Invocation) -> Path:
    from .playserver import serve  # deferred: pulls in the web stack

    ident, policy = load_policy(ns.checkpoint, inv.config)
    manifest, run_dir = new_run("serve-play", ns.seed, inv.config)
    serve(
        inv.config, ident, policy,
        human_side=ns.human_side, tick_rate=ns.tick_rate,
        host=ns.host, port=ns.port,
        match_log=run_dir / "matches.log",
        replay_dir=run_dir / "replays",
        assets=ns.assets,
    )
    return _finish(manifest, run_dir)


_HANDLERS = {
    "train-single": _cmd_train_single,
    "train-pop": _cmd_train_pop,
    "tournament": _cmd_tournament,
    "exploit": _cmd_exploit,
    "ladder": _cmd_ladder,
    "replay": _cmd_replay,
    "serve-play": _cmd_serve_play,
}


# ---------------------------------------------------------------------------
# entry point

def dispatch(argv: list[str] | None = None) -> int:
    """Run one command; returns the process exit status."""
    parser = _build_parser()
    try:
        try:
            ns = parser.parse_args(argv)
        except SystemExit as leave:  # --help prints and leaves
            return int(leave.code or 0)
        if ns.command is None:
            raise _CliError(
                "arenaladder: a command is required "
                f"(one of {', '.join(_COMMANDS)})")
        inv = _load_invocation(ns)
        manifest_path = _HANDLERS[ns.command](ns, inv)
    except (_CliError, UsageError, ConfigError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ArenaLadderError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(manifest_path)
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
