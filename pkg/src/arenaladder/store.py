"""Persistence: run manifests, policy checkpoints, payoff caches, logs, replays.

Everything is a versioned text file (first line = format tag) so artifacts
stay human-diffable and stable under version control:

* policy checkpoints bind to an engine-config digest and store one
  probability row per observation at 12 significant digits,
* the match log is append-only JSON lines whose reader tolerates a
  trailing partial line (a crash mid-append loses at most that record),
* the payoff cache is a CSV keyed by PolicyIds and the config digest; a
  stale digest invalidates the whole cache,
* replays hold the resolved engine config plus one `t a_left a_right`
  line per step and re-simulate bit-exactly,
* the run manifest is JSON with a sha256 index of the run's artifacts.

A run directory looks like runs/<id>/{manifest, policies/, payoff.csv,
matches.log, replays/}; the runs root honours $ARENALADDER_RUNS.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from collections.abc import Mapping, Sequence
from configparser import ConfigParser, Error as IniError
from dataclasses import dataclass, field, fields as dataclass_fields
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from .engine import AttackSpec, EngineConfig, SpecialSpec
from .errors import ConfigError, StoreError, UsageError
from .match import MatchOutcome
from .payoff import PayoffMatrix
from .policy import PolicyId, TabularPolicy

POLICY_FORMAT = "arenaladder-policy 1"
MATCHES_FORMAT = "arenaladder-matches 1"
PAYOFF_FORMAT = "arenaladder-payoff 1"
REPLAY_FORMAT = "arenaladder-replay 1"
MANIFEST_FORMAT = "arenaladder-manifest 1"

MANIFEST_NAME = "manifest"


def _expect_format(line: str, want: str, path: Path | str) -> None:
    if line.strip() != want:
        raise StoreError(
            f"{path}: version mismatch, expected {want!r}, found {line.strip()!r}",
            line=1,
        )


# ---------------------------------------------------------------------------
# engine-config snapshots, digests and INI files


def _fraction_text(value: Fraction) -> str:
    return str(Fraction(value))


def config_snapshot(config: EngineConfig) -> dict:
    """The full resolved config as JSON-ready primitives (exact rationals kept
    as `p/q` strings)."""
    return {
        "arena_width": config.arena_width,
        "max_hp": config.max_hp,
        "horizon": config.horizon,
        "damage_table": {
            name: {
                "damage": spec.damage,
                "reach": spec.reach,
                "startup": spec.startup,
                "recovery": spec.recovery,
            }
            for name, spec in sorted(config.damage_table.items())
        },
        "chip_fraction": _fraction_text(config.chip_fraction),
        "close_range": config.close_range,
        "special_moves_enabled": config.special_moves_enabled,
        "hard_coded_specials": config.hard_coded_specials,
        "specials": [
            {
                "name": sp.name,
                "sequence": list(sp.sequence),
                "kind": sp.kind,
                "damage": sp.damage,
                "reach": sp.reach,
                "startup": sp.startup,
                "recovery": sp.recovery,
                "invulnerable_startup": sp.invulnerable_startup,
            }
            for sp in config.specials
        ],
        "reward_alpha": _fraction_text(config.reward_alpha),
        "reward_lambda": _fraction_text(config.reward_lambda),
        "bonus_scale": _fraction_text(config.bonus_scale),
        "seed": config.seed,
    }


def config_from_snapshot(snapshot: Mapping) -> EngineConfig:
    try:
        return EngineConfig(
            arena_width=int(snapshot["arena_width"]),
            max_hp=int(snapshot["max_hp"]),
            horizon=int(snapshot["horizon"]),
            damage_table={
                name: AttackSpec(**{k: int(v) for k, v in entry.items()})
                for name, entry in snapshot["damage_table"].items()
            },
            chip_fraction=Fraction(snapshot["chip_fraction"]),
            close_range=int(snapshot["close_range"]),
            special_moves_enabled=bool(snapshot["special_moves_enabled"]),
            hard_coded_specials=bool(snapshot["hard_coded_specials"]),
            specials=tuple(
                SpecialSpec(
                    name=sp["name"],
                    sequence=tuple(sp["sequence"]),
                    kind=sp["kind"],
                    damage=int(sp["damage"]),
                    reach=int(sp["reach"]),
                    startup=int(sp["startup"]),
                    recovery=int(sp["recovery"]),
                    invulnerable_startup=bool(sp["invulnerable_startup"]),
                )
                for sp in snapshot["specials"]
            ),
            reward_alpha=Fraction(snapshot["reward_alpha"]),
            reward_lambda=Fraction(snapshot["reward_lambda"]),
            bonus_scale=Fraction(snapshot["bonus_scale"]),
            seed=int(snapshot["seed"]),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"bad config snapshot: {err}") from None


def config_digest(config: EngineConfig) -> str:
    """sha256 over the canonical snapshot; checkpoint and cache compatibility key."""
    text = json.dumps(config_snapshot(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


_INI_JSON_FIELDS = ("damage_table", "specials")
_INI_FRACTION_FIELDS = ("chip_fraction", "reward_alpha", "reward_lambda", "bonus_scale")
_INI_BOOL_FIELDS = ("special_moves_enabled", "hard_coded_specials")


def engine_config_to_ini(config: EngineConfig) -> str:
    """The `[engine]` section with one key per EngineConfig field."""
    snap = config_snapshot(config)
    lines = ["[engine]"]
    for name in snap:
        value = snap[name]
        if name in _INI_JSON_FIELDS:
            text = json.dumps(value, sort_keys=True, separators=(",", ":"))
        elif isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = str(value)
        lines.append(f"{name} = {text}")
    return "\n".join(lines) + "\n"


def _engine_overrides(parser: ConfigParser) -> dict:
    """Typed overrides from a parsed `[engine]` section; unknown keys rejected."""
    if not parser.has_section("engine"):
        return {}
    known = {f.name for f in dataclass_fields(EngineConfig)}
    overrides: dict = {}
    for name, raw in parser.items("engine"):
        if name not in known:
            raise ConfigError(f"unknown [engine] key {name!r}")
        try:
            if name in _INI_JSON_FIELDS:
                decoded = json.loads(raw)
                if name == "damage_table":
                    overrides[name] = {
                        atk: AttackSpec(**{k: int(v) for k, v in entry.items()})
                        for atk, entry in decoded.items()
                    }
                else:
                    overrides[name] = tuple(
                        SpecialSpec(
                            name=sp["name"],
                            sequence=tuple(sp["sequence"]),
                            kind=sp["kind"],
                            damage=int(sp["damage"]),
                            reach=int(sp["reach"]),
                            startup=int(sp["startup"]),
                            recovery=int(sp["recovery"]),
                            invulnerable_startup=bool(sp["invulnerable_startup"]),
                        )
                        for sp in decoded
                    )
            elif name in _INI_FRACTION_FIELDS:
                overrides[name] = Fraction(raw)
            elif name in _INI_BOOL_FIELDS:
                overrides[name] = parser.getboolean("engine", name)
            else:
                overrides[name] = int(raw)
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as err:
            raise ConfigError(f"bad value for [engine] {name}: {err}") from None
    return overrides


def load_engine_config(path: str | Path) -> EngineConfig:
    """EngineConfig from an INI file; absent keys keep their defaults."""
    parser = ConfigParser()
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except IniError as err:
        raise ConfigError(f"{path}: {err}") from None
    return EngineConfig(**_engine_overrides(parser))


# ---------------------------------------------------------------------------
# policy checkpoints


def _policy_id_text(ident: PolicyId) -> str:
    for part in (ident.name, ident.side):
        if "|" in part or any(ch.isspace() for ch in part):
            raise UsageError(f"policy id part {part!r} cannot be serialized")
    return f"{ident.name}|{ident.side}|{ident.checkpoint}"


def _policy_id_parse(text: str) -> PolicyId:
    name, side, checkpoint = text.split("|")
    return PolicyId(name, side=side, checkpoint=int(checkpoint))


def _prob_text(p: Fraction) -> str:
    return f"{float(p):.12g}"


def save_policy(
    path: str | Path,
    policy: TabularPolicy,
    config: EngineConfig,
    ident: PolicyId = PolicyId("policy"),
) -> None:
    """Write a tabular checkpoint: config digest, id, one row per observation.

    Probabilities are kept to 12 significant digits; `load_policy`
    re-normalizes each row exactly, so one-hot and uniform rows (and any
    row with equal probabilities) round-trip exactly.  Only the stationary
    observation table is stored.
    """
    if not isinstance(policy, TabularPolicy):
        raise UsageError("only tabular policies are checkpointed")
    lines = [
        POLICY_FORMAT,
        f"config {config_digest(config)}",
        f"id {_policy_id_text(ident)}",
        f"actions {len(policy.actions)}",
        "default " + " ".join(_prob_text(p) for p in policy.dist_for("<default>")),
    ]
    for key in sorted(policy.table):
        lines.append(
            f"obs {key} " + " ".join(_prob_text(p) for p in policy.table[key])
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_prob_row(
    parts: list[str], count: int, path: str | Path, line_no: int
) -> tuple[Fraction, ...]:
    if len(parts) != count:
        raise StoreError(
            f"{path}: malformed record, expected {count} probabilities, "
            f"found {len(parts)}",
            line=line_no,
        )
    try:
        return tuple(Fraction(p) for p in parts)
    except (ValueError, ZeroDivisionError):
        raise StoreError(f"{path}: malformed probability", line=line_no) from None


def load_policy(
    path: str | Path, config: EngineConfig
) -> tuple[PolicyId, TabularPolicy]:
    """Read a checkpoint written by `save_policy` for the same config."""
    from .engine import action_set

    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise StoreError(f"{path}: empty checkpoint", line=1)
    _expect_format(lines[0], POLICY_FORMAT, path)

    def header(line_no: int, tag: str) -> str:
        if line_no > len(lines) or not lines[line_no - 1].startswith(tag + " "):
            raise StoreError(
                f"{path}: malformed record, expected a {tag!r} line", line=line_no
            )
        return lines[line_no - 1][len(tag) + 1 :]

    digest = header(2, "config")
    if digest != config_digest(config):
        raise StoreError(
            f"{path}: checkpoint was written for config digest {digest[:12]}..., "
            f"the current config has {config_digest(config)[:12]}...",
            line=2,
        )
    try:
        ident = _policy_id_parse(header(3, "id"))
    except (ValueError, UsageError):
        raise StoreError(f"{path}: malformed policy id", line=3) from None
    actions = action_set(config)
    try:
        count = int(header(4, "actions"))
    except ValueError:
        raise StoreError(f"{path}: malformed action count", line=4) from None
    if count != len(actions):
        raise StoreError(
            f"{path}: checkpoint has {count} actions, the config defines "
            f"{len(actions)}",
            line=4,
        )
    default = _parse_prob_row(header(5, "default").split(), count, path, 5)
    table: dict[str, Sequence[Fraction]] = {}
    for line_no, line in enumerate(lines[5:], start=6):
        if not line.strip():
            continue
        parts = line.split()
        if parts[0] != "obs" or len(parts) < 2:
            raise StoreError(
                f"{path}: malformed record, expected an 'obs' line", line=line_no
            )
        table[parts[1]] = _parse_prob_row(parts[2:], count, path, line_no)
    try:
        return ident, TabularPolicy(actions, table, default=default)
    except UsageError as err:
        raise StoreError(f"{path}: {err}", line=1) from None


# ---------------------------------------------------------------------------
# the append-only match log


@dataclass(frozen=True)
class MatchRecord:
    """One finished match: who played, the seed, and how it ended."""

    match_id: str
    left: PolicyId
    right: PolicyId
    seed: int
    outcome: str  # "left" | "right" | "draw"
    hp_left: int
    hp_right: int
    length: int
    dense_left: Fraction
    dense_right: Fraction

    def __post_init__(self) -> None:
        if self.outcome not in ("left", "right", "draw"):
            raise UsageError(f"outcome must be left/right/draw, got {self.outcome!r}")
        ordered = {"left": self.hp_left > self.hp_right,
                   "right": self.hp_right > self.hp_left,
                   "draw": self.hp_left == self.hp_right}
        if not ordered[self.outcome]:
            raise UsageError(
                f"outcome {self.outcome!r} is inconsistent with final HPs "
                f"{self.hp_left}/{self.hp_right}"
            )
        if self.length < 0:
            raise UsageError("episode length cannot be negative")

    @classmethod
    def from_outcome(
        cls,
        match_id: str,
        left: PolicyId,
        right: PolicyId,
        seed: int,
        outcome: MatchOutcome,
    ) -> "MatchRecord":
        return cls(
            match_id=match_id,
            left=left,
            right=right,
            seed=seed,
            outcome=outcome.winner,
            hp_left=outcome.hp_left,
            hp_right=outcome.hp_right,
            length=outcome.length,
            dense_left=Fraction(outcome.dense_left),
            dense_right=Fraction(outcome.dense_right),
        )


def _id_fields(ident: PolicyId) -> list:
    return [ident.name, ident.side, ident.checkpoint]


def _record_line(record: MatchRecord) -> str:
    payload = {
        "id": record.match_id,
        "left": _id_fields(record.left),
        "right": _id_fields(record.right),
        "seed": record.seed,
        "outcome": record.outcome,
        "hp": [record.hp_left, record.hp_right],
        "length": record.length,
        "dense": [str(record.dense_left), str(record.dense_right)],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def append_match(log: str | Path, record: MatchRecord) -> None:
    """Append one record (creating the log with its header line if needed);
    the record is written and flushed in a single call."""
    path = Path(log)
    fresh = not path.exists() or path.stat().st_size == 0
    with open(path, "a", encoding="utf-8") as handle:
        text = _record_line(record) + "\n"
        if fresh:
            text = MATCHES_FORMAT + "\n" + text
        handle.write(text)
        handle.flush()
        os.fsync(handle.fileno())


def read_matches(log: str | Path) -> list[MatchRecord]:
    """All complete records in order; a trailing partial line is ignored."""
    path = Path(log)
    if not path.exists():
        return []
    text = path.read_text(encoding="utf-8")
    if not text:
        return []
    lines = text.split("\n")
    if text.endswith("\n"):
        lines.pop()
    else:
        lines.pop()  # an interrupted append; the record never completed
    if not lines:
        return []
    _expect_format(lines[0], MATCHES_FORMAT, path)
    records = []
    for line_no, line in enumerate(lines[1:], start=2):
        try:
            raw = json.loads(line)
            records.append(
                MatchRecord(
                    match_id=raw["id"],
                    left=PolicyId(raw["left"][0], side=raw["left"][1],
                                  checkpoint=int(raw["left"][2])),
                    right=PolicyId(raw["right"][0], side=raw["right"][1],
                                   checkpoint=int(raw["right"][2])),
                    seed=int(raw["seed"]),
                    outcome=raw["outcome"],
                    hp_left=int(raw["hp"][0]),
                    hp_right=int(raw["hp"][1]),
                    length=int(raw["length"]),
                    dense_left=Fraction(raw["dense"][0]),
                    dense_right=Fraction(raw["dense"][1]),
                )
            )
        except (json.JSONDecodeError, KeyError, IndexError, TypeError, ValueError,
                UsageError) as err:
            raise StoreError(
                f"{log}: malformed match record: {err}", line=line_no
            ) from None
    return records


# ---------------------------------------------------------------------------
# the payoff cache


def save_payoff(path: str | Path, payoff: PayoffMatrix, config: EngineConfig) -> None:
    """CSV cache of a payoff matrix, keyed to the config digest.

    Known cells serialize as `rate@matches` with exact rationals; unknown
    cells as `?`, so incremental refreshes keep their unknown markers.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([""] + [_policy_id_text(c) for c in payoff.cols])
    for r, row_id in enumerate(payoff.rows):
        cells = []
        for c in range(len(payoff.cols)):
            if payoff.is_known(r, c):
                cells.append(f"{payoff.win_rate[r][c]}@{payoff.matches[r][c]}")
            else:
                cells.append("?")
        writer.writerow([_policy_id_text(row_id)] + cells)
    Path(path).write_text(
        f"{PAYOFF_FORMAT}\nconfig {config_digest(config)}\n" + buffer.getvalue(),
        encoding="utf-8",
    )


def load_payoff(path: str | Path, config: EngineConfig) -> PayoffMatrix | None:
    """The cached matrix, or None when the cache was built for another config
    (stale digests invalidate the cache rather than erroring)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise StoreError(f"{path}: empty payoff cache", line=1)
    _expect_format(lines[0], PAYOFF_FORMAT, path)
    if len(lines) < 2 or not lines[1].startswith("config "):
        raise StoreError(f"{path}: missing config digest", line=2)
    if lines[1][len("config "):] != config_digest(config):
        return None
    rows_text = list(csv.reader(lines[2:]))
    if not rows_text:
        return PayoffMatrix.empty((), ())
    try:
        cols = tuple(_policy_id_parse(c) for c in rows_text[0][1:])
        rows, rates, counts = [], [], []
        for i, row in enumerate(rows_text[1:]):
            line_no = 4 + i
            if len(row) != len(cols) + 1:
                raise StoreError(
                    f"{path}: row has {len(row) - 1} cells, header names "
                    f"{len(cols)} columns",
                    line=line_no,
                )
            rows.append(_policy_id_parse(row[0]))
            rate_row, count_row = [], []
            for cell in row[1:]:
                if cell == "?":
                    rate_row.append(Fraction(0))
                    count_row.append(0)
                else:
                    rate, _, matches = cell.partition("@")
                    count = int(matches)
                    if count < 1:
                        raise StoreError(
                            f"{path}: known cell with no matches", line=line_no
                        )
                    rate_row.append(Fraction(rate))
                    count_row.append(count)
            rates.append(rate_row)
            counts.append(count_row)
        return PayoffMatrix(tuple(rows), cols, rates, counts)
    except StoreError:
        raise
    except (ValueError, ZeroDivisionError, UsageError) as err:
        raise StoreError(f"{path}: malformed payoff cache: {err}", line=3) from None


# ---------------------------------------------------------------------------
# replays


def save_replay(
    path: str | Path, config: EngineConfig, seed: int, actions: Sequence[tuple[str, str]]
) -> None:
    """Header (resolved config + seed) then one `t a_left a_right` line per step."""
    lines = [REPLAY_FORMAT, engine_config_to_ini(config).rstrip("\n")]
    lines.append("[replay]")
    lines.append(f"seed = {seed}")
    lines.append("[steps]")
    for t, (a_l, a_r) in enumerate(actions):
        lines.append(f"{t} {a_l} {a_r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_replay(path: str | Path) -> tuple[EngineConfig, int, tuple[tuple[str, str], ...]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise StoreError(f"{path}: empty replay", line=1)
    _expect_format(lines[0], REPLAY_FORMAT, path)
    try:
        split = lines.index("[steps]")
    except ValueError:
        raise StoreError(f"{path}: missing [steps] section", line=len(lines)) from None
    parser = ConfigParser()
    try:
        parser.read_string("\n".join(lines[1:split]))
        config = EngineConfig(**_engine_overrides(parser))
        seed = parser.getint("replay", "seed")
    except (IniError, ConfigError, ValueError) as err:
        raise StoreError(f"{path}: bad replay header: {err}", line=2) from None
    actions = []
    for line_no, line in enumerate(lines[split + 1 :], start=split + 2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] != str(len(actions)):
            raise StoreError(
                f"{path}: malformed step line (expected "
                f"'{len(actions)} a_left a_right')",
                line=line_no,
            )
        actions.append((parts[1], parts[2]))
    return config, seed, tuple(actions)


# ---------------------------------------------------------------------------
# run manifests


def runs_root(root: str | Path | None = None) -> Path:
    """The runs directory: explicit argument, $ARENALADDER_RUNS, or ./runs."""
    return Path(root or os.environ.get("ARENALADDER_RUNS") or "runs")


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    """Everything needed to reproduce a run and verify its artifacts."""

    run_id: str
    created: str
    algorithm: str
    seed: int
    config: EngineConfig
    artifacts: dict[str, str] = field(default_factory=dict)

    def add_artifact(self, run_dir: str | Path, relpath: str) -> str:
        """Digest `run_dir`/`relpath` and index it; returns the digest."""
        digest = file_digest(Path(run_dir) / relpath)
        self.artifacts[relpath] = digest
        return digest


def new_run(
    algorithm: str,
    seed: int,
    config: EngineConfig,
    *,
    root: str | Path | None = None,
    run_id: str | None = None,
) -> tuple[RunManifest, Path]:
    """Create runs/<id>/ with its policies/ and replays/ subdirectories."""
    base = runs_root(root)
    if run_id is None:
        stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")
        run_id = f"{algorithm}-{seed}-{stamp}"
        suffix = 1
        while (base / run_id).exists():
            suffix += 1
            run_id = f"{algorithm}-{seed}-{stamp}-{suffix}"
    run_dir = base / run_id
    if run_dir.exists():
        raise UsageError(f"run directory {run_dir} already exists")
    for sub in ("policies", "replays"):
        (run_dir / sub).mkdir(parents=True)
    manifest = RunManifest(
        run_id=run_id,
        created=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        algorithm=algorithm,
        seed=seed,
        config=config,
    )
    return manifest, run_dir


def save_manifest(run_dir: str | Path, manifest: RunManifest) -> Path:
    payload = {
        "run_id": manifest.run_id,
        "created": manifest.created,
        "algorithm": manifest.algorithm,
        "seed": manifest.seed,
        "config": config_snapshot(manifest.config),
        "artifacts": dict(sorted(manifest.artifacts.items())),
    }
    path = Path(run_dir) / MANIFEST_NAME
    path.write_text(
        MANIFEST_FORMAT + "\n" + json.dumps(payload, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return path


def load_manifest(run_dir: str | Path, verify: bool = True) -> RunManifest:
    """Read the manifest back; with `verify` every indexed artifact must still
    hash to its recorded digest."""
    path = Path(run_dir) / MANIFEST_NAME
    text = path.read_text(encoding="utf-8")
    newline = text.find("\n")
    _expect_format(text[: max(newline, 0)], MANIFEST_FORMAT, path)
    try:
        payload = json.loads(text[newline + 1 :])
        manifest = RunManifest(
            run_id=payload["run_id"],
            created=payload["created"],
            algorithm=payload["algorithm"],
            seed=int(payload["seed"]),
            config=config_from_snapshot(payload["config"]),
            artifacts={str(k): str(v) for k, v in payload["artifacts"].items()},
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, ConfigError) as err:
        raise StoreError(f"{path}: malformed manifest: {err}", line=2) from None
    if verify:
        for relpath, recorded in manifest.artifacts.items():
            target = Path(run_dir) / relpath
            if not target.exists():
                raise StoreError(f"{path}: digest mismatch, {relpath} is missing")
            actual = file_digest(target)
            if actual != recorded:
                raise StoreError(
                    f"{path}: digest mismatch for {relpath}: manifest says "
                    f"{recorded[:12]}..., file hashes to {actual[:12]}..."
                )
    return manifest
