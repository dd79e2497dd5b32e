"""Pipeline configuration stored as flat ``key = value`` TOML.

Grammar: one assignment per line, ``#`` comments and blank lines ignored.
Values are double-quoted strings, ``true``/``false`` or decimal integers.
Unset optional keys are simply omitted.  Relative paths resolve against the
config file's directory.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    ledger_path: str
    output_dir: str
    prune_height1: bool = True
    keep_two_vertex: bool = False
    trivial_rules_path: Optional[str] = None
    filter_rules_path: Optional[str] = None
    seed: Optional[int] = None
    threads: int = 1
    figures: bool = True

    def __post_init__(self) -> None:
        types = {
            "ledger_path": str,
            "output_dir": str,
            "prune_height1": bool,
            "keep_two_vertex": bool,
            "trivial_rules_path": (str, type(None)),
            "filter_rules_path": (str, type(None)),
            "seed": (int, type(None)),
            "threads": int,
            "figures": bool,
        }
        for name, kind in types.items():
            value = getattr(self, name)
            if kind is int and isinstance(value, bool):
                raise ConfigError(f"{name}: expected an integer")
            if not isinstance(value, kind):
                raise ConfigError(f"{name}: unexpected value {value!r}")
        if self.threads < 1:
            raise ConfigError("threads must be a positive integer")

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        missing = {"ledger_path", "output_dir"} - set(raw)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        return cls(**raw)

    def to_toml(self) -> str:
        lines = []
        for key, value in asdict(self).items():
            if value is None:
                continue
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, int):
                text = str(value)
            else:
                text = _toml_string(value)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"

    def resolved(self, base: Path) -> "PipelineConfig":
        def fix(p: Optional[str]) -> Optional[str]:
            if p is None:
                return None
            path = Path(p)
            return str(path if path.is_absolute() else (base / path))

        return PipelineConfig(
            fix(self.ledger_path),
            fix(self.output_dir),
            self.prune_height1,
            self.keep_two_vertex,
            fix(self.trivial_rules_path),
            fix(self.filter_rules_path),
            self.seed,
            self.threads,
            self.figures,
        )

    def digest(self) -> str:
        return hashlib.sha256(self.to_toml().encode()).hexdigest()


def _toml_string(value: str) -> str:
    # json escapes non-BMP text as surrogate pairs, which TOML rejects; keep it raw
    text = json.dumps(value, ensure_ascii=False)
    return text.replace("\x7f", "\\u007f")


def parse_config(text: str) -> PipelineConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    nested = [k for k, v in raw.items() if isinstance(v, (dict, list))]
    if nested:
        raise ConfigError(f"config is flat; tables and arrays not allowed: {nested}")
    return PipelineConfig.from_dict(raw)


def load_config(path: str | Path) -> PipelineConfig:
    """Read, validate and resolve paths relative to the file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    cfg = parse_config(text).resolved(path.resolve().parent)
    if not Path(cfg.ledger_path).is_file():
        raise ConfigError(f"ledger_path does not exist: {cfg.ledger_path}")
    for p in (cfg.trivial_rules_path, cfg.filter_rules_path):
        if p is not None and not Path(p).is_file():
            raise ConfigError(f"rules file does not exist: {p}")
    return cfg


def save_config(cfg: PipelineConfig, path: str | Path) -> None:
    Path(path).write_text(cfg.to_toml(), encoding="utf-8")
