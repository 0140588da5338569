"""Run configuration: ``key = value`` files merged with command-line flags."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AtplError


class UsageError(AtplError):
    """Bad invocation; the CLI prints usage and exits with status 2."""


NUMERIC_KEYS = {
    "d": int, "hidden": int, "context_dim": int, "inner": int, "max_layers": int,
    "max_len": int, "n": int, "test_size": int, "epochs": int, "batch_size": int,
    "lr": float, "clip_norm": float, "target_accuracy": float, "tolerance": float,
}
PATH_KEYS = {
    "out", "report", "corpus", "tagged", "trees", "unbindings", "captions", "candidates",
    "model", "autoencoder", "tagger", "encodings", "embeddings",
}


@dataclass
class RunConfig:
    subcommand: str
    seed: int
    settings: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)

    def get(self, key: str, default=None):
        if key in self.paths:
            return self.paths[key]
        return self.settings.get(key, default)


def _convert(key: str, raw: str, where: str):
    if key == "seed":
        kind = int
    elif key in NUMERIC_KEYS:
        kind = NUMERIC_KEYS[key]
    elif key in PATH_KEYS:
        return raw
    else:
        raise UsageError(f"{where}: unknown key {key!r}")
    try:
        return kind(raw)
    except ValueError:
        raise UsageError(f"{where}: {key} expects {kind.__name__}, got {raw!r}") from None


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Relative paths
    are resolved against the file's directory."""
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file {path} not found")
    values = {}
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        value = _convert(key, raw, f"{path}:{lineno}")
        if key in PATH_KEYS and not Path(value).is_absolute():
            value = str(p.parent / value)
        values[key] = value
    return values


def resolve(subcommand: str, flags: dict, config_path: str | None,
            defaults: dict) -> RunConfig:
    """Flags beat the config file, which beats ``defaults``. The seed falls
    back to ``ATPL_SEED`` and must be set somewhere."""
    merged = dict(defaults)
    if config_path:
        merged.update(read_config_file(config_path))
    merged.update({k: v for k, v in flags.items() if v is not None})
    seed = merged.pop("seed", None)
    if seed is None and os.environ.get("ATPL_SEED", "").strip():
        seed = _convert("seed", os.environ["ATPL_SEED"].strip(), "ATPL_SEED")
    if seed is None:
        raise UsageError("a seed is required (--seed, seed in --config, or ATPL_SEED)")
    paths = {k: v for k, v in merged.items() if k in PATH_KEYS}
    settings = {k: v for k, v in merged.items() if k not in PATH_KEYS}
    return RunConfig(subcommand, int(seed), settings, paths)
