"""Flat ``key = value`` suite configuration.

Blank lines and ``#`` comments are ignored. ``seed`` is required; every other
key has a default and can be overridden from the command line.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..errors import UsageError


@dataclass(frozen=True)
class SuiteConfig:
    seed: int
    n_demos: int = 284
    epochs: int = 300
    lr: float = 0.001
    keep_prob: float = 0.5
    batch_size: int = 16
    n_units: int = 16
    n_layers: int = 1
    eval_trials: int = 15
    ft_epochs: int = 500
    ft_lr: float = 0.001
    batch_n_wine: int = 36
    batch_n_blue: int = 54
    gradual_n: int = 10
    gradual_max_rounds: int = 8
    gradual_reuse_tasks: bool = True
    err_threshold_factor: float = 2.0
    switch_fast_fwd: float = 20.0
    switch_fast_back: float = -30.0
    switch_slow_fwd: float = 5.0
    switch_slow_back: float = -7.5
    switch_timeout_s: float = 60.0
    include_combined: bool = False
    write_demos: bool = True
    verbose_trajectories: bool = False

    def echo(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def override(self, **kw) -> "SuiteConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **coerce(kw)) if kw else self


_TYPES = {f.name: f.type for f in fields(SuiteConfig)}


def _parse_bool(v: str) -> bool:
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {v!r}")


def coerce(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        if key not in _TYPES:
            raise UsageError(f"unknown config key {key!r}")
        kind = _TYPES[key]
        try:
            if kind in ("bool", bool):
                out[key] = value if isinstance(value, bool) else _parse_bool(value)
            elif kind in ("int", int):
                out[key] = int(value)
            else:
                out[key] = float(value)
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {value!r}") from exc
    return out


def parse_config(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    return raw


def load_config(path=None, **overrides) -> SuiteConfig:
    raw = parse_config(Path(path).read_text()) if path else {}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in raw:
        raise UsageError("config needs a root seed (key 'seed' or --seed)")
    return SuiteConfig(**coerce(raw))


def dump_config(cfg: SuiteConfig) -> str:
    return "".join(f"{k} = {str(v).lower() if isinstance(v, bool) else v}\n" for k, v in cfg.echo().items())
