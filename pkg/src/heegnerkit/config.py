"""Run configuration: defaults, JSON config files, environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import DomainError

THREADS_ENV = "HEEGNERKIT_THREADS"


@dataclass(frozen=True)
class RunConfig:
    prec_bits: int = 256
    max_qexp_terms: int = 200_000
    prime_search_budget: int = 10**7
    class_number_floor: int = 1
    gram_tolerance: float = 1e-6
    threads: int = 1
    output_dir: str = "heegnerkit-out"
    cache_dir: str | None = None  # defaults to <output_dir>/cache

    def __post_init__(self):
        if self.prec_bits < 64:
            raise DomainError(f"prec_bits must be >= 64, got {self.prec_bits}")
        for name in ("max_qexp_terms", "prime_search_budget", "threads", "class_number_floor"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be positive")
        if self.gram_tolerance <= 0:
            raise DomainError("gram_tolerance must be positive")

    @property
    def coeff_cache(self) -> Path:
        return Path(self.cache_dir) if self.cache_dir else Path(self.output_dir) / "cache"

    @property
    def store_path(self) -> Path:
        return Path(self.output_dir) / "certificates.jsonl"

    def to_json(self) -> dict:
        return asdict(self)


def load_config(path: str | os.PathLike | None = None, env: dict | None = None, **overrides) -> RunConfig:
    """Defaults, then the JSON file, then the environment, then explicit overrides (None ignored)."""
    values: dict = {}
    known = {f.name for f in fields(RunConfig)}
    if path is not None:
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise DomainError(f"cannot read config {path}: {exc}") from None
        unknown = set(obj) - known
        if unknown:
            raise DomainError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(obj)
    env = os.environ if env is None else env
    if env.get(THREADS_ENV):
        try:
            values["threads"] = int(env[THREADS_ENV])
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be an integer") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return replace(RunConfig(), **values)
