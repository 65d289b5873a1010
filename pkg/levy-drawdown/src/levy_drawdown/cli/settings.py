"""Process settings loaded from environment variables."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


@dataclass(slots=True)
class Settings:
    log_level: str
    threads: int
    preset_dir: Path | None

    def validate(self) -> None:
        if self.log_level not in _LEVELS:
            raise ValueError(f"LEVY_DRAWDOWN_LOG_LEVEL must be one of {sorted(_LEVELS)}")
        if self.threads < 1:
            raise ValueError("LEVY_DRAWDOWN_THREADS must be >= 1")

    def configure_logging(self) -> None:
        logging.basicConfig(level=self.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def load_settings() -> Settings:
    threads_raw = os.getenv("LEVY_DRAWDOWN_THREADS", "1").strip() or "1"
    try:
        threads = int(threads_raw)
    except ValueError as exc:
        raise ValueError(f"LEVY_DRAWDOWN_THREADS is not an integer: {threads_raw!r}") from exc
    preset_dir = os.getenv("LEVY_DRAWDOWN_PRESET_DIR", "").strip()
    settings = Settings(
        log_level=os.getenv("LEVY_DRAWDOWN_LOG_LEVEL", "WARNING").strip().upper() or "WARNING",
        threads=threads,
        preset_dir=Path(preset_dir) if preset_dir else None,
    )
    settings.validate()
    return settings
