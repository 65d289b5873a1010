"""CSV and JSON writers that stamp every result with its provenance."""

from __future__ import annotations

import hashlib
import io
import json
import sys
from pathlib import Path
from typing import Any, Mapping

import pandas as pd

from levy_drawdown.cli.models import ResultDocument, RunConfig

FLOAT_FORMAT = "%.10g"


def run_payload(run: RunConfig) -> dict[str, Any]:
    """Config as hashed and embedded in results, without the output block."""
    return run.model_dump(mode="json", exclude={"output"})


class OutputService:
    def __init__(self, version: str) -> None:
        self.version = version

    @staticmethod
    def config_sha256(run: RunConfig) -> str:
        canonical = json.dumps(run_payload(run), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def metadata(self, command: str, run: RunConfig, seed: int | None) -> dict[str, Any]:
        return {
            "command": command,
            "config_sha256": self.config_sha256(run),
            "seed": "" if seed is None else seed,
            "version": self.version,
        }

    def render_csv(self, frame: pd.DataFrame, metadata: Mapping[str, Any], summary: Mapping[str, Any] | None = None) -> str:
        buffer = io.StringIO()
        for key, value in metadata.items():
            buffer.write(f"# {key}={value}\n")
        for key, value in (summary or {}).items():
            shown = FLOAT_FORMAT % value if isinstance(value, float) else value
            buffer.write(f"# summary.{key}={shown}\n")
        frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return buffer.getvalue()

    def render_json(
        self,
        frame: pd.DataFrame,
        command: str,
        run: RunConfig,
        seed: int | None,
        summary: Mapping[str, Any] | None = None,
    ) -> str:
        # to_json maps NaN to null and numpy scalars to plain numbers
        rows = json.loads(frame.to_json(orient="values", double_precision=15))
        document = ResultDocument(
            command=command,
            version=self.version,
            config_sha256=self.config_sha256(run),
            seed=seed,
            config=run_payload(run),
            columns=[str(c) for c in frame.columns],
            rows=rows,
            summary=dict(summary or {}),
        )
        return document.model_dump_json(indent=2) + "\n"

    def write(
        self,
        frame: pd.DataFrame,
        *,
        command: str,
        run: RunConfig,
        seed: int | None,
        fmt: str,
        path: str | Path | None,
        summary: Mapping[str, Any] | None = None,
    ) -> Path | None:
        if fmt == "json":
            text = self.render_json(frame, command, run, seed, summary)
        else:
            text = self.render_csv(frame, self.metadata(command, run, seed), summary)
        if path is None:
            sys.stdout.write(text)
            return None
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8", newline="")
        return target


def read_result_csv(path: str | Path) -> tuple[dict[str, str], pd.DataFrame]:
    """Split a result CSV into its '#' header fields and the data frame."""
    header: dict[str, str] = {}
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            header[key] = value
    return header, pd.read_csv(path, comment="#")
