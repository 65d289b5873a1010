"""Named run configurations shipped with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from levy_drawdown.errors import ParameterError

from .models import RunConfig

PRESET_PACKAGE = "levy_drawdown.cli"
PRESET_FOLDER = "presets"


def _packaged(name: str):
    return resources.files(PRESET_PACKAGE).joinpath(PRESET_FOLDER, f"{name}.json")


def available_presets(extra_dir: Path | None = None) -> list[str]:
    names = {
        entry.name.removesuffix(".json")
        for entry in resources.files(PRESET_PACKAGE).joinpath(PRESET_FOLDER).iterdir()
        if entry.name.endswith(".json")
    }
    if extra_dir is not None and extra_dir.is_dir():
        names.update(path.stem for path in extra_dir.glob("*.json"))
    return sorted(names)


def preset_text(name: str, extra_dir: Path | None = None) -> str:
    """Raw JSON of a preset; a file in ``extra_dir`` shadows the packaged one."""
    if extra_dir is not None:
        candidate = extra_dir / f"{name}.json"
        if candidate.is_file():
            return candidate.read_text(encoding="utf-8")
    packaged = _packaged(name)
    if not packaged.is_file():
        known = ", ".join(available_presets(extra_dir))
        raise ParameterError(f"unknown preset {name!r} (known: {known})")
    return packaged.read_text(encoding="utf-8")


def load_preset(name: str, extra_dir: Path | None = None) -> RunConfig:
    return RunConfig.model_validate_json(preset_text(name, extra_dir))


def load_config_file(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ParameterError(f"config file not found: {path}")
    return RunConfig.model_validate_json(path.read_text(encoding="utf-8"))
