"""
Run manifest loading and the shipped preset catalogue
"""
from pathlib import Path
from typing import List

import yaml
from pydantic import ValidationError

from app.config import PRESETS_DIR
from app.errors import ConfigError
from app.models import PresetSummary, RunManifest


def resolve_config_path(value: str) -> Path:
    """A path on disk, or the name of a shipped preset"""
    path = Path(value)
    if path.exists():
        return path
    preset = PRESETS_DIR / f"{value}.yaml"
    if preset.exists():
        return preset
    return path


def parse_config(path) -> RunManifest:
    """
    Load and fully validate a YAML run manifest.

    Raises:
        ConfigError: missing file (config_not_found), malformed YAML
            (config_syntax) or a failed invariant (config_invalid, naming the field)
    """
    path = resolve_config_path(str(path))
    if not path.is_file():
        raise ConfigError(f"no such config file: {path}", code=ConfigError.NOT_FOUND)
    try:
        with open(path, encoding="utf-8") as handle:
            document = yaml.safe_load(handle)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}", code=ConfigError.SYNTAX) from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", code=ConfigError.NOT_FOUND) from exc

    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError("a manifest must be a mapping", code=ConfigError.SYNTAX)
    return manifest_from_document(document)


def manifest_from_document(document: dict) -> RunManifest:
    try:
        return RunManifest.model_validate(document)
    except ValidationError as exc:
        raise ConfigError.from_validation_error(exc) from None


def serialize_manifest(manifest: RunManifest) -> str:
    return yaml.safe_dump(manifest.to_document(), sort_keys=False)


def list_presets() -> List[PresetSummary]:
    presets = []
    for path in sorted(PRESETS_DIR.glob("*.yaml")):
        manifest = parse_config(path)
        presets.append(PresetSummary(name=path.stem, kind=manifest.kind, description=manifest.description))
    return presets
