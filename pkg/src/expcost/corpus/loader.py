"""Locating corpus sources on disk."""
from __future__ import annotations

import json
import os
from pathlib import Path

ENV_VAR = "EXPCOST_CORPUS_DIR"
_DEFAULT_DIR = Path(__file__).with_name("programs")


def corpus_dir() -> Path:
    override = os.environ.get(ENV_VAR)
    return Path(override) if override else _DEFAULT_DIR


def source_path(name: str) -> Path:
    p = corpus_dir() / name
    if p.suffix != ".rml":
        p = p.with_name(p.name + ".rml")
    return p


def read_source(name: str) -> str:
    p = source_path(name)
    if not p.exists() and corpus_dir() != _DEFAULT_DIR:
        # an override directory may hold only some of the files
        p = _DEFAULT_DIR / p.name
    return p.read_text()


def read_include(name: str) -> str:
    return read_source(name)


def read_manifest() -> dict:
    p = corpus_dir() / "manifest.json"
    if not p.exists():
        p = _DEFAULT_DIR / "manifest.json"
    return json.loads(p.read_text())
