"""Turn parsed feature files into the flat step-occurrence table."""

from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Iterable, Mapping

from .gherkin import FeatureFile
from .identity import LicenseClass, StepOccurrence, step_identity, whitespace_collapse

__all__ = ["build_occurrences", "detect_license_class", "repo_licenses"]

_LICENSE_FILE = re.compile(r"^(licen[cs]e|copying)(\.\w+)?$", re.IGNORECASE)

# checked in order; copyleft first so "LGPL ... BSD-compatible" style texts stay copyleft
_COPYLEFT = (
    "gnu general public license",
    "gnu lesser general public",
    "gnu affero general public",
    "mozilla public license",
    "eclipse public license",
    "european union public licence",
    "gpl-2.0",
    "gpl-3.0",
    "agpl",
    "lgpl",
)
_PERMISSIVE = (
    "mit license",
    "permission is hereby granted, free of charge",
    "apache license",
    "redistribution and use in source and binary forms",
    "isc license",
    "permission to use, copy, modify, and/or distribute",
    "this is free and unencumbered software",
    "zlib license",
    "boost software license",
)


def detect_license_class(repo_dir: str | os.PathLike[str]) -> LicenseClass:
    """Classify a repository by the licence file at its root.

    No licence file means ``unlicensed``; a file whose text matches neither
    keyword list is ``unknown``.
    """
    repo_dir = Path(repo_dir)
    if not repo_dir.is_dir():
        return LicenseClass.UNLICENSED
    candidates = sorted(p for p in repo_dir.iterdir() if p.is_file() and _LICENSE_FILE.match(p.name))
    if not candidates:
        return LicenseClass.UNLICENSED
    for p in candidates:
        try:
            text = p.read_text(encoding="utf-8", errors="replace").lower()
        except OSError:
            continue
        if any(k in text for k in _COPYLEFT):
            return LicenseClass.COPYLEFT
        if any(k in text for k in _PERMISSIVE):
            return LicenseClass.PERMISSIVE
    return LicenseClass.UNKNOWN


def repo_licenses(root: str | os.PathLike[str], repo_ids: Iterable[str]) -> dict[str, LicenseClass]:
    root = Path(root)
    return {r: detect_license_class(root / r) if r != "." else LicenseClass.UNKNOWN for r in sorted(set(repo_ids))}


def build_occurrences(
    files: Iterable[FeatureFile],
    licenses: Mapping[str, LicenseClass] | None = None,
) -> list[StepOccurrence]:
    licenses = licenses or {}
    out: list[StepOccurrence] = []
    for ff in files:
        lic = licenses.get(ff.repo_id, LicenseClass.UNKNOWN)
        for step in ff.steps:
            norm = whitespace_collapse(step.raw_text)
            out.append(
                StepOccurrence(
                    repo_id=ff.repo_id,
                    path=ff.path,
                    line_no=step.line_no,
                    keyword=step.keyword.value,
                    raw_text=step.raw_text,
                    normalized_text=norm,
                    identity_digest=step_identity(norm),
                    has_docstring=step.has_docstring,
                    has_datatable=step.has_datatable,
                    is_background=step.is_background,
                    is_outline=step.is_outline,
                    license_class=lic,
                )
            )
    return out
