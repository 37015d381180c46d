"""Line-oriented parser for English Gherkin ``.feature`` files.

Only the parts needed for step-level duplicate detection are modelled:
features, backgrounds, scenarios, scenario outlines and their steps.
DocStrings and DataTables are recognised so they can be attached to the
preceding step as flags; their contents are never kept.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterator

__all__ = [
    "Block",
    "BlockKind",
    "Feature",
    "FeatureFile",
    "Keyword",
    "Step",
    "parse_feature",
    "scan_tree",
]


class Keyword(str, Enum):
    GIVEN = "Given"
    WHEN = "When"
    THEN = "Then"
    AND = "And"
    BUT = "But"


class BlockKind(str, Enum):
    BACKGROUND = "background"
    SCENARIO = "scenario"
    OUTLINE = "outline"


@dataclass(frozen=True)
class Step:
    keyword: Keyword
    raw_text: str
    line_no: int
    has_docstring: bool = False
    has_datatable: bool = False
    is_background: bool = False
    is_outline: bool = False


@dataclass
class Block:
    kind: BlockKind
    name: str
    line_no: int
    rule: str | None = None
    steps: list[Step] = field(default_factory=list)
    examples_rows: int = 0


@dataclass
class Feature:
    name: str
    line_no: int
    blocks: list[Block] = field(default_factory=list)


@dataclass
class FeatureFile:
    repo_id: str
    path: str
    features: list[Feature] = field(default_factory=list)
    parse_errors: list[tuple[int, str]] = field(default_factory=list)

    @property
    def steps(self) -> list[Step]:
        return [s for f in self.features for b in f.blocks for s in b.steps]


_STEP_RE = re.compile(r"^(Given|When|Then|And|But)\s+(.*)$|^\*\s+(.*)$")
_HEADER_RE = re.compile(
    r"^(Feature|Rule|Background|Scenario Outline|Scenario Template|Scenario|Example|Examples|Scenarios)\s*:(.*)$"
)
_LANGUAGE_RE = re.compile(r"^#\s*language\s*:\s*(\S+)\s*$")

_BLOCK_HEADERS = {
    "Background": BlockKind.BACKGROUND,
    "Scenario": BlockKind.SCENARIO,
    "Example": BlockKind.SCENARIO,
    "Scenario Outline": BlockKind.OUTLINE,
    "Scenario Template": BlockKind.OUTLINE,
}


class _Parser:
    def __init__(self, ff: FeatureFile) -> None:
        self.ff = ff
        self.feature: Feature | None = None
        self.block: Block | None = None
        self.rule: str | None = None
        self.in_examples = False
        # "description" while free text may follow a header; "steps" once a step was seen
        self.mode = "top"
        self.last_step_index: int | None = None
        self.docstring: tuple[str, int] | None = None

    def error(self, line_no: int, message: str) -> None:
        self.ff.parse_errors.append((line_no, message))

    def _flag_last_step(self, **flags: bool) -> None:
        assert self.block is not None and self.last_step_index is not None
        i = self.last_step_index
        self.block.steps[i] = replace(self.block.steps[i], **flags)

    def feed(self, line_no: int, raw: str) -> None:
        line = raw.strip()

        if self.docstring is not None:
            if line.startswith(self.docstring[0]):
                self.docstring = None
            return

        if not line or line.startswith("#"):
            return

        if line.startswith('"""') or line.startswith("```"):
            delim = line[:3]
            if self.last_step_index is None:
                self.error(line_no, "DocString without a preceding step")
            else:
                self._flag_last_step(has_docstring=True)
            self.docstring = (delim, line_no)
            return

        if line.startswith("|"):
            if self.in_examples:
                assert self.block is not None
                self.block.examples_rows += 1
            elif self.last_step_index is not None:
                self._flag_last_step(has_datatable=True)
            else:
                self.error(line_no, "table row without a preceding step or Examples:")
            return

        if line.startswith("@"):
            return

        header = _HEADER_RE.match(line)
        if header:
            self._header(line_no, header.group(1), header.group(2).strip())
            return

        step = _STEP_RE.match(line)
        if step:
            self._step(line_no, step)
            return

        if self.mode == "description":
            return
        self.error(line_no, f"unexpected line: {line[:60]!r}")
        # skip until the next recognisable keyword line
        self.mode = "description"
        self.last_step_index = None

    def _header(self, line_no: int, word: str, name: str) -> None:
        self.last_step_index = None
        if word == "Feature":
            self.feature = Feature(name=name, line_no=line_no)
            self.ff.features.append(self.feature)
            self.block = None
            self.rule = None
            self.in_examples = False
            self.mode = "description"
            return
        if self.feature is None:
            self.error(line_no, f"{word}: outside of a Feature")
            self.mode = "description"
            return
        if word == "Rule":
            self.rule = name
            self.block = None
            self.in_examples = False
            self.mode = "description"
            return
        if word in ("Examples", "Scenarios"):
            if self.block is None or self.block.kind is not BlockKind.OUTLINE:
                self.error(line_no, "Examples: outside of a Scenario Outline")
                self.block = None
                self.in_examples = False
            else:
                self.in_examples = True
            self.mode = "description"
            return
        self.block = Block(kind=_BLOCK_HEADERS[word], name=name, line_no=line_no, rule=self.rule)
        self.feature.blocks.append(self.block)
        self.in_examples = False
        self.mode = "description"

    def _step(self, line_no: int, match: re.Match[str]) -> None:
        if self.block is None:
            self.error(line_no, "step outside of a Scenario or Background")
            self.mode = "description"
            self.last_step_index = None
            return
        if self.in_examples:
            self.error(line_no, "step inside an Examples: block")
            self.mode = "description"
            self.last_step_index = None
            return
        keyword = Keyword(match.group(1)) if match.group(1) else Keyword.AND
        text = (match.group(2) if match.group(1) else match.group(3)).strip()
        self.block.steps.append(
            Step(
                keyword=keyword,
                raw_text=text,
                line_no=line_no,
                is_background=self.block.kind is BlockKind.BACKGROUND,
                is_outline=self.block.kind is BlockKind.OUTLINE,
            )
        )
        self.last_step_index = len(self.block.steps) - 1
        self.mode = "steps"

    def finish(self) -> None:
        if self.docstring is not None:
            self.error(self.docstring[1], "unterminated DocString")


def parse_feature(source: str | bytes, repo_id: str = "", path: str = "") -> FeatureFile:
    """Parse one feature file.

    Malformed constructs are recorded in ``parse_errors`` and parsing resumes at
    the next keyword line; a bad file never raises.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    ff = FeatureFile(repo_id=repo_id, path=path)
    lines = source.splitlines()
    if lines and lines[0].startswith("\ufeff"):
        lines[0] = lines[0][1:]

    for i, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if stripped and not stripped.startswith("#"):
            break
        lang = _LANGUAGE_RE.match(stripped)
        if lang and lang.group(1).lower() not in ("en", "en-us", "en-gb"):
            ff.parse_errors.append((i, f"unsupported language {lang.group(1)!r}; file skipped"))
            return ff

    parser = _Parser(ff)
    for i, raw in enumerate(lines, start=1):
        parser.feed(i, raw)
    parser.finish()
    return ff


def _iter_feature_paths(root: Path) -> Iterator[Path]:
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            if name.endswith(".feature"):
                yield Path(dirpath) / name


def scan_tree(root: str | os.PathLike[str]) -> list[FeatureFile]:
    """Parse every ``.feature`` file below *root*.

    Each top-level directory of *root* is one repository; the returned paths
    are relative to that repository directory. Files sitting directly in
    *root* get the repo id ``"."``.
    """
    root = Path(root)
    if not root.is_dir():
        raise NotADirectoryError(str(root))
    paths = sorted(_iter_feature_paths(root), key=lambda p: p.relative_to(root).parts)
    out: list[FeatureFile] = []
    for p in paths:
        rel = p.relative_to(root).parts
        if len(rel) > 1:
            repo_id, inner = rel[0], "/".join(rel[1:])
        else:
            repo_id, inner = ".", rel[0]
        try:
            data = p.read_bytes()
        except OSError as exc:
            out.append(FeatureFile(repo_id=repo_id, path=inner, parse_errors=[(0, f"unreadable: {exc}")]))
            continue
        out.append(parse_feature(data, repo_id=repo_id, path=inner))
    return out
