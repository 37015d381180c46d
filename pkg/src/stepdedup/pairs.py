"""Labelled step-pair records and their newline-delimited JSON format."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Iterable

from .errors import DataError

__all__ = [
    "BANDS",
    "Label",
    "LabeledPair",
    "PairsFormatError",
    "Protocol",
    "band_for",
    "dump_pairs",
    "format_band",
    "load_pairs",
    "pair_from_record",
    "parse_band",
]

BANDS: tuple[tuple[float, float], ...] = (
    (0.50, 0.70),
    (0.70, 0.80),
    (0.80, 0.85),
    (0.85, 0.90),
    (0.90, 0.95),
    (0.95, 1.00),
)


class Label(str, Enum):
    DUPLICATE = "duplicate"
    NOT_DUPLICATE = "not_duplicate"


class Protocol(str, Enum):
    PRIMARY = "primary"
    SCORE_FREE = "score_free"


class PairsFormatError(DataError):
    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class LabeledPair:
    pair_id: str
    text_a: str
    text_b: str
    cosine_band: tuple[float, float]
    label: Label
    rule_fired: str
    annotator: str = "unknown"
    protocol: Protocol = Protocol.PRIMARY

    @property
    def is_duplicate(self) -> bool:
        return self.label is Label.DUPLICATE

    def relabelled(self, label: Label, rule: str, annotator: str, protocol: Protocol) -> LabeledPair:
        return replace(self, label=label, rule_fired=rule, annotator=annotator, protocol=protocol)

    def to_record(self) -> dict[str, Any]:
        return {
            "pair_id": self.pair_id,
            "text_a": self.text_a,
            "text_b": self.text_b,
            "cosine_band": format_band(self.cosine_band),
            "label": self.label.value,
            "rule_fired": self.rule_fired,
            "annotator": self.annotator,
            "protocol": self.protocol.value,
        }


_NUM = re.compile(r"\d*\.?\d+")


def parse_band(value: Any) -> tuple[float, float]:
    """Accept ``"[0.80, 0.85)"``, ``"0.80-0.85"`` or ``[0.8, 0.85]``."""
    if isinstance(value, (list, tuple)) and len(value) == 2:
        lo, hi = float(value[0]), float(value[1])
    elif isinstance(value, str):
        nums = _NUM.findall(value)
        if len(nums) != 2:
            raise ValueError(f"unrecognised band {value!r}")
        lo, hi = float(nums[0]), float(nums[1])
    else:
        raise ValueError(f"unrecognised band {value!r}")
    for band in BANDS:
        if abs(band[0] - lo) < 1e-9 and abs(band[1] - hi) < 1e-9:
            return band
    raise ValueError(f"unknown band [{lo}, {hi})")


def format_band(band: tuple[float, float]) -> str:
    return f"[{band[0]:.2f},{band[1]:.2f})"


def band_for(cosine: float) -> tuple[float, float] | None:
    """Band containing *cosine*, or ``None`` outside ``[0.50, 1.00)``."""
    for lo, hi in BANDS:
        if lo <= cosine < hi:
            return (lo, hi)
    return None


def _parse_label(value: Any) -> Label:
    if isinstance(value, bool):
        return Label.DUPLICATE if value else Label.NOT_DUPLICATE
    if isinstance(value, str):
        return Label(value.strip().lower())
    raise ValueError(f"bad label {value!r}")


def pair_from_record(rec: dict[str, Any], line_no: int = 0) -> LabeledPair:
    if not isinstance(rec, dict):
        raise PairsFormatError(line_no, "record is not an object")
    for key in ("text_a", "text_b", "cosine_band", "label", "rule_fired"):
        if rec.get(key) in (None, ""):
            raise PairsFormatError(line_no, f"missing field {key!r}")
    try:
        band = parse_band(rec["cosine_band"])
    except ValueError as exc:
        raise PairsFormatError(line_no, str(exc)) from None
    try:
        label = _parse_label(rec["label"])
        protocol = Protocol(rec.get("protocol") or Protocol.PRIMARY.value)
    except ValueError as exc:
        raise PairsFormatError(line_no, str(exc)) from None
    return LabeledPair(
        pair_id=str(rec.get("pair_id") or f"line-{line_no}"),
        text_a=str(rec["text_a"]),
        text_b=str(rec["text_b"]),
        cosine_band=band,
        label=label,
        rule_fired=str(rec["rule_fired"]),
        annotator=str(rec.get("annotator") or "unknown"),
        protocol=protocol,
    )


def load_pairs(path: str | os.PathLike[str]) -> list[LabeledPair]:
    pairs: list[LabeledPair] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PairsFormatError(line_no, f"invalid JSON: {exc.msg}") from None
            pairs.append(pair_from_record(rec, line_no))
    return pairs


def dump_pairs(pairs: Iterable[LabeledPair], path: str | os.PathLike[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(json.dumps(p.to_record(), ensure_ascii=False, sort_keys=True) + "\n")
