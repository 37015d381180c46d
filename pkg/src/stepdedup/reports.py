"""Serialisation of step tables, clusters and reports (JSON, CSV, parquet, HTML)."""

from __future__ import annotations

import csv
import html
import json
import os
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import __version__
from .detector import Cluster, Strategy
from .errors import ConfigError, DataError
from .identity import LicenseClass, StepOccurrence, step_identity, whitespace_collapse

STEPS_COLUMNS = (
    "repo",
    "path",
    "line",
    "keyword",
    "text",
    "normalized_text",
    "hash",
    "is_background",
    "is_outline",
    "license",
)


def provenance(config_hash: str, provider_name: str | None, provider_dim: int | None, seed: int) -> dict[str, Any]:
    return {
        "tool": "stepdedup",
        "version": __version__,
        "config_hash": config_hash,
        "provider": {"name": provider_name, "dim": provider_dim},
        "seed": seed,
    }


def write_json(doc: Any, path: str | os.PathLike[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False, default=_json_default)
        fh.write("\n")


def _json_default(obj: Any) -> Any:
    if hasattr(obj, "value"):
        return obj.value
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def read_json(path: str | os.PathLike[str]) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _step_row(o: StepOccurrence) -> list[Any]:
    return [
        o.repo_id,
        o.path,
        o.line_no,
        o.keyword,
        o.raw_text,
        o.normalized_text,
        o.identity_digest,
        "true" if o.is_background else "false",
        "true" if o.is_outline else "false",
        o.license_class.value,
    ]


def write_steps_csv(occurrences: Iterable[StepOccurrence], path: str | os.PathLike[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STEPS_COLUMNS)
        for o in occurrences:
            w.writerow(_step_row(o))


def write_steps_parquet(occurrences: Sequence[StepOccurrence], path: str | os.PathLike[str]) -> None:
    try:
        import pyarrow as pa
        import pyarrow.parquet as pq
    except ImportError:
        raise ConfigError("columnar output needs pyarrow (pip install 'artifact[columnar]')") from None
    rows = [_step_row(o) for o in occurrences]
    cols = list(zip(*rows)) if rows else [[] for _ in STEPS_COLUMNS]
    arrays = {}
    for name, values in zip(STEPS_COLUMNS, cols):
        if name == "line":
            arrays[name] = pa.array(values, type=pa.int64())
        elif name in ("is_background", "is_outline"):
            arrays[name] = pa.array([v == "true" for v in values], type=pa.bool_())
        else:
            arrays[name] = pa.array(values, type=pa.string())
    pq.write_table(pa.table(arrays), path)


def read_steps_csv(path: str | os.PathLike[str]) -> list[StepOccurrence]:
    out: list[StepOccurrence] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != STEPS_COLUMNS:
            raise DataError(f"{path}: unexpected steps table header {header}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(STEPS_COLUMNS):
                raise DataError(f"{path}:{line_no}: expected {len(STEPS_COLUMNS)} columns, got {len(row)}")
            rec = dict(zip(STEPS_COLUMNS, row))
            norm = whitespace_collapse(rec["text"])
            if rec["hash"] != step_identity(norm):
                raise DataError(f"{path}:{line_no}: hash does not match step text")
            out.append(
                StepOccurrence(
                    repo_id=rec["repo"],
                    path=rec["path"],
                    line_no=int(rec["line"]),
                    keyword=rec["keyword"],
                    raw_text=rec["text"],
                    normalized_text=norm,
                    identity_digest=rec["hash"],
                    is_background=rec["is_background"] == "true",
                    is_outline=rec["is_outline"] == "true",
                    license_class=LicenseClass(rec["license"]),
                )
            )
    return out


def cluster_record(c: Cluster, rank: int) -> dict[str, Any]:
    return {
        "rank": rank,
        "canonical_text": c.canonical_text,
        "occurrence_count": c.occurrence_count,
        "distinct_files": c.distinct_files,
        "distinct_repos": c.distinct_repos,
        "members": list(c.members),
    }


def clusters_doc(strategy: str, clusters: Sequence[Cluster], meta: Mapping[str, Any]) -> dict[str, Any]:
    return {
        "meta": dict(meta),
        "strategy": strategy,
        "members_refer_to": "0-based data rows of steps.csv",
        "clusters": [cluster_record(c, i + 1) for i, c in enumerate(clusters)],
    }


def clusters_from_doc(doc: Mapping[str, Any], occurrences: Sequence[StepOccurrence]) -> list[Cluster]:
    strategy = Strategy(doc["strategy"])
    out = []
    for rec in doc["clusters"]:
        members = tuple(rec["members"])
        if any(m < 0 or m >= len(occurrences) for m in members):
            raise DataError(f"cluster {rec.get('rank')} references rows outside the steps table")
        out.append(
            Cluster(
                strategy=strategy,
                members=members,
                canonical_text=rec["canonical_text"],
                occurrence_count=len(members),
                distinct_files=rec["distinct_files"],
                distinct_repos=rec["distinct_repos"],
            )
        )
    return out


# --- HTML ------------------------------------------------------------------

_STYLE = """
body{font-family:system-ui,sans-serif;margin:2em;max-width:72em;color:#222}
table{border-collapse:collapse;margin:1em 0}
th,td{border:1px solid #ccc;padding:.3em .6em;text-align:left;vertical-align:top}
th{background:#f2f2f2}
td.num{text-align:right;font-variant-numeric:tabular-nums}
code{background:#f6f6f6;padding:0 .2em}
"""


def html_table(headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    head = "".join(f"<th>{html.escape(str(h))}</th>" for h in headers)
    body = []
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(f'<td class="num">{v:.4f}</td>')
            elif isinstance(v, int) and not isinstance(v, bool):
                cells.append(f'<td class="num">{v:,}</td>')
            else:
                cells.append(f"<td>{html.escape(str(v))}</td>")
        body.append("<tr>" + "".join(cells) + "</tr>")
    return f"<table><thead><tr>{head}</tr></thead><tbody>{''.join(body)}</tbody></table>"


def html_page(title: str, meta: Mapping[str, Any], sections: Sequence[tuple[str, str]]) -> str:
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en"><head><meta charset="utf-8">',
        f"<title>{html.escape(title)}</title><style>{_STYLE}</style></head><body>",
        f"<h1>{html.escape(title)}</h1>",
        "<p>" + " &middot; ".join(f"{html.escape(k)}: <code>{html.escape(json.dumps(v, sort_keys=True))}</code>" for k, v in meta.items()) + "</p>",
    ]
    for heading, body in sections:
        parts.append(f"<h2>{html.escape(heading)}</h2>{body}")
    parts.append("</body></html>")
    return "\n".join(parts) + "\n"


def write_text(text: str, path: str | os.PathLike[str]) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")
