"""Command-line interface: ``stepdedup scan|calibrate|relabel|savings``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 embedding-provider error.
"""

from __future__ import annotations

import csv
import json
import sys
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import click

from . import __version__
from .calibration import BASELINES, DETECTORS, calibrate
from .config import FORMATS, RunConfig, load_config, load_synonym_table, make_provider
from .corpus import build_occurrences, repo_licenses
from .detector import Strategy, detect, duplication_rate, per_repo_rates
from .errors import ConfigError, DataError, ProviderError
from .gherkin import scan_tree
from .identity import LicenseClass
from .pairs import dump_pairs, load_pairs
from .reports import (
    clusters_doc,
    clusters_from_doc,
    html_page,
    html_table,
    provenance,
    read_json,
    read_steps_csv,
    write_json,
    write_steps_csv,
    write_steps_parquet,
    write_text,
)
from .savings import Attribution, aggregate_savings, cluster_savings, repo_savings
from .scorefree import relabel_benchmark
from .stats import descriptive_stats, fleiss_kappa, ratings_matrix

EMBEDDING_STRATEGIES = {Strategy.SEMANTIC.value, Strategy.HYBRID.value}


@dataclass
class State:
    config: RunConfig
    out: Path

    def outdir(self) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out


def _meta(cfg: RunConfig, provider) -> dict:
    return provenance(
        cfg.config_hash(),
        getattr(provider, "name", None),
        getattr(provider, "dim", None),
        cfg.seed,
    )


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON run configuration.")
@click.option("--seed", type=int, help="Seed for bootstrap and CV shuffles.")
@click.option("--provider", help="Embedding provider: 'fallback' or 'external:<command-or-url>'.")
@click.option("--out", type=click.Path(file_okay=False), default="stepdedup-out", show_default=True)
@click.option("--format", "formats", multiple=True, type=click.Choice(FORMATS), help="Repeatable; json and csv are always written.")
@click.version_option(__version__, prog_name="stepdedup")
@click.pass_context
def cli(ctx: click.Context, config_path, seed, provider, out, formats) -> None:
    """Find duplicate Gherkin steps and calibrate the detector."""
    cfg = load_config(config_path) if config_path else RunConfig()
    fmts = tuple(dict.fromkeys(("json", "csv") + tuple(formats))) if formats else None
    ctx.obj = State(cfg.with_overrides(seed=seed, provider=provider, formats=fmts), Path(out))


# --- scan --------------------------------------------------------------------


@cli.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--strategy", "strategies", multiple=True, type=click.Choice([s.value for s in Strategy]))
@click.option("--allow-large", is_flag=True, help="Permit all-pairs embedding search beyond 50,000 unique texts.")
@click.pass_obj
def scan(state: State, root: str, strategies: Sequence[str], allow_large: bool) -> None:
    """Parse ROOT (one sub-directory per repository) and cluster duplicate steps."""
    cfg = state.config.with_overrides(strategies=tuple(strategies) or None, allow_large=allow_large or None)
    files = scan_tree(root)
    licenses = repo_licenses(root, (f.repo_id for f in files))
    for repo, cls in cfg.license_overrides.items():
        licenses[repo] = LicenseClass(cls)
    occs = build_occurrences(files, licenses)
    if not occs:
        raise DataError(f"no parseable steps under {root}")

    run = [Strategy.EXACT.value] + [s for s in cfg.strategies if s != Strategy.EXACT.value]
    provider = make_provider(cfg.provider) if EMBEDDING_STRATEGIES & set(run) else None
    results = {s: detect(occs, s, cfg.strategy, provider, allow_large=cfg.allow_large) for s in run}
    meta = _meta(cfg, provider)
    out = state.outdir()

    write_steps_csv(occs, out / "steps.csv")
    if "columnar" in cfg.formats:
        write_steps_parquet(occs, out / "steps.parquet")
    for s, clusters in results.items():
        write_json(clusters_doc(s, clusters, meta), out / f"clusters_{s}.json")

    repo_rates = per_repo_rates(occs, Strategy.EXACT, cfg.strategy)
    unique = sorted({o.normalized_text for o in occs})
    summary = {
        "meta": meta,
        "config": cfg.to_dict(),
        "files": {
            "scanned": len(files),
            "with_steps": sum(1 for f in files if f.steps),
            "with_errors": sum(1 for f in files if f.parse_errors),
            "parse_errors": [
                {"repo": f.repo_id, "path": f.path, "line": ln, "message": msg} for f in files for ln, msg in f.parse_errors
            ],
        },
        "repositories": len(repo_rates.rates),
        "steps": {
            "total": len(occs),
            "unique_texts": len(unique),
            "background": sum(o.is_background for o in occs),
            "outline": sum(o.is_outline for o in occs),
            "with_docstring": sum(o.has_docstring for o in occs),
            "with_datatable": sum(o.has_datatable for o in occs),
            "license_mix": dict(sorted(Counter(o.license_class.value for o in occs).items())),
        },
        "length_percentiles": {
            "occurrences": descriptive_stats([len(o.normalized_text) for o in occs]),
            "unique_texts": descriptive_stats([len(t) for t in unique]),
        },
        "duplication_rate": duplication_rate(results[Strategy.EXACT.value], len(occs)),
        "strategies": {s: _strategy_summary(c, len(occs)) for s, c in results.items()},
        "per_repo": {
            "strategy": Strategy.EXACT.value,
            "attribution": "repo_local",
            "rates": repo_rates.rates,
            "steps": repo_rates.steps,
            "median_rate": repo_rates.median,
            "spearman_rate_vs_steps": repo_rates.spearman,
        },
    }
    write_json(summary, out / "summary.json")
    if "html" in cfg.formats:
        write_text(_scan_html(summary, results), out / "report.html")
    click.echo(
        f"{len(occs)} steps in {len(files)} files; exact duplication rate "
        f"{summary['duplication_rate']:.2%}; outputs in {out}"
    )


def _strategy_summary(clusters, total: int) -> dict:
    dup = [c for c in clusters if c.occurrence_count > 1]
    return {
        "clusters": len(clusters),
        "duplicate_clusters": len(dup),
        "duplicate_occurrences": sum(c.occurrence_count for c in dup),
        "duplication_rate": duplication_rate(clusters, total),
        "top": [
            {
                "canonical_text": c.canonical_text,
                "occurrence_count": c.occurrence_count,
                "distinct_files": c.distinct_files,
                "distinct_repos": c.distinct_repos,
            }
            for c in dup[:10]
        ],
    }


def _scan_html(summary: dict, results: dict) -> str:
    sections = [
        (
            "Corpus",
            html_table(
                ["steps", "unique texts", "files", "repositories", "exact duplication rate"],
                [[summary["steps"]["total"], summary["steps"]["unique_texts"], summary["files"]["scanned"],
                  summary["repositories"], summary["duplication_rate"]]],
            ),
        )
    ]
    for s, clusters in results.items():
        rows = [[i + 1, c.canonical_text, c.occurrence_count, c.distinct_files, c.distinct_repos]
                for i, c in enumerate(clusters[:25]) if c.occurrence_count > 1]
        sections.append((f"Top clusters: {s}", html_table(["#", "canonical text", "occurrences", "files", "repos"], rows)))
    return html_page("Duplicate steps", summary["meta"], sections)


# --- calibrate -----------------------------------------------------------------


@cli.command("calibrate")
@click.argument("pairs_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", "methods", multiple=True, type=click.Choice(DETECTORS + BASELINES))
@click.option("--overlap", type=click.Path(exists=True, dir_okay=False), help="Multi-annotator ratings for Fleiss' kappa.")
@click.option("--synonyms", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def calibrate_cmd(state: State, pairs_file: str, methods: Sequence[str], overlap: str | None, synonyms: str | None) -> None:
    """Best-F1 operating points with bootstrap intervals on a labelled pair file."""
    cfg = state.config
    pairs = load_pairs(pairs_file)
    if not pairs:
        raise DataError(f"{pairs_file}: no labelled pairs")
    methods = tuple(methods) or DETECTORS + BASELINES
    provider = make_provider(cfg.provider) if EMBEDDING_STRATEGIES & set(methods) else None
    report = calibrate(
        pairs,
        methods,
        cfg.strategy,
        provider,
        load_synonym_table(synonyms or cfg.synonyms),
        seed=cfg.seed,
        B=cfg.bootstrap_resamples,
        folds=cfg.folds,
    )
    if overlap:
        report["fleiss"] = _fleiss_from_file(overlap)
    doc = {"meta": _meta(cfg, provider), "config": cfg.to_dict(), **report}
    out = state.outdir()
    write_json(doc, out / "calibration.json")
    _write_calibration_csv(report, out / "calibration.csv")
    if "html" in cfg.formats:
        write_text(_calibration_html(doc), out / "calibration.html")
    for m, row in report["methods"].items():
        p = row["primary"]
        click.echo(f"{m:<11} thr={p['threshold']:.2f} P={p['precision']:.3f} R={p['recall']:.3f} F1={p['f1']:.3f}")


def _fleiss_from_file(path: str) -> dict:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                label = rec["label"]
                positive = label if isinstance(label, bool) else label == "duplicate"
                records.append((str(rec["pair_id"]), positive))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}: line {line_no}: bad rating record ({exc})") from None
    m = ratings_matrix(records)
    try:
        kappa = fleiss_kappa(m)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    agree = int(sum(1 for row in m if 0 in row))
    return {"items": int(m.shape[0]), "raters": int(m[0].sum()), "unanimous_items": agree, "kappa": kappa}


def _write_calibration_csv(report: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "kind", "threshold", "precision", "precision_lo", "precision_hi", "recall", "recall_lo",
                    "recall_hi", "f1", "f1_lo", "f1_hi", "f1_score_free", "score_free_threshold", "f1_score_free_tuned",
                    "cv_mean", "cv_sd"])
        for m, row in report["methods"].items():
            p = row["primary"]
            w.writerow([m, row["kind"], p["threshold"], p["precision"], *p["precision_ci"], p["recall"], *p["recall_ci"],
                        p["f1"], *p["f1_ci"], row["score_free_at_primary_threshold"]["f1"],
                        row["score_free_tuned"]["threshold"], row["score_free_tuned"]["f1"],
                        row["cv"].get("mean", ""), row["cv"].get("sd", "")])


def _calibration_html(doc: dict) -> str:
    rows = []
    for m, row in doc["methods"].items():
        p = row["primary"]
        rows.append([m, p["threshold"], p["precision"], f"[{p['precision_ci'][0]:.3f}, {p['precision_ci'][1]:.3f}]",
                     p["recall"], f"[{p['recall_ci'][0]:.3f}, {p['recall_ci'][1]:.3f}]", p["f1"],
                     f"[{p['f1_ci'][0]:.3f}, {p['f1_ci'][1]:.3f}]", row["score_free_at_primary_threshold"]["f1"]])
    agreement = doc["protocol_agreement"]
    return html_page(
        "Calibration",
        doc["meta"],
        [
            ("Operating points", html_table(["method", "thr", "P", "P 95% CI", "R", "R 95% CI", "F1", "F1 95% CI", "F1 score-free"], rows)),
            ("Protocol agreement", html_table(["Cohen kappa", "disagreements", "chance disagreement"],
                                              [[agreement["cohen_kappa"], agreement["disagreements"], agreement["chance_disagreement"]]])),
        ],
    )


# --- relabel -------------------------------------------------------------------


@cli.command()
@click.argument("pairs_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--synonyms", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def relabel(state: State, pairs_file: str, synonyms: str | None) -> None:
    """Relabel a pair file with the score-free protocol."""
    cfg = state.config
    pairs = load_pairs(pairs_file)
    table = load_synonym_table(synonyms or cfg.synonyms)
    relabelled, summary = relabel_benchmark(pairs, table)
    out = state.outdir()
    dump_pairs(relabelled, out / "pairs_score_free.jsonl")
    doc = {"meta": _meta(cfg, None), "synonyms": len(table), "summary": summary.__dict__}
    write_json(doc, out / "relabel_summary.json")
    click.echo(f"{summary.n} pairs relabelled: {summary.positives} duplicate, {summary.negatives} not duplicate")


# --- savings -------------------------------------------------------------------


@cli.command()
@click.argument("scan_dir", type=click.Path(file_okay=False), required=False)
@click.option("--attribution", type=click.Choice([a.value for a in Attribution]), help="Per-repository attribution mode.")
@click.pass_obj
def savings(state: State, scan_dir: str | None, attribution: str | None) -> None:
    """Consolidation savings from the artefacts of a previous scan (default: --out)."""
    cfg = state.config.with_overrides(attribution=attribution)
    src = Path(scan_dir) if scan_dir else state.out
    needed = [src / "steps.csv", src / "clusters_exact.json", src / "clusters_hybrid.json"]
    for p in needed:
        if not p.is_file():
            raise DataError(f"missing scan artefact: {p}")
    occs = read_steps_csv(needed[0])
    exact = clusters_from_doc(read_json(needed[1]), occs)
    hybrid = clusters_from_doc(read_json(needed[2]), occs)
    provider = make_provider(cfg.provider)
    per_repo = repo_savings(occs, cfg.strategy, provider, cfg.attribution, exact, hybrid)
    report = aggregate_savings(exact, hybrid, cfg.strategy, per_repo, cfg.attribution)
    meta = _meta(cfg, provider)

    rosters = {}
    for name, clusters in (("exact", exact), ("hybrid", hybrid)):
        conf = cfg.strategy.confidence.get(name, 0.0)
        rosters[name] = [
            {
                "rank": i + 1,
                "canonical_text": c.canonical_text,
                "occurrence_count": c.occurrence_count,
                "savings": cluster_savings(c, conf),
                "members": [{"repo": occs[m].repo_id, "path": occs[m].path, "line": occs[m].line_no} for m in c.members],
            }
            for i, c in enumerate(clusters)
            if c.occurrence_count > 1
        ]
    out = state.outdir()
    write_json({"meta": meta, "config": cfg.to_dict(), "savings": report.to_dict()}, out / "savings.json")
    write_json({"meta": meta, "rosters": rosters}, out / "rosters.json")
    with open(out / "tiers.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tier", "repo_count", "tier_steps", "tier_eliminable"])
        for t in report.tiers:
            w.writerow([t.tier, t.repo_count, t.tier_steps, t.tier_eliminable])
    if "html" in cfg.formats:
        sections = [
            ("Aggregate", html_table(["exact", "hybrid surplus", "hybrid confidence", "combined"],
                                     [[report.aggregate_exact, report.hybrid_surplus, report.hybrid_confidence, report.aggregate_combined]])),
            ("Sensitivity to hybrid confidence", html_table(["confidence", "aggregate"], sorted(report.sensitivity.items()))),
            ("Tiers", html_table(["tier", "repos", "steps", "eliminable (exact)"],
                                 [[t.tier, t.repo_count, t.tier_steps, t.tier_eliminable] for t in report.tiers])),
            ("Quality characteristics", html_table(["characteristic", "sub-characteristic", "report section"],
                                                   [list(t.values()) for t in report.iso_tags])),
        ]
        write_text(html_page("Consolidation savings", meta, sections), out / "savings.html")
    click.echo(
        f"eliminable occurrences: exact {report.aggregate_exact:,.0f}, "
        f"combined {report.aggregate_combined:,.1f} (hybrid confidence {report.hybrid_confidence})"
    )


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cli.main(args=list(argv) if argv is not None else None, prog_name="stepdedup", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except ProviderError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except (DataError, NotADirectoryError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
