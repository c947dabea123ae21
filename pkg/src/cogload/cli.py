"""Command-line pipeline: synth | extract | run | stats.

Stage-isolated subcommands so each pipeline stage can be exercised on its
own. Every output file starts with a provenance comment line carrying the
effective config hash and seed; outputs are deterministic for a given seed
regardless of --jobs.
"""
from __future__ import annotations

import functools
import hashlib
import os
import sys
from dataclasses import replace
from pathlib import Path

import click
import pandas as pd

from .classifiers import gini_importance
from .config import (
    PipelineConfig,
    SchemaConfig,
    config_hash,
    load_config,
    load_mapping_into,
)
from .errors import CogloadError, MissingFile
from .features import schema_features
from .labels import DEFAULT_EDGES, label_segments
from .preprocess import CleaningConfig, clean_session
from .selection import SweepResult, extract_cohort, window_sweep
from .sensors import load_session, segment_windows
from .stats import PairedPredictions, accuracy, cochran_q, cohen_kappa, pairwise_mcnemar
from .synth import GeneratorParams, hr_only_params, null_effect_params, write_cohort

_PRESETS = {"strong": GeneratorParams, "null": null_effect_params, "hr_only": hr_only_params}


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CogloadError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
    return wrapper


def _write_csv(df: pd.DataFrame, path: str, provenance: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {provenance}\n")
        df.to_csv(fh, index=False, lineterminator="\n")


def _read_csv(path: str) -> pd.DataFrame:
    if not os.path.exists(path):
        raise MissingFile(path)
    return pd.read_csv(path, comment="#")


def _iter_sessions(data_dir: str):
    manifests = sorted(Path(data_dir).glob("*/manifest.json"))
    if not manifests:
        raise MissingFile(f"no */manifest.json under {data_dir}")
    for m in manifests:
        yield load_session(str(m.parent))


def _apply_overrides(cfg: PipelineConfig, seed, windows, schema, out_dir) -> PipelineConfig:
    if seed is not None:
        cfg = cfg.with_seed(seed)
    if windows:
        cfg = replace(cfg, windows=tuple(float(w) for w in windows.split(",")))
    if schema:
        flags = SchemaConfig(unimodal=schema in ("unimodal", "both"),
                             multimodal=schema in ("multimodal", "both"),
                             include_ipa_unimodal=cfg.schemas.include_ipa_unimodal,
                             include_ipa_multimodal=cfg.schemas.include_ipa_multimodal)
        cfg = replace(cfg, schemas=flags)
    if out_dir:
        cfg = replace(cfg, out_dir=out_dir)
    return cfg


@click.group()
def main():
    """Cognitive-load modeling from pupil, EDA, and heart-rate recordings."""


@main.command("synth")
@click.option("--params", "params_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="TOML/JSON file with generator parameters.")
@click.option("--preset", type=click.Choice(sorted(_PRESETS)), default="strong",
              help="Base parameter set when no --params file is given.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None)
@_guarded
def cmd_synth(params_file, preset, out_dir, seed):
    """Generate a synthetic cohort with planted load effects."""
    if params_file is not None:
        params = load_mapping_into(GeneratorParams, params_file)
    else:
        params = _PRESETS[preset]()
    if seed is not None:
        params = replace(params, seed=seed)
    paths = write_cohort(params, out_dir)
    click.echo(f"wrote {len(paths)} sessions under {out_dir} "
               f"(config_hash={config_hash(params)} seed={params.seed})")


@main.command("extract")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--windows", default=None, help="Comma-separated window lengths in seconds.")
@click.option("--schema", type=click.Choice(["unimodal", "multimodal", "both"]), default=None)
@_guarded
def cmd_extract(config_file, data_dir, out_dir, seed, windows, schema):
    """Export per-segment features to features.csv without any training."""
    cfg = load_config(config_file) if config_file else PipelineConfig()
    cfg = _apply_overrides(cfg, seed, windows, schema, out_dir)
    os.makedirs(cfg.out_dir, exist_ok=True)
    provenance = f"cogload extract config_hash={config_hash(cfg)} seed={cfg.seed}"

    tables = extract_cohort(_iter_sessions(data_dir), cfg.windows, cfg.cleaning, cfg.labels.edges)
    ipa_map = cfg.schemas.include_ipa_map()
    frames = []
    for schema_name in cfg.schemas.names():
        names = schema_features(schema_name, ipa_map[schema_name])
        for w in cfg.windows:
            df = tables[w].subset(names).to_frame()
            df.insert(0, "schema", schema_name)
            frames.append(df)
    out = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    path = os.path.join(cfg.out_dir, "features.csv")
    _write_csv(out, path, provenance)
    click.echo(f"wrote {path} ({len(out)} rows)")


def _importances_frame(sweep: SweepResult) -> pd.DataFrame:
    rows = []
    for r in sweep.flagged:
        if r.kind != "rf":
            continue
        rep = gini_importance(r.model)
        for name, v in rep.importances.items():
            rows.append({"model": f"{r.schema}_{r.kind}", "feature": name, "importance": v})
    return pd.DataFrame(rows, columns=["model", "feature", "importance"])


def _comparisons(sweep: SweepResult):
    """Pairwise McNemar rows plus the omnibus Cochran Q over flagged models."""
    preds = sweep.predictions_frame()
    model_cols = [c for c in preds.columns if c not in ("participant_id", "report_index", "truth")]
    if len(model_cols) < 2 or len(preds) == 0:
        return pd.DataFrame(columns=["model_a", "model_b", "chi2", "p", "eta2"]), None, preds
    paired = PairedPredictions(
        truth=tuple(preds["truth"]),
        predictions={c: tuple(preds[c]) for c in model_cols},
    )
    pairs = pd.DataFrame(pairwise_mcnemar(paired))
    q = cochran_q(paired.truth, paired.predictions)
    return pairs, q, preds


def _report_md(cfg: PipelineConfig, sweep: SweepResult, pairs: pd.DataFrame, q, preds,
               provenance: str) -> str:
    lines = [
        "# Cognitive-load model selection report",
        "",
        f"`{provenance}`",
        "",
        "## Flagged models (best window per classifier and schema)",
        "",
        "| schema | classifier | window (s) | kappa | accuracy | validation kappa | hyperparameters |",
        "|---|---|---|---|---|---|---|",
    ]
    for r in sorted(sweep.flagged, key=lambda r: (r.schema, r.kind)):
        hp = "; ".join(f"{k}={v}" for k, v in sorted(r.spec.hyperparameters.items()))
        lines.append(f"| {r.schema} | {r.kind} | {r.window_s:g} | {r.kappa:.3f} "
                     f"| {r.accuracy:.3f} | {r.validation_kappa:.3f} | {hp} |")
    lines += ["", "## Paired comparisons over the shared test rows", ""]
    if q is not None:
        lines.append(f"Cochran's Q = {q.statistic:.3f}, df = {q.df}, p = {q.p_value:.3f}, "
                     f"eta2 = {q.effect_size:.3f} over {len(preds)} shared test rows.")
        lines += ["", "| model a | model b | chi2 | p | eta2 |", "|---|---|---|---|---|"]
        for row in pairs.itertuples(index=False):
            lines.append(f"| {row.model_a} | {row.model_b} | {row.chi2:.3f} "
                         f"| {row.p:.3f} | {row.eta2:.3f} |")
    else:
        lines.append("Fewer than two flagged models shared test rows; no paired tests.")
    lines += ["", "## Feature-group importances (random forest)", ""]
    any_rf = False
    for r in sorted(sweep.flagged, key=lambda r: (r.schema, r.kind)):
        if r.kind != "rf":
            continue
        any_rf = True
        rep = gini_importance(r.model)
        groups = ", ".join(f"{g} {v:.1f}%" for g, v in sorted(rep.group_percent.items()))
        lines.append(f"- {r.schema}_rf (window {r.window_s:g} s): {groups}")
    if not any_rf:
        lines.append("No random-forest model in this run.")
    lines += [
        "",
        "## Conventions",
        "",
        f"- Load score: mean of intrinsic, extraneous, germane sub-scale means and the overall item; "
        f"levels split at left-closed edges {list(cfg.labels.edges)} (low < {cfg.labels.edges[0]:g} "
        f"<= moderate < {cfg.labels.edges[1]:g} <= high).",
        "- Segments: the window of sensor data immediately before each report; "
        f"windows swept over {[int(w) if w == int(w) else w for w in cfg.windows]} s.",
        "- Cohen's kappa uses marginal-product expected agreement.",
        "- McNemar tests are continuity-corrected, chi2 = (|b-c|-1)^2/(b+c), df = 1; "
        "eta2 = chi2/(n-1).",
        "- Cochran's Q over k models' correctness, df = k-1; eta2_Q = Q/(n(k-1)).",
        "- IPA: one-level Haar detail maxima above the universal threshold "
        "sigma_hat * sqrt(2 ln n), counted per second.",
        "- Standardization (z-score, train rows only) applies to SVMs and logistic "
        "regression; trees and naive Bayes see raw features.",
        "",
    ]
    return "\n".join(lines)


@main.command("run")
@click.option("--config", "config_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--windows", default=None, help="Comma-separated window lengths in seconds.")
@click.option("--schema", type=click.Choice(["unimodal", "multimodal", "both"]), default=None)
@click.option("--jobs", type=int, default=1, help="Worker processes for the sweep.")
@_guarded
def cmd_run(config_file, data_dir, out_dir, seed, windows, schema, jobs):
    """Full pipeline: clean, segment, label, sweep, compare, report."""
    cfg = load_config(config_file)
    cfg = _apply_overrides(cfg, seed, windows, schema, out_dir)
    os.makedirs(cfg.out_dir, exist_ok=True)
    provenance = f"cogload run config_hash={config_hash(cfg)} seed={cfg.seed}"
    failed_marker = os.path.join(cfg.out_dir, "FAILED")
    if os.path.exists(failed_marker):
        os.remove(failed_marker)
    try:
        tables = extract_cohort(_iter_sessions(data_dir), cfg.windows, cfg.cleaning,
                                cfg.labels.edges)
        sweep = window_sweep(
            tables,
            schemas=cfg.schemas.names(),
            kinds=cfg.kinds,
            grid=cfg.grid,
            split_cfg=cfg.split,
            k=cfg.kfold_k,
            include_ipa=cfg.schemas.include_ipa_map(),
            select_by=cfg.select_by,
            jobs=jobs,
        )
        if not sweep.rows:
            raise CogloadError("no trainable segments: every window was skipped")
        pairs, q, preds = _comparisons(sweep)

        _write_csv(sweep.to_frame(), os.path.join(cfg.out_dir, "sweep.csv"), provenance)
        _write_csv(preds, os.path.join(cfg.out_dir, "predictions.csv"), provenance)
        _write_csv(pairs, os.path.join(cfg.out_dir, "comparisons.csv"), provenance)
        _write_csv(_importances_frame(sweep), os.path.join(cfg.out_dir, "importances.csv"),
                   provenance)
        with open(os.path.join(cfg.out_dir, "report.md"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_report_md(cfg, sweep, pairs, q, preds, provenance))
    except Exception as exc:
        # flag partial outputs so downstream consumers never trust them
        with open(failed_marker, "w", encoding="utf-8") as fh:
            fh.write(f"{type(exc).__name__}: {exc}\n")
        raise
    click.echo(f"wrote sweep.csv, predictions.csv, comparisons.csv, importances.csv, "
               f"report.md under {cfg.out_dir} ({len(sweep.flagged)} flagged models)")


@main.command("stats")
@click.argument("predictions_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=0, help="Recorded in output provenance only.")
@_guarded
def cmd_stats(predictions_csv, out_dir, seed):
    """Recompute agreement metrics and paired tests from a predictions.csv."""
    df = _read_csv(predictions_csv)
    required = {"truth"}
    if not required.issubset(df.columns):
        raise CogloadError(f"predictions file must have columns {sorted(required)}, "
                           f"got {list(df.columns)}")
    model_cols = [c for c in df.columns
                  if c not in ("participant_id", "report_index", "truth")]
    if not model_cols:
        raise CogloadError("predictions file has no model columns")
    os.makedirs(out_dir, exist_ok=True)
    with open(predictions_csv, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()[:12]
    provenance = f"cogload stats config_hash={digest} seed={seed}"

    truth = tuple(df["truth"])
    metrics = pd.DataFrame([
        {"model": c,
         "kappa": cohen_kappa(truth, tuple(df[c])),
         "accuracy": accuracy(truth, tuple(df[c]))}
        for c in model_cols
    ])
    _write_csv(metrics, os.path.join(out_dir, "metrics.csv"), provenance)

    if len(model_cols) >= 2:
        paired = PairedPredictions(truth=truth,
                                   predictions={c: tuple(df[c]) for c in model_cols})
        pairs = pd.DataFrame(pairwise_mcnemar(paired))
        q = cochran_q(truth, paired.predictions)
        click.echo(f"cochran_q={q.statistic:.6g} df={q.df} p={q.p_value:.6g}")
    else:
        pairs = pd.DataFrame(columns=["model_a", "model_b", "chi2", "p", "eta2"])
    _write_csv(pairs, os.path.join(out_dir, "comparisons.csv"), provenance)
    click.echo(f"wrote metrics.csv and comparisons.csv under {out_dir}")


def segment_count(data_dir: str, window_s: float,
                  cleaning: CleaningConfig = CleaningConfig(),
                  edges=DEFAULT_EDGES) -> int:
    """Count label-bearing segments a window length yields on a data dir."""
    total = 0
    for session in _iter_sessions(data_dir):
        cleaned = clean_session(session, cleaning)
        seg = segment_windows(cleaned, window_s)
        total += len(label_segments(seg.segments, cleaned.reports, edges))
    return total


if __name__ == "__main__":
    main()
