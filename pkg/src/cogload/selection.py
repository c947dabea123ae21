"""Model selection: train/test split, stratified k-fold, kappa-maximizing
grid search, and the window-duration sweep.

The sweep evaluates every (schema, kind, window) combination on a shared
per-window split so that paired tests downstream compare predictions on
identical rows. Work items are independent and reduced in canonical
enumeration order, so parallel execution cannot change any output.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from .classifiers import ClassifierSpec, TrainedModel, fit, predict
from .errors import InvalidArgs, TooFewSamples, UnsatisfiableStratification
from .features import CANONICAL_ORDER, build_feature_vector, schema_features
from .labels import DEFAULT_EDGES, label_segments
from .preprocess import CleaningConfig, clean_session
from .sensors import Session, segment_windows
from .stats import accuracy, cohen_kappa

DEFAULT_WINDOWS = (30.0, 60.0, 90.0, 120.0, 150.0, 180.0, 210.0)


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.8
    stratified: bool = True
    group_by_participant: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidArgs(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def _class_sequence(y: np.ndarray) -> list:
    """Unique labels in first-appearance order after sorting by string, so
    iteration order never depends on row order."""
    return sorted(set(y.tolist()), key=str)


def split(X, y, groups, cfg: SplitConfig) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint, exhaustive train/test indices.

    Stratified mode rounds each class to the train fraction within one
    sample. Grouped mode keeps every participant on one side and fills the
    train side to the requested fraction of samples.
    """
    y = np.asarray(y)
    n = y.size
    if n < 10:
        raise TooFewSamples(f"need >= 10 rows to split, have {n}")
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    if cfg.group_by_participant:
        if groups is None:
            raise InvalidArgs("grouped split requires participant groups")
        groups = np.asarray(groups)
        uniq = sorted(set(groups.tolist()), key=str)
        if len(uniq) < 2:
            raise UnsatisfiableStratification("grouped split needs >= 2 participants")
        order = np.array(uniq, dtype=object)
        rng.shuffle(order)
        target = int(round(cfg.train_fraction * n))
        train_groups: set = set()
        covered = 0
        for g in order:
            if covered >= target:
                break
            size = int(np.count_nonzero(groups == g))
            if covered + size > n - 1:
                continue  # adding this participant would empty the test side
            train_groups.add(g)
            covered += size
        if not train_groups:
            train_groups.add(order[0])
        in_train = np.isin(groups, list(train_groups))
        train_idx = np.flatnonzero(in_train)
        test_idx = np.flatnonzero(~in_train)
        if cfg.stratified:
            train_classes = set(y[train_idx].tolist())
            if any(c not in train_classes for c in _class_sequence(y)):
                raise UnsatisfiableStratification(
                    "some class has no training rows under the grouped split"
                )
        return train_idx, test_idx
    if cfg.stratified:
        train_parts = []
        for c in _class_sequence(y):
            ids = np.flatnonzero(y == c)
            rng.shuffle(ids)
            n_train = int(round(cfg.train_fraction * ids.size))
            train_parts.append(ids[:n_train])
        train_mask = np.zeros(n, dtype=bool)
        train_mask[np.concatenate(train_parts)] = True
        if train_mask.all():  # keep the test side populated
            train_mask[train_parts[-1][-1]] = False
        if not train_mask.any():
            train_mask[train_parts[0][0]] = True
        return np.flatnonzero(train_mask), np.flatnonzero(~train_mask)
    order = rng.permutation(n)
    n_train = min(max(int(round(cfg.train_fraction * n)), 1), n - 1)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def kfold(train_idx, y, k: int = 4, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Stratified folds over the training rows: per class, shuffled samples
    are dealt round-robin with a rolling offset so fold sizes differ by at
    most one overall."""
    if k < 2:
        raise InvalidArgs(f"k must be >= 2, got {k}")
    train_idx = np.asarray(train_idx)
    y = np.asarray(y)
    if train_idx.size < k:
        raise TooFewSamples(f"{train_idx.size} training rows cannot make {k} folds")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for c in _class_sequence(y[train_idx]):
        ids = train_idx[y[train_idx] == c]
        rng.shuffle(ids)
        for i, idx in enumerate(ids):
            folds[(offset + i) % k].append(int(idx))
        offset = (offset + ids.size) % k
    out = []
    for f in range(k):
        val = np.sort(np.array(folds[f], dtype=np.int64))
        fit_rows = np.sort(np.array([i for g in range(k) if g != f for i in folds[g]], dtype=np.int64))
        out.append((fit_rows, val))
    return out


@dataclass(frozen=True)
class GridSpace:
    nb_alpha: tuple = (1.0,)
    dt_criterion: tuple = ("gini", "entropy")
    svm_linear_c: tuple = (0.1, 1.0, 10.0, 100.0)
    svm_rbf_c: tuple = (0.1, 1.0, 10.0, 100.0)
    logreg_c: tuple = (0.1, 1.0, 10.0, 100.0)
    rf_n_trees: tuple = (20, 40, 60, 80, 100)

    def __post_init__(self):
        for name in ("nb_alpha", "dt_criterion", "svm_linear_c", "svm_rbf_c",
                     "logreg_c", "rf_n_trees"):
            v = tuple(getattr(self, name))
            if not v:
                raise InvalidArgs(f"grid dimension {name} must be non-empty")
            object.__setattr__(self, name, v)

    def cells(self, kind: str) -> list[dict]:
        if kind == "nb":
            return [{"alpha": a} for a in self.nb_alpha]
        if kind == "dt":
            return [{"criterion": c} for c in self.dt_criterion]
        if kind == "svm_linear":
            return [{"C": c} for c in self.svm_linear_c]
        if kind == "svm_rbf":
            return [{"C": c} for c in self.svm_rbf_c]
        if kind == "logreg":
            return [{"C": c} for c in self.logreg_c]
        if kind == "rf":
            return [{"n_trees": t} for t in self.rf_n_trees]
        raise InvalidArgs(f"unknown classifier kind {kind!r}")

    def n_cells(self, kinds: Sequence[str]) -> int:
        return sum(len(self.cells(k)) for k in kinds)


@dataclass(frozen=True)
class GridCellResult:
    hyperparameters: dict
    fold_kappas: tuple
    mean_kappa: float
    errors: tuple


@dataclass(frozen=True)
class GridSearchResult:
    best: ClassifierSpec
    best_mean_kappa: float
    cells: tuple[GridCellResult, ...]


def grid_search(kind: str, grid: GridSpace, X, y, feature_names,
                k: int = 4, seed: int = 0, metric: str = "kappa") -> GridSearchResult:
    """Pick the cell with the best mean validation kappa over shared folds;
    ties keep the earliest cell in grid order. Cells that fail on every fold
    are excluded (their errors are kept in the cell table)."""
    if metric != "kappa":
        raise InvalidArgs(f"only the kappa metric is supported, got {metric!r}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    folds = kfold(np.arange(y.size), y, k=k, seed=seed)
    results = []
    best_cell: Optional[dict] = None
    best_kappa = -np.inf
    for cell in grid.cells(kind):
        kappas = []
        errors = []
        for fit_rows, val_rows in folds:
            try:
                model = fit(ClassifierSpec(kind, dict(cell), seed), X[fit_rows], y[fit_rows],
                            feature_names=feature_names)
                kappas.append(cohen_kappa(y[val_rows], predict(model, X[val_rows])))
            except Exception as exc:  # recorded, not fatal: other cells may work
                errors.append(f"{type(exc).__name__}: {exc}")
        mean_kappa = float(np.mean(kappas)) if kappas else float("nan")
        results.append(GridCellResult(dict(cell), tuple(kappas), mean_kappa, tuple(errors)))
        if kappas and mean_kappa > best_kappa:
            best_kappa = mean_kappa
            best_cell = dict(cell)
    if best_cell is None:
        raise InvalidArgs(f"every {kind} grid cell failed on all folds")
    return GridSearchResult(
        best=ClassifierSpec(kind, best_cell, seed),
        best_mean_kappa=best_kappa,
        cells=tuple(results),
    )


# --- feature tables ----------------------------------------------------------

@dataclass(frozen=True)
class FeatureTable:
    """Per-window design matrix with row provenance."""

    window_s: float
    feature_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    participants: np.ndarray
    report_indices: np.ndarray
    skipped_windows: int = 0

    def __len__(self):
        return self.y.size

    def subset(self, names: Sequence[str]) -> "FeatureTable":
        missing = [n for n in names if n not in self.feature_names]
        if missing:
            raise InvalidArgs(f"features not in table: {missing}")
        cols = [self.feature_names.index(n) for n in names]
        return replace(self, feature_names=tuple(names), X=self.X[:, cols])

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.X, columns=list(self.feature_names))
        df.insert(0, "segment_id", [f"{p}:{r}" for p, r in zip(self.participants, self.report_indices)])
        df.insert(1, "participant_id", self.participants)
        df.insert(2, "window_s", self.window_s)
        df.insert(3, "label", self.y)
        return df


def extract_cohort(sessions: Iterable[Session], windows: Sequence[float] = DEFAULT_WINDOWS,
                   cleaning: CleaningConfig = CleaningConfig(), edges=DEFAULT_EDGES,
                   ) -> dict[float, FeatureTable]:
    """Clean each session once, then build one full-width (all features plus
    IPA) table per window. Sessions may come from a generator; only one
    cleaned session is held at a time."""
    windows = [float(w) for w in windows]
    rows: dict[float, list] = {w: [] for w in windows}
    skips: dict[float, int] = {w: 0 for w in windows}
    names = CANONICAL_ORDER
    for session in sessions:
        cleaned = clean_session(session, cleaning)
        for w in windows:
            seg_result = segment_windows(cleaned, w)
            skips[w] += len(seg_result.skipped)
            for seg in label_segments(seg_result.segments, cleaned.reports, edges):
                fv = build_feature_vector(seg, "multimodal", include_ipa=True)
                rows[w].append((seg.participant_id, seg.report_index, seg.label.value,
                                fv.as_array(names)))
    tables = {}
    for w in windows:
        if rows[w]:
            parts, report_idx, labels, vecs = zip(*rows[w])
            X = np.vstack(vecs)
        else:
            parts, report_idx, labels = (), (), ()
            X = np.empty((0, len(names)))
        tables[w] = FeatureTable(
            window_s=w,
            feature_names=names,
            X=X,
            y=np.array(labels, dtype=object),
            participants=np.array(parts, dtype=object),
            report_indices=np.array(report_idx, dtype=np.int64),
            skipped_windows=skips[w],
        )
    return tables


# --- window sweep ------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    schema: str
    kind: str
    window_s: float
    spec: ClassifierSpec
    validation_kappa: float
    kappa: float
    accuracy: float
    flagged: bool
    model: TrainedModel
    test_truth: tuple
    test_predictions: tuple
    test_participants: tuple
    test_report_indices: tuple


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    select_by: str

    @property
    def flagged(self) -> tuple[SweepRow, ...]:
        return tuple(r for r in self.rows if r.flagged)

    def flagged_row(self, schema: str, kind: str) -> SweepRow:
        for r in self.flagged:
            if r.schema == schema and r.kind == kind:
                return r
        raise KeyError(f"no flagged row for ({schema}, {kind})")

    def to_frame(self, flagged_only: bool = False) -> pd.DataFrame:
        rows = self.flagged if flagged_only else self.rows
        return pd.DataFrame([
            {
                "schema": r.schema,
                "kind": r.kind,
                "kappa": r.kappa,
                "accuracy": r.accuracy,
                "window_s": r.window_s,
                "hyperparameters": ";".join(
                    f"{k}={v}" for k, v in sorted(r.spec.hyperparameters.items())
                ),
                "validation_kappa": r.validation_kappa,
                "flagged": r.flagged,
            }
            for r in rows
        ])

    def predictions_frame(self) -> pd.DataFrame:
        """Wide per-row predictions of every flagged model, inner-joined on
        the shared test keys (same split per window makes rows comparable
        only within a window; models from different windows are joined on
        participant/report identity)."""
        frames = []
        for r in self.flagged:
            name = f"{r.schema}_{r.kind}"
            df = pd.DataFrame({
                "participant_id": r.test_participants,
                "report_index": r.test_report_indices,
                "truth": r.test_truth,
                name: r.test_predictions,
            })
            frames.append(df.set_index(["participant_id", "report_index"]))
        if not frames:
            return pd.DataFrame(columns=["participant_id", "report_index", "truth"])
        out = frames[0]
        for df in frames[1:]:
            out = out.join(df.drop(columns=["truth"]), how="inner")
        return out.reset_index().sort_values(["participant_id", "report_index"]).reset_index(drop=True)


def _evaluate_combo(args) -> tuple:
    """One independent work item: grid-search, refit, and test one
    (window, schema, kind) combination."""
    (window_s, schema, kind, table, train_idx, test_idx, grid, k, seed, include_ipa) = args
    names = schema_features(schema, include_ipa)
    sub = table.subset(names)
    X_train, y_train = sub.X[train_idx], sub.y[train_idx]
    search = grid_search(kind, grid, X_train, y_train, names, k=k, seed=seed)
    model = fit(search.best, X_train, y_train, feature_names=names, window_s=window_s)
    preds = predict(model, sub.X[test_idx])
    y_test = sub.y[test_idx]
    return (
        window_s, schema, kind, model,
        float(search.best_mean_kappa),
        cohen_kappa(y_test, preds),
        accuracy(y_test, preds),
        tuple(y_test.tolist()),
        tuple(preds.tolist()),
        tuple(sub.participants[test_idx].tolist()),
        tuple(int(i) for i in sub.report_indices[test_idx]),
    )


def window_sweep(tables: dict[float, FeatureTable], schemas: Sequence[str] = ("unimodal", "multimodal"),
                 kinds: Sequence[str] = ("nb", "dt", "svm_linear", "svm_rbf", "logreg", "rf"),
                 grid: GridSpace = GridSpace(), split_cfg: SplitConfig = SplitConfig(),
                 k: int = 4, include_ipa: Optional[dict] = None,
                 select_by: str = "test_kappa", jobs: int = 1) -> SweepResult:
    """Grid-search and evaluate every (schema, kind, window) combination.

    Per window the split is computed once and shared by all schemas and
    kinds, so flagged models are comparable in paired tests. The best window
    per (schema, kind) is flagged by test kappa (or mean validation kappa
    with select_by="validation_kappa"); ties keep the earliest window.
    """
    if select_by not in ("test_kappa", "validation_kappa"):
        raise InvalidArgs(f"select_by must be test_kappa or validation_kappa, got {select_by!r}")
    include_ipa = include_ipa or {}
    windows = sorted(tables)
    splits = {}
    for w in windows:
        table = tables[w]
        if len(table) == 0:
            continue
        splits[w] = split(table.X, table.y, table.participants, split_cfg)
    items = [
        (w, schema, kind, tables[w], splits[w][0], splits[w][1], grid, k,
         split_cfg.seed, include_ipa.get(schema))
        for w in windows if w in splits
        for schema in schemas
        for kind in kinds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_evaluate_combo, items, chunksize=1))
    else:
        outputs = [_evaluate_combo(it) for it in items]

    rows = []
    for (w, schema, kind, model, val_kappa, kappa, acc, truth, preds, parts, rep_idx) in outputs:
        rows.append(SweepRow(
            schema=schema, kind=kind, window_s=w, spec=model.spec,
            validation_kappa=val_kappa, kappa=kappa, accuracy=acc, flagged=False,
            model=model, test_truth=truth, test_predictions=preds,
            test_participants=parts, test_report_indices=rep_idx,
        ))
    flagged_keys = set()
    for schema in schemas:
        for kind in kinds:
            group = [r for r in rows if r.schema == schema and r.kind == kind]
            if not group:
                continue
            score = (lambda r: r.kappa) if select_by == "test_kappa" else (lambda r: r.validation_kappa)
            best = max(group, key=score)  # max keeps the earliest on ties
            flagged_keys.add((best.schema, best.kind, best.window_s))
    rows = [
        replace(r, flagged=(r.schema, r.kind, r.window_s) in flagged_keys)
        for r in rows
    ]
    return SweepResult(rows=tuple(rows), select_by=select_by)
