#!/usr/bin/env python3
"""Sanity harness for the generator presets: a zero-effect cohort must score
at chance, and an HR-only cohort must put the heart-rate group on top of the
random-forest Gini importances.

    python3 scripts/check_null_control.py
"""
from __future__ import annotations

import argparse
import sys
import time

from cogload.classifiers import gini_importance
from cogload.selection import GridSpace, SplitConfig, extract_cohort, window_sweep
from cogload.synth import hr_only_params, iter_cohort_sessions, null_effect_params


def rf_sweep(params, window, seed, schemas=("unimodal", "multimodal")):
    tables = extract_cohort(iter_cohort_sessions(params), [window])
    return window_sweep(tables, schemas=schemas, kinds=("rf",),
                        grid=GridSpace(rf_n_trees=(100,)),
                        split_cfg=SplitConfig(seed=seed))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    # chance-level kappa scatters roughly as 1/sqrt(test rows), so tiny
    # cohorts can blow past the limit without any leak; keep >= 16
    ap.add_argument("--participants", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--window", type=float, default=60.0)
    ap.add_argument("--kappa-limit", type=float, default=0.15,
                    help="Largest |test kappa| tolerated on the null cohort.")
    args = ap.parse_args()

    t0 = time.time()
    null = null_effect_params(n_participants=args.participants, seed=args.seed)
    sweep = rf_sweep(null, args.window, args.seed)
    worst = max((r.kappa for r in sweep.flagged), key=abs)
    ok_null = abs(worst) <= args.kappa_limit
    print(f"null cohort: best |test kappa| = {abs(worst):.3f} "
          f"({'ok' if ok_null else 'LEAK?'}, limit {args.kappa_limit}) "
          f"[{time.time() - t0:.1f} s]")

    t0 = time.time()
    hr = hr_only_params(n_participants=args.participants, seed=args.seed)
    hr_sweep_res = rf_sweep(hr, args.window, args.seed, schemas=("multimodal",))
    groups = gini_importance(hr_sweep_res.flagged_row("multimodal", "rf").model).group_percent
    top = max(groups, key=groups.get)
    ok_hr = top == "hr"
    shares = " ".join(f"{g}={v:.1f}%" for g, v in sorted(groups.items()))
    print(f"hr-only cohort: top Gini group = {top} ({shares}) "
          f"({'ok' if ok_hr else 'WRONG GROUP'}) [{time.time() - t0:.1f} s]")

    return 0 if (ok_null and ok_hr) else 1


if __name__ == "__main__":
    sys.exit(main())
