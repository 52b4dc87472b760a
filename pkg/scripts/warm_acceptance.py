"""Populate the acceptance-test cache, stage by stage.

Runs the same pipelines the acceptance tests run (identical cache keys), so
a later `pytest tests/test_acceptance.py` finds everything warm.  Safe to
interrupt and rerun: every stage is skipped once its artifacts exist.

Usage: python scripts/warm_acceptance.py [stage ...]
"""

import os
import sys
import time
from pathlib import Path

os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")

sys.path.insert(0, str(Path(__file__).parent.parent / "tests"))

import numpy as np

from test_acceptance import (
    COVER_250,
    COVER_1000,
    STICK_1000,
    eval_rows,
    trained_bundle,
)
from skillplan.harness import ExperimentConfig


def log(msg: str) -> None:
    print(f"[{time.strftime('%H:%M:%S')}] {msg}", flush=True)


def run_seed(config: ExperimentConfig, seed: int, eval_config=None, tag=""):
    t0 = time.time()
    bundle, meta = trained_bundle(config, seed, None)
    log(f"{tag} seed {seed}: bundle ready ({time.time()-t0:.0f}s; "
        f"train was {meta['train_s']:.0f}s)")
    t0 = time.time()
    rows, eval_s = eval_rows(eval_config or config, bundle, seed, None)
    rate = 100.0 * np.mean([r.solved for r in rows])
    log(f"{tag} seed {seed}: eval {rate:.1f}% of {len(rows)} ({eval_s:.0f}s)")
    return rate


def stage_stick_seed0():
    run_seed(STICK_1000, 0, tag="stick-1000")


def stage_cover250():
    for seed in COVER_250.seeds:
        run_seed(COVER_250, seed, tag="cover-250")


def stage_cover1000():
    for seed in COVER_1000.seeds:
        run_seed(COVER_1000, seed, tag="cover-1000")
    injected = ExperimentConfig.from_dict(
        {**COVER_1000.to_dict(), "irr_eval_objects": 10}
    )
    for seed in COVER_1000.seeds:
        run_seed(COVER_1000, seed, eval_config=injected, tag="cover-1000+irr")


def stage_stick_rest():
    for seed in (1, 2):
        run_seed(STICK_1000, seed, tag="stick-1000")


def stage_ablation_evals():
    samples1 = ExperimentConfig.from_dict({**STICK_1000.to_dict(), "n_samples": 1})
    plans1 = ExperimentConfig.from_dict({**STICK_1000.to_dict(), "n_abstract": 1})
    for seed in STICK_1000.seeds:
        run_seed(STICK_1000, seed, eval_config=samples1, tag="stick-samples1")
        run_seed(STICK_1000, seed, eval_config=plans1, tag="stick-plans1")


def stage_no_subgoal():
    ns = ExperimentConfig.from_dict({**STICK_1000.to_dict(), "mode": "no_subgoal"})
    for seed in ns.seeds:
        run_seed(ns, seed, tag="stick-nosubgoal")


def stage_filter_off():
    off = ExperimentConfig.from_dict(
        {**STICK_1000.to_dict(), "filter_enabled": False, "seeds": (0,)}
    )
    run_seed(off, 0, tag="stick-nofilter")


STAGES = {
    "stick0": stage_stick_seed0,
    "cover250": stage_cover250,
    "cover1000": stage_cover1000,
    "stickrest": stage_stick_rest,
    "ablations": stage_ablation_evals,
    "nosubgoal": stage_no_subgoal,
    "filteroff": stage_filter_off,
}

if __name__ == "__main__":
    wanted = sys.argv[1:] or list(STAGES)
    for name in wanted:
        log(f"=== stage {name} ===")
        STAGES[name]()
    log("all requested stages complete")
