"""Shared fixtures: small scripted corpora, cached expensive artifacts."""

from __future__ import annotations

import os
import sys
from pathlib import Path

# Training jobs and evaluation tasks fan out across processes; one BLAS
# thread per worker avoids oversubscription.  Must happen before numpy loads.
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from skillplan.envs import get_env

CACHE_DIR = Path(__file__).parent / ".cache"
CACHE_DIR.mkdir(exist_ok=True)


def scripted_corpus(env_name: str, n: int, profile: str = "train"):
    env = get_env(env_name)
    demos = []
    seed = 0
    while len(demos) < n:
        task = env.sample_task(seed, profile)
        seed += 1
        try:
            demos.append(env.scripted_policy(task))
        except Exception:
            continue
    return env, demos


@pytest.fixture(scope="session")
def cover_corpus_50():
    return scripted_corpus("cover", 50)


@pytest.fixture(scope="session")
def stick_corpus_250():
    return scripted_corpus("stick_button", 250)


@pytest.fixture(scope="session")
def cache_dir() -> Path:
    return CACHE_DIR
