"""Shared fixtures: the expensive end-to-end preset runs are executed once per
session and reused by the acceptance criteria."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from waveshadow import experiments


@pytest.fixture(scope="session")
def results_root(tmp_path_factory) -> Path:
    return tmp_path_factory.mktemp("runs")


def _run_preset(name: str, outdir: Path) -> dict:
    cfg = experiments.preset_config(name)
    bundle = experiments.run_experiment(cfg, outdir)
    verdict = json.loads(Path(bundle.verdict_json).read_text())
    series = experiments.load_series(bundle.indicator_csv, verdict["T"],
                                     verdict["scene_digest"], cfg.h)
    return {"config": cfg, "bundle": bundle, "verdict": verdict, "series": series,
            "outdir": outdir}


@pytest.fixture(scope="session")
def default_run(results_root) -> dict:
    """Hidden ball at Euclidean distance 3.5 behind the unit ball."""
    return _run_preset("ball-behind-ball", results_root / "default")


@pytest.fixture(scope="session")
def empty_run(results_root) -> dict:
    return _run_preset("empty", results_root / "empty")


@pytest.fixture(scope="session")
def near_run(results_root) -> dict:
    """Hidden ball at distance 2.5, grazing the line of sight."""
    return _run_preset("ball-beside-ball", results_root / "near")


@pytest.fixture(scope="session")
def far_run(results_root) -> dict:
    """Hidden ball at distance 4.5 (M = 5)."""
    return _run_preset("ball-behind-ball-far", results_root / "far")
