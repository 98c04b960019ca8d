"""Experiment orchestration: configuration, presets, pipeline runs, reports.

A configuration is a plain JSON document (units: length L, time L/c with
c = 1). ``run_experiment`` validates everything up front, executes the two
wave runs and the tau sweep, decides presence, computes the distance lower
bound, and writes

    indicator.csv     one row per tau,
    verdict.json      the decision record,
    provenance.json   config digest, package version, wall-clock timings.

The verdict and CSV bytes are deterministic for a fixed config and seed; the
provenance timestamp field is the only varying output.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, geometry, indicator, verification, wavesim
from .errors import ConfigurationError
from .geometry import BallSpec, ConvexBodySpec, SceneSpec, detour_constant
from .grid import Grid3, build_grid, voxelize

DEFAULT_H = 0.125
DEFAULT_SPONGE_CELLS = 12
DEFAULT_TAUS = tuple(np.round(np.arange(1.0, 3.0 + 1e-9, 0.25), 10))
DEFAULT_TOL = 1e-12


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def scene_digest(scene: SceneSpec) -> str:
    return hashlib.sha256(canonical_json(scene.to_dict()).encode()).hexdigest()[:16]


def _body_from_dict(d: dict) -> ConvexBodySpec:
    kind = d.get("kind", "ball")
    if kind == "ball":
        radius = d["radius"] if "radius" in d else d["semi_axes"][0]
        return ConvexBodySpec.ball(d["center"], radius)
    return ConvexBodySpec.ellipsoid(d["center"], d["semi_axes"], d.get("orientation"))


def scene_from_dict(d: dict) -> SceneSpec:
    return SceneSpec(
        tuple(_body_from_dict(b) for b in d["d0_bodies"]),
        tuple(_body_from_dict(b) for b in d.get("d_bodies", [])),
        BallSpec(d["source"]["center"], d["source"]["radius"]),
        d.get("g_amplitude", 1.0),
    )


@dataclass
class ExperimentConfig:
    """Validated experiment description."""

    scene: SceneSpec
    h: float = DEFAULT_H
    sponge_cells: int = DEFAULT_SPONGE_CELLS
    T: float | str = "auto"
    M: float = 4.0
    taus: tuple = DEFAULT_TAUS
    alpha: float | None = None
    seed: int = 0
    tol: float = DEFAULT_TOL
    method: str = "scattered"
    dump_records: bool = False
    outputs: str = "."
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__ if f not in ("scene", "extra")}
        kwargs = {k: v for k, v in d.items() if k in known}
        extra = {k: v for k, v in d.items() if k not in known and k != "scene"}
        if "taus" in kwargs:
            kwargs["taus"] = tuple(float(t) for t in kwargs["taus"])
        return cls(scene=scene_from_dict(d["scene"]), extra=extra, **kwargs)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def constant_used(self) -> float:
        if self.alpha is not None:
            return detour_constant("convex", self.alpha)
        return detour_constant("ball")

    def resolved_T(self) -> float:
        if self.T == "auto":
            return 2.0 * self.constant_used() * self.M
        return float(self.T)

    def to_dict(self) -> dict:
        d = {
            "scene": self.scene.to_dict(),
            "h": self.h,
            "sponge_cells": self.sponge_cells,
            "T": self.T,
            "M": self.M,
            "taus": list(self.taus),
            "alpha": self.alpha,
            "seed": self.seed,
            "tol": self.tol,
            "method": self.method,
            "dump_records": self.dump_records,
        }
        d.update(self.extra)
        return d

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()[:16]

    def build_grid(self) -> Grid3:
        clearance = 4.0 / min(self.taus)
        return build_grid(self.scene, self.h, clearance, self.sponge_cells)

    def validate(self) -> Grid3:
        """Check every module precondition before any solve; returns the grid."""
        if not self.scene.d0_bodies:
            raise ConfigurationError("experiment scene needs a known obstacle body")
        self.scene.validate_disjoint(min_gap=0.0)
        if not self.taus or any(b <= a for a, b in zip(self.taus, self.taus[1:])):
            raise ConfigurationError("taus must be a strictly increasing nonempty list")
        if min(self.taus) < 0.5:
            raise ConfigurationError("all taus must be >= 0.5")
        if max(self.taus) * self.h > 0.5 + 1e-12:
            raise ConfigurationError(
                f"tau*h = {max(self.taus) * self.h:.4g} > 0.5 violates the "
                "elliptic resolution constraint")
        if 2.0 * self.scene.source.radius < 4.0 * self.h:
            raise ConfigurationError("source ball spans fewer than 4 cells")
        if self.alpha is not None and not (-1.0 < self.alpha <= 0.0):
            raise ConfigurationError("alpha must lie in ]-1, 0]")
        T = self.resolved_T()
        if self.T != "auto" and T < 2.0 * self.constant_used() * self.M - 1e-12:
            raise ConfigurationError(
                f"T = {T:.4g} is below the prescription 2*C*M = "
                f"{2.0 * self.constant_used() * self.M:.4g}")
        grid = self.build_grid()
        voxelize(self.scene, grid)  # raises on clearance violations
        return grid


# ---------------------------------------------------------------------------
# presets

_PRESET_BASE = {
    "d0_bodies": [{"kind": "ball", "center": [0.0, 0.0, 0.0], "radius": 1.0}],
    "source": {"center": [-2.2, 0.0, 0.0], "radius": 0.4},
    "g_amplitude": 1.0,
}


def preset_config(name: str) -> ExperimentConfig:
    """Named experiment presets.

    ball-behind-ball      hidden ball at distance 3.5 behind the unit ball
    empty                 the same scene with no hidden obstacle
    ball-beside-ball      hidden ball at distance 2.5, grazing line of sight
    ball-behind-ball-far  hidden ball at distance 4.5 (M = 5)
    """
    scene = dict(_PRESET_BASE)
    if name == "ball-behind-ball":
        scene["d_bodies"] = [{"kind": "ball", "center": [2.2, 0.0, 0.0], "radius": 0.5}]
        return ExperimentConfig.from_dict({"scene": scene, "M": 4.0})
    if name == "empty":
        scene["d_bodies"] = []
        return ExperimentConfig.from_dict({"scene": scene, "M": 4.0})
    if name == "ball-beside-ball":
        # |center_B - center_D| = 3.4 so dist(D, B) = 3.4 - 0.4 - 0.5 = 2.5
        scene["d_bodies"] = [{"kind": "ball", "center": [0.8, 1.6, 0.0], "radius": 0.5}]
        return ExperimentConfig.from_dict({"scene": scene, "M": 4.0})
    if name == "ball-behind-ball-far":
        scene["d_bodies"] = [{"kind": "ball", "center": [3.2, 0.0, 0.0], "radius": 0.5}]
        return ExperimentConfig.from_dict({"scene": scene, "M": 5.0})
    raise ConfigurationError(f"unknown preset {name!r}")


# ---------------------------------------------------------------------------
# result bundle and runs


@dataclass(frozen=True)
class ResultBundle:
    indicator_csv: Path | None
    verdict_json: Path | None
    verification_json: Path | None
    provenance_json: Path


def _write_indicator_csv(series: indicator.IndicatorSeries, path: Path) -> None:
    cols = ("tau", "I", "I_prime", "J", "E", "exp_tT_I", "exp_tT_Iprime",
            "log_abs_Iprime")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for s in series.samples:
            log_ip = math.log(abs(s.I_prime)) if s.I_prime != 0.0 else -math.inf
            row = (s.tau, s.I, s.I_prime, s.J, s.E, s.exp_tT_I, s.exp_tT_Iprime, log_ip)
            fh.write(",".join(repr(v) for v in row) + "\n")


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_series(csv_path, T: float, scene_digest: str = "", h: float = 0.0,
                method: str = "scattered") -> indicator.IndicatorSeries:
    """Read an indicator CSV back into a series (full repr precision)."""
    samples = []
    with open(csv_path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            row = dict(zip(header, (float(v) for v in line.strip().split(","))))
            samples.append(indicator.IndicatorSample(
                row["tau"], row["I"], row["I_prime"], row["J"], row["E"],
                row["exp_tT_I"], row["exp_tT_Iprime"]))
    return indicator.IndicatorSeries(T, tuple(samples), scene_digest, h, method)


def run_experiment(config: ExperimentConfig, outdir) -> ResultBundle:
    """Validate, run the pipeline end to end, and write all artifacts."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t_start = time.time()
    grid = config.validate()
    T = config.resolved_T()
    digest = scene_digest(config.scene)
    timings = {}

    t0 = time.time()
    series = indicator.sweep(config.scene, grid, T, config.taus, tol=config.tol,
                             method=config.method, scene_digest=digest)
    timings["sweep_s"] = time.time() - t0

    verdict = indicator.finalize_verdict(series, config.constant_used())
    csv_path = outdir / "indicator.csv"
    _write_indicator_csv(series, csv_path)
    verdict_path = outdir / "verdict.json"
    _write_json(verdict.to_dict(T, digest), verdict_path)

    if config.dump_records:
        source = wavesim.make_source(config.scene, grid)
        rec0, recd = wavesim.run_wave_pair(config.scene, grid, source, T)
        wavesim.write_record_csv(rec0, outdir / "record_background.csv")
        wavesim.write_record_csv(recd, outdir / "record_scattered.csv")

    prov_path = outdir / "provenance.json"
    _write_json({
        "config_digest": config.digest(),
        "scene_digest": digest,
        "package_version": __version__,
        "grid_dims": list(grid.dims),
        "T": T,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "timings": {**timings, "total_s": time.time() - t_start},
    }, prov_path)
    return ResultBundle(csv_path, verdict_path, None, prov_path)


def run_verification(suite: str, seed: int = 42, outdir=".") -> tuple[ResultBundle, bool]:
    """Run a named verification suite and write its JSON report."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    checks = verification.run_suite(suite, seed=seed)
    ok = all(c["passed"] for c in checks)
    path = outdir / "verification.json"
    _write_json({"suite": suite, "seed": seed, "passed": ok, "checks": checks}, path)
    prov_path = outdir / "provenance.json"
    _write_json({
        "suite": suite,
        "seed": seed,
        "package_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "timings": {"total_s": time.time() - t0},
    }, prov_path)
    return ResultBundle(None, None, path, prov_path), ok
