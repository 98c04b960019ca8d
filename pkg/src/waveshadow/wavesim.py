"""Leapfrog FDTD solver for the exterior wave problem.

Solves  d^2u/dt^2 = Lap u  outside sound-hard obstacles (homogeneous Neumann
realized by mirrored ghost cells on the voxel staircase), with zero initial
displacement and initial velocity given by the compact source

    f(x) = (eta - |x - p|)^2 g   on the ball B(p, eta),  0 elsewhere.

Free space is emulated by a graded sponge layer: the outer shell of the box
damps the field through -sigma(x) du/dt with a quadratic sigma profile.
Residual sponge reflections are shared between companion runs and cancel in
the scattered-field difference, which is also available directly via
``run_wave_pair`` (single sweep evolving the background field u0 and the
difference d = u_D - u0 forced on the hidden obstacle's boundary faces).

Stability: dt <= h/sqrt(3) at unit wave speed; the first step uses the
second-order start u^1 = dt*f (u^0 = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import grid as gridmod
from .errors import ConfigurationError, SolverFailureError
from .geometry import SceneSpec
from .grid import FACE_SHIFTS, Grid3, Mask, face_open_weights, laplacian_into

_INSTABILITY_FACTOR = 1.0e6


@dataclass(frozen=True)
class SourceField:
    """Discrete initial-velocity source supported on the cells of B."""

    values: np.ndarray
    center: np.ndarray
    eta: float
    g: float

    @property
    def b_cells(self) -> np.ndarray:
        return np.argwhere(self.values > 0.0)


def make_source(scene: SceneSpec, grid: Grid3) -> SourceField:
    """Sample (eta - |x-p|)^2 g at cell centers inside B."""
    eta = scene.source.radius
    if 2.0 * eta < 4.0 * grid.h:
        raise ConfigurationError(
            f"source ball under-resolved: diameter {2*eta:.4g} spans fewer than "
            f"4 cells at h={grid.h:.4g}")
    X, Y, Z = grid.meshgrid()
    p = scene.source.center
    r = np.sqrt((X - p[0]) ** 2 + (Y - p[1]) ** 2 + (Z - p[2]) ** 2)
    vals = np.where(r < eta, (eta - r) ** 2 * scene.g_amplitude, 0.0)
    return SourceField(vals, p.copy(), eta, scene.g_amplitude)


def cfl_dt(grid: Grid3, safety: float) -> float:
    """Stable leapfrog step dt = safety * h / sqrt(3) (unit wave speed)."""
    if not 0.0 < safety <= 1.0:
        raise ConfigurationError(f"CFL safety factor must be in ]0, 1], got {safety}")
    return safety * grid.h / math.sqrt(3.0)


def sponge_sigma(grid: Grid3, sigma_max: float | None = None) -> np.ndarray:
    """Quadratic damping profile on the outer shell.

    The default strength 4/L balances ramp reflection against absorption;
    low-frequency content reflects at the percent level regardless, which the
    pipeline tolerates because companion runs share the artifact exactly.
    """
    sig = grid.zeros()
    sp = grid.sponge_cells
    if sp == 0:
        return sig
    if sigma_max is None:
        sigma_max = 4.0 / (sp * grid.h)
    for axis in range(3):
        idx = np.arange(grid.dims[axis])
        dist = np.minimum(idx, grid.dims[axis] - 1 - idx)
        ramp = np.clip((sp - dist) / sp, 0.0, 1.0) ** 2
        shape = [1, 1, 1]
        shape[axis] = grid.dims[axis]
        sig = np.maximum(sig, sigma_max * ramp.reshape(shape))
    return sig


@dataclass(frozen=True)
class WaveRecord:
    """Time series on the B cells plus terminal snapshots of one run.

    ``kind`` is "total" for a plain run and "scattered" when the samples are
    the difference field u_D - u0 from a paired run.
    """

    grid: Grid3
    T: float
    dt: float
    n_steps: int
    b_cells: np.ndarray
    u_on_B: np.ndarray
    u_final: np.ndarray
    ut_final: np.ndarray
    include_D: bool
    kind: str = "total"
    energy: tuple = ()  # (t, over non-sponge cells, over all fluid cells) samples

    def __post_init__(self):
        if abs(self.n_steps * self.dt - self.T) > 1e-12 * max(1.0, self.T):
            raise ValueError("n_steps * dt must equal T")
        if self.u_on_B.shape != (self.n_steps + 1, len(self.b_cells)):
            raise ValueError("u_on_B shape mismatch")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


def _resolve_dt(grid: Grid3, T: float, safety: float, dt: float | None):
    if T <= 0:
        raise ConfigurationError("final time T must be positive")
    step = cfl_dt(grid, safety) if dt is None else dt
    n = max(1, int(math.ceil(T / step - 1e-12)))
    return T / n, n


def _check_stable(u: np.ndarray, scale: float, step: int) -> None:
    m = float(np.max(np.abs(u)))
    if not math.isfinite(m) or m > _INSTABILITY_FACTOR * scale:
        raise SolverFailureError(
            f"wave solver instability at step {step}: field max {m:.3e} "
            f"exceeds {_INSTABILITY_FACTOR:.0e} x initial scale {scale:.3e}")


def _leapfrog_energy(u_new, u_old, dt, weights, h, include):
    """Discrete leapfrog energy over ``include`` cells: kinetic plus the
    cross-term potential (1/2) a(u_new, u_old), the combination the
    undamped scheme conserves exactly."""
    v = (u_new - u_old) / dt
    kin = 0.5 * float(np.sum(v[include] ** 2))
    pot = 0.0
    un = np.pad(u_new, 1)
    uo = np.pad(u_old, 1)
    inc = np.pad(include, 1)
    for k, sl in enumerate(gridmod._FACE_SLICES[0:6:2]):
        w = weights[2 * k]
        both = include & inc[sl]
        dn = (un[sl] - un[1:-1, 1:-1, 1:-1]) * w
        do = (uo[sl] - uo[1:-1, 1:-1, 1:-1]) * w
        pot += 0.5 * float(np.sum((dn * do)[both])) / (h * h)
    return (kin + pot) * h**3


def run_wave(scene: SceneSpec | None, grid: Grid3, source: SourceField, T: float,
             include_D: bool, safety: float = 0.9, dt: float | None = None,
             mask: Mask | None = None, sigma_max: float | None = None,
             energy_every: int = 0, dump_every: int = 0,
             dump_dir=None) -> WaveRecord:
    """Evolve the wave problem and record u on every B cell at every step.

    ``include_D=False`` runs the reference problem that only sees the known
    obstacle. ``dt`` overrides the CFL step (stability probes only). Passing
    a prebuilt ``mask`` skips voxelization (``scene`` may then be None).
    """
    if mask is None:
        mask = gridmod.voxelize(scene if include_D else scene.without_hidden(), grid)
    solid = mask.solid(include_d=include_D)
    dt_, n = _resolve_dt(grid, T, safety, dt)
    h2 = grid.h * grid.h
    weights = face_open_weights(solid)
    sig = sponge_sigma(grid, sigma_max)
    damp_a = 1.0 + sig * dt_ / 2.0
    damp_b = 1.0 - sig * dt_ / 2.0

    f = source.values.copy()
    f[solid] = 0.0
    bsel = f > 0.0
    b_cells = np.argwhere(bsel)
    scale = max(dt_ * float(np.max(np.abs(f))), 1e-300)

    u_prev = grid.zeros()
    u = dt_ * f
    rec = np.zeros((n + 1, len(b_cells)))
    rec[1] = u[bsel]
    lap = grid.zeros()
    upad = np.pad(u, 1)
    energies = []
    include = ~mask.region("sponge") & ~solid
    fluid = ~solid
    if energy_every:
        energies.append((dt_ / 2,
                         _leapfrog_energy(u, u_prev, dt_, weights, grid.h, include),
                         _leapfrog_energy(u, u_prev, dt_, weights, grid.h, fluid)))

    u_nm1 = u_prev
    for step in range(1, n + 1):
        upad[1:-1, 1:-1, 1:-1] = u
        laplacian_into(lap, upad, weights, h2)
        u_next = (2.0 * u - damp_b * u_prev + dt_ * dt_ * lap) / damp_a
        u_next[solid] = 0.0
        if step == n:
            u_nm1 = u_prev  # u at t = T - dt, for the centered velocity at T
        u_prev, u = u, u_next
        if step < n:
            rec[step + 1] = u[bsel]
        if energy_every and step % energy_every == 0:
            energies.append((step * dt_ + dt_ / 2,
                             _leapfrog_energy(u, u_prev, dt_, weights, grid.h, include),
                             _leapfrog_energy(u, u_prev, dt_, weights, grid.h, fluid)))
        if step % 25 == 0:
            _check_stable(u, scale, step)
        if dump_every and dump_dir is not None and step % dump_every == 0:
            from .fieldio import save_field
            save_field(f"{dump_dir}/u_{'with' if include_D else 'no'}D_{step:06d}", u, grid)

    # after the loop: u_prev = u(T) and u = u(T + dt) from one extra step
    ut_final = (u - u_nm1) / (2.0 * dt_)
    return WaveRecord(grid, T, dt_, n, b_cells, rec, u_prev, ut_final,
                      include_D, "total", tuple(energies))


def run_wave_pair(scene: SceneSpec, grid: Grid3, source: SourceField, T: float,
                  safety: float = 0.9, dt: float | None = None,
                  sigma_max: float | None = None) -> tuple[WaveRecord, WaveRecord]:
    """One sweep evolving the background field u0 (no hidden obstacle) and the
    scattered difference d = u_D - u0 (hidden obstacle present).

    The difference field obeys the same damped wave update on the with-D mask,
    forced by the mismatch of the two Laplacians on u0, which is supported on
    the faces entering hidden-obstacle cells. Computing d directly keeps the
    scattered signal at full floating-point resolution instead of leaving it
    to cancellation between two large records; with no hidden obstacle the
    difference is exactly zero.

    Returns (background record, scattered record).
    """
    mask0 = gridmod.voxelize(scene.without_hidden(), grid)
    maskD = gridmod.voxelize(scene, grid)
    solid0 = mask0.solid()
    solidD = maskD.solid()
    dt_, n = _resolve_dt(grid, T, safety, dt)
    h2 = grid.h * grid.h
    w0 = face_open_weights(solid0)
    wD = face_open_weights(solidD)
    # faces whose openness differs: exterior cell bordering a hidden-solid cell
    forcing = []
    for k in range(6):
        dw = wD[k] - w0[k]
        cells = np.argwhere(dw != 0.0)
        if len(cells):
            forcing.append((k, cells, tuple(cells.T), tuple((cells + FACE_SHIFTS[k]).T)))
    sig = sponge_sigma(grid, sigma_max)
    damp_a = 1.0 + sig * dt_ / 2.0
    damp_b = 1.0 - sig * dt_ / 2.0

    f = source.values.copy()
    f[solid0] = 0.0
    bsel = f > 0.0
    b_cells = np.argwhere(bsel)
    scale = max(dt_ * float(np.max(np.abs(f))), 1e-300)

    u_prev = grid.zeros()
    u = dt_ * f
    d_prev = grid.zeros()
    d = grid.zeros()
    rec0 = np.zeros((n + 1, len(b_cells)))
    recd = np.zeros((n + 1, len(b_cells)))
    rec0[1] = u[bsel]
    lap = grid.zeros()
    lapd = grid.zeros()
    src = grid.zeros()
    upad = np.pad(u, 1)
    dpad = np.pad(d, 1)
    u_nm1 = u_prev
    d_nm1 = d_prev

    for step in range(1, n + 1):
        upad[1:-1, 1:-1, 1:-1] = u
        laplacian_into(lap, upad, w0, h2)
        if forcing:
            dpad[1:-1, 1:-1, 1:-1] = d
            laplacian_into(lapd, dpad, wD, h2)
            src.fill(0.0)
            for k, cells, ci, nbi in forcing:
                src[ci] -= (u[nbi] - u[ci]) / h2
        u_next = (2.0 * u - damp_b * u_prev + dt_ * dt_ * lap) / damp_a
        u_next[solid0] = 0.0
        if forcing:
            d_next = (2.0 * d - damp_b * d_prev + dt_ * dt_ * (lapd + src)) / damp_a
            d_next[solidD] = 0.0
        else:
            d_next = d
        if step == n:
            u_nm1 = u_prev
            d_nm1 = d_prev
        u_prev, u = u, u_next
        d_prev, d = d, d_next
        if step < n:
            rec0[step + 1] = u[bsel]
            recd[step + 1] = d[bsel]
        if step % 25 == 0:
            _check_stable(u, scale, step)

    ut0_final = (u - u_nm1) / (2.0 * dt_)
    utd_final = (d - d_nm1) / (2.0 * dt_)
    rec_bg = WaveRecord(grid, T, dt_, n, b_cells, rec0, u_prev, ut0_final, False, "total")
    rec_sc = WaveRecord(grid, T, dt_, n, b_cells, recd, d_prev, utd_final, True, "scattered")
    return rec_bg, rec_sc


def write_record_csv(record: WaveRecord, path) -> None:
    """B-patch record as CSV rows (step, time, cell_index, u)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,time,cell_index,u\n")
        for step in range(record.n_steps + 1):
            t = step * record.dt
            for ci in range(record.u_on_B.shape[1]):
                fh.write(f"{step},{t!r},{ci},{record.u_on_B[step, ci]!r}\n")
