"""Uniform voxel grid, cell classification, quadrature, and discrete gradients.

Cells are classified by their center (no sub-cell fractions): staircase
boundaries are accepted and absorbed into the pipeline tolerances. Solid
cells store field value 0 by convention; masks carry the semantics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .geometry import SceneSpec

EXTERIOR = 0
D0_SOLID = 1
D_SOLID = 2
SOURCE_B = 3
SPONGE = 4

LABELS = {
    "exterior": EXTERIOR,
    "d0_solid": D0_SOLID,
    "d_solid": D_SOLID,
    "source_B": SOURCE_B,
    "sponge": SPONGE,
}


@dataclass(frozen=True)
class Grid3:
    """Uniform Cartesian grid: ``origin`` is the minimum box corner, cell
    centers sit at origin + h*(i + 1/2)."""

    origin: np.ndarray
    h: float
    dims: tuple[int, int, int]
    sponge_cells: int = 12

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, float).reshape(3))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.h <= 0:
            raise ConfigurationError("grid spacing must be positive")
        if any(d < 16 for d in self.dims):
            raise ConfigurationError(f"grid dims must each be >= 16, got {self.dims}")
        if self.sponge_cells < 0:
            raise ConfigurationError("sponge thickness must be >= 0 cells")

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.dims))

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.h * np.asarray(self.dims)

    def axes(self) -> list[np.ndarray]:
        return [self.origin[d] + self.h * (np.arange(self.dims[d]) + 0.5) for d in range(3)]

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def cell_of(self, point) -> tuple[int, int, int]:
        ijk = np.floor((np.asarray(point, float) - self.origin) / self.h).astype(int)
        if np.any(ijk < 0) or np.any(ijk >= self.dims):
            raise DomainError(f"point {point} outside the grid box")
        return tuple(int(v) for v in ijk)

    def cell_centers(self, cells: np.ndarray) -> np.ndarray:
        return self.origin + self.h * (np.asarray(cells, float) + 0.5)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dims)


def build_grid(scene: SceneSpec, h: float, clearance: float,
               sponge_cells: int = 12) -> Grid3:
    """Grid box enclosing the scene with the given physical clearance on every
    side (clearance must cover both the sponge and the elliptic truncation)."""
    lo, hi = scene.aabb()
    pad = max(clearance, (sponge_cells + 2) * h)
    lo = lo - pad
    hi = hi + pad
    dims = tuple(int(np.ceil((hi[d] - lo[d]) / h - 1e-12)) for d in range(3))
    return Grid3(lo, h, dims, sponge_cells)


@dataclass(frozen=True)
class Mask:
    """Per-cell labels partitioning the grid."""

    grid: Grid3
    labels: np.ndarray

    def region(self, which) -> np.ndarray:
        """Boolean mask for a label name/int or an iterable of them."""
        if isinstance(which, str):
            which = (LABELS[which],)
        elif isinstance(which, int):
            which = (which,)
        else:
            which = tuple(LABELS[w] if isinstance(w, str) else int(w) for w in which)
        return np.isin(self.labels, which)

    def solid(self, include_d: bool = True) -> np.ndarray:
        return self.region((D0_SOLID, D_SOLID) if include_d else (D0_SOLID,))

    @property
    def has_d(self) -> bool:
        return bool(np.any(self.labels == D_SOLID))

    def counts(self) -> dict[str, int]:
        return {name: int(np.sum(self.labels == lab)) for name, lab in LABELS.items()}


def voxelize(scene: SceneSpec, grid: Grid3) -> Mask:
    """Classify cells by center: solid for obstacle bodies, source for B,
    sponge for the outer shell, exterior otherwise."""
    lo, hi = scene.aabb()
    need = (grid.sponge_cells + 2) * grid.h
    if np.any(lo - grid.origin < need - 1e-9) or np.any(grid.upper - hi < need - 1e-9):
        raise ConfigurationError(
            "scene too close to the grid box: clearance must be >= "
            f"(sponge + 2) cells = {need:.6g}")
    X, Y, Z = grid.meshgrid()
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    labels = np.full(grid.dims, EXTERIOR, dtype=np.uint8)

    if grid.sponge_cells > 0:
        sponge = np.zeros(grid.dims, dtype=bool)
        for axis in range(3):
            idx = np.arange(grid.dims[axis])
            edge = np.minimum(idx, grid.dims[axis] - 1 - idx) < grid.sponge_cells
            shape = [1, 1, 1]
            shape[axis] = grid.dims[axis]
            sponge |= edge.reshape(shape)
        labels[sponge] = SPONGE

    in_b = scene.source.contains(pts).reshape(grid.dims)
    labels[in_b] = SOURCE_B
    for body in scene.d0_bodies:
        labels[body.contains(pts).reshape(grid.dims)] = D0_SOLID
    for body in scene.d_bodies:
        labels[body.contains(pts).reshape(grid.dims)] = D_SOLID
    if np.any(in_b & np.isin(labels, (D0_SOLID, D_SOLID))):
        raise ConfigurationError("source ball overlaps a solid body")
    return Mask(grid, labels)


def integrate(field: np.ndarray, mask: Mask, region) -> float:
    """Midpoint-rule volume integral h^3 * sum over the labeled region."""
    try:
        sel = mask.region(region)
    except KeyError as exc:
        raise DomainError(f"unknown region label {region!r}") from exc
    return float(mask.grid.h ** 3 * np.sum(field[sel]))


def gradient(field: np.ndarray, mask: Mask,
             solid_labels=(D0_SOLID, D_SOLID)) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cell-centered gradient: central differences, falling back to one-sided
    (mirror-ghost) stencils next to solid cells and the box faces.

    ``solid_labels`` selects which labels block the stencil; pass
    ``(D0_SOLID,)`` to differentiate across a region that a particular solve
    treated as open (the hidden-obstacle cells for the reference field).
    """
    h = mask.grid.h
    open_cells = ~np.isin(mask.labels, np.asarray(solid_labels, dtype=mask.labels.dtype))
    up = np.pad(field, 1)
    op = np.pad(open_cells, 1)  # False outside the box: one-sided at faces
    c = up[1:-1, 1:-1, 1:-1]
    out = []
    slices_p = [(slice(2, None), slice(1, -1), slice(1, -1)),
                (slice(1, -1), slice(2, None), slice(1, -1)),
                (slice(1, -1), slice(1, -1), slice(2, None))]
    slices_m = [(slice(0, -2), slice(1, -1), slice(1, -1)),
                (slice(1, -1), slice(0, -2), slice(1, -1)),
                (slice(1, -1), slice(1, -1), slice(0, -2))]
    for sp, sm in zip(slices_p, slices_m):
        fwd = np.where(op[sp], up[sp], c)
        bwd = np.where(op[sm], up[sm], c)
        g = (fwd - bwd) / (2.0 * h)
        g[~open_cells] = 0.0
        out.append(g)
    return tuple(out)


def face_open_weights(solid: np.ndarray) -> list[np.ndarray]:
    """Per-face openness weights (1.0 fluid neighbor, 0.0 solid neighbor) used
    by the flux-form Laplacian; the box exterior counts as open-with-zero,
    which realizes a homogeneous Dirichlet face."""
    open_pad = np.pad((~solid).astype(float), 1, constant_values=1.0)
    sls = [(slice(2, None), slice(1, -1), slice(1, -1)),
           (slice(0, -2), slice(1, -1), slice(1, -1)),
           (slice(1, -1), slice(2, None), slice(1, -1)),
           (slice(1, -1), slice(0, -2), slice(1, -1)),
           (slice(1, -1), slice(1, -1), slice(2, None)),
           (slice(1, -1), slice(1, -1), slice(0, -2))]
    return [np.ascontiguousarray(open_pad[sl]) for sl in sls]


_FACE_SLICES = [(slice(2, None), slice(1, -1), slice(1, -1)),
                (slice(0, -2), slice(1, -1), slice(1, -1)),
                (slice(1, -1), slice(2, None), slice(1, -1)),
                (slice(1, -1), slice(0, -2), slice(1, -1)),
                (slice(1, -1), slice(1, -1), slice(2, None)),
                (slice(1, -1), slice(1, -1), slice(0, -2))]

FACE_SHIFTS = np.array([(1, 0, 0), (-1, 0, 0), (0, 1, 0),
                        (0, -1, 0), (0, 0, 1), (0, 0, -1)], dtype=np.int64)


def laplacian_into(out: np.ndarray, field_pad: np.ndarray,
                   weights: list[np.ndarray], h2: float) -> None:
    """Flux-form 7-point Laplacian: sum_faces w * (neighbor - center) / h^2.

    ``field_pad`` carries one ghost layer of zeros (outer Dirichlet); a zero
    weight realizes a mirrored ghost (homogeneous Neumann) at that face.
    """
    c = field_pad[1:-1, 1:-1, 1:-1]
    out.fill(0.0)
    for w, sl in zip(weights, _FACE_SLICES):
        out += w * (field_pad[sl] - c)
    out /= h2
