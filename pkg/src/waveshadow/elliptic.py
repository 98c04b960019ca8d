"""Modified Helmholtz (Yukawa) solves and the energy functionals.

The reference field solves  (tau^2 - Lap) v = f  exterior to the known
obstacle with mirrored-ghost Neumann walls; with the hidden obstacle included
the same solve yields the infinite-time reduced wave. The outer box face is
homogeneous Dirichlet: the true solution decays like exp(-tau r)/r, so a
clearance of 4/tau_min keeps the truncation error far below the pipeline
tolerances.

The discrete operator is symmetric positive definite (flux-form Laplacian
plus tau^2 shift) and is inverted matrix-free by Jacobi-preconditioned
conjugate gradients.

Energy functionals:

    J = integral over the hidden region of |grad v|^2 + tau^2 v^2
        (v never sees the hidden obstacle, so its gradient is taken with the
        hidden cells treated as open fluid),
    E = same integrand for eps = w - v over the plain exterior cells
        (sponge cells excluded: the damping there is a numerical artifact).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, SolverFailureError
from .grid import (D0_SOLID, D_SOLID, EXTERIOR, SOURCE_B, Mask, face_open_weights,
                   gradient, integrate, laplacian_into)
from .wavesim import SourceField


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    residual: float


@dataclass(frozen=True)
class LaplaceField:
    """Solution of one screened solve (or a reduced-wave stand-in)."""

    tau: float
    values: np.ndarray
    residual: float


class ShiftedLaplacian:
    """Matrix-free application of u -> tau^2 u - Lap u on non-solid cells.

    Solid rows act as identity so the operator stays SPD on the whole box.
    """

    def __init__(self, mask: Mask, include_D: bool, tau: float):
        self.tau = tau
        self.h2 = mask.grid.h ** 2
        self.solid = mask.solid(include_d=include_D)
        self.weights = face_open_weights(self.solid)
        self.diag = tau * tau + sum(self.weights) / self.h2
        self.diag[self.solid] = 1.0
        self._lap = mask.grid.zeros()
        self._pad = np.pad(self._lap, 1)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        self._pad[1:-1, 1:-1, 1:-1] = u
        laplacian_into(self._lap, self._pad, self.weights, self.h2)
        out = self.tau * self.tau * u - self._lap
        out[self.solid] = u[self.solid]
        return out


def solve_modified_helmholtz(mask: Mask, include_D: bool, source: SourceField,
                             tau: float, tol: float = 1e-12,
                             max_iter: int | None = None
                             ) -> tuple[LaplaceField, SolveStats]:
    """Solve (tau^2 - Lap) v = f with Neumann obstacles and Dirichlet box face.

    Requires tau >= 0.5 and tau*h <= 0.5 so the decay length stays resolved.
    """
    if tau < 0.5:
        raise DomainError(f"tau must be >= 0.5, got {tau}")
    if tau * mask.grid.h > 0.5 + 1e-12:
        raise ConfigurationError(
            f"tau*h = {tau * mask.grid.h:.4g} exceeds 0.5: decay length unresolved")
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    A = ShiftedLaplacian(mask, include_D, tau)
    b = source.values.copy()
    b[A.solid] = 0.0
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return LaplaceField(tau, mask.grid.zeros(), 0.0), SolveStats(0, 0.0)
    if max_iter is None:
        max_iter = 10 * max(mask.grid.dims)

    x = mask.grid.zeros()
    r = b.copy()
    z = r / A.diag
    p = z.copy()
    rz = float(np.vdot(r, z))
    it = 0
    res = 1.0
    while it < max_iter:
        Ap = A(p)
        alpha = rz / float(np.vdot(p, Ap))
        x = x + alpha * p
        r = r - alpha * Ap
        res = float(np.linalg.norm(r)) / norm_b
        it += 1
        if res <= tol:
            break
        z = r / A.diag
        rz_new = float(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    if res > tol:
        raise SolverFailureError(
            f"conjugate gradients stalled: residual {res:.3e} > tol {tol:.3e} "
            f"after {it} iterations (tau={tau})")
    return LaplaceField(tau, x, res), SolveStats(it, res)


def compute_J(v: LaplaceField, mask: Mask) -> float:
    """Energy of the reference field on the hidden region.

    ``v`` must come from the without-hidden solve; its gradient is therefore
    taken treating hidden cells as open (the field is smooth across them).
    """
    if not mask.has_d:
        return 0.0
    gx, gy, gz = gradient(v.values, mask, solid_labels=(D0_SOLID,))
    integrand = gx**2 + gy**2 + gz**2 + v.tau**2 * v.values**2
    return integrate(integrand, mask, D_SOLID)


def compute_E(w: LaplaceField, v: LaplaceField, mask: Mask) -> float:
    """Scattering-difference energy over the plain exterior cells."""
    if abs(w.tau - v.tau) > 1e-12 * max(1.0, abs(v.tau)):
        raise DomainError(f"tau mismatch: {w.tau} vs {v.tau}")
    eps = w.values - v.values
    gx, gy, gz = gradient(eps, mask, solid_labels=(D0_SOLID, D_SOLID))
    integrand = gx**2 + gy**2 + gz**2 + v.tau**2 * eps**2
    return integrate(integrand, mask, (EXTERIOR, SOURCE_B))


def boundary_flux_energy(v: LaplaceField, mask: Mask, pair_with: np.ndarray | None = None
                         ) -> float:
    """Staircase surface form of the hidden-region energy,
    sum over boundary faces of (dv/dnu) * field, with ``pair_with`` defaulting
    to v itself (the J identity); pass eps = w - v for the E identity.

    Serves as an independent cross-check of the volume quadrature.
    """
    grid = mask.grid
    other = v.values if pair_with is None else pair_with
    solid_d = mask.region(D_SOLID)
    open_out = ~mask.solid(include_d=True)
    idx = np.argwhere(solid_d)
    total = 0.0
    from .grid import FACE_SHIFTS
    for shift in FACE_SHIFTS:
        nb = idx + shift
        ok = np.all((nb >= 0) & (nb < grid.dims), axis=1)
        ci = idx[ok]
        nbi = nb[ok]
        outside = open_out[tuple(nbi.T)]
        ci = tuple(ci[outside].T)
        nbo = tuple(nbi[outside].T)
        dv = (v.values[nbo] - v.values[ci]) / grid.h
        mid = 0.5 * (other[nbo] + other[ci])
        total += float(np.sum(dv * mid)) * grid.h**2
    return total
