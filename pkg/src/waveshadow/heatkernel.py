"""Heat-kernel verification oracles.

Provides the two independent representations of the Dirichlet heat kernel of
a ball evaluated at its center,

    eigenseries:  K_eps(0,0;t) = (pi/(2 eps^3)) sum_{n>=1} n^2 e^{-(n pi/eps)^2 t}
    images:       K_eps(0,0;t) = (4 pi t)^{-3/2} - (1/pi) sum_{k>=1} g''(2 k eps)
                  with g(z) = (4 pi t)^{-1/2} e^{-z^2/(4t)},

the Gaussian lower-bound check K_eps(0,0;t) >= (4 pi t)^{-3/2} e^{-9 pi^2 t/(4 eps^2)},
Crank-Nicolson heat evolution with Dirichlet or Neumann obstacle walls, the
pointwise domination of the Dirichlet-smoothed data by the Neumann-smoothed
data for nonnegative data, and the Laplace-Gaussian identity

    int_0^inf (4 pi t)^{-3/2} e^{-s^2/(4t)} e^{-tau^2 t} dt = e^{-tau s}/(4 pi s).

The eigenseries coefficients follow from the radial Dirichlet modes
sin(n pi r/eps)/r (the only modes nonzero at the center); the image sum is the
odd/periodic reflection of the 1D kernel through w = r u. Both derivations are
independent and the module enforces their agreement where both converge.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, SolverFailureError
from .grid import Mask, face_open_weights, laplacian_into
from .wavesim import SourceField

_MAX_EIG_TERMS = 1_000_000


def _kernel_eigenseries(eps: float, t: float, n_terms: int) -> float:
    n = np.arange(1, n_terms + 1, dtype=float)
    return float((math.pi / (2.0 * eps**3)) * np.sum(n**2 * np.exp(-((n * math.pi / eps) ** 2) * t)))


def _kernel_images(eps: float, t: float, k_max: int = 400) -> float:
    k = np.arange(1, k_max + 1, dtype=float)
    z = 2.0 * k * eps
    g = (4.0 * math.pi * t) ** -0.5 * np.exp(-(z**2) / (4.0 * t))
    gpp = g * (z**2 / (4.0 * t**2) - 1.0 / (2.0 * t))
    return float((4.0 * math.pi * t) ** -1.5 - np.sum(gpp) / math.pi)


def eigenseries_terms_needed(eps: float, t: float) -> int:
    """Terms until the positive tail drops below 1e-15 of the leading term."""
    # terms n^2 e^{-(n pi/eps)^2 t}: solve for the n where the ratio to n=1 is 1e-16
    target = (math.pi / eps) ** 2 * t
    n = 1
    while n < _MAX_EIG_TERMS and n * n * math.exp(-target * (n * n - 1)) > 1e-16:
        n = max(n + 1, int(n * 1.2))
    return n + 8


def ball_kernel_center(eps: float, t: float, n_terms: int | None = None) -> float:
    """Dirichlet heat kernel of the eps-ball at its center, K_eps(0,0;t).

    Uses the eigenseries; falls back to the method-of-images sum when the
    series would need more than 1e6 terms (extremely small t/eps^2). In the
    overlap region the two representations are cross-checked to 1e-10.
    """
    if eps <= 0 or t <= 0:
        raise DomainError("eps and t must be positive")
    needed = eigenseries_terms_needed(eps, t) if n_terms is None else n_terms
    if needed > _MAX_EIG_TERMS:
        return _kernel_images(eps, t)
    val = _kernel_eigenseries(eps, t, needed)
    if t / eps**2 <= 0.5:
        # image sum converges without destructive cancellation here
        other = _kernel_images(eps, t)
        if abs(other - val) > 1e-10 * abs(val):
            raise SolverFailureError(
                f"kernel representations disagree: eigenseries {val!r} vs images {other!r}")
    return val


def lemma_gaussian_lower_bound(eps: float, t_grid) -> list[dict]:
    """Check K_eps(0,0;t) >= (4 pi t)^{-3/2} e^{-9 pi^2 t/(4 eps^2)} on a t grid."""
    rows = []
    for t in t_grid:
        lhs = ball_kernel_center(eps, float(t))
        rhs = (4.0 * math.pi * t) ** -1.5 * math.exp(-9.0 * math.pi**2 * t / (4.0 * eps**2))
        rows.append({"name": "ball-kernel-lower-bound", "eps": eps, "t": float(t),
                     "lhs": lhs, "rhs": rhs,
                     "passed": bool(lhs >= rhs * (1.0 - 1e-12))})
    return rows


def identity_quadrature(s: float, tau: float, t_max: float | None = None
                        ) -> tuple[float, float, float]:
    """Adaptive quadrature of the Laplace-Gaussian identity vs its closed form.

    Returns (numeric, closed_form, relative_error). ``t_max`` defaults to the
    value where the truncated tail is below 1e-16 of the closed form.
    """
    if s <= 0 or tau <= 0:
        raise DomainError("s and tau must be positive")
    if t_max is None:
        t_max = max(50.0 / tau**2, 4.0 * s / tau)

    def integrand(t):
        return (4.0 * math.pi * t) ** -1.5 * math.exp(-s * s / (4.0 * t) - tau * tau * t)

    peak = s / (2.0 * tau)
    val, err = quad(integrand, 0.0, t_max, points=[peak, 4 * peak],
                    limit=400, epsabs=0.0, epsrel=1e-12)
    if not math.isfinite(val) or err > 1e-8 * abs(val):
        raise SolverFailureError(f"identity quadrature did not converge (err {err:.2e})")
    closed = math.exp(-tau * s) / (4.0 * math.pi * s)
    return val, closed, abs(val - closed) / closed


class _CrankNicolson:
    """(2/dt - Lap) u_next = (2/dt + Lap) u with obstacle walls of either type.

    Neumann walls use mirrored ghosts (zero-weight faces); Dirichlet walls
    keep the face open against a pinned zero solid value. Keeping
    dt <= h^2/3 makes both step operators elementwise monotone, so discrete
    positivity and Dirichlet-under-Neumann domination hold exactly.
    """

    def __init__(self, mask: Mask, bc: str, tol: float = 1e-12):
        if bc not in ("neumann", "dirichlet"):
            raise DomainError(f"bc must be 'neumann' or 'dirichlet', got {bc!r}")
        self.grid = mask.grid
        self.solid = mask.solid(include_d=True)
        self.h2 = self.grid.h ** 2
        if bc == "neumann":
            self.weights = face_open_weights(self.solid)
        else:
            self.weights = [np.ones(self.grid.dims) for _ in range(6)]
        self.tol = tol
        self._lap = self.grid.zeros()
        self._pad = np.pad(self._lap, 1)

    def lap(self, u: np.ndarray) -> np.ndarray:
        self._pad[1:-1, 1:-1, 1:-1] = u
        laplacian_into(self._lap, self._pad, self.weights, self.h2)
        return self._lap

    def step(self, u: np.ndarray, dt: float) -> np.ndarray:
        b = 2.0 / dt * u + self.lap(u)
        b[self.solid] = 0.0
        diag = 2.0 / dt + sum(self.weights) / self.h2
        diag[self.solid] = 1.0

        def A(x):
            out = 2.0 / dt * x - self.lap(x)
            out[self.solid] = x[self.solid]
            return out.copy()

        x = u.copy()
        x[self.solid] = 0.0
        r = b - A(x)
        z = r / diag
        p = z.copy()
        rz = float(np.vdot(r, z))
        norm_b = float(np.linalg.norm(b))
        if norm_b == 0.0:
            return np.zeros_like(u)
        it = 0
        while float(np.linalg.norm(r)) > self.tol * norm_b:
            Ap = A(p)
            alpha = rz / float(np.vdot(p, Ap))
            x = x + alpha * p
            r = r - alpha * Ap
            z = r / diag
            rz_new = float(np.vdot(r, z))
            p = z + (rz_new / rz) * p
            rz = rz_new
            it += 1
            if it > 10 * max(self.grid.dims):
                raise SolverFailureError("Crank-Nicolson inner solve stalled")
        return x


def heat_evolve(mask: Mask, bc: str, f: SourceField, t: float, dt: float,
                tol: float = 1e-12) -> np.ndarray:
    """Crank-Nicolson evolution of dZ/dt = Lap Z from Z(0) = f to time t.

    ``bc`` selects the obstacle wall type; the outer box face is Dirichlet.
    ``f`` must be nonnegative. The number of steps is round(t/dt).
    """
    if dt <= 0 or dt > t:
        raise DomainError("need 0 < dt <= t")
    if np.any(f.values < 0):
        raise DomainError("heat evolution requires nonnegative data")
    stepper = _CrankNicolson(mask, bc, tol)
    u = f.values.copy()
    u[stepper.solid] = 0.0
    n = max(1, int(round(t / dt)))
    dt_eff = t / n
    for _ in range(n):
        u = stepper.step(u, dt_eff)
    return u


def domination_check(mask: Mask, f: SourceField, t: float,
                     dt: float | None = None) -> tuple[float, bool]:
    """Evolve both wall types on the same mask and data; report the largest
    Dirichlet-over-Neumann excess over non-solid cells.

    The default dt = h^2/3 keeps both steppers elementwise monotone, which is
    what makes the discrete inequality exact rather than asymptotic.
    """
    if dt is None:
        dt = mask.grid.h ** 2 / 3.0
    zn = heat_evolve(mask, "neumann", f, t, dt)
    zd = heat_evolve(mask, "dirichlet", f, t, dt)
    fluid = ~mask.solid(include_d=True)
    violation = float(np.max((zd - zn)[fluid]))
    passed = violation <= 1e-10 * max(float(zn.max()), 1e-300)
    return violation, passed
