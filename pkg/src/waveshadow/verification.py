"""Property and oracle verification suites.

Four suites, each returning a list of check records
``{"name", "inputs", "lhs", "rhs", "passed", ...}``:

  geometry        detour constants, the ball-detour sweep (arcs clear the
                  ball, certified length bound), the convex-detour sweeps for
                  alpha in {0, -0.25, -0.5}, and projection oracles
  identity        the Laplace-Gaussian identity on an (s, tau) grid
  heatkernel      the Gaussian lower bound for the ball kernel, agreement of
                  the two kernel representations, Dirichlet-under-Neumann
                  domination, and the geodesic lower-bound check for the
                  Dirichlet-smoothed field
  solver-oracles  free-space FDTD against the spherical-means solution and
                  the screened solve against direct convolution quadrature

Closed-form oracles live next to the checks so each check is self-contained.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from . import geometry, heatkernel, wavesim
from .elliptic import solve_modified_helmholtz
from .geometry import (BallSpec, ConvexBodySpec, SceneSpec, detour_arc_ball,
                       detour_arc_convex, detour_constant, geodesic_field,
                       project_convex)
from .grid import Grid3, build_grid, voxelize
from .wavesim import make_source

# --------------------------------------------------------------------------- helpers


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] *= -1.0
    return q


def random_ellipsoid(rng: np.random.Generator, lo: float = 0.5, hi: float = 2.5
                     ) -> ConvexBodySpec:
    axes = rng.uniform(lo, hi, size=3)
    return ConvexBodySpec.ellipsoid(np.zeros(3), axes, random_rotation(rng))


def _unit(v):
    return v / np.linalg.norm(v)


def _free_space_scene(eta: float) -> SceneSpec:
    return SceneSpec((), (), BallSpec([0.0, 0.0, 0.0], eta))


# --------------------------------------------------------------------------- geometry


def check_detour_constants() -> list[dict]:
    c_ball = detour_constant("ball")
    want_ball = math.sqrt(2.0) * math.sqrt((math.pi / 4.0) ** 2 + 1.0)
    rows = [{
        "name": "detour-constant-ball", "inputs": {},
        "lhs": c_ball, "rhs": want_ball,
        "passed": bool(abs(c_ball - want_ball) <= 1e-12),
    }]
    for alpha in (0.0, -0.5):
        c = detour_constant("convex", alpha)
        want = math.sqrt(2.0) / (1.0 + alpha)
        rows.append({
            "name": "detour-constant-convex", "inputs": {"alpha": alpha},
            "lhs": c, "rhs": want,
            "passed": bool(abs(c - want) <= 1e-12),
        })
    return rows


def _arc_ball_clearance_exact(arc, center, radius) -> float:
    """Analytic min distance of an arc to the ball surface (lower-bounds any
    sampled signed distance)."""
    best = math.inf
    for p in arc.pieces:
        if p[0] == "seg":
            _, p0, p1 = p
            d = p1 - p0
            dd = float(d @ d)
            t = 0.0 if dd == 0.0 else float(-(p0 - center) @ d) / dd
            t = min(1.0, max(0.0, t))
            best = min(best, float(np.linalg.norm(p0 + t * d - center)))
        else:
            best = min(best, float(p[2]))  # arc pieces sit on a sphere of that radius
    return best - radius


def sweep_ball_arcs(n: int, seed: int, samples_per_arc: int = 33,
                    sampled_subset: int = 1000) -> dict:
    """Random exterior pairs around random balls: every constructed arc must
    clear the ball and obey the certified length bound.

    Clearance is evaluated analytically per piece (a lower bound for every
    sampled signed distance); a random subset is additionally point-sampled
    to exercise the polyline path.
    """
    rng = np.random.default_rng(seed)
    c_bound = detour_constant("ball")
    worst_ratio = 0.0
    worst_clear = math.inf
    worst_sampled = math.inf
    every = max(1, n // max(sampled_subset, 1))
    for i in range(n):
        r = rng.uniform(0.2, 2.2)
        ball = BallSpec(rng.normal(size=3), r)
        x = ball.center + _unit(rng.normal(size=3)) * (r + rng.uniform(1e-3, 3.0))
        y = ball.center + _unit(rng.normal(size=3)) * (r + rng.uniform(1e-3, 3.0))
        arc = detour_arc_ball(ball, x, y)
        d = float(np.linalg.norm(y - x))
        if d == 0.0:
            continue
        worst_ratio = max(worst_ratio, arc.exact_length / d)
        worst_clear = min(worst_clear, _arc_ball_clearance_exact(arc, ball.center, r))
        if i % every == 0:
            pts = arc.sample(samples_per_arc)
            worst_sampled = min(worst_sampled, float(
                np.min(np.linalg.norm(pts - ball.center, axis=1)) - r))
    return {
        "name": "ball-detour-sweep",
        "inputs": {"n": n, "seed": seed},
        "lhs": worst_ratio, "rhs": c_bound,
        "min_clearance": worst_clear, "min_sampled_clearance": worst_sampled,
        "passed": bool(worst_ratio <= c_bound + 1e-9 and worst_clear >= -1e-9
                       and worst_sampled >= -1e-9),
    }


def sweep_convex_arcs(n: int, alpha: float, seed: int, eps: float = 0.2,
                      samples_per_arc: int = 17) -> dict:
    """Random rotated ellipsoids with pairs drawn on outward normal rays,
    filtered by the cone condition for ``alpha``; arcs must stay in the
    eps-dilation complement and obey the alpha length bound."""
    rng = np.random.default_rng(seed)
    c_bound = detour_constant("convex", alpha)
    worst_ratio = 0.0
    worst_margin = math.inf
    kept = 0
    while kept < n:
        body = random_ellipsoid(rng)
        for _ in range(8):
            nux = _unit(rng.normal(size=3))
            nuy = _unit(rng.normal(size=3))
            if float(nux @ nuy) < alpha:
                continue
            x = body.boundary_point_with_normal(nux) + rng.uniform(eps, eps + 3.0) * nux
            y = body.boundary_point_with_normal(nuy) + rng.uniform(eps, eps + 3.0) * nuy
            arc = detour_arc_convex(body, eps, alpha, x, y)
            d = float(np.linalg.norm(y - x))
            if d > 0:
                worst_ratio = max(worst_ratio, arc.exact_length / d)
            pts = arc.sample(samples_per_arc)
            margin = float(np.min(body.signed_distance(pts)) - eps)
            worst_margin = min(worst_margin, margin)
            kept += 1
            if kept >= n:
                break
    return {
        "name": "convex-detour-sweep",
        "inputs": {"n": n, "alpha": alpha, "eps": eps, "seed": seed},
        "lhs": worst_ratio, "rhs": c_bound,
        "min_margin": worst_margin,
        "passed": bool(worst_ratio <= c_bound + 1e-9 and worst_margin >= -1e-9),
    }


def check_projection_oracle(n_bodies: int, seed: int, n_surface: int = 1_000_000) -> dict:
    """Ellipsoid closest-point projection against dense surface sampling."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_bodies):
        body = random_ellipsoid(rng)
        x = body.center + _unit(rng.normal(size=3)) * (float(body.semi_axes.max()) + rng.uniform(0.5, 3.0))
        q, nu = project_convex(body, x)
        # brute force over quasi-uniform normals mapped to the surface
        i = np.arange(n_surface) + 0.5
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        ct = 1.0 - 2.0 * i / n_surface
        st = np.sqrt(1.0 - ct**2)
        dirs = np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=1)
        surf_body = dirs * body.semi_axes
        surf = body.to_world_frame(surf_body)
        dmin = float(np.min(np.linalg.norm(surf - x, axis=1)))
        err = abs(float(np.linalg.norm(q - x)) - dmin)
        worst = max(worst, err)
    return {
        "name": "projection-brute-force",
        "inputs": {"n_bodies": n_bodies, "seed": seed, "n_surface": n_surface},
        "lhs": worst, "rhs": 1e-3,
        "passed": bool(worst <= 1e-3),
    }


def geometry_suite(seed: int = 42, n_ball: int = 100_000, n_convex: int = 10_000
                   ) -> list[dict]:
    checks = check_detour_constants()
    checks.append(sweep_ball_arcs(n_ball, seed))
    for k, alpha in enumerate((0.0, -0.25, -0.5)):
        checks.append(sweep_convex_arcs(n_convex, alpha, seed + 7 * k + 1))
    checks.append(check_projection_oracle(20, seed + 99))
    return checks


# --------------------------------------------------------------------------- identity


def identity_suite(seed: int = 42) -> list[dict]:
    checks = []
    for s in (0.5, 1.0, 2.0):
        for tau in (1.0, 2.0, 4.0):
            num, closed, rel = heatkernel.identity_quadrature(s, tau)
            checks.append({
                "name": "laplace-gaussian-identity",
                "inputs": {"s": s, "tau": tau},
                "lhs": num, "rhs": closed, "rel_err": rel,
                "passed": bool(rel <= 1e-6),
            })
    return checks


# --------------------------------------------------------------------------- heat kernel


def _heat_scene_unit_ball() -> SceneSpec:
    return SceneSpec(
        (ConvexBodySpec.ball([0.0, 0.0, 0.0], 1.0),),
        (),
        BallSpec([-1.35, 0.0, 0.0], 0.28),
    )


def heatkernel_suite(seed: int = 42, domination_times=(0.1, 0.5, 1.0)) -> list[dict]:
    checks = []
    for eps in (0.5, 1.0, 2.0):
        t_grid = np.logspace(-3, 1, 20)
        rows = heatkernel.lemma_gaussian_lower_bound(eps, t_grid)
        worst = min(r["lhs"] / r["rhs"] for r in rows)
        checks.append({
            "name": "ball-kernel-gaussian-lower-bound",
            "inputs": {"eps": eps, "t_grid": "20 log-spaced in [1e-3, 10]"},
            "lhs": worst, "rhs": 1.0,
            "passed": all(r["passed"] for r in rows),
        })
    # representation agreement on the overlap region
    worst_rel = 0.0
    for eps in (0.5, 1.0, 2.0):
        for t in np.logspace(-4, math.log10(0.4), 12) * eps**2:
            a = heatkernel._kernel_eigenseries(eps, t, heatkernel.eigenseries_terms_needed(eps, t))
            b = heatkernel._kernel_images(eps, t)
            worst_rel = max(worst_rel, abs(a - b) / abs(a))
    checks.append({
        "name": "kernel-representations-agree",
        "inputs": {"eps": [0.5, 1.0, 2.0]},
        "lhs": worst_rel, "rhs": 1e-10,
        "passed": bool(worst_rel <= 1e-10),
    })
    # domination on a 32^3 grid with a ball obstacle
    scene = _heat_scene_unit_ball()
    grid = Grid3([-2.0, -2.0, -2.0], 4.0 / 32, (32, 32, 32), sponge_cells=0)
    mask = voxelize(scene, grid)
    f = make_source(scene, grid)
    for t in domination_times:
        viol, ok = heatkernel.domination_check(mask, f, t)
        checks.append({
            "name": "dirichlet-under-neumann-domination",
            "inputs": {"t": t, "dims": list(grid.dims)},
            "lhs": viol, "rhs": 0.0,
            "passed": bool(ok),
        })
    checks.append(check_geodesic_heat_lower_bound())
    return checks


def check_geodesic_heat_lower_bound(t: float = 0.5, eps: float = 0.5,
                                    slack: float = 0.1) -> dict:
    """Dirichlet-smoothed field against the geodesic Gaussian lower bound.

    On a 48^3 grid with a unit-ball obstacle, Z_dirichlet(x, t) must dominate
    (1 - slack) * sum_B exp(-d_eps(x,y)^2 / 4t) K_eps(0,0;t) f(y) h^3 with
    d_eps the conservative voxel geodesic.
    """
    scene = SceneSpec((ConvexBodySpec.ball([0.0, 0.0, 0.0], 1.0),), (),
                      BallSpec([-2.2, 0.0, 0.0], 0.4))
    h = 7.2 / 48
    grid = Grid3([-3.7, -3.6, -3.6], h, (48, 48, 48), sponge_cells=0)
    mask = voxelize(scene, grid)
    f = make_source(scene, grid)
    zd = heatkernel.heat_evolve(mask, "dirichlet", f, t, dt=h * h / 3.0)
    keps = heatkernel.ball_kernel_center(eps, t)
    b_cells = f.b_cells
    b_centers = grid.cell_centers(b_cells)
    fB = f.values[tuple(b_cells.T)]
    worst = math.inf
    for probe in ([2.0, 0.0, 0.0], [1.6, 1.2, 0.0]):
        dmap, lo, dims = geodesic_field(scene, eps, h, probe, extra_pts=b_centers)
        cells = np.floor((b_centers - lo) / h).astype(int)
        de = dmap[tuple(cells.T)]
        rhs = float(np.sum(np.exp(-de**2 / (4.0 * t)) * fB)) * keps * grid.h**3
        lhs = float(zd[grid.cell_of(probe)])
        worst = min(worst, lhs / rhs)
    return {
        "name": "geodesic-gaussian-heat-lower-bound",
        "inputs": {"t": t, "eps": eps, "dims": [48, 48, 48]},
        "lhs": worst, "rhs": 1.0 - slack,
        "passed": bool(worst >= 1.0 - slack),
    }


# --------------------------------------------------------------------------- solver oracles


def kirchhoff_center_series(eta: float, g: float, r: float, times: np.ndarray
                            ) -> np.ndarray:
    """Exact radial solution u(r, t) for the compact quadratic source via the
    1D reduction w = r u (d'Alembert with even antiderivative)."""

    def F(s):
        s = np.clip(np.abs(s), 0.0, eta)
        return g * (eta**2 * s**2 / 2.0 - 2.0 * eta * s**3 / 3.0 + s**4 / 4.0)

    r = max(r, 1e-12)
    return (F(r + times) - F(r - times)) / (2.0 * r)


def check_kirchhoff(h: float = 0.0625, eta: float = 0.8, T: float = 2.4) -> dict:
    """Free-space run against the spherical-means solution on every B cell."""
    half = 2.6
    n = int(round(2 * half / h))
    grid = Grid3([-half, -half, -half], h, (n, n, n), sponge_cells=12)
    scene = _free_space_scene(eta)
    source = make_source(scene, grid)
    rec = wavesim.run_wave(scene, grid, source, T, include_D=False)
    times = rec.times
    num = den = 0.0
    worst = 0.0
    radii = np.linalg.norm(grid.cell_centers(rec.b_cells), axis=1)
    for j, rr in enumerate(radii):
        ue = kirchhoff_center_series(eta, 1.0, rr, times)
        e2 = float(np.sum((rec.u_on_B[:, j] - ue) ** 2))
        u2 = float(np.sum(ue**2))
        num += e2
        den += u2
        worst = max(worst, math.sqrt(e2 / u2))
    rel = math.sqrt(num / den)
    return {
        "name": "fdtd-vs-spherical-means",
        "inputs": {"h": h, "eta": eta, "T": T},
        "lhs": rel, "rhs": 0.02, "worst_cell": worst,
        "passed": bool(rel <= 0.02),
    }


def yukawa_point_oracle(eta: float, g: float, tau: float, r: float) -> float:
    """Screened convolution at radius r by exact angular reduction plus
    adaptive radial quadrature."""

    def integrand(rho):
        return rho * (eta - rho) ** 2 * g * (
            math.exp(-tau * abs(r - rho)) - math.exp(-tau * (r + rho)))

    val, _ = quad(integrand, 0.0, eta, points=[min(r, eta)], limit=200)
    return val / (2.0 * tau * r)


def check_yukawa(h: float = 0.0625, tau: float = 2.0) -> dict:
    eta = 0.4
    half = 2.6
    n = int(round(2 * half / h))
    grid = Grid3([-half, -half, -half], h, (n, n, n), sponge_cells=0)
    scene = _free_space_scene(eta)
    source = make_source(scene, grid)
    mask = voxelize(scene, grid)
    v, stats = solve_modified_helmholtz(mask, False, source, tau, tol=1e-12)
    worst = 0.0
    for rp in (0.75, 1.0, 1.25):
        i = int(round((rp - grid.origin[0]) / h - 0.5))
        ci = (i, n // 2, n // 2)
        rr = float(np.linalg.norm(grid.cell_centers(np.array([ci]))[0]))
        oracle = yukawa_point_oracle(eta, 1.0, tau, rr)
        worst = max(worst, abs(float(v.values[ci]) - oracle) / abs(oracle))
    return {
        "name": "screened-solve-vs-convolution",
        "inputs": {"h": h, "tau": tau, "iterations": stats.iterations},
        "lhs": worst, "rhs": 0.01,
        "passed": bool(worst <= 0.01),
    }


def solver_oracles_suite(seed: int = 42) -> list[dict]:
    return [check_kirchhoff(), check_yukawa()]


# --------------------------------------------------------------------------- dispatch

SUITES = {
    "geometry": geometry_suite,
    "identity": identity_suite,
    "heatkernel": heatkernel_suite,
    "solver-oracles": solver_oracles_suite,
}


def run_suite(name: str, seed: int = 42) -> list[dict]:
    if name not in SUITES:
        raise KeyError(f"unknown verification suite {name!r}; "
                       f"choose from {sorted(SUITES)}")
    return SUITES[name](seed=seed)
