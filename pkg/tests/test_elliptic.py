import numpy as np
import pytest

from waveshadow import elliptic as el
from waveshadow import geometry as G
from waveshadow import grid as gr
from waveshadow import wavesim as wv
from waveshadow.errors import ConfigurationError, DomainError
from waveshadow.experiments import preset_config
from waveshadow.verification import yukawa_point_oracle


def free_scene(eta=0.4):
    return G.SceneSpec((), (), G.BallSpec([0.0, 0.0, 0.0], eta))


def cube_grid(half, h, sponge=0):
    n = int(round(2 * half / h))
    return gr.Grid3([-half] * 3, h, (n, n, n), sponge_cells=sponge)


@pytest.fixture(scope="module")
def small_obstacle_setup():
    scene = G.SceneSpec((G.ConvexBodySpec.ball([0.6, 0.0, 0.0], 0.35),), (),
                        G.BallSpec([-0.9, 0.0, 0.0], 0.3))
    grid = cube_grid(1.8, 0.075)
    mask = gr.voxelize(scene, grid)
    source = wv.make_source(scene, grid)
    return scene, grid, mask, source


def test_zero_source_zero_solution(small_obstacle_setup):
    _, grid, mask, _ = small_obstacle_setup
    zero = wv.SourceField(np.zeros(grid.dims), np.zeros(3), 0.3, 1.0)
    field, stats = el.solve_modified_helmholtz(mask, False, zero, 2.0)
    assert stats.iterations == 0
    assert float(np.abs(field.values).max()) == 0.0


def test_residual_below_tolerance(small_obstacle_setup):
    _, _, mask, source = small_obstacle_setup
    field, stats = el.solve_modified_helmholtz(mask, False, source, 2.0, tol=1e-12)
    assert stats.residual <= 1e-12
    assert field.residual == stats.residual


def test_preconditions(small_obstacle_setup):
    _, _, mask, source = small_obstacle_setup
    with pytest.raises(DomainError):
        el.solve_modified_helmholtz(mask, False, source, 0.2)
    with pytest.raises(ConfigurationError):
        el.solve_modified_helmholtz(mask, False, source, 8.0)  # tau*h > 0.5


def test_self_adjointness(small_obstacle_setup):
    _, grid, mask, _ = small_obstacle_setup
    A = el.ShiftedLaplacian(mask, False, 1.7)
    rng = np.random.default_rng(2)
    for _ in range(3):
        a = rng.normal(size=grid.dims)
        b = rng.normal(size=grid.dims)
        lhs = float(np.vdot(A(a), b))
        rhs = float(np.vdot(a, A(b)))
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs))


def test_discrete_positivity(small_obstacle_setup):
    _, _, mask, source = small_obstacle_setup
    field, _ = el.solve_modified_helmholtz(mask, False, source, 1.0, tol=1e-12)
    fluid = ~mask.solid()
    assert float(field.values[fluid].min()) >= -1e-12 * float(field.values.max())


def test_free_space_vs_convolution():
    scene = free_scene()
    grid = cube_grid(2.4, 0.075)
    mask = gr.voxelize(scene, grid)
    source = wv.make_source(scene, grid)
    v, _ = el.solve_modified_helmholtz(mask, False, source, 2.0, tol=1e-12)
    n = grid.dims[0]
    worst = 0.0
    for rp in (0.75, 1.2):
        i = int(round((rp - grid.origin[0]) / grid.h - 0.5))
        ci = (i, n // 2, n // 2)
        rr = float(np.linalg.norm(grid.cell_centers(np.array([ci]))[0]))
        oracle = yukawa_point_oracle(0.4, 1.0, 2.0, rr)
        worst = max(worst, abs(float(v.values[ci]) - oracle) / oracle)
    assert worst <= 0.02


def test_monotone_shell_decay():
    scene = free_scene()
    grid = cube_grid(2.0, 0.1)
    mask = gr.voxelize(scene, grid)
    source = wv.make_source(scene, grid)
    v, _ = el.solve_modified_helmholtz(mask, False, source, 1.5, tol=1e-11)
    X, Y, Z = grid.meshgrid()
    r = np.sqrt(X**2 + Y**2 + Z**2)
    edges = np.arange(0.5, 1.9, 0.15)
    maxes = [float(np.abs(v.values[(r >= a) & (r < a + 0.15)]).max()) for a in edges]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(maxes, maxes[1:]))


def test_tau_scaling_on_default_scene():
    # The L2 norm of the reference field obeys the tau^-2 law only once
    # tau * eta >> 1; at the sweep's tau the quasi-static tail still
    # dominates, where doubling tau shrinks the norm by at most 1/sqrt(2).
    # Measured ratios on this scene: 0.6173 (tau 1 -> 2), 0.5551 (2 -> 4),
    # strictly decreasing toward the asymptotic 0.25.
    cfg = preset_config("ball-behind-ball")
    grid = cfg.build_grid()
    mask0 = gr.voxelize(cfg.scene.without_hidden(), grid)
    source = wv.make_source(cfg.scene, grid)
    norms = {}
    for tau in (1.0, 2.0, 4.0):
        v, _ = el.solve_modified_helmholtz(mask0, False, source, tau, tol=1e-10)
        norms[tau] = float(np.linalg.norm(v.values))
    r12 = norms[2.0] / norms[1.0]
    r24 = norms[4.0] / norms[2.0]
    assert r12 <= 0.65 < 1.0 / np.sqrt(2.0) + 0.01
    assert r24 <= 0.60
    assert r24 < r12


def test_compute_J_synthetic_constant():
    scene = G.SceneSpec((G.ConvexBodySpec.ball([10.0, 10.0, 10.0], 0.5),),
                        (G.ConvexBodySpec.ball([0.0, 0.0, 0.0], 0.4),),
                        G.BallSpec([-1.2, 0.0, 0.0], 0.2))
    grid = gr.Grid3([-2.0, -2.0, -2.0], 0.1, (40, 40, 40), sponge_cells=0)
    # keep the far-away known body out of this small box
    scene = G.SceneSpec((), scene.d_bodies, scene.source)
    mask = gr.voxelize(scene, grid)
    tau, c = 2.0, 1.3
    field = el.LaplaceField(tau, np.full(grid.dims, c), 0.0)
    vol = mask.counts()["d_solid"] * grid.h**3
    assert el.compute_J(field, mask) == pytest.approx(tau**2 * c**2 * vol, rel=1e-12)
    zero = el.LaplaceField(tau, np.zeros(grid.dims), 0.0)
    assert el.compute_J(zero, mask) == 0.0


def test_compute_J_empty_region():
    scene = free_scene()
    grid = cube_grid(1.0, 0.1, sponge=4)
    mask = gr.voxelize(scene, grid)
    field = el.LaplaceField(2.0, np.ones(grid.dims), 0.0)
    assert el.compute_J(field, mask) == 0.0


def test_compute_E_zero_and_nonnegative(small_obstacle_setup):
    _, grid, mask, source = small_obstacle_setup
    v, _ = el.solve_modified_helmholtz(mask, False, source, 2.0)
    assert el.compute_E(v, v, mask) == 0.0
    w = el.LaplaceField(2.0, v.values * 1.1, 0.0)
    assert el.compute_E(w, v, mask) >= 0.0
    bad = el.LaplaceField(2.5, v.values, 0.0)
    with pytest.raises(DomainError):
        el.compute_E(bad, v, mask)


def test_J_volume_vs_surface_form():
    # reference field around a hidden ball in free space, fine grid
    scene = G.SceneSpec((), (G.ConvexBodySpec.ball([1.5, 0.0, 0.0], 0.5),),
                        G.BallSpec([-1.0, 0.0, 0.0], 0.4))
    h = 0.0625
    grid = gr.Grid3([-2.8, -2.4, -2.4], h,
                    (int(5.6 / h), int(4.8 / h), int(4.8 / h)), sponge_cells=0)
    mask = gr.voxelize(scene, grid)
    source = wv.make_source(scene, grid)
    v, _ = el.solve_modified_helmholtz(mask, False, source, 2.0, tol=1e-12)
    J_vol = el.compute_J(v, mask)
    J_surf = el.boundary_flux_energy(v, mask)
    assert J_vol > 0
    assert abs(J_surf - J_vol) <= 0.05 * J_vol
