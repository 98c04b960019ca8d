import math

import numpy as np
import pytest
from scipy import ndimage

from waveshadow import geometry as G
from waveshadow import grid as gr
from waveshadow.errors import ConfigurationError, DomainError


def scene_with(d0=(), d=(), b_center=(0.7, 0.7, 0.7), eta=0.05):
    return G.SceneSpec(tuple(d0), tuple(d), G.BallSpec(b_center, eta))


def small_grid(half=1.5, h=0.05, sponge=0):
    n = int(round(2 * half / h))
    return gr.Grid3([-half, -half, -half], h, (n, n, n), sponge_cells=sponge)


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        gr.Grid3([0, 0, 0], 0.1, (8, 32, 32))
    with pytest.raises(ConfigurationError):
        gr.Grid3([0, 0, 0], -0.1, (32, 32, 32))


def test_voxelize_ball_volume():
    scene = scene_with(d0=[G.ConvexBodySpec.ball([0, 0, 0], 1.0)])
    grid = small_grid(half=1.5, h=0.05)
    mask = gr.voxelize(scene, grid)
    vol = mask.counts()["d0_solid"] * grid.h**3
    assert abs(vol - 4 * math.pi / 3) <= 0.02 * (4 * math.pi / 3)


def test_voxelize_empty_scene_no_solids():
    scene = scene_with()
    mask = gr.voxelize(scene, small_grid(half=1.0, h=0.0625))
    assert mask.counts()["d0_solid"] == 0 and mask.counts()["d_solid"] == 0


def test_voxelize_two_components():
    scene = scene_with(d0=[G.ConvexBodySpec.ball([-0.7, 0, 0], 0.3),
                           G.ConvexBodySpec.ball([0.7, 0, 0], 0.3)])
    mask = gr.voxelize(scene, small_grid(half=1.5, h=0.05))
    lab, n = ndimage.label(mask.region("d0_solid"), structure=np.ones((3, 3, 3)))
    assert n == 2


def test_voxelize_deterministic():
    scene = scene_with(d0=[G.ConvexBodySpec.ball([0, 0, 0], 0.8)])
    g = small_grid(half=1.5, h=0.06)
    m1 = gr.voxelize(scene, g)
    m2 = gr.voxelize(scene, g)
    assert np.array_equal(m1.labels, m2.labels)


def test_voxelize_clearance_guard():
    scene = scene_with(d0=[G.ConvexBodySpec.ball([0, 0, 0], 1.45)])
    with pytest.raises(ConfigurationError):
        gr.voxelize(scene, small_grid(half=1.5, h=0.05, sponge=4))


def test_integrate_regions_and_linearity():
    scene = G.SceneSpec((), (), G.BallSpec([0, 0, 0], 0.4))
    grid = small_grid(half=1.0, h=0.04)
    mask = gr.voxelize(scene, grid)
    ones = np.ones(grid.dims)
    vol_b = gr.integrate(ones, mask, "source_B")
    assert vol_b == pytest.approx(mask.counts()["source_B"] * grid.h**3, rel=1e-14)
    assert gr.integrate(np.zeros(grid.dims), mask, "source_B") == 0.0
    # linearity and additivity over disjoint regions
    rng = np.random.default_rng(0)
    a = rng.normal(size=grid.dims)
    b = rng.normal(size=grid.dims)
    lhs = gr.integrate(2.0 * a + b, mask, "source_B")
    rhs = 2.0 * gr.integrate(a, mask, "source_B") + gr.integrate(b, mask, "source_B")
    assert lhs == pytest.approx(rhs, rel=1e-12)
    whole = gr.integrate(a, mask, ("source_B", "exterior", "sponge"))
    parts = sum(gr.integrate(a, mask, r) for r in ("source_B", "exterior", "sponge"))
    assert whole == pytest.approx(parts, rel=1e-12)
    with pytest.raises(DomainError):
        gr.integrate(ones, mask, "nowhere")


def test_integrate_source_closed_form():
    eta, g = 0.4, 1.3
    scene = G.SceneSpec((), (), G.BallSpec([0, 0, 0], eta), g)
    grid = small_grid(half=1.0, h=0.03125)
    mask = gr.voxelize(scene, grid)
    X, Y, Z = grid.meshgrid()
    r = np.sqrt(X**2 + Y**2 + Z**2)
    f = np.where(r < eta, (eta - r) ** 2 * g, 0.0)
    val = gr.integrate(f, mask, "source_B")
    exact = 4 * math.pi * eta**5 * g / 30.0
    assert abs(val - exact) <= 0.03 * exact


def test_gradient_exact_on_linear():
    grid = small_grid(half=1.0, h=0.1)
    scene = scene_with()
    mask = gr.voxelize(scene, grid)
    X, Y, Z = grid.meshgrid()
    f = 2.0 * X - 3.0 * Y + 0.5 * Z
    gx, gy, gz = gr.gradient(f, mask)
    inner = (slice(1, -1),) * 3
    np.testing.assert_allclose(gx[inner], 2.0, atol=1e-12)
    np.testing.assert_allclose(gy[inner], -3.0, atol=1e-12)
    np.testing.assert_allclose(gz[inner], 0.5, atol=1e-12)
    gx, gy, gz = gr.gradient(np.ones(grid.dims), mask)
    assert float(np.abs(gx).max() + np.abs(gy).max() + np.abs(gz).max()) == 0.0


def test_gradient_second_order():
    scene = scene_with()

    def err(h):
        grid = small_grid(half=1.0, h=h)
        mask = gr.voxelize(scene, grid)
        X, _, _ = grid.meshgrid()
        f = np.sin(2.0 * X)
        gx, _, _ = gr.gradient(f, mask)
        inner = (slice(2, -2),) * 3
        return float(np.max(np.abs(gx[inner] - 2.0 * np.cos(2.0 * X[inner]))))

    ratio = err(0.1) / err(0.05)
    assert 2.7 <= ratio <= 6.0


def test_gradient_one_sided_near_solid():
    # field smooth across the solid: one-sided stencil stays consistent
    scene = scene_with(d0=[G.ConvexBodySpec.ball([0, 0, 0], 0.5)])
    grid = small_grid(half=1.5, h=0.05)
    mask = gr.voxelize(scene, grid)
    X, _, _ = grid.meshgrid()
    gx, _, _ = gr.gradient(2.0 * X, mask)
    fluid = ~mask.solid()
    # half-weight one-sided stencils next to the wall halve the slope
    assert np.all(gx[fluid] >= 1.0 - 1e-12)
    assert np.all(gx[fluid] <= 2.0 + 1e-12)


def test_build_grid_contains_scene():
    scene = G.SceneSpec((G.ConvexBodySpec.ball([0, 0, 0], 1.0),),
                        (G.ConvexBodySpec.ball([2.2, 0, 0], 0.5),),
                        G.BallSpec([-2.2, 0, 0], 0.4))
    grid = gr.build_grid(scene, 0.125, clearance=4.0, sponge_cells=12)
    gr.voxelize(scene, grid)
    assert all(d >= 16 for d in grid.dims)


def test_field_io_roundtrip(tmp_path):
    from waveshadow.fieldio import load_field, save_field
    grid = small_grid(half=1.0, h=0.125)
    rng = np.random.default_rng(8)
    vals = rng.normal(size=grid.dims)
    save_field(tmp_path / "f", vals, grid)
    back, header = load_field(tmp_path / "f")
    np.testing.assert_array_equal(back, vals)
    assert header["ordering"] == "x-fastest"
    raw = np.frombuffer((tmp_path / "f.bin").read_bytes(), dtype="<f8")
    assert raw[1] == vals[1, 0, 0]  # x varies fastest on disk
