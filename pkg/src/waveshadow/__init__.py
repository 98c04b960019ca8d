"""waveshadow: time-domain enclosure method for hearing a hidden obstacle.

A single wave is generated and recorded on a small ball B in the presence of
a known sound-hard obstacle. The exponentially weighted indicator of the
recorded wave decides whether an unknown obstacle hides behind the known one
and yields a certified lower bound on its Euclidean distance from B.

Subpackages:
    geometry     convex projections, detour arcs with certified length bounds,
                 set distances, voxel geodesics
    grid         voxel discretization, masks, quadrature, gradients
    wavesim      leapfrog FDTD with sponge absorption and scattered-field runs
    elliptic     screened (modified Helmholtz) solves and energy functionals
    heatkernel   heat-kernel bounds, Crank-Nicolson evolution, domination
    indicator    Laplace transforms, indicator sweeps, decision, ranging
    experiments  configuration, presets, end-to-end runs, reports
    verification property and oracle suites
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    BALL_DETOUR_CONSTANT,
    BallSpec,
    ConvexBodySpec,
    DetourArc,
    SceneSpec,
    cone_contains,
    detour_arc_ball,
    detour_arc_convex,
    detour_constant,
    dist_sets,
    geodesic_deps,
    project_convex,
)
from .grid import Grid3, Mask, build_grid, gradient, integrate, voxelize  # noqa: F401
from .indicator import (  # noqa: F401
    IndicatorSample,
    IndicatorSeries,
    Verdict,
    decide,
    indicator_values,
    laplace_transform,
    range_lower_bound,
    sweep,
)
from .wavesim import WaveRecord, cfl_dt, make_source, run_wave, run_wave_pair  # noqa: F401
