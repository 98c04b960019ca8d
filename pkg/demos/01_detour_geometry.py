"""Detour arcs around obstacles and the certified length constants.

Walks through the geometric toolkit: closest-point projection onto an
ellipsoid, the detour arc around a ball with its length bound, the two-leg
arc inside the supporting planes of a convex body, and the voxel geodesic
oracle sandwiched between the Euclidean distance and the constructed arc.

Run:  python demos/01_detour_geometry.py
"""

import numpy as np

from waveshadow import (
    BallSpec,
    ConvexBodySpec,
    SceneSpec,
    detour_arc_ball,
    detour_arc_convex,
    detour_constant,
    dist_sets,
    geodesic_deps,
    project_convex,
)

rng = np.random.default_rng(7)

print("certified constants")
print(f"  around a ball:            C      = {detour_constant('ball'):.10f}")
for alpha in (0.0, -0.25, -0.5):
    print(f"  convex, normal dot >= {alpha:5}: C(a) = {detour_constant('convex', alpha):.10f}")

print("\nclosest-point projection onto the ellipsoid with semi-axes (2, 1, 1)")
body = ConvexBodySpec.ellipsoid([0, 0, 0], [2.0, 1.0, 1.0])
for x in ([5.0, 0.0, 0.0], [3.0, 2.0, 0.0], [0.5, 0.5, 3.0]):
    q, nu = project_convex(body, x)
    print(f"  x = {x} -> q = {np.round(q, 4)}, outward normal {np.round(nu, 4)}")

print("\ndetour around the unit ball (worst pairs are on opposite sides)")
ball = BallSpec([0, 0, 0], 1.0)
for x, y in (([2.0, 0, 0], [3.0, 0, 0]),
             ([0.0, 0.0, 2.0], [0.0, 0.5, -3.0]),
             ([-1.1, 0.0, 0.0], [1.1, 0.0, 0.0])):
    arc = detour_arc_ball(ball, x, y)
    d = np.linalg.norm(np.subtract(y, x))
    print(f"  |x-y| = {d:6.3f}  arc length = {arc.exact_length:6.3f}  "
          f"ratio = {arc.exact_length / d:5.3f}  (bound {detour_constant('ball'):.3f})")

print("\ntwo-leg arc inside the supporting planes of a convex body")
nux = np.array([1.0, 0.0, 0.0])
nuy = np.array([0.0, 1.0, 0.0])
x = body.boundary_point_with_normal(nux) + 1.0 * nux
y = body.boundary_point_with_normal(nuy) + 1.4 * nuy
arc = detour_arc_convex(body, 0.5, 0.0, x, y)
d = np.linalg.norm(y - x)
print(f"  orthogonal contact normals: length {arc.exact_length:.4f} <= "
      f"sqrt(2)|x-y| = {np.sqrt(2) * d:.4f}")

print("\nvoxel geodesic vs the constructed arc (antipodal pair, unit ball)")
scene = SceneSpec((ConvexBodySpec.ball([0, 0, 0], 1.0),), (), BallSpec([0, 6, 0], 0.3))
x, y = np.array([-2.0, 0, 0]), np.array([2.0, 0, 0])
d_vox = geodesic_deps(scene, 1e-9, 0.05, x, y)
arc = detour_arc_ball(BallSpec([0, 0, 0], 1.0), x, y)
print(f"  Euclidean {np.linalg.norm(y - x):.3f} <= voxel geodesic {d_vox:.3f} "
      f"<= arc {arc.exact_length:.3f} (x 26-neighbor distortion)")

print("\nEuclidean gaps between scene bodies")
b = BallSpec([-2.2, 0, 0], 0.4)
hidden = ConvexBodySpec.ball([2.2, 0, 0], 0.5)
print(f"  source ball to hidden ball: {dist_sets(b, hidden):.4f} (preset ground truth)")
