"""Exact geometric primitives for the hidden-obstacle pipeline.

Everything here is pure computational geometry on balls and ellipsoids:

* closest-point projection onto a convex body and the outward normal at
  the foot point,
* the cone region membership test (normal-alignment condition between a
  query point and every point of the source ball),
* constructive detour arcs around a ball and around a convex body, with
  analytically certified length bounds

      ball:    L <= sqrt(2) * sqrt((pi/4)^2 + 1) * |x - y|
      convex:  L <= sqrt(2)/(1 + alpha) * |x - y|   (normal dot >= alpha),

* Euclidean gap distances between unions of bodies,
* a voxel Dijkstra oracle for the obstacle-avoiding path metric d_eps.

Lengths are stored analytically (circular arcs keep center/radius/angles),
so the certified bounds are not polluted by polyline sampling error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .errors import ConfigurationError, DegenerateDecompositionError, DomainError

Vec3 = np.ndarray

_SQRT2 = math.sqrt(2.0)

#: Length-bound constant for detours around a ball.
BALL_DETOUR_CONSTANT = _SQRT2 * math.sqrt((math.pi / 4.0) ** 2 + 1.0)


def detour_constant(kind: str, alpha: float | None = None) -> float:
    """Certified detour/length-bound constant.

    kind "ball" needs no parameter; kind "convex" takes the normal-alignment
    parameter alpha in ]-1, 0].
    """
    if kind == "ball":
        return BALL_DETOUR_CONSTANT
    if kind == "convex":
        if alpha is None or not (-1.0 < alpha <= 0.0):
            raise DomainError(f"convex detour constant needs alpha in ]-1, 0], got {alpha}")
        return _SQRT2 / (1.0 + alpha)
    raise DomainError(f"unknown detour constant kind {kind!r}")


# --------------------------------------------------------------------------
# body specifications


def _as_vec3(x) -> Vec3:
    v = np.asarray(x, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise ConfigurationError(f"non-finite coordinates: {x}")
    return v


@dataclass(frozen=True)
class BallSpec:
    """Open ball: the source region B (also the enclosing ball W of the theory)."""

    center: Vec3
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center))
        if not self.radius > 0:
            raise ConfigurationError(f"ball radius must be positive, got {self.radius}")

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.sum((pts - self.center) ** 2, axis=-1) < self.radius**2

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.linalg.norm(pts - self.center, axis=-1) - self.radius

    def aabb(self) -> tuple[Vec3, Vec3]:
        r = self.radius
        return self.center - r, self.center + r

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True)
class ConvexBodySpec:
    """Ball or ellipsoid obstacle.

    ``orientation`` maps body coordinates to world coordinates (columns are
    the semi-axis directions); it must be a rotation to 1e-12.
    """

    kind: str
    center: Vec3
    semi_axes: Vec3
    orientation: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center))
        ax = np.asarray(self.semi_axes, dtype=float).reshape(3)
        if not np.all(ax > 0):
            raise ConfigurationError(f"semi-axes must be positive, got {ax}")
        object.__setattr__(self, "semi_axes", ax)
        R = np.eye(3) if self.orientation is None else np.asarray(self.orientation, float)
        if R.shape != (3, 3) or np.abs(R @ R.T - np.eye(3)).max() > 1e-12:
            raise ConfigurationError("orientation must be orthonormal to 1e-12")
        if np.linalg.det(R) < 0:
            raise ConfigurationError("orientation must have det +1")
        object.__setattr__(self, "orientation", R)
        if self.kind == "ball":
            if not np.allclose(ax, ax[0], rtol=0, atol=1e-12):
                raise ConfigurationError("ball must have equal semi-axes")
        elif self.kind != "ellipsoid":
            raise ConfigurationError(f"unknown body kind {self.kind!r}")

    @classmethod
    def ball(cls, center, radius: float) -> "ConvexBodySpec":
        return cls("ball", center, (radius, radius, radius))

    @classmethod
    def ellipsoid(cls, center, semi_axes, orientation=None) -> "ConvexBodySpec":
        return cls("ellipsoid", center, semi_axes, orientation)

    @property
    def radius(self) -> float:
        return float(self.semi_axes[0])

    def to_body_frame(self, pts: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(pts) - self.center) @ self.orientation

    def to_world_frame(self, pts_body: np.ndarray) -> np.ndarray:
        return np.atleast_2d(pts_body) @ self.orientation.T + self.center

    def contains(self, pts: np.ndarray) -> np.ndarray:
        b = self.to_body_frame(pts)
        return np.sum((b / self.semi_axes) ** 2, axis=-1) < 1.0

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        """Euclidean distance to the surface, negative inside.

        Exact for balls; for ellipsoids uses the closest-point projection
        (exact up to the secular-equation tolerance) outside and a
        level-set proxy inside (only the sign is used there).
        """
        pts = np.atleast_2d(pts)
        if self.kind == "ball":
            return np.linalg.norm(pts - self.center, axis=-1) - self.radius
        b = self.to_body_frame(pts)
        level = np.sum((b / self.semi_axes) ** 2, axis=-1)
        out = np.empty(len(b))
        outside = level >= 1.0
        if np.any(outside):
            q = _ellipsoid_project_body(self.semi_axes, b[outside])
            out[outside] = np.linalg.norm(b[outside] - q, axis=-1)
        if np.any(~outside):
            # inside: scaled level-set distance, enough for sign and margins
            out[~outside] = (np.sqrt(level[~outside]) - 1.0) * self.semi_axes.min()
        return out

    def boundary_point_with_normal(self, nu_world: Vec3) -> Vec3:
        """Unique boundary point whose outward normal is ``nu_world``."""
        nu = self.orientation.T @ _as_vec3(nu_world)
        w = self.semi_axes**2 * nu
        qb = w / math.sqrt(float(nu @ w))
        return self.to_world_frame(qb)[0]

    def aabb(self) -> tuple[Vec3, Vec3]:
        # extent of a rotated ellipsoid along axis e_i is |R diag(a)| row norm
        ext = np.linalg.norm(self.orientation * self.semi_axes, axis=1)
        return self.center - ext, self.center + ext

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "center": self.center.tolist(),
            "semi_axes": self.semi_axes.tolist(),
            "orientation": self.orientation.tolist(),
        }


@dataclass(frozen=True)
class SceneSpec:
    """Known obstacle bodies, optional hidden bodies, and the source ball."""

    d0_bodies: tuple[ConvexBodySpec, ...]
    d_bodies: tuple[ConvexBodySpec, ...]
    source: BallSpec
    g_amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "d0_bodies", tuple(self.d0_bodies))
        object.__setattr__(self, "d_bodies", tuple(self.d_bodies))
        if not self.g_amplitude > 0:
            raise ConfigurationError("source amplitude g must be positive")

    @property
    def has_hidden(self) -> bool:
        return len(self.d_bodies) > 0

    def without_hidden(self) -> "SceneSpec":
        return SceneSpec(self.d0_bodies, (), self.source, self.g_amplitude)

    def validate_disjoint(self, min_gap: float = 0.0) -> None:
        """All closures pairwise disjoint with gap > min_gap."""
        parts: list[tuple[str, object]] = [("B", self.source)]
        parts += [(f"D0[{i}]", b) for i, b in enumerate(self.d0_bodies)]
        parts += [(f"D[{i}]", b) for i, b in enumerate(self.d_bodies)]
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                gap = dist_sets(parts[i][1], parts[j][1])
                if gap <= min_gap:
                    raise ConfigurationError(
                        f"{parts[i][0]} and {parts[j][0]} are not disjoint "
                        f"(gap {gap:.6g} <= {min_gap:.6g})"
                    )

    def aabb(self) -> tuple[Vec3, Vec3]:
        boxes = [b.aabb() for b in (*self.d0_bodies, *self.d_bodies)]
        boxes.append(self.source.aabb())
        los = [b[0] for b in boxes]
        his = [b[1] for b in boxes]
        return np.min(los, axis=0), np.max(his, axis=0)

    def to_dict(self) -> dict:
        return {
            "d0_bodies": [b.to_dict() for b in self.d0_bodies],
            "d_bodies": [b.to_dict() for b in self.d_bodies],
            "source": self.source.to_dict(),
            "g_amplitude": self.g_amplitude,
        }


# --------------------------------------------------------------------------
# closest-point projection


def _ellipsoid_project_body(axes: Vec3, pts: np.ndarray, iters: int = 60) -> np.ndarray:
    """Closest boundary points for body-frame ``pts`` outside the ellipsoid.

    Solves the secular equation sum_i (a_i x_i)^2/(a_i^2 + lam)^2 = 1 by
    bisection on lam >= 0 (monotone, so the bracket never fails); the foot
    point is q_i = a_i^2 x_i / (a_i^2 + lam).
    """
    pts = np.atleast_2d(pts)
    a2 = axes**2
    lo = np.zeros(len(pts))
    hi = 2.0 * axes.max() * np.linalg.norm(pts, axis=-1) + a2.max()
    for _ in range(iters):
        lam = 0.5 * (lo + hi)
        val = np.sum(a2 * pts**2 / (a2 + lam[:, None]) ** 2, axis=-1)
        high = val > 1.0
        lo = np.where(high, lam, lo)
        hi = np.where(high, hi, lam)
    lam = 0.5 * (lo + hi)
    return a2 * pts / (a2 + lam[:, None])


def project_convex_many(body: ConvexBodySpec, pts: np.ndarray
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized closest-point projection: (foot points, outward normals)."""
    pts = np.atleast_2d(np.asarray(pts, float))
    if body.kind == "ball":
        d = pts - body.center
        n = np.linalg.norm(d, axis=-1)
        if np.any(n <= body.radius):
            raise DomainError("projection point lies on or inside the ball")
        nu = d / n[:, None]
        return body.center + body.radius * nu, nu
    b = body.to_body_frame(pts)
    if np.any(np.sum((b / body.semi_axes) ** 2, axis=-1) <= 1.0):
        raise DomainError("projection point lies on or inside the ellipsoid")
    qb = _ellipsoid_project_body(body.semi_axes, b)
    nub = qb / body.semi_axes**2
    nub /= np.linalg.norm(nub, axis=-1)[:, None]
    return body.to_world_frame(qb), nub @ body.orientation.T


def project_convex(body: ConvexBodySpec, x) -> tuple[Vec3, Vec3]:
    """Closest boundary point q of ``body`` to ``x`` and outward unit normal at q.

    ``x`` must lie strictly outside the body.
    """
    q, nu = project_convex_many(body, _as_vec3(x)[None])
    return q[0], nu[0]


# --------------------------------------------------------------------------
# cone region V_alpha(B; D0)


def fibonacci_ball(ball: BallSpec, n: int) -> np.ndarray:
    """n quasi-uniform points filling the open ball (golden-angle spiral)."""
    i = np.arange(n) + 0.5
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    cos_t = 1.0 - 2.0 * i / n
    sin_t = np.sqrt(np.clip(1.0 - cos_t**2, 0.0, 1.0))
    dirs = np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=1)
    radii = ball.radius * (i / n) ** (1.0 / 3.0)
    return ball.center + radii[:, None] * dirs


def cone_contains(alpha: float, d0: ConvexBodySpec, B: BallSpec, x,
                  n_samples: int = 64) -> bool:
    """Discrete membership test for the normal-alignment cone region.

    True iff nu(q(x)) . nu(q(y)) >= alpha for all sampled y in B. Sampling
    the full ball (default 64 quasi-uniform points) is a conservative stand-in
    for the intersection over every y in B.
    """
    x = _as_vec3(x)
    _, nux = project_convex(d0, x)
    for y in fibonacci_ball(B, n_samples):
        _, nuy = project_convex(d0, y)
        if float(nux @ nuy) < alpha:
            return False
    return True


# --------------------------------------------------------------------------
# detour arcs


@dataclass(frozen=True)
class DetourArc:
    """Piecewise path made of straight segments and circular arcs.

    Segments are ``("seg", p0, p1)`` or ``("arc", center, radius, u, v, a0, a1)``
    with the arc parametrized as center + radius*(cos(t) u + sin(t) v),
    t from a0 to a1. ``exact_length`` is the analytic length.
    """

    pieces: tuple
    exact_length: float

    def __post_init__(self):
        s = sum(_piece_length(p) for p in self.pieces)
        if abs(s - self.exact_length) > 1e-12 * max(1.0, abs(self.exact_length)):
            raise ValueError("exact_length inconsistent with analytic pieces")

    @property
    def vertices(self) -> np.ndarray:
        return self.sample(per_piece=2)

    def sample(self, per_piece: int = 64) -> np.ndarray:
        """Points along the arc, endpoints included (for avoidance checks)."""
        pts = []
        for p in self.pieces:
            if p[0] == "seg":
                _, p0, p1 = p
                t = np.linspace(0.0, 1.0, per_piece)[:, None]
                pts.append(p0 + t * (p1 - p0))
            else:
                _, c, r, u, v, a0, a1 = p
                t = np.linspace(a0, a1, per_piece)[:, None]
                pts.append(c + r * (np.cos(t) * u + np.sin(t) * v))
        return np.vstack(pts) if pts else np.zeros((0, 3))


def _piece_length(p) -> float:
    if p[0] == "seg":
        return float(np.linalg.norm(p[2] - p[1]))
    _, _, r, _, _, a0, a1 = p
    return float(abs(a1 - a0) * r)


def _any_perp(v: Vec3) -> Vec3:
    a = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    w = np.cross(v, a)
    return w / np.linalg.norm(w)


def _segment_clears_ball(x: Vec3, y: Vec3, center: Vec3, radius: float) -> bool:
    d = y - x
    dd = float(d @ d)
    t = 0.0 if dd == 0.0 else float(-(x - center) @ d) / dd
    t = min(1.0, max(0.0, t))
    return float(np.linalg.norm(x + t * d - center)) > radius


def detour_arc_ball(U: BallSpec, x, y) -> DetourArc:
    """Arc joining x and y outside the closed ball U, length-certified.

    Follows the constructive proof around a ball: with |x-c| <= |y-c| (swap
    otherwise), a same-side pair gets a path inside the half-space
    {(x-c).(z-c) >= 0} of length <= sqrt(2)|x-y|; an opposite-side pair gets
    the quarter meridian on the sphere through x followed by a right-angle
    two-segment path, total <= sqrt(2) sqrt((pi/4)^2+1) |x-y|.
    """
    x = _as_vec3(x)
    y = _as_vec3(y)
    c, r = U.center, U.radius
    if np.linalg.norm(x - c) <= r or np.linalg.norm(y - c) <= r:
        raise DomainError("detour endpoints must lie strictly outside the ball")
    if np.array_equal(x, y):
        return DetourArc((), 0.0)
    if np.linalg.norm(x - c) > np.linalg.norm(y - c):
        x, y = y, x
    rx = float(np.linalg.norm(x - c))
    e_up = (x - c) / rx
    hy = float((y - c) @ e_up)
    w = (y - c) - hy * e_up
    s = float(np.linalg.norm(w))
    e_s = w / s if s > 1e-14 else _any_perp(e_up)

    if _segment_clears_ball(x, y, c, r):
        return DetourArc((("seg", x, y),), float(np.linalg.norm(y - x)))

    if (x - c) @ (y - c) >= 0.0:
        # same side: circular arc at radius |x-c| to the radial ray of y,
        # then a radial segment outward to y
        ry = float(np.linalg.norm(y - c))
        ang = math.atan2(s, hy)  # in [0, pi/2] here
        yhat = c + rx * (y - c) / ry
        pieces = (("arc", c, rx, e_up, e_s, 0.0, ang), ("seg", yhat, y))
        return DetourArc(pieces, rx * ang + (ry - rx))

    # opposite side: quarter meridian x -> x0 on the sphere of radius |x-c|,
    # then corner path x0 -> y'' -> y with a right angle at y''
    x0 = c + rx * e_s
    y2 = x0 + hy * e_up  # hy < 0
    pieces = (("arc", c, rx, e_up, e_s, 0.0, math.pi / 2.0),
              ("seg", x0, y2), ("seg", y2, y))
    return DetourArc(pieces, (math.pi / 2.0) * rx + abs(hy) + abs(s - rx))


def detour_arc_convex(d0: ConvexBodySpec, eps: float, alpha: float, x, y) -> DetourArc:
    """Arc joining x and y inside the eps-dilation complement of convex d0.

    When one endpoint lies in the other's supporting half-space the straight
    segment works. Otherwise the path runs inside the two supporting planes:
    from x along a straight chord within the plane through x (combining the
    tangent leg with the out-of-plane offset), then to y along its tangent
    direction. Both legs lie in supporting half-spaces, hence in (D0)_eps,
    and the length is certified <= sqrt(2)/(1+alpha) |x-y|.
    """
    x = _as_vec3(x)
    y = _as_vec3(y)
    if not (-1.0 < alpha <= 0.0):
        raise DomainError(f"alpha must be in ]-1, 0], got {alpha}")
    if np.array_equal(x, y):
        if float(d0.signed_distance(x[None])[0]) < eps - 1e-12:
            raise DomainError("endpoints must be at distance >= eps from the body")
        return DetourArc((), 0.0)
    qs, nus = project_convex_many(d0, np.stack([x, y]))
    if (float(np.linalg.norm(x - qs[0])) < eps - 1e-12
            or float(np.linalg.norm(y - qs[1])) < eps - 1e-12):
        raise DomainError("endpoints must be at distance >= eps from the body")
    nux, nuy = nus
    c0 = float(nux @ nuy)
    if c0 <= -1.0 + 1e-12:
        raise DegenerateDecompositionError("anti-parallel normals: tangent frame is singular")
    if c0 < alpha - 1e-12:
        raise DomainError(f"cone condition violated: normal dot {c0:.6g} < alpha {alpha:.6g}")
    if float((y - x) @ nux) >= 0.0 or float((x - y) @ nuy) >= 0.0:
        # one endpoint in the other's supporting half-space: straight segment
        return DetourArc((("seg", x, y),), float(np.linalg.norm(y - x)))

    sin2 = math.sqrt(1.0 - c0 * c0)
    tx = (nuy - c0 * nux) / sin2
    ty = (nux - c0 * nuy) / sin2
    e3 = np.cross(tx, ty)
    e3 /= np.linalg.norm(e3)
    a, b, chat = np.linalg.solve(np.stack([tx, ty, e3], axis=1), y - x)
    # a > 0 > b here by the half-space exclusions; the corner is placed in
    # whichever supporting plane gives the shorter diagonal
    len_a = math.hypot(a, chat) + abs(b)
    len_b = abs(a) + math.hypot(b, chat)
    z = x + a * tx + chat * e3  # equals y - b*ty - ... corner in plane of x
    if len_b < len_a:
        z = x + a * tx  # corner reached inside plane of x, diagonal in plane of y
        length = len_b
    else:
        length = len_a
    pieces = (("seg", x, z), ("seg", z, y))
    return DetourArc(pieces, float(length))


# --------------------------------------------------------------------------
# set distances


def _body_list(spec) -> list:
    if isinstance(spec, (list, tuple)):
        return list(spec)
    return [spec]


def _project_onto_solid(body, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closest point of the closed solid body to each pt, and inside flags."""
    pts = np.atleast_2d(pts)
    if isinstance(body, BallSpec) or body.kind == "ball":
        center = body.center
        radius = body.radius
        d = pts - center
        n = np.linalg.norm(d, axis=-1)
        inside = n <= radius
        q = np.where(inside[:, None], pts, center + radius * d / np.maximum(n, 1e-300)[:, None])
        return q, inside
    b = body.to_body_frame(pts)
    level = np.sum((b / body.semi_axes) ** 2, axis=-1)
    inside = level <= 1.0
    q = pts.copy()
    if np.any(~inside):
        qb = _ellipsoid_project_body(body.semi_axes, b[~inside])
        q[~inside] = body.to_world_frame(qb)
    return q, inside


def _dist_pair(a, b, iters: int = 200, tol: float = 1e-12) -> float:
    """Gap between two convex solids by alternating closest-point projection."""
    both_balls = all(isinstance(s, BallSpec) or s.kind == "ball" for s in (a, b))
    if both_balls:
        ra = a.radius
        rb = b.radius
        gap = float(np.linalg.norm(a.center - b.center)) - ra - rb
        return max(0.0, gap)
    p = np.atleast_2d(getattr(a, "center"))
    prev = math.inf
    for _ in range(iters):
        q, ins_b = _project_onto_solid(b, p)
        if ins_b[0]:
            return 0.0
        p_new, ins_a = _project_onto_solid(a, q)
        if ins_a[0]:
            return 0.0
        d = float(np.linalg.norm(p_new - q, axis=-1)[0])
        if abs(prev - d) < tol * max(1.0, d):
            return d
        prev = d
        p = p_new
    return prev


def dist_sets(a, b) -> float:
    """Euclidean gap distance between unions of balls/ellipsoids (0 if they meet)."""
    return min(_dist_pair(pa, pb) for pa in _body_list(a) for pb in _body_list(b))


# --------------------------------------------------------------------------
# voxel Dijkstra oracle for d_eps


_SHIFTS_26 = np.array([(i, j, k)
                       for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1)
                       if (i, j, k) != (0, 0, 0)], dtype=np.int64)


def _geodesic_box(scene: SceneSpec, eps: float, grid_h: float, extra_pts: np.ndarray):
    los = [b.aabb()[0] for b in scene.d0_bodies] + [extra_pts.min(axis=0)]
    his = [b.aabb()[1] for b in scene.d0_bodies] + [extra_pts.max(axis=0)]
    lo = np.min(los, axis=0)
    hi = np.max(his, axis=0)
    pad = eps + max(4.0 * grid_h, 0.15 * float(np.linalg.norm(hi - lo)))
    lo = lo - pad
    hi = hi + pad
    dims = np.maximum(np.ceil((hi - lo) / grid_h).astype(int), 4)
    return lo, dims


def _allowed_mask(scene: SceneSpec, eps: float, lo: Vec3, dims, grid_h: float) -> np.ndarray:
    axes = [lo[d] + grid_h * (np.arange(dims[d]) + 0.5) for d in range(3)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    ok = np.full(len(pts), True)
    for body in scene.d0_bodies:
        ok &= body.signed_distance(pts) >= eps
    return ok.reshape(tuple(dims))


def geodesic_field(scene: SceneSpec, eps: float, grid_h: float, x,
                   extra_pts=None) -> tuple[np.ndarray, Vec3, np.ndarray]:
    """Dijkstra distances from x to every allowed voxel of the eps-dilation
    complement (26-neighbor graph, Euclidean edge weights).

    Returns (distance field with +inf where unreachable/forbidden, box lo, dims).
    """
    x = _as_vec3(x)
    pts = np.atleast_2d(x if extra_pts is None else np.vstack([x[None], np.atleast_2d(extra_pts)]))
    lo, dims = _geodesic_box(scene, eps, grid_h, pts)
    allowed = _allowed_mask(scene, eps, lo, dims, grid_h)
    cells = np.argwhere(allowed)
    nid = -np.ones(tuple(dims), dtype=np.int64)
    nid[tuple(cells.T)] = np.arange(len(cells))
    src_cell = np.floor((x - lo) / grid_h).astype(int)
    if np.any(src_cell < 0) or np.any(src_cell >= dims) or nid[tuple(src_cell)] < 0:
        raise DomainError("geodesic endpoint cell lies in the forbidden region")
    rows, cols, data = [], [], []
    for sft in _SHIFTS_26:
        nb = cells + sft
        okb = np.all((nb >= 0) & (nb < dims), axis=1)
        src = nid[tuple(cells[okb].T)]
        dst = nid[tuple(nb[okb].T)]
        good = dst >= 0
        rows.append(src[good])
        cols.append(dst[good])
        data.append(np.full(int(good.sum()), float(np.linalg.norm(sft)) * grid_h))
    graph = coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(cells), len(cells)),
    ).tocsr()
    dist = _csgraph_dijkstra(graph, indices=int(nid[tuple(src_cell)]))
    out = np.full(tuple(dims), np.inf)
    out[tuple(cells.T)] = dist
    return out, lo, dims


def geodesic_deps(scene: SceneSpec, eps: float, grid_h: float, x, y) -> float:
    """Voxel shortest-path length between x and y avoiding the eps-dilation of D0.

    Overestimates the continuum d_eps by at most the 26-neighbor metric
    distortion (about 8 percent) plus O(grid_h); +inf if disconnected.
    """
    y = _as_vec3(y)
    field_, lo, dims = geodesic_field(scene, eps, grid_h, x, extra_pts=y[None])
    cell = np.floor((y - lo) / grid_h).astype(int)
    if np.any(cell < 0) or np.any(cell >= dims):
        raise DomainError("geodesic endpoint outside the search box")
    val = float(field_[tuple(cell)])
    if math.isinf(val):
        cell_center = lo + grid_h * (cell + 0.5)
        allowed_here = all(b.signed_distance(cell_center[None])[0] >= eps
                           for b in scene.d0_bodies)
        if not allowed_here:
            raise DomainError("geodesic endpoint cell lies in the forbidden region")
    return val
