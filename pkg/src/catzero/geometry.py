"""Planar primitives: rigid motions of R^2 and convex polygon utilities.

Everything downstream (development, flat charts, geodesic unfolding) moves
cell polygons around the plane with the `Isometry` class, so it is kept
small, exact about handedness, and hashable via `key`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tolerances import GEOM_TOL


def safe_acos(x: float) -> float:
    """arccos clamped to [-1, 1] so float noise never raises."""
    return math.acos(min(1.0, max(-1.0, x)))


def angle_between(u, v) -> float:
    """Unsigned angle in [0, pi] between two nonzero plane vectors."""
    ux, uy = float(u[0]), float(u[1])
    vx, vy = float(v[0]), float(v[1])
    dot = ux * vx + uy * vy
    cross = ux * vy - uy * vx
    return math.atan2(abs(cross), dot)


@dataclass(frozen=True)
class Isometry:
    """Rigid motion x -> A x + t with A = [[a, b], [c, d]] orthogonal.

    det(A) is +1 for direct motions and -1 for reflections; `flip` reports
    which. Instances are immutable and compare by entries, so they can be
    used as dictionary keys through `key()`.
    """

    a: float
    b: float
    c: float
    d: float
    tx: float
    ty: float

    @staticmethod
    def identity() -> "Isometry":
        return Isometry(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)

    @staticmethod
    def from_segment_map(a0, a1, b0, b1, flip: bool) -> "Isometry":
        """The unique isometry sending segment a0->a1 onto b0->b1.

        `flip` selects the orientation-reversing solution. Segment lengths
        must agree to GEOM_TOL relative tolerance.
        """
        a0 = np.asarray(a0, dtype=float)
        a1 = np.asarray(a1, dtype=float)
        b0 = np.asarray(b0, dtype=float)
        b1 = np.asarray(b1, dtype=float)
        la = float(np.hypot(*(a1 - a0)))
        lb = float(np.hypot(*(b1 - b0)))
        if la <= GEOM_TOL or lb <= GEOM_TOL:
            raise ValueError("degenerate segment")
        if abs(la - lb) > GEOM_TOL * max(1.0, la):
            raise ValueError(f"segment lengths differ: {la} vs {lb}")
        ux, uy = (a1 - a0) / la
        vx, vy = (b1 - b0) / lb
        if flip:
            # reflect u across the x-axis, then rotate onto v
            cs = ux * vx - uy * vy
            sn = ux * vy + uy * vx
            lin = (cs, sn, sn, -cs)
        else:
            cs = ux * vx + uy * vy
            sn = ux * vy - uy * vx
            lin = (cs, -sn, sn, cs)
        tx = float(b0[0]) - (lin[0] * float(a0[0]) + lin[1] * float(a0[1]))
        ty = float(b0[1]) - (lin[2] * float(a0[0]) + lin[3] * float(a0[1]))
        return Isometry(lin[0], lin[1], lin[2], lin[3], tx, ty)

    @property
    def flip(self) -> bool:
        return self.a * self.d - self.b * self.c < 0.0

    def apply(self, pts):
        """Apply to a point (2,) or point array (n, 2)."""
        p = np.asarray(pts, dtype=float)
        if p.ndim == 1:
            return np.array(
                [
                    self.a * p[0] + self.b * p[1] + self.tx,
                    self.c * p[0] + self.d * p[1] + self.ty,
                ]
            )
        out = np.empty_like(p)
        out[:, 0] = self.a * p[:, 0] + self.b * p[:, 1] + self.tx
        out[:, 1] = self.c * p[:, 0] + self.d * p[:, 1] + self.ty
        return out

    def apply_linear(self, v):
        """Apply only the linear part (for directions)."""
        return np.array(
            [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
        )

    def compose(self, other: "Isometry") -> "Isometry":
        """self after other: (self.compose(other))(x) == self(other(x))."""
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        tx = self.a * other.tx + self.b * other.ty + self.tx
        ty = self.c * other.tx + self.d * other.ty + self.ty
        return Isometry(a, b, c, d, tx, ty)

    def inverse(self) -> "Isometry":
        # orthogonal linear part, so the inverse matrix is the transpose
        a, b, c, d = self.a, self.c, self.b, self.d
        tx = -(a * self.tx + b * self.ty)
        ty = -(c * self.tx + d * self.ty)
        return Isometry(a, b, c, d, tx, ty)

    def key(self, digits: int = 9) -> tuple:
        vals = (self.a, self.b, self.c, self.d, self.tx, self.ty)
        return tuple(round(v, digits) + 0.0 for v in vals)

    def close_to(self, other: "Isometry", tol: float = GEOM_TOL) -> bool:
        return (
            abs(self.a - other.a) <= tol
            and abs(self.b - other.b) <= tol
            and abs(self.c - other.c) <= tol
            and abs(self.d - other.d) <= tol
            and abs(self.tx - other.tx) <= tol
            and abs(self.ty - other.ty) <= tol
        )

    def is_identity(self, tol: float = GEOM_TOL) -> bool:
        return self.close_to(Isometry.identity(), tol)


def signed_area(poly: np.ndarray) -> float:
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def interior_angles(poly: np.ndarray) -> np.ndarray:
    """Interior angle at each vertex of a convex counterclockwise polygon."""
    n = len(poly)
    out = np.empty(n)
    for i in range(n):
        prev_leg = poly[i - 1] - poly[i]
        next_leg = poly[(i + 1) % n] - poly[i]
        out[i] = angle_between(prev_leg, next_leg)
    return out


def validate_cell_polygon(poly: np.ndarray) -> np.ndarray:
    """Check a polygon is usable as a cell shape; return its interior angles.

    Required: >= 3 vertices, counterclockwise, positive area, convex.
    Straight vertices (interior angle exactly pi) are allowed so that a
    long straight side can be split into several glued edges.
    """
    poly = np.asarray(poly, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise ValueError("polygon needs at least 3 plane points")
    n = len(poly)
    for i in range(n):
        if np.hypot(*(poly[(i + 1) % n] - poly[i])) <= GEOM_TOL:
            raise ValueError(f"repeated consecutive vertex at index {i}")
    area = signed_area(poly)
    if area <= GEOM_TOL:
        raise ValueError("polygon must be counterclockwise with positive area")
    for i in range(n):
        e0 = poly[i] - poly[i - 1]
        e1 = poly[(i + 1) % n] - poly[i]
        cross = e0[0] * e1[1] - e0[1] * e1[0]
        if cross < -GEOM_TOL * max(1.0, float(np.hypot(*e0) * np.hypot(*e1))):
            raise ValueError(f"reflex corner at vertex index {i}")
    return interior_angles(poly)


def point_in_convex(poly: np.ndarray, p, tol: float = GEOM_TOL) -> bool:
    """Closed membership test for a convex counterclockwise polygon."""
    px, py = float(p[0]), float(p[1])
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0) < -tol:
            return False
    return True


def seg_point_dist(a, b, p) -> float:
    """Distance from point p to segment [a, b]."""
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    px, py = float(p[0]), float(p[1])
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 <= GEOM_TOL * GEOM_TOL:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / L2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def poly_point_dist(poly: np.ndarray, p) -> float:
    """Distance from p to a convex polygon (0 inside)."""
    if point_in_convex(poly, p):
        return 0.0
    n = len(poly)
    return min(seg_point_dist(poly[i], poly[(i + 1) % n], p) for i in range(n))


def disc_overlap_area(r1: float, r2: float, d: float) -> float:
    """Area of the intersection of two discs with center distance d."""
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        r = min(r1, r2)
        return math.pi * r * r
    # circular lens: two circular segments split by the radical line
    a1 = safe_acos((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1))
    a2 = safe_acos((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2))
    seg1 = r1 * r1 * (a1 - math.sin(2.0 * a1) / 2.0)
    seg2 = r2 * r2 * (a2 - math.sin(2.0 * a2) / 2.0)
    return seg1 + seg2


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_min(f, lo: float, hi: float, tol: float):
    """Golden-section minimum of a unimodal scalar function on [lo, hi].

    Returns (argmin, min value). Used to certify minimum distances along
    segments, where convexity of the distance function guarantees
    unimodality.
    """
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    best = min((fc, c), (fd, d), (fx, x))
    return best[1], best[0]
