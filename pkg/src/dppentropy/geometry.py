"""Compact planar domains and quadrature rules over them.

Three shapes are supported: disks, axis-aligned rectangles and simple
polygons.  Each knows its exact area and perimeter, can be dilated about its
centroid, answers membership queries (boundary counts as inside) and produces
a positive-weight quadrature rule whose weights sum to the area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "GeometryError",
    "Point2",
    "Domain",
    "Disk",
    "Rectangle",
    "Polygon",
    "QuadratureRule",
    "make_domain",
    "parse_domain",
    "dilate",
    "quadrature",
    "contains",
    "load_polygon",
]

MIN_ORDER = 4
WEIGHT_SUM_RTOL = 1e-10


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


class Domain:
    """Base class for compact planar regions.

    ``dilation`` records the cumulative factor applied since construction;
    the stored geometry is already scaled.
    """

    dilation: float = 1.0

    @property
    def area(self) -> float:
        raise NotImplementedError

    @property
    def perimeter(self) -> float:
        raise NotImplementedError

    @property
    def centroid(self) -> tuple[float, float]:
        raise NotImplementedError

    def bounding_box(self) -> tuple[float, float, float, float]:
        """Return ``(xmin, ymin, xmax, ymax)``."""
        raise NotImplementedError

    def contains(self, x, y):
        raise NotImplementedError

    def dilate(self, L: float) -> "Domain":
        raise NotImplementedError

    def quadrature(self, order: int) -> "QuadratureRule":
        raise NotImplementedError


@dataclass(frozen=True)
class Disk(Domain):
    radius: float
    center: tuple[float, float] = (0.0, 0.0)
    dilation: float = 1.0

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise GeometryError(f"disk radius must be positive, got {self.radius}")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.radius

    @property
    def centroid(self) -> tuple[float, float]:
        return self.center

    def bounding_box(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    def contains(self, x, y):
        cx, cy = self.center
        return np.hypot(np.asarray(x) - cx, np.asarray(y) - cy) <= self.radius

    def dilate(self, L: float) -> "Disk":
        _check_factor(L)
        return Disk(self.radius * L, self.center, self.dilation * L)

    def quadrature(self, order: int) -> "QuadratureRule":
        # radial Gauss-Legendre (order points) x 2*order uniform angles
        _check_order(order)
        t, w = leggauss(order)
        r = 0.5 * self.radius * (t + 1.0)
        wr = 0.5 * self.radius * w * r
        n_ang = 2 * order
        theta = 2.0 * np.pi * np.arange(n_ang) / n_ang
        rr, tt = np.meshgrid(r, theta, indexing="ij")
        weights = np.repeat(wr, n_ang) * (2.0 * np.pi / n_ang)
        cx, cy = self.center
        nodes = np.column_stack(
            [cx + (rr * np.cos(tt)).ravel(), cy + (rr * np.sin(tt)).ravel()]
        )
        return QuadratureRule(nodes, weights, order, self)


@dataclass(frozen=True)
class Rectangle(Domain):
    width: float
    height: float
    corner: tuple[float, float] = (0.0, 0.0)
    dilation: float = 1.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise GeometryError(
                f"rectangle sides must be positive, got {self.width} x {self.height}"
            )

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def perimeter(self) -> float:
        return 2.0 * (self.width + self.height)

    @property
    def centroid(self) -> tuple[float, float]:
        return (self.corner[0] + 0.5 * self.width, self.corner[1] + 0.5 * self.height)

    @classmethod
    def centered(cls, width: float, height: float, center=(0.0, 0.0)) -> "Rectangle":
        return cls(width, height, (center[0] - 0.5 * width, center[1] - 0.5 * height))

    def bounding_box(self):
        x0, y0 = self.corner
        return (x0, y0, x0 + self.width, y0 + self.height)

    def contains(self, x, y):
        x0, y0, x1, y1 = self.bounding_box()
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)

    def dilate(self, L: float) -> "Rectangle":
        _check_factor(L)
        cx, cy = self.centroid
        w, h = self.width * L, self.height * L
        return Rectangle(w, h, (cx - 0.5 * w, cy - 0.5 * h), self.dilation * L)

    def quadrature(self, order: int) -> "QuadratureRule":
        _check_order(order)
        t, w = leggauss(order)
        x0, y0 = self.corner
        xs = x0 + 0.5 * self.width * (t + 1.0)
        ys = y0 + 0.5 * self.height * (t + 1.0)
        wx = 0.5 * self.width * w
        wy = 0.5 * self.height * w
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        weights = np.outer(wx, wy).ravel()
        return QuadratureRule(np.column_stack([X.ravel(), Y.ravel()]), weights, order, self)


@dataclass(frozen=True)
class Polygon(Domain):
    """Simple polygon; vertices are stored counterclockwise."""

    vertices: tuple[tuple[float, float], ...]
    dilation: float = 1.0
    _triangles: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        verts = [(float(x), float(y)) for x, y in self.vertices]
        if len(verts) >= 2 and verts[0] == verts[-1]:
            verts = verts[:-1]
        if len(verts) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        if not all(math.isfinite(c) for v in verts for c in v):
            raise GeometryError("polygon has non-finite vertex")
        signed = _signed_area(verts)
        scale = max(1.0, max(abs(c) for v in verts for c in v)) ** 2
        if abs(signed) <= 1e-14 * scale:
            raise GeometryError("degenerate polygon (zero area)")
        if signed < 0:
            verts = verts[::-1]
        bad = _self_intersection(verts)
        if bad is not None:
            raise GeometryError(f"polygon is not simple: edges {bad[0]} and {bad[1]} intersect")
        object.__setattr__(self, "vertices", tuple(verts))
        object.__setattr__(self, "_triangles", tuple(_ear_clip(verts)))

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @property
    def perimeter(self) -> float:
        v = np.asarray(self.vertices)
        return float(np.sum(np.hypot(*(np.roll(v, -1, axis=0) - v).T)))

    @property
    def centroid(self) -> tuple[float, float]:
        v = np.asarray(self.vertices)
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = 0.5 * cross.sum()
        return (float(((x + xn) * cross).sum() / (6 * a)), float(((y + yn) * cross).sum() / (6 * a)))

    def bounding_box(self):
        v = np.asarray(self.vertices)
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    def contains(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        v = np.asarray(self.vertices)
        inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        on_edge = np.zeros_like(inside)
        tol = 1e-12 * max(1.0, float(np.abs(v).max()))
        for (x1, y1), (x2, y2) in zip(v, np.roll(v, -1, axis=0)):
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (x < xint)
            # distance to segment for the boundary convention
            dx, dy = x2 - x1, y2 - y1
            t = np.clip(((x - x1) * dx + (y - y1) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
            on_edge |= np.hypot(x - (x1 + t * dx), y - (y1 + t * dy)) <= tol
        return inside | on_edge

    def dilate(self, L: float) -> "Polygon":
        _check_factor(L)
        cx, cy = self.centroid
        verts = tuple((cx + L * (x - cx), cy + L * (y - cy)) for x, y in self.vertices)
        return Polygon(verts, self.dilation * L)

    def quadrature(self, order: int) -> "QuadratureRule":
        _check_order(order)
        ref_nodes, ref_weights = _triangle_rule(order)
        nodes, weights = [], []
        for a, b, c in self._triangles:
            a, b, c = np.asarray(a), np.asarray(b), np.asarray(c)
            jac = abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
            nodes.append(a + np.outer(ref_nodes[:, 0], b - a) + np.outer(ref_nodes[:, 1], c - a))
            weights.append(ref_weights * jac)
        return QuadratureRule(np.vstack(nodes), np.concatenate(weights), order, self)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    order: int
    target: Domain

    def __post_init__(self):
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if nodes.shape != (weights.size, 2):
            raise GeometryError("nodes must be an (n, 2) array matching the weights")
        if np.any(weights <= 0):
            raise GeometryError("quadrature weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.weights.size

    @property
    def z(self) -> np.ndarray:
        """Nodes as complex numbers x + iy."""
        return self.nodes[:, 0] + 1j * self.nodes[:, 1]

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def weight_error(self) -> float:
        area = self.target.area
        return abs(self.weights.sum() - area) / area


def _check_factor(L):
    if not (L > 0 and math.isfinite(L)):
        raise GeometryError(f"dilation factor must be positive, got {L}")


def _check_order(order):
    if int(order) != order or order < MIN_ORDER:
        raise GeometryError(
            f"quadrature order {order} too small; use an integer order >= {MIN_ORDER}"
        )


def _signed_area(verts) -> float:
    v = np.asarray(verts, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _orient(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _segments_intersect(p1, p2, q1, q2) -> bool:
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 < 0 and d3 * d4 < 0:
        return True

    def on_seg(p, q, r):
        return (
            min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
            and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])
        )

    return (
        (d1 == 0 and on_seg(q1, q2, p1))
        or (d2 == 0 and on_seg(q1, q2, p2))
        or (d3 == 0 and on_seg(p1, p2, q1))
        or (d4 == 0 and on_seg(p1, p2, q2))
    )


def _self_intersection(verts):
    n = len(verts)
    edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(*edges[i], *edges[j]):
                return (i, j)
    return None


def _ear_clip(verts):
    """Triangulate a counterclockwise simple polygon by ear clipping."""
    idx = list(range(len(verts)))
    tris = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(verts) ** 2:
            raise GeometryError("triangulation failed; polygon may be degenerate")
        for k in range(len(idx)):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            a, b, c = verts[i0], verts[i1], verts[i2]
            if _orient(a, b, c) <= 0:
                continue
            if any(
                _point_in_triangle(verts[j], a, b, c)
                for j in idx
                if j not in (i0, i1, i2)
            ):
                continue
            tris.append((a, b, c))
            del idx[k]
            break
        else:
            raise GeometryError("triangulation failed; polygon may be degenerate")
    tris.append(tuple(verts[i] for i in idx))
    return tris


def _point_in_triangle(p, a, b, c) -> bool:
    return _orient(a, b, p) >= 0 and _orient(b, c, p) >= 0 and _orient(c, a, p) >= 0


def _triangle_rule(order: int):
    """Collapsed-square Gauss rule on the reference triangle (0,0),(1,0),(0,1).

    Weights sum to 1/2; all nodes are strictly interior.
    """
    t, w = leggauss(order)
    u = 0.5 * (t + 1.0)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    weights = (np.outer(wu, wu) * (1.0 - U)).ravel()
    return np.column_stack([x, y]), weights


def make_domain(spec) -> Domain:
    """Build a domain from a descriptor.

    Accepts an existing ``Domain``, a descriptor string understood by
    :func:`parse_domain`, or a mapping with a ``shape`` key
    (``disk``/``rectangle``/``polygon``) and the matching parameters.
    """
    if isinstance(spec, Domain):
        return spec
    if isinstance(spec, str):
        return parse_domain(spec)
    shape = spec.get("shape")
    if shape == "disk":
        return Disk(float(spec["radius"]), tuple(spec.get("center", (0.0, 0.0))))
    if shape in ("rect", "rectangle"):
        return Rectangle(
            float(spec["width"]), float(spec["height"]), tuple(spec.get("corner", (0.0, 0.0)))
        )
    if shape == "polygon":
        return Polygon(tuple(tuple(v) for v in spec["vertices"]))
    raise GeometryError(f"unknown shape {shape!r}")


def parse_domain(text: str) -> Domain:
    """Parse ``disk:<R>``, ``rect:<W>x<H>`` or ``poly:<path>``.

    Disks and rectangles are centered at the origin.
    """
    kind, _, arg = text.strip().partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "disk":
            return Disk(float(arg))
        if kind in ("rect", "rectangle", "square"):
            w, sep, h = arg.lower().partition("x")
            w = float(w)
            h = float(h) if sep else w
            return Rectangle.centered(w, h)
    except ValueError as exc:
        if isinstance(exc, GeometryError):
            raise
        raise GeometryError(f"malformed domain descriptor {text!r}") from exc
    if kind in ("poly", "polygon"):
        return load_polygon(arg)
    raise GeometryError(f"unknown domain descriptor {text!r}")


def load_polygon(path) -> Polygon:
    """Read a polygon file: one ``x y`` pair per line, ``#`` comments allowed."""
    verts = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GeometryError(f"{path}:{lineno}: expected 'x y', got {line!r}")
        try:
            verts.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise GeometryError(f"{path}:{lineno}: malformed number in {line!r}") from exc
    return Polygon(tuple(verts))


def dilate(d: Domain, L: float) -> Domain:
    return d.dilate(L)


def quadrature(d: Domain, order: int) -> QuadratureRule:
    rule = d.quadrature(order)
    if rule.weight_error() > WEIGHT_SUM_RTOL:
        raise GeometryError(
            f"weight sum misses the area by {rule.weight_error():.2e}; increase the order"
        )
    return rule


def contains(d: Domain, p) -> bool:
    if isinstance(p, Point2):
        return bool(d.contains(p.x, p.y))
    if isinstance(p, complex):
        return bool(d.contains(p.real, p.imag))
    x, y = p
    return bool(d.contains(x, y))


def as_points(points: Sequence[Point2]) -> np.ndarray:
    return np.array([[p.x, p.y] for p in points], dtype=float).reshape(-1, 2)
