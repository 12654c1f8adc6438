"""Random object shapes, silhouette rasterization, and medium maps.

Shapes (ellipses, thick line segments, polygons) live in metric coordinates.
Rasterization tests cell centers; overlapping shapes union into one mask.
Medium maps hold exactly two materials: air and expanded polystyrene (EPS),
whose impedance contrast gives a pressure reflection coefficient of 0.932.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Rng, SilhouetteMask

AIR_SOUND_SPEED = 340.0     # m/s
AIR_DENSITY = 1.21          # kg/m^3
EPS_SOUND_SPEED = 414.0     # m/s
EPS_DENSITY = 28.0          # kg/m^3


def reflection_coefficient():
    """Pressure reflection coefficient (Z2 - Z1) / (Z2 + Z1) for air -> EPS."""
    z1 = AIR_DENSITY * AIR_SOUND_SPEED
    z2 = EPS_DENSITY * EPS_SOUND_SPEED
    return (z2 - z1) / (z2 + z1)


@dataclass(frozen=True)
class Shape:
    """One object: ``kind`` in {"ellipse", "line", "polygon"}.

    Parameters (all metres / radians):
      ellipse: center (cx, cy), semi_axes (a, b), rotation
      line:    endpoints (x0, y0), (x1, y1), thickness
      polygon: vertices [(x, y), ...] (>= 3, non-zero area)
    """

    kind: str
    params: dict

    def __post_init__(self):
        if self.kind == "ellipse":
            a, b = self.params["semi_axes"]
            if a <= 0 or b <= 0:
                raise ValueError("ellipse semi-axes must be positive")
        elif self.kind == "line":
            if self.params["thickness"] <= 0:
                raise ValueError("line thickness must be positive")
        elif self.kind == "polygon":
            verts = np.asarray(self.params["vertices"], dtype=float)
            if len(verts) < 3:
                raise ValueError("polygon needs >= 3 vertices")
            if abs(_polygon_area(verts)) <= 0:
                raise ValueError("polygon has zero area")
        else:
            raise ValueError(f"unknown shape kind {self.kind!r}")

    def to_json(self):
        params = {
            k: (np.asarray(v).tolist() if not np.isscalar(v) else v)
            for k, v in self.params.items()
        }
        return {"kind": self.kind, "params": params}

    @staticmethod
    def from_json(obj):
        return Shape(kind=obj["kind"], params=dict(obj["params"]))


def _polygon_area(verts):
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


@dataclass(frozen=True)
class MediumMap:
    """Per-cell sound speed (m/s) and density (kg/m^3) over the full sim grid."""

    sound_speed: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.sound_speed, dtype=np.float64)
        rho = np.asarray(self.density, dtype=np.float64)
        object.__setattr__(self, "sound_speed", c)
        object.__setattr__(self, "density", rho)
        if c.shape != rho.shape or c.ndim != 2:
            raise ValueError("sound_speed and density must be 2D arrays of equal shape")
        air = (c == AIR_SOUND_SPEED) & (rho == AIR_DENSITY)
        eps = (c == EPS_SOUND_SPEED) & (rho == EPS_DENSITY)
        if not np.all(air | eps):
            raise ValueError("every cell must be exactly air or EPS")


@dataclass(frozen=True)
class GeometryConfig:
    """Sampling ranges for scene objects.

    The source material names shape families but no ranges; these spans cover
    thin plates through large blobs at the 1.28 m observation scale.
    """

    num_shapes: tuple = (1, 2, 3)
    ellipse_semi_axis_m: tuple = (0.05, 0.4)
    line_length_m: tuple = (0.2, 1.0)
    line_thickness_m: tuple = (0.01, 0.05)
    polygon_vertices: tuple = (3, 8)
    polygon_radius_m: tuple = (0.05, 0.4)
    max_area_frac: float = 0.35
    obs_extent_m: float = 1.28
    rejection_budget: int = 200


class ShapeSamplingError(RuntimeError):
    """Rejection-sampling budget exhausted (degenerate config)."""


def _sample_one_shape(g, cfg):
    L = cfg.obs_extent_m
    kind = ["ellipse", "line", "polygon"][g.integers(3)]
    if kind == "ellipse":
        a = g.uniform(*cfg.ellipse_semi_axis_m)
        b = g.uniform(*cfg.ellipse_semi_axis_m)
        r = max(a, b)
        if 2 * r >= L:
            return None
        cx = g.uniform(r, L - r)
        cy = g.uniform(r, L - r)
        return Shape("ellipse", {"center": (cx, cy), "semi_axes": (a, b),
                                 "rotation": g.uniform(0, np.pi)})
    if kind == "line":
        length = g.uniform(*cfg.line_length_m)
        thick = g.uniform(*cfg.line_thickness_m)
        theta = g.uniform(0, np.pi)
        dxv = 0.5 * length * np.cos(theta)
        dyv = 0.5 * length * np.sin(theta)
        pad = 0.5 * thick
        half_x = abs(dxv) + pad
        half_y = abs(dyv) + pad
        if 2 * half_x >= L or 2 * half_y >= L:
            return None
        cx = g.uniform(half_x, L - half_x)
        cy = g.uniform(half_y, L - half_y)
        return Shape("line", {"p0": (cx - dxv, cy - dyv), "p1": (cx + dxv, cy + dyv),
                              "thickness": thick})
    n = int(g.integers(cfg.polygon_vertices[0], cfg.polygon_vertices[1] + 1))
    rmax = g.uniform(*cfg.polygon_radius_m)
    if 2 * rmax >= L:
        return None
    cx = g.uniform(rmax, L - rmax)
    cy = g.uniform(rmax, L - rmax)
    angles = np.sort(g.uniform(0, 2 * np.pi, size=n))
    radii = g.uniform(0.3 * rmax, rmax, size=n)
    verts = np.stack([cx + radii * np.cos(angles), cy + radii * np.sin(angles)], axis=1)
    if abs(_polygon_area(verts)) < 1e-6:
        return None
    return Shape("polygon", {"vertices": verts})


def sample_shapes(rng: Rng, cfg: GeometryConfig = GeometryConfig(), grid_dims=(128, 128), dx=0.01):
    """Sample 1-3 shapes fully inside the observation area.

    Rejects shape sets whose combined rasterized area fraction falls outside
    (0, cfg.max_area_frac]; raises :class:`ShapeSamplingError` once the
    rejection budget runs out.
    """
    g = rng.generator()
    for _ in range(cfg.rejection_budget):
        count = int(cfg.num_shapes[g.integers(len(cfg.num_shapes))])
        shapes = []
        for _ in range(count):
            s = _sample_one_shape(g, cfg)
            if s is not None:
                shapes.append(s)
        if len(shapes) != count:
            continue
        frac = rasterize(shapes, grid_dims, dx).area_fraction()
        if 0 < frac <= cfg.max_area_frac:
            return shapes
    raise ShapeSamplingError(
        f"no admissible shape set in {cfg.rejection_budget} attempts "
        f"(max_area_frac={cfg.max_area_frac})"
    )


def _inside_ellipse(xs, ys, params):
    cx, cy = params["center"]
    a, b = params["semi_axes"]
    t = params.get("rotation", 0.0)
    u = (xs - cx) * np.cos(t) + (ys - cy) * np.sin(t)
    v = -(xs - cx) * np.sin(t) + (ys - cy) * np.cos(t)
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def _inside_line(xs, ys, params):
    x0, y0 = params["p0"]
    x1, y1 = params["p1"]
    half = 0.5 * params["thickness"]
    ex, ey = x1 - x0, y1 - y0
    seg2 = ex * ex + ey * ey
    if seg2 == 0:
        d2 = (xs - x0) ** 2 + (ys - y0) ** 2
        return d2 <= half * half
    t = np.clip(((xs - x0) * ex + (ys - y0) * ey) / seg2, 0.0, 1.0)
    px, py = x0 + t * ex, y0 + t * ey
    return (xs - px) ** 2 + (ys - py) ** 2 <= half * half


def _inside_polygon(xs, ys, params):
    # Even-odd rule via ray casting along +x.
    verts = np.asarray(params["vertices"], dtype=float)
    inside = np.zeros(xs.shape, dtype=bool)
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        crosses = (y0 > ys) != (y1 > ys)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (ys - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (xs < np.where(crosses, xint, np.inf))
    return inside


_INSIDE = {"ellipse": _inside_ellipse, "line": _inside_line, "polygon": _inside_polygon}


def rasterize(shapes, grid_dims, dx) -> SilhouetteMask:
    """Union mask of all shapes; a cell is 1 iff its center lies inside any shape."""
    w, h = grid_dims
    if w < 1 or h < 1 or dx <= 0:
        raise ValueError("grid_dims must be >= 1 and dx > 0")
    xs = (np.arange(w)[:, None] + 0.5) * dx
    ys = (np.arange(h)[None, :] + 0.5) * dx
    xs, ys = np.broadcast_arrays(xs, ys)
    mask = np.zeros((w, h), dtype=bool)
    for s in shapes:
        mask |= _INSIDE[s.kind](xs, ys, s.params)
    return SilhouetteMask(labels=mask.astype(np.uint8))


def build_medium(mask: SilhouetteMask, pad_cells: int, grid_dims=None) -> MediumMap:
    """Expand a silhouette mask into a full-grid medium map.

    The mask is placed with offset ``pad_cells`` into a grid of
    ``grid_dims`` (defaults to mask dims + 2*pad_cells); EPS where mask = 1,
    air elsewhere.
    """
    if pad_cells < 0:
        raise ValueError("pad_cells must be >= 0")
    mw, mh = mask.shape
    if grid_dims is None:
        grid_dims = (mw + 2 * pad_cells, mh + 2 * pad_cells)
    gw, gh = grid_dims
    if gw < mw + pad_cells or gh < mh + pad_cells:
        raise ValueError("grid too small for mask at the given offset")
    c = np.full((gw, gh), AIR_SOUND_SPEED)
    rho = np.full((gw, gh), AIR_DENSITY)
    region = mask.labels.astype(bool)
    c[pad_cells:pad_cells + mw, pad_cells:pad_cells + mh][region] = EPS_SOUND_SPEED
    rho[pad_cells:pad_cells + mw, pad_cells:pad_cells + mh][region] = EPS_DENSITY
    return MediumMap(sound_speed=c, density=rho)
