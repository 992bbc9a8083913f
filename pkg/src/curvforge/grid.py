"""Domains, lattices, and node-indexed fields.

Domains are described analytically (unit disk, circular annulus, axis-aligned
rectangle) so that interior/exterior classification and the fractional
boundary legs of near-boundary stencils are exact, not themselves discretized.
A grid is a uniform Cartesian lattice over the domain's bounding box; fields
store one value per interior node in row-major node order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

MIN_RESOLUTION = 17
MIN_ANNULUS_GAP_CELLS = 4

# lattice step directions, paired with their opposites for stencil assembly
DIRECTIONS = {"+x": 1.0 + 0.0j, "-x": -1.0 + 0.0j, "+y": 1.0j, "-y": -1.0j}
OPPOSITE = {"+x": "-x", "-x": "+x", "+y": "-y", "-y": "+y"}


@dataclass(frozen=True)
class DomainDescriptor:
    """Analytic description of a bounded plane domain.

    kind is one of "disk" (unit disk), "annulus" (params r_inner, r_outer) or
    "rectangle" (params x0, y0, x1, y1).
    """

    kind: str
    params: tuple = ()

    @staticmethod
    def disk() -> "DomainDescriptor":
        return DomainDescriptor("disk")

    @staticmethod
    def annulus(r_inner: float, r_outer: float) -> "DomainDescriptor":
        if not (0.0 < r_inner < r_outer):
            raise ConfigError(f"annulus radii must satisfy 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
        return DomainDescriptor("annulus", (float(r_inner), float(r_outer)))

    @staticmethod
    def rectangle(corner0: complex, corner1: complex) -> "DomainDescriptor":
        x0, x1 = sorted((corner0.real, corner1.real))
        y0, y1 = sorted((corner0.imag, corner1.imag))
        if x0 == x1 or y0 == y1:
            raise ConfigError("rectangle must have positive area")
        return DomainDescriptor("rectangle", (x0, y0, x1, y1))

    # -- geometry ---------------------------------------------------------

    def bbox(self) -> tuple[float, float, float, float]:
        """(x0, y0, x1, y1) of the bounding box."""
        if self.kind == "disk":
            return (-1.0, -1.0, 1.0, 1.0)
        if self.kind == "annulus":
            r = self.params[1]
            return (-r, -r, r, r)
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            return (x0, y0, x1, y1)
        raise ConfigError(f"unknown domain kind {self.kind!r}")

    def diameter(self) -> float:
        x0, y0, x1, y1 = self.bbox()
        if self.kind == "rectangle":
            return float(np.hypot(x1 - x0, y1 - y0))
        return x1 - x0

    def contains(self, z) -> np.ndarray:
        """Strict interior test, exact for these analytic boundaries."""
        z = np.asarray(z)
        if self.kind == "disk":
            return (z.real**2 + z.imag**2) < 1.0
        if self.kind == "annulus":
            ri, ro = self.params
            r2 = z.real**2 + z.imag**2
            return (r2 > ri * ri) & (r2 < ro * ro)
        x0, y0, x1, y1 = self.params
        return (z.real > x0) & (z.real < x1) & (z.imag > y0) & (z.imag < y1)

    def boundary_distance(self, z) -> np.ndarray:
        """Distance from interior points to the boundary."""
        z = np.asarray(z)
        r = np.abs(z)
        if self.kind == "disk":
            return 1.0 - r
        if self.kind == "annulus":
            ri, ro = self.params
            return np.minimum(r - ri, ro - r)
        x0, y0, x1, y1 = self.params
        return np.minimum(
            np.minimum(z.real - x0, x1 - z.real),
            np.minimum(z.imag - y0, y1 - z.imag),
        )

    def segment_crossing(self, z0: complex, d: complex) -> float:
        """Fraction t in (0, 1] where the segment z0 + t*d first leaves the domain.

        z0 must be interior and z0 + d exterior (or on the boundary).
        """
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            if d.real > 0:
                return (x1 - z0.real) / d.real
            if d.real < 0:
                return (x0 - z0.real) / d.real
            if d.imag > 0:
                return (y1 - z0.imag) / d.imag
            return (y0 - z0.imag) / d.imag
        # circle crossing: |z0 + t d|^2 = R^2
        if self.kind == "disk":
            radius, outward = 1.0, True
        else:
            ri, ro = self.params
            nb = z0 + d
            if abs(nb) >= ro:
                radius, outward = ro, True
            else:
                radius, outward = ri, False
        a = abs(d) ** 2
        b = z0.real * d.real + z0.imag * d.imag
        c = abs(z0) ** 2 - radius * radius
        disc = b * b - a * c
        if disc < 0:
            # tangency (neighbor exactly on the circle) can land epsilon below
            # zero; only genuinely missing crossings are an error
            if disc > -1e-12 * (b * b + abs(a * c)):
                disc = 0.0
            else:
                raise ConfigError("no boundary crossing found for stencil leg")
        sq = np.sqrt(disc)
        if outward:
            t = (-b + sq) / a  # c < 0: this root is the positive one
        else:
            t = c / (-b + sq)  # smaller positive root, stable form
        return float(min(max(t, 1e-12), 1.0))

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}

    @staticmethod
    def from_json(data: dict) -> "DomainDescriptor":
        return DomainDescriptor(data["kind"], tuple(data["params"]))


@dataclass
class DomainGrid:
    """Uniform lattice with exact interior classification and boundary legs.

    For every interior node and lattice direction, either the neighbor is
    interior (nb index >= 0, alpha == 1) or the leg meets the domain boundary
    after the fraction alpha of a full step, at the point zb.
    """

    descriptor: DomainDescriptor
    resolution: int
    spacing: float
    xs: np.ndarray
    ys: np.ndarray
    mask: np.ndarray          # (ny, nx) bool
    index: np.ndarray         # (ny, nx) int, -1 outside
    z: np.ndarray             # (N,) complex interior node positions
    iy: np.ndarray            # (N,) row of each node
    ix: np.ndarray            # (N,) column of each node
    legs: dict = field(repr=False)  # direction -> (nb, alpha, zb)

    @property
    def interior_count(self) -> int:
        return self.z.size

    @property
    def pure_interior(self) -> np.ndarray:
        """Nodes whose four lattice neighbors are all interior."""
        out = np.ones(self.z.size, dtype=bool)
        for nb, _, _ in self.legs.values():
            out &= nb >= 0
        return out

    def boundary_dist(self) -> np.ndarray:
        return self.descriptor.boundary_distance(self.z)

    def dense(self, values: np.ndarray, fill=np.nan) -> np.ndarray:
        out = np.full(self.mask.shape, fill, dtype=np.result_type(values, float))
        out[self.iy, self.ix] = values
        return out

    def to_json(self) -> dict:
        d = self.descriptor.to_json()
        d["resolution"] = self.resolution
        return d


def build_grid(descriptor: DomainDescriptor, resolution: int) -> DomainGrid:
    """Lay a uniform lattice over the domain and resolve its boundary legs."""
    if int(resolution) != resolution or resolution < MIN_RESOLUTION:
        raise ConfigError(f"resolution must be an integer >= {MIN_RESOLUTION}, got {resolution}")
    resolution = int(resolution)
    x0, y0, x1, y1 = descriptor.bbox()
    lx, ly = x1 - x0, y1 - y0
    spacing = max(lx, ly) / (resolution - 1)
    if descriptor.kind == "annulus":
        ri, ro = descriptor.params
        if (ro - ri) / spacing < MIN_ANNULUS_GAP_CELLS:
            raise ConfigError(
                f"resolution {resolution} leaves fewer than {MIN_ANNULUS_GAP_CELLS} "
                f"cells across the annulus gap {ro - ri:g}"
            )
    nx = resolution if lx >= ly else int(np.floor(lx / spacing + 1e-12)) + 1
    ny = resolution if ly > lx else int(np.floor(ly / spacing + 1e-12)) + 1
    xs = x0 + spacing * np.arange(nx)
    ys = y0 + spacing * np.arange(ny)
    zz = xs[None, :] + 1j * ys[:, None]
    mask = descriptor.contains(zz)
    index = np.full(mask.shape, -1, dtype=np.int64)
    iy, ix = np.nonzero(mask)
    n = iy.size
    index[iy, ix] = np.arange(n)
    z = zz[iy, ix]

    legs = {}
    for name, d in DIRECTIONS.items():
        di = int(d.real)
        dj = int(d.imag)
        nix, niy = ix + di, iy + dj
        inside_lattice = (nix >= 0) & (nix < nx) & (niy >= 0) & (niy < ny)
        nb = np.full(n, -1, dtype=np.int64)
        nb[inside_lattice] = index[niy[inside_lattice], nix[inside_lattice]]
        alpha = np.ones(n)
        zb = np.full(n, np.nan + 0j, dtype=complex)
        step = d * spacing
        for k in np.nonzero(nb < 0)[0]:
            t = descriptor.segment_crossing(complex(z[k]), complex(step))
            alpha[k] = t
            zb[k] = z[k] + t * step
        legs[name] = (nb, alpha, zb)
    return DomainGrid(descriptor, resolution, spacing, xs, ys, mask, index, z, iy, ix, legs)


@dataclass
class ScalarField:
    """Real values, one per interior node."""

    grid: DomainGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.interior_count,):
            raise ConfigError("field length does not match grid interior count")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("field values must be finite")

    @staticmethod
    def from_function(grid: DomainGrid, fn) -> "ScalarField":
        return ScalarField(grid, np.asarray(fn(grid.z), dtype=float))

    def dense(self) -> np.ndarray:
        return self.grid.dense(self.values)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def to_csv(self, path) -> None:
        write_field_csv(path, self.grid.z, [("value", self.values)])


@dataclass
class ComplexField:
    """Complex values, one per interior node."""

    grid: DomainGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.interior_count,):
            raise ConfigError("field length does not match grid interior count")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("field values must be finite")

    @staticmethod
    def from_function(grid: DomainGrid, fn) -> "ComplexField":
        return ComplexField(grid, np.asarray(fn(grid.z), dtype=complex))

    def dense(self) -> np.ndarray:
        return self.grid.dense(self.values)

    def to_csv(self, path) -> None:
        write_field_csv(
            path, self.grid.z, [("re", self.values.real), ("im", self.values.imag)]
        )


def write_field_csv(path, z: np.ndarray, columns) -> None:
    """Write x,y,<columns> rows at full double precision (17 significant digits)."""
    names = ",".join(name for name, _ in columns)
    with open(path, "w") as fh:
        fh.write(f"x,y,{names}\n")
        cols = [z.real, z.imag] + [vals for _, vals in columns]
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def grid_to_json_str(grid: DomainGrid) -> str:
    return json.dumps(grid.to_json(), sort_keys=True)
