"""Occupancy grids, binary masks, raster line geometry and netpbm file I/O.

Cells are addressed as (col, row) with col growing rightward and row growing
downward.  Boolean rasters are stored as numpy arrays of shape (height, width),
so pixel (col, row) lives at array[row, col].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage


class RasterFormatError(ValueError):
    """Malformed netpbm data."""


class BadMagicError(RasterFormatError):
    """File does not start with the expected P5/P6 magic."""


class UnsupportedMaxvalError(RasterFormatError):
    """Only maxval 255 rasters are supported."""


class DimensionError(RasterFormatError):
    """Header dimensions are invalid or disagree with the payload."""


class TruncatedPayloadError(RasterFormatError):
    """Pixel payload is shorter than the header promises."""


MIN_GRID_SIDE = 21  # the action table reaches 10 cells out in every direction


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Static obstacle map plus the fixed start cell of the vehicle.

    occupied[row, col] is True for blocked cells.  resolution is meters per
    cell.  ego_cell is the (col, row) start cell and must be free and in bounds.
    """

    width: int
    height: int
    resolution: float
    occupied: np.ndarray
    ego_cell: tuple[int, int]

    def __post_init__(self):
        if self.width < MIN_GRID_SIDE or self.height < MIN_GRID_SIDE:
            raise ValueError(
                f"grid must be at least {MIN_GRID_SIDE}x{MIN_GRID_SIDE}, "
                f"got {self.width}x{self.height}"
            )
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        occ = np.ascontiguousarray(self.occupied, dtype=bool)
        if occ.shape != (self.height, self.width):
            raise ValueError(
                f"occupancy shape {occ.shape} does not match "
                f"(height, width)=({self.height}, {self.width})"
            )
        occ.flags.writeable = False
        object.__setattr__(self, "occupied", occ)
        col, row = self.ego_cell
        if not self.in_bounds(col, row):
            raise ValueError(f"ego cell {self.ego_cell} out of bounds")
        if occ[row, col]:
            raise ValueError(f"ego cell {self.ego_cell} is occupied")

    def in_bounds(self, col: int, row: int) -> bool:
        return 0 <= col < self.width and 0 <= row < self.height

    def is_free(self, col: int, row: int) -> bool:
        return self.in_bounds(col, row) and not self.occupied[row, col]

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.resolution == other.resolution
            and self.ego_cell == other.ego_cell
            and np.array_equal(self.occupied, other.occupied)
        )

    @classmethod
    def from_occupancy(cls, occupied, resolution: float, ego_cell: tuple[int, int]) -> "OccupancyGrid":
        occ = np.asarray(occupied, dtype=bool)
        h, w = occ.shape
        return cls(width=w, height=h, resolution=resolution, occupied=occ, ego_cell=ego_cell)

    @classmethod
    def empty(cls, width: int, height: int, resolution: float, ego_cell: tuple[int, int]) -> "OccupancyGrid":
        return cls.from_occupancy(np.zeros((height, width), dtype=bool), resolution, ego_cell)


@dataclass(frozen=True, eq=False)
class RegionMask:
    """Binary raster the same size as the grid it annotates."""

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=bool)
        if bits.shape != (self.height, self.width):
            raise ValueError(
                f"mask shape {bits.shape} does not match "
                f"(height, width)=({self.height}, {self.width})"
            )
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    def count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        if not isinstance(other, RegionMask):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.bits, other.bits)
        )

    @classmethod
    def from_bits(cls, bits) -> "RegionMask":
        arr = np.asarray(bits, dtype=bool)
        h, w = arr.shape
        return cls(width=w, height=h, bits=arr)

    @classmethod
    def blank(cls, width: int, height: int) -> "RegionMask":
        return cls(width=width, height=height, bits=np.zeros((height, width), dtype=bool))


@dataclass(frozen=True)
class ReferencePath:
    """Ordered lane-center poses: (col, row, heading) with heading in radians.

    Headings must agree with the direction of travel: for every segment the
    stored heading at its start point stays within pi/2 of the segment
    direction.
    """

    points: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        pts = tuple((float(c), float(r), float(t)) for c, r, t in self.points)
        if len(pts) < 2:
            raise ValueError("reference path needs at least two points")
        for i in range(len(pts) - 1):
            c0, r0, t0 = pts[i]
            c1, r1, _ = pts[i + 1]
            if c0 == c1 and r0 == r1:
                raise ValueError(f"zero-length segment at index {i}")
            seg = math.atan2(-(r1 - r0), c1 - c0)
            d = abs((t0 - seg) % (2.0 * math.pi))
            if d > math.pi:
                d = 2.0 * math.pi - d
            if d > math.pi / 2.0 + 1e-9:
                raise ValueError(
                    f"heading at index {i} deviates {d:.3f} rad from segment direction"
                )
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


def _disk(radius: int) -> np.ndarray:
    """Boolean Euclidean disk footprint: offsets with dx*dx + dy*dy <= r*r."""
    r = int(radius)
    yy, xx = np.ogrid[-r : r + 1, -r : r + 1]
    return (xx * xx + yy * yy) <= r * r


def dilate(mask: RegionMask, radius: int) -> RegionMask:
    """Morphological dilation by a Euclidean disk of the given cell radius."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return RegionMask.from_bits(mask.bits.copy())
    out = ndimage.binary_dilation(mask.bits, structure=_disk(radius))
    return RegionMask.from_bits(out)


def inflate(grid: OccupancyGrid, radius: int) -> OccupancyGrid:
    """Grow every obstacle by a Euclidean disk so the planner can treat the
    vehicle as a point.  The ego cell must survive inflation."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return grid
    occ = ndimage.binary_dilation(grid.occupied, structure=_disk(radius))
    return OccupancyGrid.from_occupancy(occ, grid.resolution, grid.ego_cell)


def line_cells(frm: tuple[int, int], to: tuple[int, int]) -> list[tuple[int, int]]:
    """Every cell the closed segment between the two cell centers touches.

    Supercover walk in pure integer arithmetic: step toward whichever pixel
    boundary the segment crosses first, and take the diagonal when it passes
    exactly through a corner.  The traversed cell set is symmetric in the
    endpoints.
    """
    c0, r0 = int(frm[0]), int(frm[1])
    c1, r1 = int(to[0]), int(to[1])
    adc = abs(c1 - c0)
    adr = abs(r1 - r0)
    sc = 1 if c1 >= c0 else -1
    sr = 1 if r1 >= r0 else -1
    cells = [(c0, r0)]
    c, r = c0, r0
    i = j = 1
    while i <= adc or j <= adr:
        if j > adr:
            step_col, step_row = True, False
        elif i > adc:
            step_col, step_row = False, True
        else:
            # next column boundary at t=(2i-1)/(2*adc), next row boundary at
            # t=(2j-1)/(2*adr); compare cross-multiplied to stay in integers
            lhs = (2 * i - 1) * adr
            rhs = (2 * j - 1) * adc
            if lhs == rhs:  # exact corner crossing
                step_col, step_row = True, True
            else:
                step_col = lhs < rhs
                step_row = not step_col
        if step_col:
            c += sc
            i += 1
        if step_row:
            r += sr
            j += 1
        cells.append((c, r))
    return cells


def trace_line(grid: OccupancyGrid, frm: tuple[int, int], to: tuple[int, int]):
    """First occupied cell on the segment between two cells, or None if clear.

    Both endpoints must be in bounds.
    """
    for point in (frm, to):
        if not grid.in_bounds(int(point[0]), int(point[1])):
            raise ValueError(f"cell {tuple(point)} out of bounds")
    occ = grid.occupied
    for c, r in line_cells(frm, to):
        if occ[r, c]:
            return (c, r)
    return None


def rasterize_path(points, width: int, height: int) -> RegionMask:
    """Mask of every cell touched by the polyline through the given points.

    Points may be float poses; they are rounded to cells and clipped to the
    raster.  A single point yields a single set bit.
    """
    bits = np.zeros((height, width), dtype=bool)
    cells = []
    for p in points:
        c = min(max(int(round(float(p[0]))), 0), width - 1)
        r = min(max(int(round(float(p[1]))), 0), height - 1)
        cells.append((c, r))
    if not cells:
        return RegionMask.from_bits(bits)
    bits[cells[0][1], cells[0][0]] = True
    for a, b in zip(cells, cells[1:]):
        for c, r in line_cells(a, b):
            bits[r, c] = True
    return RegionMask.from_bits(bits)


def stamp_disk(mask_bits: np.ndarray, center: tuple[int, int], radius: int) -> None:
    """Set every cell within Euclidean radius of center, clipped to bounds."""
    h, w = mask_bits.shape
    c0, r0 = int(center[0]), int(center[1])
    r = int(radius)
    lo_c, hi_c = max(c0 - r, 0), min(c0 + r, w - 1)
    lo_r, hi_r = max(r0 - r, 0), min(r0 + r, h - 1)
    for row in range(lo_r, hi_r + 1):
        for col in range(lo_c, hi_c + 1):
            if (col - c0) ** 2 + (row - r0) ** 2 <= r * r:
                mask_bits[row, col] = True


# --- netpbm I/O -------------------------------------------------------------
#
# Writer emits exactly "P5\n{w} {h}\n255\n" (or P6) followed by the binary
# payload, so identical rasters produce identical bytes.  The reader accepts
# any whitespace between header tokens.


def _parse_header(data: bytes, path) -> tuple[bytes, int, int, int]:
    if len(data) < 2 or data[:1] != b"P":
        raise BadMagicError(f"{path}: not a netpbm file")
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise BadMagicError(f"{path}: unsupported magic {magic!r}")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token:
            raise DimensionError(f"{path}: header ended early")
        try:
            fields.append(int(token))
        except ValueError:
            raise DimensionError(f"{path}: bad header token {token!r}") from None
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise TruncatedPayloadError(f"{path}: no payload after header")
    pos += 1  # single whitespace byte separates header from payload
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise DimensionError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"{path}: maxval {maxval} not supported")
    return magic, width, height, pos


def read_raster(path):
    """Read a P5 file as a RegionMask (nonzero = set) or a P6 file as an
    (h, w, 3) uint8 array."""
    path = Path(path)
    data = path.read_bytes()
    magic, width, height, pos = _parse_header(data, path)
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    payload = data[pos:]
    if len(payload) < need:
        raise TruncatedPayloadError(
            f"{path}: payload {len(payload)} bytes, expected {need}"
        )
    if len(payload) > need:
        raise DimensionError(
            f"{path}: payload {len(payload)} bytes exceeds expected {need}"
        )
    arr = np.frombuffer(payload, dtype=np.uint8, count=need)
    if channels == 3:
        return arr.reshape(height, width, 3).copy()
    return RegionMask.from_bits(arr.reshape(height, width) != 0)


def read_grid(path, resolution: float, ego_cell: tuple[int, int]) -> OccupancyGrid:
    """Read a P5 file as an occupancy grid; nonzero pixels are obstacles."""
    mask = read_raster(path)
    if not isinstance(mask, RegionMask):
        raise BadMagicError(f"{path}: expected a P5 grayscale file")
    return OccupancyGrid.from_occupancy(mask.bits, resolution, ego_cell)


def write_raster(value, path) -> None:
    """Write an OccupancyGrid or RegionMask as P5, or an (h, w, 3) uint8
    array as P6.  Set bits / occupied cells map to pixel value 255."""
    path = Path(path)
    if isinstance(value, OccupancyGrid):
        plane = value.occupied
    elif isinstance(value, RegionMask):
        plane = value.bits
    else:
        arr = np.asarray(value)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise ValueError("expected OccupancyGrid, RegionMask or (h, w, 3) uint8 array")
        h, w = arr.shape[:2]
        header = f"P6\n{w} {h}\n255\n".encode("ascii")
        path.write_bytes(header + np.ascontiguousarray(arr).tobytes())
        return
    h, w = plane.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    payload = np.where(plane, np.uint8(255), np.uint8(0)).astype(np.uint8)
    path.write_bytes(header + payload.tobytes())
