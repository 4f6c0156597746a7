"""Binary netpbm I/O: P5 grayscale and P6 color, maxval 255 only.

This is the whole file contract with the planner: inputs arrive as P6
rasters, labels as P5 masks, and predictions leave as P5 masks. Kept
self-contained on purpose.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class PnmError(ValueError):
    """Malformed or unsupported netpbm data."""


def _parse_header(data: bytes, origin) -> tuple[bytes, int, int, int]:
    # magic, then width/height/maxval as whitespace-separated ASCII ints,
    # '#' comments running to end of line, one whitespace byte before payload
    if len(data) < 2 or data[:2] not in (b"P5", b"P6"):
        raise PnmError(f"{origin}: not a binary PGM/PPM file")
    magic = data[:2]
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(data):
            raise PnmError(f"{origin}: truncated header")
        c = data[pos : pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        elif c.isdigit():
            end = pos
            while end < len(data) and data[end : end + 1].isdigit():
                end += 1
            fields.append(int(data[pos:end]))
            pos = end
        else:
            raise PnmError(f"{origin}: unexpected byte {c!r} in header")
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise PnmError(f"{origin}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise PnmError(f"{origin}: unsupported maxval {maxval}")
    return magic, width, height, pos + 1


def read_pnm(path) -> np.ndarray:
    """Read a P5 file as an (h, w) uint8 array or a P6 file as (h, w, 3)."""
    path = Path(path)
    data = path.read_bytes()
    magic, width, height, pos = _parse_header(data, path)
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    payload = data[pos:]
    if len(payload) != need:
        raise PnmError(f"{path}: payload {len(payload)} bytes, expected {need}")
    arr = np.frombuffer(payload, dtype=np.uint8, count=need)
    if channels == 3:
        return arr.reshape(height, width, 3).copy()
    return arr.reshape(height, width).copy()


def probe_size(path) -> tuple[int, int, int]:
    """Header-only peek: (width, height, channels). Cheap enough to run
    over a whole manifest before loading any payload."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(256)
    magic, width, height, _ = _parse_header(head, path)
    return width, height, 3 if magic == b"P6" else 1


def write_pgm(plane: np.ndarray, path) -> None:
    """Write a 2-D array as P5; boolean input maps set cells to 255."""
    plane = np.asarray(plane)
    if plane.ndim != 2:
        raise PnmError(f"expected a 2-D array, got shape {plane.shape}")
    if plane.dtype == bool:
        plane = np.where(plane, np.uint8(255), np.uint8(0))
    elif plane.dtype != np.uint8:
        raise PnmError(f"expected bool or uint8, got {plane.dtype}")
    h, w = plane.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(plane).tobytes())


def write_ppm(img: np.ndarray, path) -> None:
    """Write an (h, w, 3) uint8 array as P6."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise PnmError(f"expected (h, w, 3) uint8, got {img.shape} {img.dtype}")
    h, w = img.shape[:2]
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(img).tobytes())
