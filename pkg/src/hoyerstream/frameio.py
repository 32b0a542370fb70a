"""Disk formats: CSV matrices, PGM grayscale frames, frame directories, and
the series/report writers.

Readers never guess: ragged rows, non-numeric fields, bad magic bytes,
truncated payloads, and mismatched frame sizes are all hard errors naming
the file (and line/column where that makes sense). Writers are byte-stable:
the same values always produce the same bytes.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DimensionError, FrameFormatError
from .indices import as_image_matrix
from .stream import SparsityReading

SERIES_COLUMNS = ("t", "h_raw", "bias", "g", "g_unclamped", "a_bar", "a2_bar", "sigma2")

_PGM_MAX_MAXVAL = 65535


@dataclass(frozen=True)
class SeriesRecord:
    """Flat, serializable form of one monitored-frame reading."""

    t: int
    h_raw: float
    bias: float
    g: float
    g_unclamped: float
    a_bar: float
    a2_bar: float
    sigma2: float

    def __post_init__(self):
        for name in SERIES_COLUMNS[1:]:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def from_reading(cls, reading: SparsityReading) -> "SeriesRecord":
        return cls(
            t=reading.t,
            h_raw=reading.h_raw,
            bias=reading.bias,
            g=reading.g,
            g_unclamped=reading.g_unclamped,
            a_bar=reading.moments.a_bar,
            a2_bar=reading.moments.a2_bar,
            sigma2=reading.moments.sigma2,
        )

    def row(self) -> str:
        return ",".join([str(self.t)] + [repr(getattr(self, c)) for c in SERIES_COLUMNS[1:]])


def read_matrix_csv(path) -> np.ndarray:
    """Read a rectangular numeric grid: comma-separated fields, newline rows,
    lines starting with '#' skipped."""
    path = Path(path)
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            values = []
            for col, field in enumerate(fields, start=1):
                try:
                    v = float(field)
                except ValueError:
                    raise FrameFormatError(
                        f"{path}: line {lineno}, column {col}: non-numeric field {field!r}"
                    ) from None
                if not math.isfinite(v):
                    raise FrameFormatError(
                        f"{path}: line {lineno}, column {col}: non-finite value {field!r}"
                    )
                values.append(v)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise FrameFormatError(
                    f"{path}: line {lineno}: ragged row has {len(values)} fields, expected {width}"
                )
            rows.append(values)
    if not rows:
        raise FrameFormatError(f"{path}: no numeric rows")
    return np.array(rows, dtype=np.float64)


def write_matrix_csv(matrix, path):
    """Write a matrix in the format ``read_matrix_csv`` accepts; values keep
    full float64 precision, so a write/read round-trip is exact."""
    m = as_image_matrix(matrix)
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in m:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def _pgm_tokens(data: bytes, path: Path):
    """Yield (token, end_offset) over a PGM header, honoring '#' comments."""
    i = 0
    while i < len(data):
        c = data[i : i + 1]
        if c.isspace():
            i += 1
        elif c == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            yield data[i:j], j
            i = j
    raise FrameFormatError(f"{path}: truncated header")


def read_pgm(path) -> np.ndarray:
    """Read a P2 (ASCII) or P5 (binary) grayscale PGM as raw intensities.

    No rescaling is applied; a maxval up to 65535 is accepted (two-byte
    big-endian samples above 255, per the format).
    """
    path = Path(path)
    data = path.read_bytes()
    tokens = _pgm_tokens(data, path)
    try:
        magic, _ = next(tokens)
    except StopIteration:
        raise FrameFormatError(f"{path}: empty file") from None
    if magic not in (b"P2", b"P5"):
        raise FrameFormatError(f"{path}: bad magic {magic!r}, expected P2 or P5")
    header = []
    end = 0
    for tok, end in tokens:
        header.append(tok)
        if len(header) == 3:
            break
    if len(header) < 3:
        raise FrameFormatError(f"{path}: truncated header")
    try:
        width, height, maxval = (int(t) for t in header)
    except ValueError:
        raise FrameFormatError(f"{path}: non-integer header fields {header!r}") from None
    if width < 1 or height < 1:
        raise FrameFormatError(f"{path}: bad dimensions {width}x{height}")
    if not 1 <= maxval <= _PGM_MAX_MAXVAL:
        raise FrameFormatError(f"{path}: maxval {maxval} out of range [1, {_PGM_MAX_MAXVAL}]")

    if magic == b"P2":
        try:
            values = [int(t) for t in data[end:].split()]
        except ValueError:
            raise FrameFormatError(f"{path}: non-integer pixel data") from None
        if len(values) != width * height:
            raise FrameFormatError(
                f"{path}: expected {width * height} pixels, found {len(values)}"
            )
        pixels = np.array(values, dtype=np.float64)
    else:
        # Binary payload starts after exactly one whitespace byte past maxval.
        if not data[end : end + 1].isspace():
            raise FrameFormatError(f"{path}: missing whitespace before pixel payload")
        start = end + 1
        bytes_per = 2 if maxval > 255 else 1
        need = width * height * bytes_per
        payload = data[start : start + need]
        if len(payload) < need:
            raise FrameFormatError(
                f"{path}: truncated pixel payload, expected {need} bytes, found {len(payload)}"
            )
        if data[start + need :].strip():
            raise FrameFormatError(f"{path}: trailing bytes after pixel payload")
        dtype = ">u2" if bytes_per == 2 else np.uint8
        pixels = np.frombuffer(payload, dtype=dtype).astype(np.float64)
    if pixels.min(initial=0.0) < 0 or pixels.max(initial=0.0) > maxval:
        raise FrameFormatError(f"{path}: pixel value outside [0, {maxval}]")
    return pixels.reshape(height, width)


def write_pgm(matrix, path, maxval: int = 65535):
    """Write non-negative integer-valued intensities as binary (P5) PGM."""
    m = as_image_matrix(matrix)
    if not 1 <= maxval <= _PGM_MAX_MAXVAL:
        raise ValueError(f"maxval {maxval} out of range [1, {_PGM_MAX_MAXVAL}]")
    if m.min() < 0 or m.max() > maxval:
        raise ValueError(f"pixel values must lie in [0, {maxval}]")
    rounded = np.rint(m)
    if not np.array_equal(rounded, m):
        raise ValueError("pixel values must be integral; quantize before writing")
    dtype = ">u2" if maxval > 255 else np.uint8
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{m.shape[1]} {m.shape[0]}\n{maxval}\n".encode("ascii"))
        fh.write(rounded.astype(dtype).tobytes())


def load_matrix(path) -> np.ndarray:
    """Read a single matrix, dispatching on file extension (.csv/.pgm/.pnm)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return read_matrix_csv(path)
    if suffix in (".pgm", ".pnm"):
        return read_pgm(path)
    raise FrameFormatError(f"{path}: unsupported extension {suffix!r} (use .csv or .pgm)")


def _frame_sort_index(path: Path) -> int:
    digits = re.findall(r"\d+", path.stem)
    if not digits:
        raise FrameFormatError(f"{path}: filename carries no integer index")
    return int(digits[-1])


def read_frame_dir(path, pattern: str = "*") -> list[np.ndarray]:
    """Read every frame file matching ``pattern`` in ascending index order.

    The index is the last run of digits in each filename stem; order is
    preserved even across gaps. All frames must share one shape.
    """
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"{root}: not a directory")
    matched = [p for p in root.glob(pattern) if p.is_file()]
    if not matched:
        raise FrameFormatError(f"{root}: no files match {pattern!r}")
    indexed = sorted((_frame_sort_index(p), p) for p in matched)
    for (i1, p1), (i2, p2) in zip(indexed, indexed[1:]):
        if i1 == i2:
            raise FrameFormatError(f"{root}: duplicate frame index {i1} ({p1.name}, {p2.name})")
    frames = []
    shape = None
    for _, p in indexed:
        m = load_matrix(p)
        if shape is None:
            shape = m.shape
        elif m.shape != shape:
            raise DimensionError(
                f"{p}: frame shape {m.shape} does not match first frame's {shape}"
            )
        frames.append(m)
    return frames


def write_series_csv(records: Iterable, path):
    """Write readings as CSV with columns exactly ``SERIES_COLUMNS``.

    Accepts SparsityReading or SeriesRecord items. Output is byte-stable:
    floats are rendered with shortest round-trip precision.
    """
    rows = []
    for rec in records:
        if isinstance(rec, SparsityReading):
            rec = SeriesRecord.from_reading(rec)
        rows.append(rec.row())
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(SERIES_COLUMNS) + "\n")
        for row in rows:
            fh.write(row + "\n")


def write_report_json(report: dict, path):
    """Write an experiment report as stable JSON (sorted keys, 2-space indent)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
