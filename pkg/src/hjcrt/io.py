"""On-disk formats for value fields and level masks.

Field file::

    HJRT1
    <ndim> (<count> <lo> <hi> <periodic>)*ndim <time_label> <horizon>
    <raw little-endian float64 values, row-major, last dimension fastest>

Mask file (CSV): a header row with the grid descriptor followed by the level
and source tag, then one row per member node holding its multi-index.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .grid import Grid, ValueField
from .sets import LevelMask

FIELD_MAGIC = b"HJRT1\n"


class FormatError(ValueError):
    pass


def write_field(path, field: ValueField) -> None:
    header = [repr(v) if isinstance(v, float) else str(v) for v in field.grid.descriptor()]
    header += [repr(float(field.time_label)), repr(float(field.horizon))]
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write((" ".join(header) + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_field(path) -> ValueField:
    with open(path, "rb") as fh:
        magic = fh.read(len(FIELD_MAGIC))
        if magic != FIELD_MAGIC:
            raise FormatError(f"{path}: not an HJRT1 field file")
        tokens = fh.readline().decode("ascii").split()
        payload = fh.read()
    try:
        ndim = int(tokens[0])
        grid = Grid.from_descriptor(tokens[: 1 + 4 * ndim])
        time_label, horizon = float(tokens[1 + 4 * ndim]), float(tokens[2 + 4 * ndim])
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: malformed header: {exc}") from exc
    values = np.frombuffer(payload, dtype="<f8")
    if values.size != grid.size:
        raise FormatError(f"{path}: {values.size} values for a grid of {grid.size} nodes")
    return ValueField(grid, values.astype(np.float64).reshape(grid.shape), time_label, horizon)


def write_mask(path, mask: LevelMask) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [repr(v) if isinstance(v, float) else str(v) for v in mask.grid.descriptor()]
        writer.writerow(header + [repr(float(mask.level)), mask.source])
        writer.writerows(np.argwhere(mask.member).tolist())


def read_mask(path) -> LevelMask:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty mask file")
    header = rows[0]
    try:
        ndim = int(header[0])
        grid = Grid.from_descriptor(header[: 1 + 4 * ndim])
        level = float(header[1 + 4 * ndim])
        source = header[2 + 4 * ndim] if len(header) > 2 + 4 * ndim else ""
        member = np.zeros(grid.shape, dtype=bool)
        if len(rows) > 1:
            idx = np.array([[int(v) for v in row] for row in rows[1:] if row], dtype=np.intp)
            if idx.shape[1] != ndim or np.any(idx < 0) or np.any(idx >= np.array(grid.counts)):
                raise FormatError(f"{path}: node index out of range")
            member[tuple(idx.T)] = True
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: malformed mask file: {exc}") from exc
    return LevelMask(grid, member, level, source)


def is_field_file(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(len(FIELD_MAGIC)) == FIELD_MAGIC


def read_any(path):
    """A :class:`ValueField` or a :class:`LevelMask`, by file content."""
    return read_field(path) if is_field_file(path) else read_mask(path)


def ensure_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path
