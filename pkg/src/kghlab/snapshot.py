"""Binary field snapshots.

Layout: one UTF-8 header line holding a JSON object (``format``, ``dim``,
``n``, ``length``, ``space``, ``kind``) terminated by ``\\n``, followed by
``N**d`` complex samples as little-endian float64 pairs ``re, im`` in
C order.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .spectral import Field, Grid, make_grid

FORMAT_TAG = "kgh-field/1"


def save_field(path, f: Field) -> None:
    kind = "real" if f.space == "physical" and not np.any(np.imag(f.samples)) else "complex"
    header = {
        "format": FORMAT_TAG,
        "dim": f.grid.dim,
        "n": f.grid.n,
        "length": f.grid.length,
        "space": f.space,
        "kind": kind,
    }
    data = np.empty(f.grid.size * 2, dtype="<f8")
    flat = np.asarray(f.samples, dtype=complex).ravel()
    data[0::2] = flat.real
    data[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(data.tobytes())


def load_field(path, max_points: int | None = None) -> Field:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode())
    if header.get("format") != FORMAT_TAG:
        raise ValueError(f"{path}: not a {FORMAT_TAG} snapshot")
    kw = {} if max_points is None else {"max_points": max_points}
    grid: Grid = make_grid(header["dim"], header["n"], header["length"], **kw)
    data = np.frombuffer(raw[nl + 1 :], dtype="<f8")
    if data.size != 2 * grid.size:
        raise ValueError(f"{path}: expected {2 * grid.size} floats, found {data.size}")
    samples = (data[0::2] + 1j * data[1::2]).reshape(grid.shape)
    return Field(grid, header["space"], samples)
