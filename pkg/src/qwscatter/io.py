"""File formats: field CSV, S-matrix JSON lines, PGM heatmaps and SVG plots.

Every writer goes through :func:`atomic_write_text` (temp file in the target
directory, then ``os.replace``), so readers never see partial output.
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .lattice import Chirality, GridField

__all__ = [
    "atomic_write_text", "atomic_write_bytes", "field_to_csv", "write_field_csv", "read_field_csv",
    "FieldFormatError", "smatrix_record", "parse_smatrix_record", "write_jsonl", "read_jsonl",
    "write_pgm", "write_sigma_plot", "write_heatmap_svg",
]

CSV_HEADER = ("x1", "x2", "chirality", "re", "im")


class FieldFormatError(ValueError):
    pass


def atomic_write_bytes(path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def _g(x: float) -> str:
    return format(float(x), ".17g")


# -- fields ---------------------------------------------------------------

def field_to_csv(f: GridField, skip_zeros: bool = False) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    L = f.L
    for i in range(2 * L + 1):
        for j in range(2 * L + 1):
            for p in range(4):
                z = f.data[i, j, p]
                if skip_zeros and z == 0:
                    continue
                w.writerow((i - L, j - L, Chirality(p).letter, _g(z.real), _g(z.imag)))
    return buf.getvalue()


def write_field_csv(path, f: GridField, skip_zeros: bool = False) -> Path:
    return atomic_write_text(path, field_to_csv(f, skip_zeros))


def read_field_csv(path, L: int | None = None) -> GridField:
    """Read a field CSV; missing rows are zero. ``L`` defaults to the largest coordinate present."""
    rows = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
                raise FieldFormatError(f"expected header {','.join(CSV_HEADER)}")
            for k, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 5:
                    raise FieldFormatError(f"line {k}: expected 5 columns, got {len(row)}")
                try:
                    x1, x2 = int(row[0]), int(row[1])
                    p = Chirality.parse(row[2].strip())
                    z = complex(float(row[3]), float(row[4]))
                except (ValueError, KeyError) as exc:
                    raise FieldFormatError(f"line {k}: {exc}") from None
                if not np.isfinite(z):
                    raise FieldFormatError(f"line {k}: non-finite amplitude")
                rows.append((x1, x2, p, z))
    except OSError as exc:
        raise FieldFormatError(f"cannot read {path}: {exc.strerror}") from None
    r = max((max(abs(a), abs(b)) for a, b, _, _ in rows), default=0)
    L = max(r, 1) if L is None else L
    if r > L:
        raise FieldFormatError(f"field extends to radius {r} beyond window {L}")
    f = GridField.zeros(L)
    for x1, x2, p, z in rows:
        f.data[x1 + L, x2 + L, p] = z
    return f


# -- S-matrix records -------------------------------------------------------

def _mat_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _mat_from_json(rows) -> np.ndarray:
    a = np.array(rows, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def smatrix_record(block, unitarity_defect: float, corridor_max: float) -> dict:
    return {
        "theta": float(block.theta), "m": int(block.m), "n0": int(block.n0),
        "A": _mat_to_json(block.A), "sigma": _mat_to_json(block.sigma),
        "unitarityDefect": float(unitarity_defect), "corridorMax": float(corridor_max),
    }


def parse_smatrix_record(rec: dict):
    from .smatrix import SMatrixBlock

    return SMatrixBlock(float(rec["theta"]), int(rec["m"]), int(rec["n0"]),
                        _mat_from_json(rec["A"]), _mat_from_json(rec["sigma"]))


def write_jsonl(path, records) -> Path:
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    return atomic_write_text(path, text)


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


# -- images -------------------------------------------------------------------

def write_pgm(path, values: np.ndarray, maxval: int = 255) -> Path:
    """Plain (P2) greyscale image; rows run from top ``x2 = L`` down to ``x2 = -L``."""
    v = np.abs(np.asarray(values)).astype(float)
    top = v.max()
    scaled = np.zeros_like(v) if top == 0 else v / top
    img = np.rint(scaled.T[::-1] * maxval).astype(int)
    lines = ["P2", f"{img.shape[1]} {img.shape[0]}", str(maxval)]
    lines += [" ".join(map(str, row)) for row in img]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def _svg_bytes(fig) -> bytes:
    import matplotlib.pyplot as plt

    buf = _io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "qwscatter"
    import matplotlib.pyplot as plt

    return plt


def write_heatmap_svg(path, f: GridField) -> Path:
    plt = _pyplot()
    L = f.L
    fig, axes = plt.subplots(1, 4, figsize=(12, 3.2))
    for p, ax in enumerate(axes):
        im = ax.imshow(np.abs(f.data[..., p]).T, origin="lower", extent=(-L - .5, L + .5, -L - .5, L + .5))
        ax.set_title(f"|u_{Chirality(p).letter}|")
        fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    return atomic_write_bytes(path, _svg_bytes(fig))


def write_sigma_plot(path, thetas, sigmas) -> Path:
    """``|Sigma|`` entries against theta, one line per nonzero-band entry."""
    plt = _pyplot()
    s = np.abs(np.stack(sigmas))
    fig, ax = plt.subplots(figsize=(6, 4))
    flat = s.reshape(len(thetas), -1)
    for k in np.flatnonzero(flat.max(axis=0) > 1e-12):
        ax.plot(thetas, flat[:, k], lw=0.8)
    ax.set_xlabel("theta")
    ax.set_ylabel("|Sigma entries|")
    fig.tight_layout()
    return atomic_write_bytes(path, _svg_bytes(fig))
