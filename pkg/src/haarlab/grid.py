"""Periodic dyadic grids and sampled fields.

The computational domain is the torus [-B, B)^d sampled at midpoints of a
uniform grid with step 2^-J.  Midpoint sampling keeps every sample strictly
inside a dyadic cell at every level N <= J, which makes cell averages and
Haar coefficients exact block sums.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .errors import LevelTooFine, ResolutionTooCoarse

SUPPORT_EPS = 1e-14  # relative threshold below which samples count as zero


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the sampling grid: dimension d, step 2^-J, box [-B, B)^d."""

    d: int
    J: int
    B: int = 2

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.B < 1 or (self.B & (self.B - 1)) != 0:
            raise ValueError("box half-width B must be a positive power of two")
        if self.J < 3:
            raise ResolutionTooCoarse(f"J={self.J} is too coarse")

    @property
    def n(self) -> int:
        """Samples per axis."""
        return self.B * 2 ** (self.J + 1)

    @property
    def h(self) -> float:
        """Grid step."""
        return 2.0 ** (-self.J)

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    def axis_coords(self) -> np.ndarray:
        """Midpoint sample coordinates along one axis."""
        i = np.arange(self.n)
        return -self.B + (i + 0.5) * self.h

    def coord_grids(self) -> list:
        """d broadcastable coordinate arrays (open meshgrid)."""
        x = self.axis_coords()
        return list(np.meshgrid(*([x] * self.d), indexing="ij", sparse=True))

    def axis_freqs(self) -> np.ndarray:
        """DFT frequencies along one axis (cycles per unit length)."""
        return np.fft.fftfreq(self.n, d=self.h)

    def rfft_axis_freqs(self) -> np.ndarray:
        return np.fft.rfftfreq(self.n, d=self.h)

    def cells_per_axis(self, N: int) -> int:
        return 2 * self.B * 2**N

    def block(self, N: int) -> int:
        """Samples per cell edge at dyadic level N."""
        if N > self.J:
            raise LevelTooFine(f"level {N} exceeds J={self.J}")
        return 2 ** (self.J - N)


@dataclass
class GridField:
    """Sampled scalar field on a GridSpec.

    margin is the declared distance from the support to the box boundary;
    None means the field is a genuine torus field with no support claim.
    """

    spec: GridSpec
    values: np.ndarray
    margin: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.spec.shape:
            raise ValueError(
                f"values shape {self.values.shape} != grid shape {self.spec.shape}"
            )

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def copy(self) -> "GridField":
        return GridField(self.spec, self.values.copy(), self.margin)

    def measured_margin(self) -> float:
        """Distance from the numerically non-negligible support to the boundary."""
        mags = np.abs(self.values)
        peak = mags.max()
        if peak == 0.0:
            return float(self.spec.B)
        x = self.spec.axis_coords()
        dist_to_boundary = self.spec.B - np.abs(x) - 0.5 * self.spec.h
        m = float(self.spec.B)
        supp = mags > SUPPORT_EPS * peak
        for axis in range(self.spec.d):
            other = tuple(a for a in range(self.spec.d) if a != axis)
            line = supp.any(axis=other) if other else supp
            if line.any():
                m = min(m, float(dist_to_boundary[line].min()))
        return m

    def scaled(self, c) -> "GridField":
        return GridField(self.spec, c * self.values, self.margin)


def field_from_function(spec: GridSpec, fn, margin: float | None = None) -> GridField:
    """Sample fn(x1, ..., xd) (vectorized over broadcast coordinate grids)."""
    coords = spec.coord_grids()
    vals = np.broadcast_to(fn(*coords), spec.shape).copy()
    return GridField(spec, vals, margin)


def zeros(spec: GridSpec, dtype=np.float64) -> GridField:
    return GridField(spec, np.zeros(spec.shape, dtype=dtype), margin=float(spec.B))


# ---------------------------------------------------------------------------
# FFT helpers.  Transfer functions are stored in rfft layout (real arrays,
# last axis halved); they are mirrored to the full layout for complex input.


def _mirror_last_axis(half: np.ndarray, n: int) -> np.ndarray:
    """Expand an rfft-layout array (even in the last frequency axis) to full."""
    idx = np.minimum(np.arange(n), n - np.arange(n))
    return half[..., idx]


def apply_transfer(values: np.ndarray, transfer_half: np.ndarray) -> np.ndarray:
    """Multiply the field's spectrum by a real, per-axis-even transfer."""
    n = values.shape[-1]
    if np.iscomplexobj(values):
        full = _mirror_last_axis(transfer_half, n)
        return sfft.ifftn(sfft.fftn(values) * full)
    spec = sfft.rfftn(values)
    spec *= transfer_half
    return sfft.irfftn(spec, s=values.shape)


def spectrum(values: np.ndarray) -> np.ndarray:
    """Full complex DFT of the sample array (no normalization)."""
    return sfft.fftn(values)


def inverse_spectrum(spec_vals: np.ndarray) -> np.ndarray:
    return sfft.ifftn(spec_vals)


def cell_means(values: np.ndarray, spec: GridSpec, N: int) -> np.ndarray:
    """Exact means over level-N dyadic cells; output shape (cells,)*d."""
    b = spec.block(N)
    c = spec.cells_per_axis(N)
    shp = ()
    for _ in range(spec.d):
        shp += (c, b)
    view = values.reshape(shp)
    return view.mean(axis=tuple(range(1, 2 * spec.d, 2)))


def broadcast_cells(cellvals: np.ndarray, spec: GridSpec, N: int) -> np.ndarray:
    """Broadcast level-N cell values back to the full sample grid."""
    b = spec.block(N)
    c = spec.cells_per_axis(N)
    shp, exp = (), ()
    for _ in range(spec.d):
        shp += (c, 1)
        exp += (c, b)
    out = np.broadcast_to(cellvals.reshape(shp), exp)
    return out.reshape(spec.shape).copy()


# ---------------------------------------------------------------------------
# Serialization: raw little-endian float64 payload plus a key-value sidecar.

_HEADER_SUFFIX = ".hdr"


def save_field(f: GridField, path: str) -> None:
    """Write <path> (raw float64 LE, row-major; complex interleaved re,im)
    and <path>.hdr (text header)."""
    vals = f.values
    kind = "complex" if np.iscomplexobj(vals) else "real"
    if kind == "complex":
        payload = np.empty(vals.shape + (2,), dtype="<f8")
        payload[..., 0] = vals.real
        payload[..., 1] = vals.imag
    else:
        payload = vals.astype("<f8", copy=False)
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(payload).tobytes())
    lines = [
        f"d {f.spec.d}",
        f"J {f.spec.J}",
        f"B {f.spec.B}",
        f"kind {kind}",
        f"margin {'none' if f.margin is None else repr(float(f.margin))}",
    ]
    with open(path + _HEADER_SUFFIX, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path: str) -> GridField:
    header = {}
    with open(path + _HEADER_SUFFIX) as fh:
        for line in fh:
            key, val = line.split(None, 1)
            header[key] = val.strip()
    spec = GridSpec(d=int(header["d"]), J=int(header["J"]), B=int(header["B"]))
    raw = np.fromfile(path, dtype="<f8")
    if header["kind"] == "complex":
        raw = raw.reshape(spec.shape + (2,))
        vals = raw[..., 0] + 1j * raw[..., 1]
    else:
        vals = raw.reshape(spec.shape)
    margin = None if header["margin"] == "none" else float(header["margin"])
    return GridField(spec, vals, margin)


def export_csv_1d(f: GridField, path: str) -> None:
    """Two/three column CSV (x, value) for d=1 fields."""
    if f.spec.d != 1:
        raise ValueError("CSV export is for d=1 fields")
    x = f.spec.axis_coords()
    with open(path, "w") as fh:
        if np.iscomplexobj(f.values):
            fh.write("x,re,im\n")
            for xi, v in zip(x, f.values):
                fh.write(f"{xi!r},{v.real!r},{v.imag!r}\n")
        else:
            fh.write("x,value\n")
            for xi, v in zip(x, f.values):
                fh.write(f"{xi!r},{v!r}\n")


def field_hash(f: GridField) -> str:
    """Stable content hash (used in run manifests)."""
    h = hashlib.sha256()
    h.update(f"{f.spec.d},{f.spec.J},{f.spec.B}".encode())
    h.update(np.ascontiguousarray(f.values).tobytes())
    return h.hexdigest()[:16]
