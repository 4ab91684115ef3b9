"""Periodic rectangle fields and the .wts binary snapshot format.

Fields discretize (zeta, y) on [0, Lx) x [-Ly/2, Ly/2) with the zeta
length an integer number of wave-train periods, so periodic boundaries
are compatible with the profile.  Values are stored (Nx, Ny, n) with
components innermost, matching the on-disk layout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import IncompatibleGrid

__all__ = ["Field2D", "write_wts", "read_wts", "spectral_dz", "spectral_dy"]

_MAGIC = b"WTSF"
_VERSION = 1


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Field2D:
    """n-component state on a periodic rectangle."""

    Lx: int
    Ly: float
    values: np.ndarray  # (Nx, Ny, n) float64
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise IncompatibleGrid("values must be (Nx, Ny, n)")
        nx, ny, _ = v.shape
        if nx < 16 or ny < 16 or not (_is_pow2(nx) and _is_pow2(ny)):
            raise IncompatibleGrid("Nx, Ny must be powers of two >= 16")
        if int(self.Lx) != self.Lx or self.Lx < 1:
            raise IncompatibleGrid("Lx must be a positive integer number of periods")
        if not np.all(np.isfinite(v)):
            raise IncompatibleGrid("field values must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "Lx", int(self.Lx))
        object.__setattr__(self, "Ly", float(self.Ly))

    @property
    def Nx(self) -> int:
        return self.values.shape[0]

    @property
    def Ny(self) -> int:
        return self.values.shape[1]

    @property
    def n(self) -> int:
        return self.values.shape[2]

    def zeta(self) -> np.ndarray:
        return self.Lx * np.arange(self.Nx) / self.Nx

    def y(self) -> np.ndarray:
        return self.Ly * np.arange(self.Ny) / self.Ny - self.Ly / 2.0

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=-1)))

    def with_values(self, values: np.ndarray, time: float | None = None) -> "Field2D":
        return replace(self, values=values, time=self.time if time is None else time)


def _wavenumbers(n: int, length: float) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)


def spectral_dz(field: Field2D, order: int = 1) -> Field2D:
    """Spectral zeta-derivative of every component."""
    kx = _wavenumbers(field.Nx, float(field.Lx))
    if order % 2 == 1:
        kx = kx.copy()
        kx[field.Nx // 2] = 0.0
    fac = (1j * kx) ** order
    out = np.real(np.fft.ifft(fac[:, None, None] * np.fft.fft(field.values, axis=0), axis=0))
    return field.with_values(out)


def spectral_dy(field: Field2D, order: int = 1) -> Field2D:
    """Spectral y-derivative of every component."""
    ky = _wavenumbers(field.Ny, field.Ly)
    if order % 2 == 1:
        ky = ky.copy()
        ky[field.Ny // 2] = 0.0
    fac = (1j * ky) ** order
    out = np.real(np.fft.ifft(fac[None, :, None] * np.fft.fft(field.values, axis=1), axis=1))
    return field.with_values(out)


def write_wts(path, field: Field2D) -> None:
    """Binary snapshot: magic, version, Nx, Ny, n, t, then little-endian
    float64 data in zeta-major row order with components innermost."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIIId", _VERSION, field.Nx, field.Ny, field.n, field.time))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_wts(path, Lx: int = 1, Ly: float = 1.0) -> Field2D:
    """Read a .wts snapshot.  Geometry (Lx, Ly) travels in the run config,
    not the file, and must be supplied by the caller."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise IncompatibleGrid(f"not a wts file: magic {magic!r}")
        version, nx, ny, n = struct.unpack("<IIII", fh.read(16))
        if version != _VERSION:
            raise IncompatibleGrid(f"unsupported wts version {version}")
        (t,) = struct.unpack("<d", fh.read(8))
        data = np.frombuffer(fh.read(8 * nx * ny * n), dtype="<f8").reshape(nx, ny, n)
    return Field2D(Lx=Lx, Ly=Ly, values=np.array(data, dtype=float), time=t)
