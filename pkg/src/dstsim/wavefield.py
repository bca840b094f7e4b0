"""Complex scalar fields on uniform 2D grids, and generators for the input states.

Conventions
-----------
A field is a rectangular grid of ``ny`` rows by ``nx`` columns of complex
cell amplitudes, stored row-major (y outer, x inner).  Amplitudes are
dimensionless cell-integrated coefficients: a normalized field satisfies
``sum(|psi|^2) == 1`` over cells, not an integral density.  Cell centers sit
at ``x = (ix - (nx-1)/2) * pitch`` and ``y = (iy - (ny-1)/2) * pitch``, so
the geometric grid center is the origin.  The azimuthal angle used by the
vortex plate and the LG modes is ``atan2(y, x)`` (y up, x right).
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_genlaguerre

from .errors import DegenerateFieldError, FileFormatError

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Uniform scan grid: ``nx`` by ``ny`` cells of physical width ``pitch`` (m)."""

    nx: int
    ny: int
    pitch: float

    def __post_init__(self):
        if not (isinstance(self.nx, (int, np.integer)) and isinstance(self.ny, (int, np.integer))):
            raise ValueError("nx and ny must be integers")
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.nx}x{self.ny}")
        if not np.isfinite(self.pitch) or self.pitch <= 0:
            raise ValueError(f"pitch must be positive and finite, got {self.pitch}")

    @property
    def ncells(self) -> int:
        return self.nx * self.ny

    @property
    def extent(self) -> float:
        """Largest physical side length of the grid (m)."""
        return max(self.nx, self.ny) * self.pitch

    def x_coords(self) -> np.ndarray:
        return (np.arange(self.nx) - (self.nx - 1) / 2.0) * self.pitch

    def y_coords(self) -> np.ndarray:
        return (np.arange(self.ny) - (self.ny - 1) / 2.0) * self.pitch

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates ``(X, Y)`` as ``(ny, nx)`` arrays (m)."""
        return np.meshgrid(self.x_coords(), self.y_coords())


@dataclass(frozen=True)
class TransverseWavefunction:
    """Complex amplitudes ``amps[iy, ix]`` on a :class:`GridSpec`.

    Instances are immutable: the amplitude buffer is marked read-only, and
    every operation returns a new instance.
    """

    grid: GridSpec
    amps: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if arr.shape != (self.grid.ny, self.grid.nx):
            raise ValueError(
                f"amps shape {arr.shape} does not match grid "
                f"({self.grid.ny}, {self.grid.nx})"
            )
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValueError("field amplitudes must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "amps", arr)

    def power(self) -> float:
        """Total ``sum(|psi|^2)`` over cells."""
        return float(np.sum(np.abs(self.amps) ** 2))

    def amp_sum(self) -> complex:
        """Sum of all amplitudes (the post-selection overlap, up to 1/sqrt(N))."""
        return complex(np.sum(self.amps))

    def with_amps(self, amps: np.ndarray) -> "TransverseWavefunction":
        return TransverseWavefunction(self.grid, amps)


class ModeKind(enum.Enum):
    GAUSSIAN = "gaussian"
    LAGUERRE_GAUSSIAN = "lg"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ModeSpec:
    """Parameters of a generated input mode.

    ``waist`` is the 1/e amplitude radius w0 in meters.  ``oam`` (azimuthal
    index l) and ``radial`` (index p) apply to LG modes only.  ``center`` is
    the mode center in meters relative to the grid center.  ``custom`` holds
    an explicit complex amplitude array for ``ModeKind.CUSTOM``.
    """

    kind: ModeKind
    waist: float
    oam: int = 0
    radial: int = 0
    center: tuple[float, float] = (0.0, 0.0)
    custom: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind is not ModeKind.CUSTOM:
            if not np.isfinite(self.waist) or self.waist <= 0:
                raise ValueError(f"waist must be positive and finite, got {self.waist}")
        if self.radial < 0:
            raise ValueError("radial index must be non-negative")
        if self.kind is ModeKind.CUSTOM and self.custom is None:
            raise ValueError("custom mode requires an explicit amplitude array")


def default_waist(grid: GridSpec) -> float:
    """Default beam waist: an eighth of the grid width, well resolved and contained."""
    return grid.nx * grid.pitch / 8.0


def make_mode(spec: ModeSpec, grid: GridSpec) -> TransverseWavefunction:
    """Generate a normalized mode on ``grid``.

    Gaussian: ``exp(-r^2 / w0^2)``.  Laguerre-Gaussian LG_{p,l}:
    ``(sqrt(2) r / w0)^|l| L_p^|l|(2 r^2 / w0^2) exp(-r^2 / w0^2) exp(i l phi)``.
    Both are normalized to unit cell-sum power afterwards, so analytic
    prefactors are irrelevant.
    """
    x, y = grid.mesh()
    cx, cy = spec.center
    xr = x - cx
    yr = y - cy

    if spec.kind is ModeKind.GAUSSIAN:
        amps = np.exp(-(xr**2 + yr**2) / spec.waist**2).astype(np.complex128)
    elif spec.kind is ModeKind.LAGUERRE_GAUSSIAN:
        r2 = xr**2 + yr**2
        r = np.sqrt(r2)
        phi = np.arctan2(yr, xr)
        la = abs(spec.oam)
        rho = 2.0 * r2 / spec.waist**2
        amps = (
            (np.sqrt(2.0) * r / spec.waist) ** la
            * eval_genlaguerre(spec.radial, la, rho)
            * np.exp(-r2 / spec.waist**2)
            * np.exp(1j * spec.oam * phi)
        )
    elif spec.kind is ModeKind.CUSTOM:
        amps = np.asarray(spec.custom, dtype=np.complex128)
    else:  # pragma: no cover
        raise ValueError(f"unknown mode kind {spec.kind}")

    return normalize(TransverseWavefunction(grid, amps))


def apply_vortex_plate(f: TransverseWavefunction, l: int) -> TransverseWavefunction:
    """Multiply by ``exp(i l phi)`` with phi the azimuthal angle about the grid center.

    The multiplier has unit modulus, so the total power is unchanged.
    """
    if l == 0:
        return f
    x, y = f.grid.mesh()
    return f.with_amps(f.amps * np.exp(1j * l * np.arctan2(y, x)))


def normalize(f: TransverseWavefunction) -> TransverseWavefunction:
    """Rescale to ``sum(|psi|^2) == 1``; phases are untouched."""
    p = f.power()
    if p <= 0.0:
        raise DegenerateFieldError("cannot normalize a zero field")
    return f.with_amps(f.amps / np.sqrt(p))


def phase_winding(phase: np.ndarray, radius: int,
                  center: tuple[float, float] | None = None) -> float:
    """Winding number of a phase map around ``center`` on a square loop.

    Walks the boundary of the axis-aligned square block of cells at loop
    index ``radius`` counterclockwise (x right, y up) and accumulates
    wrapped phase differences.  Returns total accumulated phase / 2 pi,
    which is an integer up to rounding whenever the phase map is smooth
    along the loop.  ``center`` is in (row, column) index units and
    defaults to the geometric grid center (half-integer on even grids).
    """
    ny, nx = phase.shape
    if center is None:
        center = ((ny - 1) / 2.0, (nx - 1) / 2.0)
    cy, cx = center
    if radius < 1:
        raise ValueError("loop radius must be >= 1")
    r0 = int(np.ceil(cy - radius))
    r1 = int(np.floor(cy + radius))
    c0 = int(np.ceil(cx - radius))
    c1 = int(np.floor(cx + radius))
    if r0 < 0 or c0 < 0 or r1 >= ny or c1 >= nx:
        raise ValueError(f"loop of radius {radius} does not fit inside the grid")

    rows, cols = [], []
    # bottom edge left->right, right edge bottom->top, top edge right->left,
    # left edge top->bottom (counterclockwise with y increasing upward)
    for c in range(c0, c1 + 1):
        rows.append(r0); cols.append(c)
    for r in range(r0 + 1, r1 + 1):
        rows.append(r); cols.append(c1)
    for c in range(c1 - 1, c0 - 1, -1):
        rows.append(r1); cols.append(c)
    for r in range(r1 - 1, r0, -1):
        rows.append(r); cols.append(c0)

    vals = phase[rows, cols]
    diffs = np.diff(np.concatenate([vals, vals[:1]]))
    wrapped = (diffs + np.pi) % (2.0 * np.pi) - np.pi
    return float(np.sum(wrapped) / (2.0 * np.pi))


# ---------------------------------------------------------------------------
# WFGRID container: "WFG1", u32 nx, u32 ny, f64 pitch, then nx*ny (re, im)
# f64 pairs row-major (y outer, x inner).  All little-endian.
# ---------------------------------------------------------------------------

_WFGRID_MAGIC = b"WFG1"
_WFGRID_HEADER = struct.Struct("<4sIId")


def write_wfgrid(path, f: TransverseWavefunction) -> None:
    payload = np.empty((f.grid.ny, f.grid.nx, 2), dtype="<f8")
    payload[..., 0] = f.amps.real
    payload[..., 1] = f.amps.imag
    with open(path, "wb") as fh:
        fh.write(_WFGRID_HEADER.pack(_WFGRID_MAGIC, f.grid.nx, f.grid.ny, f.grid.pitch))
        fh.write(payload.tobytes())


def read_wfgrid(path) -> TransverseWavefunction:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _WFGRID_HEADER.size:
        raise FileFormatError(f"{path}: truncated WFGRID header")
    magic, nx, ny, pitch = _WFGRID_HEADER.unpack_from(raw)
    if magic != _WFGRID_MAGIC:
        raise FileFormatError(f"{path}: bad magic {magic!r}, expected {_WFGRID_MAGIC!r}")
    expected = _WFGRID_HEADER.size + nx * ny * 16
    if len(raw) != expected:
        raise FileFormatError(
            f"{path}: payload is {len(raw)} bytes, expected {expected} for {nx}x{ny}"
        )
    try:
        grid = GridSpec(int(nx), int(ny), float(pitch))
    except ValueError as exc:
        raise FileFormatError(f"{path}: invalid grid header: {exc}") from exc
    flat = np.frombuffer(raw, dtype="<f8", offset=_WFGRID_HEADER.size)
    amps = flat[0::2] + 1j * flat[1::2]
    return TransverseWavefunction(grid, amps.reshape(ny, nx))
