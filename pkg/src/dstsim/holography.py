"""Free-space propagation by FFT convolution, and object reconstruction.

Two point-spread kernels are supported for forward propagation over a
distance D:

    spherical (exact scalar):  K(dx, dy) = (1 / i lambda) * exp(i k r) / r,
                               r = sqrt(dx^2 + dy^2 + D^2)
    paraxial (Fresnel):        K(dx, dy) = exp(i k D) / (i lambda D)
                               * exp(i k (dx^2 + dy^2) / (2 D))

The paraxial kernel has a closed-form inverse,

    L(dx, dy) = exp(-i k D) / (-i lambda D) * exp(-i k (dx^2+dy^2) / (2 D)),

used for back-propagation from the detection plane to the object plane.
Convolutions are evaluated on a zero-padded grid (at least 2x per axis) so
they are linear, not circular, over all offsets that connect input cells to
output cells; the result is cropped back to the input grid and scaled by
pitch^2 to discretize the propagation integral.

Both kernels are quadratic-phase-like at the grid scale, so sampling them
on too coarse a grid aliases silently.  Propagation therefore refuses to
run unless the kernel's local spatial frequency at the largest relevant
offset (one full grid extent per axis) stays below Nyquist:
``|d phase / dx| * pitch <= pi``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFieldError, FileFormatError, SamplingGuardError
from .wavefield import GridSpec, TransverseWavefunction

#: Paraxial validity heuristic: distance at least this many grid extents.
PARAXIAL_MIN_EXTENTS = 10.0


class PropagationKernel(enum.Enum):
    FEYNMAN_EXACT = "feynman"
    FRESNEL_PARAXIAL = "fresnel"


@dataclass(frozen=True)
class PropagationSpec:
    """Wavelength, propagation distance and kernel choice."""

    wavelength: float
    distance: float
    kernel: PropagationKernel = PropagationKernel.FRESNEL_PARAXIAL

    def __post_init__(self):
        if not np.isfinite(self.wavelength) or self.wavelength <= 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if not np.isfinite(self.distance) or self.distance <= 0:
            raise ValueError(f"distance must be positive, got {self.distance}")

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength


def _check_guards(grid: GridSpec, spec: PropagationSpec) -> None:
    k = spec.wavenumber
    d = spec.distance
    for n in (grid.nx, grid.ny):
        dmax = n * grid.pitch  # largest in-cell to out-cell offset per axis
        if spec.kernel is PropagationKernel.FRESNEL_PARAXIAL:
            slope = k * dmax / d
        else:
            slope = k * dmax / math.hypot(dmax, d)
        if slope * grid.pitch > math.pi:
            raise SamplingGuardError(
                f"kernel local frequency {slope * grid.pitch / math.pi:.2f} x Nyquist "
                f"at offset {dmax:.3e} m; increase distance or refine the grid"
            )
    if spec.kernel is PropagationKernel.FRESNEL_PARAXIAL:
        if d < PARAXIAL_MIN_EXTENTS * grid.extent:
            raise SamplingGuardError(
                f"paraxial kernel needs distance >= {PARAXIAL_MIN_EXTENTS:g} x grid extent "
                f"({PARAXIAL_MIN_EXTENTS * grid.extent:.3e} m), got {d:.3e} m"
            )


def _offset_grids(grid: GridSpec, pad_factor: int) -> tuple[np.ndarray, np.ndarray]:
    px = grid.nx * pad_factor
    py = grid.ny * pad_factor
    dx = np.fft.fftfreq(px, 1.0 / px) * grid.pitch
    dy = np.fft.fftfreq(py, 1.0 / py) * grid.pitch
    return dx[None, :], dy[:, None]


def _kernel_array(grid: GridSpec, spec: PropagationSpec, pad_factor: int,
                  inverse: bool) -> np.ndarray:
    dx, dy = _offset_grids(grid, pad_factor)
    k = spec.wavenumber
    d = spec.distance
    lam = spec.wavelength
    rho2 = dx**2 + dy**2
    if spec.kernel is PropagationKernel.FEYNMAN_EXACT:
        r = np.sqrt(rho2 + d * d)
        return np.exp(1j * k * r) / (1j * lam * r)
    if inverse:
        return np.exp(-1j * k * d) / (-1j * lam * d) * np.exp(-1j * k * rho2 / (2.0 * d))
    return np.exp(1j * k * d) / (1j * lam * d) * np.exp(1j * k * rho2 / (2.0 * d))


def _convolve(f: TransverseWavefunction, spec: PropagationSpec, pad_factor: int,
              inverse: bool) -> TransverseWavefunction:
    if not isinstance(pad_factor, (int, np.integer)) or pad_factor < 2:
        raise ValueError(f"pad_factor must be an integer >= 2, got {pad_factor}")
    _check_guards(f.grid, spec)
    grid = f.grid
    buf = np.zeros((grid.ny * pad_factor, grid.nx * pad_factor), dtype=np.complex128)
    buf[: grid.ny, : grid.nx] = f.amps
    kern = _kernel_array(grid, spec, pad_factor, inverse)
    out = np.fft.ifft2(np.fft.fft2(buf) * np.fft.fft2(kern)) * grid.pitch**2
    return TransverseWavefunction(grid, out[: grid.ny, : grid.nx])


def propagate_forward(
    f: TransverseWavefunction, spec: PropagationSpec, pad_factor: int = 2
) -> TransverseWavefunction:
    """Propagate from the source plane a distance ``spec.distance`` forward."""
    return _convolve(f, spec, pad_factor, inverse=False)


def propagate_inverse(
    f_d: TransverseWavefunction, spec: PropagationSpec, pad_factor: int = 2
) -> TransverseWavefunction:
    """Back-propagate a detection-plane field to the source plane.

    Only the paraxial kernel has a closed-form inverse; the spherical
    kernel is rejected.
    """
    if spec.kernel is not PropagationKernel.FRESNEL_PARAXIAL:
        raise ValueError("inverse propagation is defined for the paraxial kernel only")
    return _convolve(f_d, spec, pad_factor, inverse=True)


@dataclass(frozen=True)
class ObjectReconstruction:
    """Complex transmission estimate and where it is trustworthy.

    ``transmission_map`` holds measured-over-illumination ratios on cells
    where ``validity_mask`` is True and zeros elsewhere (the division is
    numerically meaningless below the illumination threshold).
    """

    transmission_map: np.ndarray
    validity_mask: np.ndarray


def reconstruct_object(
    measured_d: TransverseWavefunction,
    known_input: TransverseWavefunction,
    spec: PropagationSpec,
    threshold: float = 1e-3,
    pad_factor: int = 2,
) -> ObjectReconstruction:
    """Estimate the object's complex transmission from a measured far field.

    Back-propagates the measured detection-plane field to the object plane
    and divides by the known illumination, on cells where the illumination
    amplitude is at least ``threshold`` times its maximum.  The object and
    illumination planes coincide (thin object), so the true transmitted
    field is ``t * known_input``.
    """
    if measured_d.grid != known_input.grid:
        raise ValueError("measured and known-input grids differ")
    back = propagate_inverse(measured_d, spec, pad_factor)
    mag = np.abs(known_input.amps)
    mask = mag >= threshold * mag.max()
    if not mask.any():
        raise DegenerateFieldError("validity mask is empty; illumination too weak")
    t = np.zeros_like(back.amps)
    t[mask] = back.amps[mask] / known_input.amps[mask]
    return ObjectReconstruction(t, mask)


# ---------------------------------------------------------------------------
# PGM (P5) object masks
# ---------------------------------------------------------------------------

def read_pgm(path) -> np.ndarray:
    """Read an 8-bit binary PGM (P5) file into a (rows, cols) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise FileFormatError(f"{path}: not a P5 PGM file")
    # header tokens: magic, width, height, maxval; '#' comments run to EOL
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3 and pos < len(data):
        ch = data[pos:pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            eol = data.find(b"\n", pos)
            pos = len(data) if eol < 0 else eol + 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    if len(tokens) < 3 or pos >= len(data):
        raise FileFormatError(f"{path}: truncated PGM header")
    pos += 1  # single whitespace byte after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise FileFormatError(f"{path}: malformed PGM header") from exc
    if maxval != 255:
        raise FileFormatError(f"{path}: only 8-bit PGM supported, maxval={maxval}")
    if len(data) - pos != width * height:
        raise FileFormatError(f"{path}: expected {width * height} pixels, got {len(data) - pos}")
    return np.frombuffer(data, dtype=np.uint8, offset=pos).reshape(height, width)


def object_from_pgm(img: np.ndarray, mapping: str = "amplitude") -> np.ndarray:
    """Map 8-bit grayscale to a complex transmission array.

    ``amplitude``: linear to [0, 1].  ``phase``: linear to [0, 2 pi) with
    unit modulus.
    """
    levels = np.asarray(img, dtype=np.float64)
    if mapping == "amplitude":
        return (levels / 255.0).astype(np.complex128)
    if mapping == "phase":
        return np.exp(1j * levels * (2.0 * np.pi / 256.0))
    raise ValueError(f"mapping must be 'amplitude' or 'phase', got {mapping!r}")


def apply_object(f: TransverseWavefunction, transmission: np.ndarray) -> TransverseWavefunction:
    """Transmit a field through a thin object: pointwise multiply."""
    t = np.asarray(transmission)
    if t.shape != f.amps.shape:
        raise ValueError(f"object shape {t.shape} does not match field {f.amps.shape}")
    return f.with_amps(f.amps * t)
