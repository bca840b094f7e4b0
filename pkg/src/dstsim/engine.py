"""Cell-wise strong pointer coupling, zero-momentum post-selection, and readout.

The measurement at one scan cell couples the field to a polarization
pointer prepared in |0> = (|H>+|V>)/sqrt(2) by the unitary
``exp(-i theta |cell><cell| x sigma_y)`` and then post-selects the field on
the flat zero-transverse-momentum state ``|p0> = sum_xy |x,y> / sqrt(N)``
with ``N = nx * ny``.  Because the coupling projector is idempotent the
matrix exponential collapses to a closed form, and the unnormalized
post-selected pointer is

    a0 = (ptilde - (1 - cos theta) * psi(cell)) / sqrt(N)
    a1 = sin(theta) * psi(cell) / sqrt(N)

where ``ptilde = sum psi(x, y)``.  The global phase is fixed beforehand so
that ptilde is real and positive; the quadrature-extraction formulas in
:mod:`dstsim.reconstruct` assume exactly that gauge.  At theta = pi/2 this
reduces to a0 = (ptilde - psi)/sqrt(N), a1 = psi/sqrt(N).
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFieldError, FileFormatError
from .wavefield import TransverseWavefunction

_PSI_TILDE_MIN = 1e-12


class Projector(enum.Enum):
    """The six pointer projectors read out per cell.

    |+/-> = (|0> +/- |1>)/sqrt(2), |L> = (|0> + i|1>)/sqrt(2),
    |R> = (|0> - i|1>)/sqrt(2).
    """

    P0 = "0"
    P1 = "1"
    PLUS = "plus"
    MINUS = "minus"
    LEFT = "L"
    RIGHT = "R"


#: Measurement bases in the fixed order used for sampling and CSV columns.
BASIS_PAIRS: tuple[tuple[Projector, Projector], ...] = (
    (Projector.PLUS, Projector.MINUS),
    (Projector.P0, Projector.P1),
    (Projector.LEFT, Projector.RIGHT),
)


class CouplingMode(enum.Enum):
    STRONG_EXACT = "strong"
    WEAK_FIRST_ORDER = "weak"


@dataclass(frozen=True)
class CouplingConfig:
    """Coupling angle and which estimator the records are destined for.

    The simulated physics is exact for any theta; ``mode`` only tags whether
    downstream reconstruction uses the exact strong-coupling inversion or
    the first-order weak-value formulas.
    """

    theta: float = math.pi / 2
    mode: CouplingMode = CouplingMode.STRONG_EXACT

    def __post_init__(self):
        if not (0.0 < self.theta <= math.pi / 2 + 1e-12):
            raise ValueError(f"theta must be in (0, pi/2], got {self.theta}")


@dataclass(frozen=True)
class PointerState:
    """Two-component pointer amplitudes on {|0>, |1>}; may be unnormalized.

    Post-selected pointers carry physical norm: |a0|^2 + |a1|^2 equals the
    post-selection probability of the cell's measurement.
    """

    a0: complex
    a1: complex

    @property
    def norm_sq(self) -> float:
        return abs(self.a0) ** 2 + abs(self.a1) ** 2

    def normalized(self) -> "PointerState":
        n = math.sqrt(self.norm_sq)
        if n == 0.0:
            raise DegenerateFieldError("cannot normalize a zero pointer state")
        return PointerState(self.a0 / n, self.a1 / n)


@dataclass
class ReadoutRecord:
    """Per-cell readout: exact projector probabilities and optional counts.

    Probabilities are unnormalized by post-selection: each basis pair sums
    to the post-selection weight of the cell, not to one.  ``counts`` is
    None for noiseless records (``photons_per_setting == 0``).
    """

    cell: tuple[int, int]
    probs: dict[Projector, float]
    counts: dict[Projector, int] | None = None
    photons_per_setting: int = 0


def gauge_fix(f: TransverseWavefunction) -> tuple[TransverseWavefunction, float]:
    """Rotate the global phase so the amplitude sum is real and positive.

    Returns the gauged field and ptilde = |sum psi|.  Raises
    :class:`DegenerateFieldError` when the sum vanishes, since such a field
    never passes zero-momentum post-selection.
    """
    s = f.amp_sum()
    mag = abs(s)
    if mag < _PSI_TILDE_MIN:
        raise DegenerateFieldError(
            f"amplitude sum is {mag:.3e}; zero-momentum post-selection is impossible"
        )
    if s.imag == 0.0 and s.real > 0.0:
        return f, mag
    return f.with_amps(f.amps * (mag / s)), mag


def _check_cell(f: TransverseWavefunction, cell: tuple[int, int]) -> None:
    ix, iy = cell
    if not (0 <= ix < f.grid.nx and 0 <= iy < f.grid.ny):
        raise ValueError(f"cell {cell} outside {f.grid.nx}x{f.grid.ny} grid")


def _require_normalized(f: TransverseWavefunction) -> None:
    if abs(f.power() - 1.0) > 1e-9:
        raise ValueError("input field must be normalized (power within 1e-9 of 1)")


def couple_and_postselect(
    f: TransverseWavefunction, cell: tuple[int, int], cfg: CouplingConfig
) -> PointerState:
    """Unnormalized pointer state after coupling at ``cell`` and post-selection.

    Applies the ptilde-real-positive gauge to the field internally, so the
    result is invariant under any global phase on the input.
    """
    _check_cell(f, cell)
    _require_normalized(f)
    g, ptilde = gauge_fix(f)
    ix, iy = cell
    psi_c = complex(g.amps[iy, ix])
    root_n = math.sqrt(g.grid.ncells)
    a0 = (ptilde - (1.0 - math.cos(cfg.theta)) * psi_c) / root_n
    a1 = math.sin(cfg.theta) * psi_c / root_n
    return PointerState(a0, a1)


def dwt_pointer(f: TransverseWavefunction, cell: tuple[int, int], theta: float) -> PointerState:
    """Post-selected pointer for a weak-tomography run at coupling ``theta``.

    The physics is the same exact closed form as
    :func:`couple_and_postselect`; only the downstream reconstruction
    formulas differ between the strong and weak estimators, so weak-mode
    bias can be measured against the exact ground truth.
    """
    return couple_and_postselect(f, cell, CouplingConfig(theta, CouplingMode.WEAK_FIRST_ORDER))


def readout_probs(p: PointerState) -> dict[Projector, float]:
    """Exact probabilities of the six projectors for an unnormalized pointer."""
    a0, a1 = complex(p.a0), complex(p.a1)
    if not (math.isfinite(a0.real) and math.isfinite(a0.imag)
            and math.isfinite(a1.real) and math.isfinite(a1.imag)):
        raise ValueError("pointer amplitudes must be finite")
    return {
        Projector.P0: abs(a0) ** 2,
        Projector.P1: abs(a1) ** 2,
        Projector.PLUS: abs(a0 + a1) ** 2 / 2.0,
        Projector.MINUS: abs(a0 - a1) ** 2 / 2.0,
        Projector.LEFT: abs(a0 - 1j * a1) ** 2 / 2.0,
        Projector.RIGHT: abs(a0 + 1j * a1) ** 2 / 2.0,
    }


def cell_rng(seed: int, ix: int, iy: int) -> np.random.Generator:
    """Counter-based stream for one scan cell, independent of execution order.

    Streams are keyed by (seed, iy, ix), so a full scan and a single-cell
    resample agree bit for bit and the scan may be parallelized over cells
    without changing results.
    """
    key = ((int(seed) & 0xFFFFFFFFFFFFFFFF) << 64) | ((int(iy) & 0xFFFFFFFF) << 32) | (int(ix) & 0xFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))


def _sample_with_rng(
    probs: dict[Projector, float], photons_per_setting: int, rng: np.random.Generator
) -> dict[Projector, int]:
    counts: dict[Projector, int] = {}
    for proj_a, proj_b in BASIS_PAIRS:
        pa, pb = probs[proj_a], probs[proj_b]
        weight = pa + pb
        detected = int(rng.poisson(photons_per_setting * weight)) if weight > 0 else 0
        na = int(rng.binomial(detected, pa / weight)) if detected > 0 else 0
        counts[proj_a] = na
        counts[proj_b] = detected - na
    return counts


def sample_counts(
    probs: dict[Projector, float],
    photons_per_setting: int,
    seed: int,
    cell: tuple[int, int] = (0, 0),
) -> dict[Projector, int]:
    """Photon counts for the three basis settings at one cell.

    Each basis receives an independent ensemble of ``photons_per_setting``
    photons; the number that survives post-selection is Poisson with mean
    ``photons_per_setting * (pair weight)`` and is split binomially between
    the two projectors of the basis.  Deterministic given (seed, cell).
    """
    if photons_per_setting < 0:
        raise ValueError("photons_per_setting must be >= 0")
    if photons_per_setting == 0:
        return {proj: 0 for pair in BASIS_PAIRS for proj in pair}
    return _sample_with_rng(probs, photons_per_setting, cell_rng(seed, *cell))


def scan_probability_maps(
    f: TransverseWavefunction, cfg: CouplingConfig
) -> tuple[dict[Projector, np.ndarray], float]:
    """Exact probability maps for every cell at once.

    Returns ``(maps, ptilde)`` where each map is a ``(ny, nx)`` array equal
    to what :func:`readout_probs` of :func:`couple_and_postselect` gives at
    that cell.
    """
    _require_normalized(f)
    g, ptilde = gauge_fix(f)
    root_n = math.sqrt(g.grid.ncells)
    a0 = (ptilde - (1.0 - math.cos(cfg.theta)) * g.amps) / root_n
    a1 = math.sin(cfg.theta) * g.amps / root_n
    return {
        Projector.P0: np.abs(a0) ** 2,
        Projector.P1: np.abs(a1) ** 2,
        Projector.PLUS: np.abs(a0 + a1) ** 2 / 2.0,
        Projector.MINUS: np.abs(a0 - a1) ** 2 / 2.0,
        Projector.LEFT: np.abs(a0 - 1j * a1) ** 2 / 2.0,
        Projector.RIGHT: np.abs(a0 + 1j * a1) ** 2 / 2.0,
    }, ptilde


def scan(
    f: TransverseWavefunction,
    cfg: CouplingConfig,
    photons_per_setting: int = 0,
    seed: int = 0,
) -> list[ReadoutRecord]:
    """Measure every grid cell; one record per cell in row-major order.

    Each cell is measured on a fresh photon ensemble, so records are
    statistically independent.  With ``photons_per_setting == 0`` the
    records carry exact probabilities only.
    """
    if photons_per_setting < 0:
        raise ValueError("photons_per_setting must be >= 0")
    maps, _ = scan_probability_maps(f, cfg)
    records: list[ReadoutRecord] = []
    for iy in range(f.grid.ny):
        for ix in range(f.grid.nx):
            probs = {proj: float(maps[proj][iy, ix]) for proj in Projector}
            counts = None
            if photons_per_setting > 0:
                counts = _sample_with_rng(probs, photons_per_setting, cell_rng(seed, ix, iy))
            records.append(ReadoutRecord((ix, iy), probs, counts, photons_per_setting))
    return records


# ---------------------------------------------------------------------------
# Records CSV
# ---------------------------------------------------------------------------

_CSV_HEADER = [
    "ix", "iy",
    "w_plus", "w_minus", "w_0", "w_1", "w_L", "w_R",
    "n_plus", "n_minus", "n_0", "n_1", "n_L", "n_R",
    "budget",
]
_CSV_PROJ_ORDER = [
    Projector.PLUS, Projector.MINUS, Projector.P0,
    Projector.P1, Projector.LEFT, Projector.RIGHT,
]


def write_records_csv(records: list[ReadoutRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for rec in records:
            row = [str(rec.cell[0]), str(rec.cell[1])]
            row += [f"{rec.probs[p]:.17g}" for p in _CSV_PROJ_ORDER]
            if rec.counts is None:
                row += [""] * 6
            else:
                row += [str(rec.counts[p]) for p in _CSV_PROJ_ORDER]
            row.append(str(rec.photons_per_setting))
            writer.writerow(row)


def read_records_csv(path) -> list[ReadoutRecord]:
    records: list[ReadoutRecord] = []
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FileFormatError(f"{path}: empty records file") from None
        if header != _CSV_HEADER:
            raise FileFormatError(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(_CSV_HEADER):
                raise FileFormatError(f"{path}:{lineno}: expected {len(_CSV_HEADER)} fields")
            try:
                ix, iy = int(row[0]), int(row[1])
                probs = {p: float(row[2 + i]) for i, p in enumerate(_CSV_PROJ_ORDER)}
                count_fields = row[8:14]
                budget = int(row[14])
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
            if not all(math.isfinite(v) for v in probs.values()):
                raise FileFormatError(f"{path}:{lineno}: non-finite probability")
            if all(c == "" for c in count_fields):
                counts = None
            elif any(c == "" for c in count_fields):
                raise FileFormatError(f"{path}:{lineno}: partial counts row")
            else:
                try:
                    counts = {p: int(count_fields[i]) for i, p in enumerate(_CSV_PROJ_ORDER)}
                except ValueError as exc:
                    raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
            records.append(ReadoutRecord((ix, iy), probs, counts, budget))
    return records
