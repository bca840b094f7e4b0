"""Turn readout records into Re/Im/density/phase maps and score them.

Strong-coupling (exact) inversion, valid for records taken at theta = pi/2:

    Re psi = (N / 2 ptilde) * (P_plus + 2 P_1 - P_minus)
    Im psi = (N / 2 ptilde) * (P_L - P_R)

Weak-value (first order in theta) inversion, applied to records taken at
any coupling theta:

    Re psi ~ (N / 2 ptilde) * (P_plus - P_minus) / theta
    Im psi ~ (N / 2 ptilde) * (P_L - P_R) / theta

Both assume the ptilde-real-positive gauge the engine enforces.  The strong
form is an identity, so noiseless records invert exactly; the weak form
carries an O(theta) relative bias that vanishes only in the weak limit.

When ptilde is not supplied it is estimated self-consistently from the raw
quadrature maps by requiring the reconstructed density to sum to one,
which is the physical normalization of the field:  with r = u + i v the
raw maps, ptilde_est = N * sqrt(sum |r|^2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFieldError
from .wavefield import GridSpec, TransverseWavefunction, write_wfgrid
from .engine import Projector, ReadoutRecord

_DST = "DST"
_DWT = "DWT"


@dataclass(frozen=True)
class ReconstructionResult:
    """Reconstructed field maps plus the gauge constant that scaled them.

    ``density_map`` is exactly ``re_map**2 + im_map**2`` and ``phase_map``
    is ``atan2(im_map, re_map)`` folded into (-pi, pi].  ``zero_count_mask``
    marks cells where some measurement basis registered no photons at all
    (their frequencies enter as zero rather than being dropped); it is None
    for noiseless reconstructions.
    """

    grid: GridSpec
    re_map: np.ndarray
    im_map: np.ndarray
    density_map: np.ndarray
    phase_map: np.ndarray
    psi_tilde: float
    mode: str
    zero_count_mask: np.ndarray | None = None

    def field(self) -> TransverseWavefunction:
        return TransverseWavefunction(self.grid, self.re_map + 1j * self.im_map)

    @classmethod
    def from_field(cls, f: TransverseWavefunction, mode: str = _DST) -> "ReconstructionResult":
        """Wrap an existing field (e.g. loaded from disk) as a result."""
        re_map = np.ascontiguousarray(f.amps.real)
        im_map = np.ascontiguousarray(f.amps.imag)
        phase = np.arctan2(im_map, re_map)
        return cls(f.grid, re_map, im_map, re_map**2 + im_map**2,
                   np.where(phase <= -np.pi, np.pi, phase),
                   float(abs(f.amp_sum())), mode)


@dataclass(frozen=True)
class QualityReport:
    r_square: float
    fidelity: float
    rmse_re: float
    rmse_im: float

    def to_dict(self) -> dict:
        return {
            "r_square": self.r_square,
            "fidelity": self.fidelity,
            "rmse_re": self.rmse_re,
            "rmse_im": self.rmse_im,
        }


def _effective_prob_maps(
    records: list[ReadoutRecord], grid: GridSpec
) -> tuple[dict[Projector, np.ndarray], np.ndarray | None]:
    """Per-projector maps of probabilities or empirical frequencies.

    Sampled records contribute count/budget, which estimates the
    unnormalized projector probability directly (the per-basis frequency
    times the sampled post-selection weight).  Noiseless records contribute
    their exact probabilities, so both paths share the inversion code.
    """
    if len(records) != grid.ncells:
        raise ValueError(f"need {grid.ncells} records, got {len(records)}")
    maps = {p: np.full((grid.ny, grid.nx), np.nan) for p in Projector}
    zero_mask = np.zeros((grid.ny, grid.nx), dtype=bool)
    any_counts = False
    for rec in records:
        ix, iy = rec.cell
        if not (0 <= ix < grid.nx and 0 <= iy < grid.ny):
            raise ValueError(f"record cell {rec.cell} outside {grid.nx}x{grid.ny} grid")
        if not np.isnan(maps[Projector.P0][iy, ix]):
            raise ValueError(f"duplicate record for cell {rec.cell}")
        if rec.counts is not None and rec.photons_per_setting > 0:
            any_counts = True
            budget = rec.photons_per_setting
            for p in Projector:
                maps[p][iy, ix] = rec.counts[p] / budget
            zero_mask[iy, ix] = any(
                rec.counts[a] + rec.counts[b] == 0 for a, b in
                ((Projector.PLUS, Projector.MINUS), (Projector.P0, Projector.P1),
                 (Projector.LEFT, Projector.RIGHT))
            )
        else:
            for p in Projector:
                maps[p][iy, ix] = rec.probs[p]
    for p in Projector:
        if np.isnan(maps[p]).any():
            raise ValueError("records do not cover every grid cell")
        if not np.all(np.isfinite(maps[p])):
            raise ValueError("non-finite frequencies in records")
    return maps, (zero_mask if any_counts else None)


def _assemble(
    grid: GridSpec,
    raw: np.ndarray,
    psi_tilde: float | None,
    mode: str,
    zero_mask: np.ndarray | None,
) -> ReconstructionResult:
    """Scale raw quadrature maps (r = ptilde * psi / N, noiseless) to a field."""
    n = grid.ncells
    if psi_tilde is None:
        s = float(np.sqrt(np.sum(np.abs(raw) ** 2)))
        if s <= 0.0:
            raise DegenerateFieldError("raw quadrature maps vanish; cannot fix the scale")
        psi_tilde = n * s
        scaled = raw / s
    else:
        if not np.isfinite(psi_tilde) or psi_tilde <= 0.0:
            raise ValueError(f"psi_tilde must be positive, got {psi_tilde}")
        scaled = raw * (n / psi_tilde)
    re_map = np.ascontiguousarray(scaled.real)
    im_map = np.ascontiguousarray(scaled.imag)
    density = re_map**2 + im_map**2
    phase = np.arctan2(im_map, re_map)
    phase = np.where(phase <= -np.pi, np.pi, phase)
    return ReconstructionResult(grid, re_map, im_map, density, phase,
                                float(psi_tilde), mode, zero_mask)


def reconstruct_dst(
    records: list[ReadoutRecord],
    grid: GridSpec,
    psi_tilde: float | None = None,
) -> ReconstructionResult:
    """Exact strong-coupling inversion of a full scan.

    ``psi_tilde`` supplies the gauge constant when known (oracle mode);
    otherwise it is estimated self-consistently from normalization.
    Noiseless records at theta = pi/2 invert to the gauge-fixed input field
    up to floating-point rounding.
    """
    maps, zero_mask = _effective_prob_maps(records, grid)
    u = (maps[Projector.PLUS] + 2.0 * maps[Projector.P1] - maps[Projector.MINUS]) / 2.0
    v = (maps[Projector.LEFT] - maps[Projector.RIGHT]) / 2.0
    return _assemble(grid, u + 1j * v, psi_tilde, _DST, zero_mask)


def reconstruct_dwt(
    records: list[ReadoutRecord],
    grid: GridSpec,
    theta: float,
    psi_tilde: float | None = None,
) -> ReconstructionResult:
    """First-order weak-value inversion of records taken at coupling ``theta``.

    The estimate carries the weak-measurement bias: exact records at finite
    theta reconstruct to ``psi - (1 - cos theta) |psi|^2 / ptilde`` up to an
    overall scale, so the bias grows with theta and the density map is
    visibly distorted at theta = pi/2.
    """
    if not (0.0 < theta <= np.pi / 2 + 1e-12):
        raise ValueError(f"theta must be in (0, pi/2], got {theta}")
    maps, zero_mask = _effective_prob_maps(records, grid)
    u = (maps[Projector.PLUS] - maps[Projector.MINUS]) / (2.0 * theta)
    v = (maps[Projector.LEFT] - maps[Projector.RIGHT]) / (2.0 * theta)
    return _assemble(grid, u + 1j * v, psi_tilde, _DWT, zero_mask)


def fidelity(a: TransverseWavefunction, b: TransverseWavefunction) -> float:
    """|<a|b>|^2 after normalizing both fields; invariant to global phases."""
    va = a.amps.ravel()
    vb = b.amps.ravel()
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise DegenerateFieldError("fidelity of a zero field is undefined")
    return float(abs(np.vdot(va, vb)) ** 2 / (na**2 * nb**2))


def score(rec: ReconstructionResult, ideal: TransverseWavefunction) -> QualityReport:
    """Quality of a reconstruction against a known ideal field.

    r_square is the coefficient of determination between the reconstructed
    density map (the data) and the ideal probability density (the model):
    ``1 - SS_res / SS_tot`` with SS_tot about the data mean.  RMS errors of
    the Re/Im maps are taken against the gauge-fixed, normalized ideal.
    """
    if rec.grid != ideal.grid:
        raise ValueError("reconstruction and ideal grids differ")
    power = ideal.power()
    if power <= 0.0:
        raise DegenerateFieldError("ideal field has zero power")
    amps = ideal.amps / np.sqrt(power)
    s = amps.sum()
    if abs(s) > 0.0:
        amps = amps * (abs(s) / s)

    ideal_density = np.abs(amps) ** 2
    data = rec.density_map
    ss_res = float(np.sum((data - ideal_density) ** 2))
    ss_tot = float(np.sum((data - data.mean()) ** 2))
    r_square = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else (1.0 if ss_res == 0.0 else -np.inf)

    fid = fidelity(TransverseWavefunction(ideal.grid, amps), rec.field())
    rmse_re = float(np.sqrt(np.mean((rec.re_map - amps.real) ** 2)))
    rmse_im = float(np.sqrt(np.mean((rec.im_map - amps.imag) ** 2)))
    return QualityReport(r_square, fid, rmse_re, rmse_im)


def sidecar_dict(res: ReconstructionResult, report: QualityReport | None = None) -> dict:
    return {
        "psi_tilde": res.psi_tilde,
        "mode": res.mode,
        "r_square": report.r_square if report is not None else None,
        "fidelity": report.fidelity if report is not None else None,
    }


def write_result(
    res: ReconstructionResult,
    wfgrid_path,
    sidecar_path,
    report: QualityReport | None = None,
) -> None:
    """Persist a reconstruction as WFGRID plus a JSON sidecar."""
    write_wfgrid(wfgrid_path, res.field())
    with open(sidecar_path, "w") as fh:
        json.dump(sidecar_dict(res, report), fh, indent=2, sort_keys=True)
        fh.write("\n")
