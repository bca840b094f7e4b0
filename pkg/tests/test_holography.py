import numpy as np
import pytest

from dstsim import (
    DegenerateFieldError,
    FileFormatError,
    GridSpec,
    ModeKind,
    ModeSpec,
    PropagationKernel,
    PropagationSpec,
    SamplingGuardError,
    TransverseWavefunction,
    apply_object,
    make_mode,
    normalize,
    object_from_pgm,
    propagate_forward,
    propagate_inverse,
    read_pgm,
    reconstruct_object,
)
from oracles import gaussian_beam_at_distance

LAM = 808e-9

# 64x64 grid at 3 um pitch: spherical and paraxial kernels are both cleanly
# sampled for distances of a few millimeters
GRID64 = GridSpec(64, 64, 3e-6)
D64 = 2.5e-3
FRESNEL64 = PropagationSpec(LAM, D64, PropagationKernel.FRESNEL_PARAXIAL)
FEYNMAN64 = PropagationSpec(LAM, D64, PropagationKernel.FEYNMAN_EXACT)


def gaussian_on(grid, waist_cells=8.0):
    return make_mode(ModeSpec(ModeKind.GAUSSIAN, waist=waist_cells * grid.pitch), grid)


class TestPropagationSpec:
    def test_wavenumber(self):
        spec = PropagationSpec(500e-9, 1e-3)
        assert spec.wavenumber == pytest.approx(2 * np.pi / 500e-9)

    @pytest.mark.parametrize("lam,d", [(0.0, 1e-3), (500e-9, 0.0), (-1e-9, 1e-3)])
    def test_invalid(self, lam, d):
        with pytest.raises(ValueError):
            PropagationSpec(lam, d)


class TestKernelSampling:
    def test_point_source_reproduces_kernel(self):
        # convolution with a delta sifts out sampled kernel values
        amps = np.zeros((64, 64), complex)
        amps[20, 30] = 1.0
        f = TransverseWavefunction(GRID64, amps)
        out = propagate_forward(f, FEYNMAN64, pad_factor=2)
        k = FEYNMAN64.wavenumber
        for iy, ix in [(20, 30), (10, 50), (63, 0)]:
            dx = (ix - 30) * GRID64.pitch
            dy = (iy - 20) * GRID64.pitch
            r = np.sqrt(dx**2 + dy**2 + D64**2)
            expected = np.exp(1j * k * r) / (1j * LAM * r) * GRID64.pitch**2
            assert out.amps[iy, ix] == pytest.approx(expected, rel=1e-12)

    def test_nyquist_guard_trips(self):
        # coarse pitch at short distance: quadratic kernel phase aliases
        grid = GridSpec(64, 64, 125e-6)
        f = gaussian_on(grid)
        with pytest.raises(SamplingGuardError):
            propagate_forward(f, PropagationSpec(LAM, 0.2, PropagationKernel.FRESNEL_PARAXIAL))

    def test_paraxial_guard_trips(self):
        f = gaussian_on(GRID64)
        # Nyquist-clean but closer than 10 grid extents
        spec = PropagationSpec(LAM, 1.6e-3, PropagationKernel.FRESNEL_PARAXIAL)
        with pytest.raises(SamplingGuardError):
            propagate_forward(f, spec)

    def test_pad_factor_validation(self):
        f = gaussian_on(GRID64)
        with pytest.raises(ValueError):
            propagate_forward(f, FRESNEL64, pad_factor=1)

    def test_inverse_requires_paraxial_kernel(self):
        f = gaussian_on(GRID64)
        with pytest.raises(ValueError):
            propagate_inverse(f, FEYNMAN64)


class TestAgainstBeamOptics:
    @pytest.mark.parametrize("spec", [FRESNEL64, FEYNMAN64], ids=["fresnel", "feynman"])
    def test_gaussian_matches_analytic_beam(self, spec):
        f = gaussian_on(GRID64)
        out = propagate_forward(f, spec, pad_factor=2)
        x, y = GRID64.mesh()
        ref = gaussian_beam_at_distance(x, y, 8.0 * GRID64.pitch, spec.distance, LAM)
        out_n = out.amps / np.linalg.norm(out.amps)
        assert np.linalg.norm(out_n - ref) < 1e-4

    def test_power_conserved(self):
        f = gaussian_on(GRID64)
        out = propagate_forward(f, FRESNEL64, pad_factor=2)
        assert out.power() == pytest.approx(1.0, abs=1e-3)


class TestOperatorProperties:
    @pytest.mark.parametrize("spec", [FRESNEL64, FEYNMAN64], ids=["fresnel", "feynman"])
    def test_linearity(self, spec):
        rng = np.random.default_rng(4)
        fa = TransverseWavefunction(GRID64, rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64)))
        fb = gaussian_on(GRID64)
        alpha, beta = 0.3 - 0.2j, 1.1 + 0.4j
        combo = TransverseWavefunction(GRID64, alpha * fa.amps + beta * fb.amps)
        lhs = propagate_forward(combo, spec).amps
        rhs = alpha * propagate_forward(fa, spec).amps + beta * propagate_forward(fb, spec).amps
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))

    def test_shift_covariance(self):
        f = gaussian_on(GRID64, waist_cells=5.0)
        shifted = TransverseWavefunction(GRID64, np.roll(f.amps, 1, axis=1))
        out = propagate_forward(f, FRESNEL64).amps
        out_shifted = propagate_forward(shifted, FRESNEL64).amps
        # the used input column that wrapped around is zero-padded anyway,
        # so the outputs agree exactly one cell apart
        assert np.max(np.abs(out_shifted[:, 1:] - out[:, :-1])) < 1e-12

    def test_zero_field_propagates_to_zero(self):
        f = TransverseWavefunction(GRID64, np.zeros((64, 64), complex))
        assert propagate_forward(f, FRESNEL64).power() == 0.0

    def test_plane_wave_inverse_phase(self):
        # a uniform field is an eigenfunction of the paraxial convolution:
        # inverse propagation multiplies it by exp(-i k D).  Edge diffraction
        # ripples individual cells, so compare the interior average, which
        # pins both the amplitude and the phase of the kernel prefactor.
        grid = GridSpec(64, 64, 3e-6)
        f = normalize(TransverseWavefunction(grid, np.ones((64, 64), complex)))
        out = propagate_inverse(f, FRESNEL64, pad_factor=2)
        expected = f.amps[0, 0] * np.exp(-1j * FRESNEL64.wavenumber * D64)
        ratio = np.mean(out.amps[24:40, 24:40]) / expected
        assert abs(ratio - 1.0) < 0.05
        assert abs(np.angle(ratio)) < 0.05

    @pytest.mark.parametrize("pad,tol", [(2, 1e-2), (4, 1e-3)])
    def test_fresnel_round_trip(self, pad, tol):
        f = gaussian_on(GRID64)
        d = propagate_forward(f, FRESNEL64, pad_factor=pad)
        back = propagate_inverse(d, FRESNEL64, pad_factor=pad)
        rel = np.linalg.norm(back.amps - f.amps) / np.linalg.norm(f.amps)
        assert rel < tol

    def test_paraxial_convergence_with_distance(self):
        # beam chosen to stay inside the window across the whole range, so
        # the kernel mismatch (not truncation) dominates the comparison
        grid = GridSpec(128, 128, 3.5e-6)
        f = gaussian_on(grid, waist_cells=36.0)
        extent = grid.extent
        rels = []
        for mult in (10, 30):
            a = propagate_forward(f, PropagationSpec(LAM, mult * extent, PropagationKernel.FEYNMAN_EXACT))
            b = propagate_forward(f, PropagationSpec(LAM, mult * extent, PropagationKernel.FRESNEL_PARAXIAL))
            rels.append(np.linalg.norm(a.amps - b.amps) / np.linalg.norm(b.amps))
        assert rels[1] < rels[0]


class TestObjectReconstruction:
    def test_null_object(self):
        # threshold set a notch above the floor default: at 1e-3 of peak the
        # division amplifies round-trip residue on the far Gaussian tail
        f = gaussian_on(GRID64)
        d = propagate_forward(f, FRESNEL64, pad_factor=4)
        obj = reconstruct_object(d, f, FRESNEL64, threshold=3e-3, pad_factor=4)
        t_valid = obj.transmission_map[obj.validity_mask]
        assert t_valid.size > 1000
        assert np.max(np.abs(t_valid - 1.0)) < 0.05

    def test_phase_step_object(self):
        f = gaussian_on(GRID64, waist_cells=10.0)
        step = np.ones((64, 64), complex)
        step[:, 32:] = np.exp(1j * np.pi / 2)
        transmitted = apply_object(f, step)
        d = propagate_forward(transmitted, FRESNEL64, pad_factor=4)
        obj = reconstruct_object(d, f, FRESNEL64, threshold=0.05, pad_factor=4)
        t = obj.transmission_map
        m = obj.validity_mask
        # interior cells away from the step edge
        left = np.angle(t[28:36, 20:28][m[28:36, 20:28]])
        right = np.angle(t[28:36, 36:44][m[28:36, 36:44]])
        assert abs((np.median(right) - np.median(left)) - np.pi / 2) < 0.1

    def test_empty_mask_rejected(self):
        f = gaussian_on(GRID64)
        d = propagate_forward(f, FRESNEL64)
        with pytest.raises(DegenerateFieldError):
            reconstruct_object(d, f, FRESNEL64, threshold=2.0)

    def test_grid_mismatch(self):
        f = gaussian_on(GRID64)
        other = gaussian_on(GridSpec(32, 32, 3e-6))
        with pytest.raises(ValueError):
            reconstruct_object(f, other, FRESNEL64)


class TestPgm:
    def _pgm_bytes(self, arr, comment=False):
        h, w = arr.shape
        header = b"P5\n"
        if comment:
            header += b"# a comment line\n"
        header += f"{w} {h}\n255\n".encode()
        return header + arr.astype(np.uint8).tobytes()

    def test_read_round_trip(self, tmp_path):
        arr = np.arange(12, dtype=np.uint8).reshape(3, 4)
        path = tmp_path / "mask.pgm"
        path.write_bytes(self._pgm_bytes(arr, comment=True))
        assert np.array_equal(read_pgm(path), arr)

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "mask.pgm"
        path.write_bytes(b"P2\n2 2\n255\n....")
        with pytest.raises(FileFormatError):
            read_pgm(path)

    def test_rejects_truncated(self, tmp_path):
        arr = np.zeros((4, 4), dtype=np.uint8)
        path = tmp_path / "mask.pgm"
        path.write_bytes(self._pgm_bytes(arr)[:-3])
        with pytest.raises(FileFormatError):
            read_pgm(path)

    def test_rejects_16bit(self, tmp_path):
        path = tmp_path / "mask.pgm"
        path.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
        with pytest.raises(FileFormatError):
            read_pgm(path)

    def test_amplitude_mapping(self):
        arr = np.array([[0, 255], [51, 102]], dtype=np.uint8)
        t = object_from_pgm(arr, "amplitude")
        assert t[0, 0] == 0.0
        assert t[0, 1] == 1.0
        assert t[1, 0] == pytest.approx(0.2)

    def test_phase_mapping(self):
        arr = np.array([[0, 64], [128, 255]], dtype=np.uint8)
        t = object_from_pgm(arr, "phase")
        assert np.allclose(np.abs(t), 1.0)
        assert np.angle(t[0, 0]) == pytest.approx(0.0)
        assert np.angle(t[1, 0]) == pytest.approx(np.pi)
        # 8-bit levels map onto [0, 2 pi): level 255 stays short of a full turn
        assert np.angle(t[1, 1]) == pytest.approx(2 * np.pi * 255 / 256) or \
            np.angle(t[1, 1]) == pytest.approx(2 * np.pi * 255 / 256 - 2 * np.pi)

    def test_bad_mapping(self):
        with pytest.raises(ValueError):
            object_from_pgm(np.zeros((2, 2), np.uint8), "intensity")

    def test_apply_object_shape_mismatch(self, gaussian_8):
        with pytest.raises(ValueError):
            apply_object(gaussian_8, np.ones((3, 3)))
