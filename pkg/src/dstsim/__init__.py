"""Direct strong tomography of 2D transverse photon wavefunctions, simulated end to end.

Pipeline: generate an input mode (:mod:`dstsim.wavefield`), measure it cell
by cell with a strongly coupled polarization pointer and zero-momentum
post-selection (:mod:`dstsim.engine`), invert the readout into complex field
maps (:mod:`dstsim.reconstruct`), and optionally propagate fields between
object and detection planes for digital holography
(:mod:`dstsim.holography`).  The :mod:`dstsim.cli` module wires these into
reproducible command-line experiments.
"""

from .errors import DegenerateFieldError, FileFormatError, SamplingGuardError
from .wavefield import (
    GridSpec,
    ModeKind,
    ModeSpec,
    TransverseWavefunction,
    apply_vortex_plate,
    default_waist,
    make_mode,
    normalize,
    phase_winding,
    read_wfgrid,
    write_wfgrid,
)
from .engine import (
    BASIS_PAIRS,
    CouplingConfig,
    CouplingMode,
    PointerState,
    Projector,
    ReadoutRecord,
    couple_and_postselect,
    dwt_pointer,
    gauge_fix,
    read_records_csv,
    readout_probs,
    sample_counts,
    scan,
    scan_probability_maps,
    write_records_csv,
)
from .reconstruct import (
    QualityReport,
    ReconstructionResult,
    fidelity,
    reconstruct_dst,
    reconstruct_dwt,
    score,
    write_result,
)
from .holography import (
    ObjectReconstruction,
    PropagationKernel,
    PropagationSpec,
    apply_object,
    object_from_pgm,
    propagate_forward,
    propagate_inverse,
    read_pgm,
    reconstruct_object,
)

__version__ = "0.1.0"

__all__ = [
    "BASIS_PAIRS",
    "CouplingConfig",
    "CouplingMode",
    "DegenerateFieldError",
    "FileFormatError",
    "GridSpec",
    "ModeKind",
    "ModeSpec",
    "ObjectReconstruction",
    "PointerState",
    "Projector",
    "PropagationKernel",
    "PropagationSpec",
    "QualityReport",
    "ReadoutRecord",
    "ReconstructionResult",
    "SamplingGuardError",
    "TransverseWavefunction",
    "apply_object",
    "apply_vortex_plate",
    "couple_and_postselect",
    "default_waist",
    "dwt_pointer",
    "fidelity",
    "gauge_fix",
    "make_mode",
    "normalize",
    "object_from_pgm",
    "phase_winding",
    "propagate_forward",
    "propagate_inverse",
    "read_pgm",
    "read_records_csv",
    "read_wfgrid",
    "readout_probs",
    "reconstruct_dst",
    "reconstruct_dwt",
    "reconstruct_object",
    "sample_counts",
    "scan",
    "scan_probability_maps",
    "score",
    "write_records_csv",
    "write_result",
    "write_wfgrid",
]
