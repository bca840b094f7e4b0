"""Flat key-value experiment configuration with canonical serialization.

A run is reproducible bit for bit from (config, seed): every knob the CLI
commands consume lives here, flags override file values, and the canonical
text form is a serialization fixed point (serialize -> parse -> serialize
returns identical text), which keeps experiment provenance diff-friendly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

_AUTO = "auto"


@dataclass
class ExperimentConfig:
    # grid
    nx: int = 64
    ny: int = 64
    pitch_um: float = 125.0
    # input mode
    mode: str = "gaussian"          # gaussian | lg
    l: int = 1
    radial: int = 0
    waist_um: float | None = None   # None: nx * pitch / 8
    cx_um: float = 0.0
    cy_um: float = 0.0
    vortex_l: int = 0               # vortex plate applied after mode generation
    # coupling / estimator
    theta: float | None = None      # None: pi/2 for dst; dwt requires explicit
    estimator: str = "dst"          # dst | dwt
    photons: int = 0                # photons per basis setting per cell; 0 = noiseless
    seed: int = 0
    # propagation
    lambda_nm: float = 808.0
    distance_mm: float = 10.0
    kernel: str = "fresnel"         # fresnel | feynman
    pad_factor: int = 2
    # output
    out: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in ("gaussian", "lg"):
            raise ValueError(f"mode must be 'gaussian' or 'lg', got {self.mode!r}")
        if self.estimator not in ("dst", "dwt"):
            raise ValueError(f"estimator must be 'dst' or 'dwt', got {self.estimator!r}")
        if self.kernel not in ("fresnel", "feynman"):
            raise ValueError(f"kernel must be 'fresnel' or 'feynman', got {self.kernel!r}")
        if self.photons < 0:
            raise ValueError("photons must be >= 0")
        if self.seed < 0 or self.seed > 0xFFFFFFFFFFFFFFFF:
            raise ValueError("seed must fit an unsigned 64-bit integer")
        if self.pad_factor < 2:
            raise ValueError("pad_factor must be >= 2")

    def resolved_theta(self) -> float:
        """Coupling angle, defaulting to pi/2 for the strong estimator only."""
        if self.theta is not None:
            return self.theta
        if self.estimator == "dwt":
            raise ValueError("estimator 'dwt' requires an explicit theta")
        return math.pi / 2


def _format_value(value) -> str:
    if value is None:
        return _AUTO
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_text(cfg: ExperimentConfig) -> str:
    lines = ["# dstsim experiment configuration"]
    for f in fields(ExperimentConfig):
        lines.append(f"{f.name} = {_format_value(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


_INT_KEYS = {"nx", "ny", "l", "radial", "photons", "seed", "pad_factor", "vortex_l"}
_FLOAT_KEYS = {"pitch_um", "cx_um", "cy_um", "lambda_nm", "distance_mm"}
_OPT_FLOAT_KEYS = {"waist_um", "theta"}
_STR_KEYS = {"mode", "estimator", "kernel", "out"}


def _parse_value(key: str, text: str):
    if key in _INT_KEYS:
        return int(text)
    if key in _FLOAT_KEYS:
        return float(text)
    if key in _OPT_FLOAT_KEYS:
        return None if text == _AUTO else float(text)
    if key in _STR_KEYS:
        return text
    raise ValueError(f"unknown configuration key {key!r}")


def from_text(text: str) -> ExperimentConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key in values:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, val)
    return ExperimentConfig(**values)


def from_file(path) -> ExperimentConfig:
    with open(path) as fh:
        return from_text(fh.read())
