"""Run configuration: a flat key-value file mapped onto one dataclass.

External units are experiment-friendly (ordinary frequencies in kHz, times
in microseconds, angles in radians); everything is converted to SI angular
frequencies and seconds at the boundary. The file format is plain text:
one ``key = value`` per line, ``#`` comments, blank lines ignored, ``none``
for optional values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .gate import ErrorBudget, GateParams, gate_operating_point
from .tomography import DetectionModel

KHZ = 2.0 * math.pi * 1e3  # kHz (ordinary) -> rad/s
US = 1e-6  # microseconds -> seconds


class ConfigError(ValueError):
    """Invalid configuration file or parameter values."""


@dataclass(frozen=True)
class RunConfig:
    """Validated bundle of gate, noise, detection and sampling settings."""

    # gate drive
    eta_omega_khz: float = 6.4
    delta_khz: float | None = None  # default: loop-closure operating point
    m: int = 1
    phi_e_rad: float = 0.0
    phi_o_rad: float = 0.0
    nbar: float = 0.0
    n_max: int = 20
    # noise channels
    p_sc: float = 0.0
    kappa: float = 0.27
    f_prep: float = 1.0  # preparation fidelity of the odd-parity inputs
    # detection (symmetric per-qubit crossover)
    det_fid_q1: float = 1.0
    det_fid_q2: float = 1.0
    # tomography sampling
    shots: int = 200
    control_shots: int = 5000
    bootstrap_resamples: int = 500
    seed: int = 0
    # scan grids
    scan_points: int = 101
    scan_t_us: float = 75.0
    scan_delta_min_khz: float = 4.0
    scan_delta_max_khz: float = 24.0
    scan_t_min_us: float = 0.0
    scan_t_max_us: float = 240.0
    contrast: float = 1.0
    offset: float = 0.0
    # laser/atomic error budget
    gamma_khz: float = 6.0e4
    delta_raman_khz: float = 2.0e8
    epsilon: float = 0.2
    zeta: float = 0.5
    eta_ld: float = 0.1
    omega_hf_khz: float = 1.453e7
    dnu_st_khz: float | None = 75.0
    tau_g_us: float | None = 80.0

    def __post_init__(self):
        if self.eta_omega_khz <= 0:
            raise ConfigError("eta_omega_khz must be positive")
        if self.delta_khz is not None and self.delta_khz == 0:
            raise ConfigError("delta_khz must be nonzero")
        if self.m < 1:
            raise ConfigError("m must be a positive integer")
        if not 0 <= self.p_sc <= 1:
            raise ConfigError("p_sc must be in [0, 1]")
        if not 0 <= self.kappa <= 1:
            raise ConfigError("kappa must be in [0, 1]")
        if not 0.25 <= self.f_prep <= 1:
            raise ConfigError("f_prep must be in [0.25, 1]")
        for name in ("det_fid_q1", "det_fid_q2"):
            if not 0.5 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must be in [0.5, 1]")
        if self.shots <= 0 or self.control_shots <= 0:
            raise ConfigError("shots and control_shots must be positive")
        if self.bootstrap_resamples < 100:
            raise ConfigError("bootstrap_resamples must be at least 100")
        if self.scan_points < 0:
            raise ConfigError("scan_points must be non-negative")
        if self.nbar < 0:
            raise ConfigError("nbar must be non-negative")

    def gate_params(self) -> GateParams:
        """GateParams in SI units; detuning defaults to the operating point."""
        eta_omega = self.eta_omega_khz * KHZ
        if self.delta_khz is None:
            point = gate_operating_point(eta_omega, self.m, self.phi_e_rad,
                                         self.phi_o_rad, self.nbar)
            return point
        return GateParams(eta_omega=eta_omega, delta=self.delta_khz * KHZ,
                          m=self.m, tau_g=2.0 * math.pi * self.m / (self.delta_khz * KHZ),
                          phi_e=self.phi_e_rad, phi_o=self.phi_o_rad, nbar=self.nbar)

    def detection(self) -> DetectionModel:
        return DetectionModel.symmetric(self.det_fid_q1, self.det_fid_q2)

    def budget(self) -> ErrorBudget:
        try:
            return ErrorBudget(
                gamma=self.gamma_khz * KHZ,
                delta_raman=self.delta_raman_khz * KHZ,
                epsilon=self.epsilon, zeta=self.zeta, eta_ld=self.eta_ld,
                omega_hf=self.omega_hf_khz * KHZ,
                dnu_st=None if self.dnu_st_khz is None else self.dnu_st_khz * KHZ,
                tau_g=None if self.tau_g_us is None else self.tau_g_us * US,
                kappa=self.kappa)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_OPTIONAL = ("delta_khz", "dnu_st_khz", "tau_g_us")
_INT_FIELDS = ("m", "n_max", "shots", "control_shots",
               "bootstrap_resamples", "seed", "scan_points")


def _coerce(name: str, text: str):
    text = text.strip()
    if text.lower() in ("none", ""):
        if name not in _OPTIONAL:
            raise ConfigError(f"{name} cannot be none")
        return None
    kind = int if name in _INT_FIELDS else float
    try:
        return kind(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse ``key = value`` lines into a RunConfig (defaults from ``base``)."""
    known = {f.name for f in fields(RunConfig)}
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        updates[key] = _coerce(key, value)
    base = base if base is not None else RunConfig()
    try:
        return replace(base, **updates)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base)
