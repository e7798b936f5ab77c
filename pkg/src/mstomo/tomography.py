"""Projective-measurement simulation and density-matrix reconstruction.

Measurements run in the nine two-qubit Pauli bases ``{x, y, z} x {x, y, z}``
(27 independent outcomes after normalization). Reconstruction comes in two
flavours: fast linear inversion of the Pauli coefficients, which can leave
the estimate unphysical at finite statistics, and a constrained fit through
a triangular-factor parameterization ``rho = T^dag T / Tr(T^dag T)`` that is
Hermitian, normalized and positive semidefinite by construction, minimized
with a simplex search under multinomial weighting.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import sampling
from .core import (SIGMA_0, kron, pauli_expansion, pauli_reconstruct,
                   single_qubit_rotation)

BASES = ("x", "y", "z")
SETTINGS = tuple((b1, b2) for b1 in BASES for b2 in BASES)

# lower-triangle layout of the 16 real fit parameters
_DIAG = tuple(range(4))
_LOWER = ((1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2))

_W_FLOOR = 0.5  # count floor in the multinomial weights
_RESTART_SEED = 20250813  # fixed stream for restart perturbations


class ReconstructionError(RuntimeError):
    """Raised when inversion or fitting cannot proceed (bad inputs)."""


def setting_rotations(setting: tuple[str, str]) -> tuple[np.ndarray, np.ndarray]:
    """Analysis pulses mapping a Pauli-basis setting onto the z readout.

    Applying the returned single-qubit unitaries to the state makes the
    computational-basis populations equal the outcome probabilities of the
    requested ``sigma_i x sigma_j`` measurement, with the up label carrying
    the +1 eigenvalue: x via R(pi/2, -pi/2), y via R(pi/2, 0), z unrotated.
    """
    pulses = []
    for basis in setting:
        if basis == "x":
            pulses.append(single_qubit_rotation(math.pi / 2, -math.pi / 2))
        elif basis == "y":
            pulses.append(single_qubit_rotation(math.pi / 2, 0.0))
        elif basis == "z":
            pulses.append(SIGMA_0)
        else:
            raise ValueError(f"unknown basis {basis!r}")
    return pulses[0], pulses[1]


@dataclass(frozen=True)
class DetectionModel:
    """Per-qubit readout confusion matrices.

    ``c1[reported, true]`` and ``c2`` are column-stochastic 2x2 matrices
    (columns: true up, true down). ``kind`` is ``"camera"`` for resolved
    per-ion readout or ``"pmt"`` for the aggregated three-class signal
    (uu, one-bright, dd).
    """

    c1: np.ndarray
    c2: np.ndarray
    kind: str = "camera"

    def __post_init__(self):
        for name in ("c1", "c2"):
            c = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, c)
            if c.shape != (2, 2) or (c < -1e-12).any() or (c > 1 + 1e-12).any():
                raise ValueError(f"{name} must be a 2x2 matrix of probabilities")
            if np.abs(c.sum(axis=0) - 1.0).max() > 1e-9:
                raise ValueError(f"{name} columns must sum to 1")
        if self.kind not in ("camera", "pmt"):
            raise ValueError(f"kind must be 'camera' or 'pmt', got {self.kind!r}")

    @classmethod
    def perfect(cls, kind: str = "camera") -> "DetectionModel":
        return cls(np.eye(2), np.eye(2), kind)

    @classmethod
    def symmetric(cls, fidelity: float, fidelity2: float | None = None,
                  kind: str = "camera") -> "DetectionModel":
        """Symmetric per-qubit crossover, e.g. 0.97 camera fidelity per ion."""
        f2 = fidelity if fidelity2 is None else fidelity2
        c1 = np.array([[fidelity, 1 - fidelity], [1 - fidelity, fidelity]])
        c2 = np.array([[f2, 1 - f2], [1 - f2, f2]])
        return cls(c1, c2, kind)

    def joint(self) -> np.ndarray:
        """4x4 confusion on joint outcomes (uu, ud, du, dd)."""
        return kron(self.c1, self.c2).real


def outcome_probabilities(rho: np.ndarray, setting: tuple[str, str],
                          detection: DetectionModel) -> np.ndarray:
    """Outcome probabilities of one measurement setting, detection included.

    Camera detection returns 4 probabilities ordered (uu, ud, du, dd); PMT
    detection returns the 3 aggregated classes (uu, one bright, dd).
    """
    r1, r2 = setting_rotations(setting)
    u = kron(r1, r2)
    rotated = u @ np.asarray(rho, dtype=complex) @ u.conj().T
    p = np.clip(np.diag(rotated).real, 0.0, None)
    p = detection.joint() @ p
    if detection.kind == "pmt":
        return np.array([p[0], p[1] + p[2], p[3]])
    return p


@dataclass(frozen=True)
class CountsRecord:
    """Outcome counts of one measurement setting.

    ``counts`` holds the four outcomes (uu, ud, du, dd) and sums to
    ``shots``. Counts are kept as floats so exact probabilities can be fed
    through the estimators in infinite-statistics studies; sampled data is
    integral.
    """

    setting: tuple[str, str]
    counts: np.ndarray
    shots: float

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "setting", (self.setting[0], self.setting[1]))
        if counts.shape != (4,) or (counts < 0).any():
            raise ValueError("counts must be 4 non-negative numbers")
        if self.shots <= 0 or abs(counts.sum() - self.shots) > 1e-6 * max(1.0, self.shots):
            raise ValueError(f"counts sum {counts.sum()} != shots {self.shots}")

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots


def simulate_counts(rho: np.ndarray, settings, shots: int,
                    detection: DetectionModel, seed) -> list[CountsRecord]:
    """Multinomial measurement records for each setting.

    Deterministic for a fixed ``seed`` (int or ``numpy.random.SeedSequence``):
    every setting draws from its own derived substream, so the records do
    not depend on evaluation order. PMT detection has no four-outcome record
    and is rejected here.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    if detection.kind != "camera":
        raise ValueError("counts records need per-ion (camera) detection")
    streams = sampling.substreams(seed, len(settings))
    records = []
    for setting, rng in zip(settings, streams):
        p = outcome_probabilities(rho, setting, detection)
        counts = sampling.multinomial(p, shots, rng)
        records.append(CountsRecord(setting, counts, shots))
    return records


def _corrected_frequencies(record: CountsRecord, detection: DetectionModel) -> np.ndarray:
    joint = detection.joint()
    if abs(np.linalg.det(joint)) < 1e-12:
        raise ReconstructionError("detection confusion matrix is singular")
    return np.linalg.solve(joint, record.frequencies)


@dataclass(frozen=True)
class LinearInversionResult:
    """Direct Pauli-coefficient inversion; ``rho`` may be unphysical."""

    r: np.ndarray
    rho: np.ndarray
    min_eigenvalue: float

    @property
    def physical(self) -> bool:
        return self.min_eigenvalue >= -1e-9


_SIGN = np.array([1.0, -1.0])  # z eigenvalue of (up, down)
_SIGN1 = np.array([1.0, 1.0, -1.0, -1.0])
_SIGN2 = np.array([1.0, -1.0, 1.0, -1.0])


def linear_inversion(records, detection: DetectionModel) -> LinearInversionResult:
    """Reconstruct the Pauli coefficients directly from measured frequencies.

    Detection confusion is inverted on the frequencies; two-qubit
    coefficients come from the matching setting, single-qubit ones are
    averaged over the three settings containing the needed marginal, and
    r_00 = 1. The resulting matrix is Hermitian with unit trace but can
    have negative eigenvalues at finite statistics, which is reported, not
    rejected.
    """
    by_setting = {}
    for record in records:
        if record.setting in by_setting:
            raise ReconstructionError(f"duplicate setting {record.setting}")
        by_setting[record.setting] = record
    missing = [s for s in SETTINGS if s not in by_setting]
    if missing:
        raise ReconstructionError(f"missing settings: {missing}")

    r = np.zeros((4, 4))
    r[0, 0] = 1.0
    marg1 = {b: [] for b in BASES}
    marg2 = {b: [] for b in BASES}
    for (b1, b2) in SETTINGS:
        f = _corrected_frequencies(by_setting[(b1, b2)], detection)
        i, j = BASES.index(b1) + 1, BASES.index(b2) + 1
        r[i, j] = float(np.sum(_SIGN1 * _SIGN2 * f))
        marg1[b1].append(float(np.sum(_SIGN1 * f)))
        marg2[b2].append(float(np.sum(_SIGN2 * f)))
    for b in BASES:
        r[BASES.index(b) + 1, 0] = np.mean(marg1[b])
        r[0, BASES.index(b) + 1] = np.mean(marg2[b])

    rho = pauli_reconstruct(r)
    min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)[0])
    return LinearInversionResult(r, rho, min_eig)


# ---------------------------------------------------------------------------
# constrained maximum-likelihood fit
# ---------------------------------------------------------------------------

def _t_matrix(params: np.ndarray) -> np.ndarray:
    t = np.zeros((4, 4), dtype=complex)
    t[_DIAG, _DIAG] = params[:4]
    for k, (i, j) in enumerate(_LOWER):
        t[i, j] = params[4 + 2 * k] + 1j * params[5 + 2 * k]
    return t


def _rho_from_params(params: np.ndarray) -> np.ndarray:
    t = _t_matrix(params)
    rho = t.conj().T @ t
    trace = rho.trace().real
    return rho / max(trace, 1e-30)


def _project_psd(rho: np.ndarray) -> np.ndarray:
    herm = (rho + rho.conj().T) / 2.0
    values, vectors = np.linalg.eigh(herm)
    values = np.clip(values, 0.0, None)
    rho = (vectors * values) @ vectors.conj().T
    return rho / rho.trace().real


_FLIP = np.eye(4)[::-1].copy()


def _params_from_density(rho: np.ndarray) -> np.ndarray:
    """Triangular-factor parameters reproducing a (strictly positive) rho."""
    flipped = _FLIP @ rho @ _FLIP
    chol = np.linalg.cholesky(flipped + 1e-12 * np.eye(4))
    t = _FLIP @ chol.conj().T @ _FLIP  # lower triangular, t^dag t = rho
    params = np.empty(16)
    params[:4] = np.diag(t).real
    for k, (i, j) in enumerate(_LOWER):
        params[4 + 2 * k] = t[i, j].real
        params[5 + 2 * k] = t[i, j].imag
    return params


@dataclass(frozen=True)
class TomographyResult:
    """Constrained fit output; ``rho`` is physical by construction."""

    rho: np.ndarray
    r: np.ndarray
    objective: float
    iterations: int
    converged: bool


def _stack_model(records, detection: DetectionModel):
    """Per-outcome linear maps vec(rho) -> reported probability, stacked."""
    joint = detection.joint()
    maps, counts, shots = [], [], []
    for record in records:
        r1, r2 = setting_rotations(record.setting)
        u = kron(r1, r2)
        k = np.einsum("ki,kj->kij", u, u.conj()).reshape(4, 16)
        maps.append(joint @ k)
        counts.append(record.counts)
        shots.append(np.full(4, record.shots))
    return np.vstack(maps), np.concatenate(counts), np.concatenate(shots)


def mle_fit(records, detection: DetectionModel,
            initial_guess: np.ndarray | None = None, restarts: int = 3,
            w_floor: float = _W_FLOOR) -> TomographyResult:
    """Fit a physical density matrix to measurement records.

    Minimizes the multinomially weighted squared residual

        sum_k (n_k - N p_k)^2 / max(N p_k, w_floor)

    over the triangular-factor parameterization using Nelder-Mead simplex
    search. The starting point is the PSD-projected linear inversion (or
    ``initial_guess``); up to ``restarts`` perturbed restarts follow, and
    the fit is converged once a restart improves the objective by less than
    1e-10. Record order does not matter: settings are canonicalized first.
    """
    records = sorted(records, key=lambda rec: SETTINGS.index(rec.setting))
    if {rec.setting for rec in records} != set(SETTINGS):
        raise ReconstructionError("records must cover all 9 settings")
    model, counts, shots = _stack_model(records, detection)

    def objective(params: np.ndarray) -> float:
        p = (model @ _rho_from_params(params).reshape(16)).real
        expected = shots * p
        return float(np.sum((counts - expected) ** 2
                            / np.maximum(expected, w_floor)))

    if initial_guess is None:
        initial_guess = linear_inversion(records, detection).rho
    x0 = _params_from_density(_project_psd(initial_guess))

    def run(x):
        # seed the polytope at the statistical-uncertainty scale; the
        # adaptive variant keeps 16 dimensions tractable
        simplex = np.tile(x, (17, 1))
        simplex[1:] += 0.1 * np.eye(16)
        return minimize(objective, x, method="Nelder-Mead",
                        options={"xatol": 1e-7, "fatol": 1e-9, "adaptive": True,
                                 "initial_simplex": simplex,
                                 "maxiter": 20000, "maxfev": 20000})

    best = run(x0)
    iterations = best.nit
    converged = False
    rng = np.random.default_rng(_RESTART_SEED)
    for _ in range(restarts):
        scale = np.abs(best.x).mean() + 1e-3
        trial = run(best.x + 0.05 * scale * rng.standard_normal(16))
        iterations += trial.nit
        improvement = best.fun - trial.fun
        if trial.fun < best.fun:
            best = trial
        if improvement < 1e-10:
            converged = True
            break

    rho = _rho_from_params(best.x)
    return TomographyResult(rho=rho, r=pauli_expansion(rho),
                            objective=float(best.fun), iterations=iterations,
                            converged=converged)


# ---------------------------------------------------------------------------
# detection calibration from control runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationResult:
    model: DetectionModel
    degenerate: bool = False


def calibrate_detection(uu_record: CountsRecord,
                        dd_record: CountsRecord) -> CalibrationResult:
    """Estimate per-qubit confusion from z-basis control runs.

    The controls prepare uu and dd and are assumed ideal, so any off-target
    marginal frequency is detection crossover. If both controls concentrate
    all counts in one and the same outcome the data carry no information and
    the identity model is returned with the ``degenerate`` flag set.
    """
    for record, label in ((uu_record, "uu"), (dd_record, "dd")):
        if record.setting != ("z", "z"):
            raise ValueError(f"{label} control must be measured in (z, z)")

    def concentrated(record):
        nonzero = np.flatnonzero(record.counts)
        return nonzero[0] if nonzero.size == 1 else None

    uu_peak, dd_peak = concentrated(uu_record), concentrated(dd_record)
    if uu_peak is not None and uu_peak == dd_peak:
        return CalibrationResult(DetectionModel.perfect(), degenerate=True)

    f_uu, f_dd = uu_record.frequencies, dd_record.frequencies
    # P(report down | true up) per qubit, from the uu control
    eps1 = f_uu[2] + f_uu[3]
    eps2 = f_uu[1] + f_uu[3]
    # P(report up | true down) per qubit, from the dd control
    eta1 = f_dd[0] + f_dd[1]
    eta2 = f_dd[0] + f_dd[2]
    c1 = np.array([[1 - eps1, eta1], [eps1, 1 - eta1]])
    c2 = np.array([[1 - eps2, eta2], [eps2, 1 - eta2]])
    return CalibrationResult(DetectionModel(c1, c2))


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

COUNTS_HEADER = ("basis_q1", "basis_q2", "n_uu", "n_ud", "n_du", "n_dd")


def write_counts_csv(path, records) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(COUNTS_HEADER)
        for record in records:
            writer.writerow([record.setting[0], record.setting[1],
                             *(f"{c:.10g}" for c in record.counts)])


def read_counts_csv(path) -> list[CountsRecord]:
    records = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if tuple(header) != COUNTS_HEADER:
            raise ValueError(f"unexpected counts header {header}")
        for row in reader:
            counts = np.array([float(x) for x in row[2:6]])
            records.append(CountsRecord((row[0], row[1]), counts, counts.sum()))
    return records
