"""Molmer-Sorensen two-ion gate dynamics and dominant noise channels.

The bichromatic spin-dependent force is represented two independent ways:

* closed forms for the displacement ``alpha(t, delta)``, the accumulated
  trajectory phase ``Phi(t, delta)`` and the brightness/parity signals;
* a brute-force propagator on a two-qubit spin register tensored with a
  truncated Fock register, built from a matrix-exponential displacement
  operator.

The two routes are kept strictly independent so each can serve as the
oracle for the other. The entangling action in the computational basis is
exposed as a 4x4 unitary (:func:`apply_ideal_gate`); spontaneous-scattering
and state-preparation imperfections are end-of-gate convex mixtures.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import hbar
from scipy.linalg import expm

from .core import basis_state, kron, projector

TWO_PI = 2.0 * math.pi

# spin basis change between the computational (z) and gate-diagonal (x)
# bases; self-inverse, per qubit
_HX = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_HX2 = kron(_HX, _HX)


class TruncationError(RuntimeError):
    """Raised when the truncated Fock register leaks into its top level."""


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeParams:
    """Collective-motion mode of a two-ion crystal along the trap axis.

    Parameters are SI: ``omega_c`` the center-of-mass angular frequency
    (rad/s), ``mass`` the total excitation mass (kg), ``wavevector`` the
    Raman wavevector difference along the motion (1/m). The stretch mode
    sits at ``sqrt(3) * omega_c``.
    """

    omega_c: float
    mass: float
    wavevector: float
    mode: str = "stretch"

    def __post_init__(self):
        if min(self.omega_c, self.mass, self.wavevector) <= 0:
            raise ValueError("mode parameters must be positive")
        if self.mode not in ("stretch", "com"):
            raise ValueError(f"mode must be 'stretch' or 'com', got {self.mode!r}")
        if not self.lamb_dicke < 0.3:
            raise ValueError(
                f"Lamb-Dicke parameter {self.lamb_dicke:.3f} outside the "
                "regime (< 0.3) assumed by the closed forms")

    @property
    def omega_s(self) -> float:
        return math.sqrt(3.0) * self.omega_c

    @property
    def omega(self) -> float:
        """Angular frequency of the selected mode."""
        return self.omega_s if self.mode == "stretch" else self.omega_c

    @property
    def z_o(self) -> float:
        """Zero-point wavepacket size sqrt(hbar / 2 M omega)."""
        return math.sqrt(hbar / (2.0 * self.mass * self.omega))

    @property
    def lamb_dicke(self) -> float:
        return self.wavevector * self.z_o


@dataclass(frozen=True)
class GateParams:
    """Operating parameters of the bichromatic gate drive.

    ``eta_omega`` is the sideband Rabi frequency (rad/s), ``delta`` the
    symmetric sideband detuning (rad/s), ``m`` the loop-closure integer and
    ``tau_g`` the gate time (s). ``phi_e`` / ``phi_o`` are the free phases
    of the even- and odd-parity entangled outputs; ``nbar`` the initial
    thermal occupation of the driven mode.
    """

    eta_omega: float
    delta: float
    m: int = 1
    tau_g: float | None = None
    phi_e: float = 0.0
    phi_o: float = 0.0
    nbar: float = 0.0
    mode: ModeParams | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.eta_omega <= 0:
            raise ValueError("eta_omega must be positive")
        if self.delta == 0:
            raise ValueError("delta must be nonzero")
        if self.nbar < 0:
            raise ValueError("nbar must be non-negative")

    @property
    def alpha_o(self) -> float:
        """Displacement scale eta_omega / delta."""
        return self.eta_omega / self.delta

    @property
    def omega_tilde(self) -> float:
        """Far-detuned effective two-qubit coupling (eta_omega)^2 / delta."""
        return self.eta_omega ** 2 / self.delta

    @property
    def omega_d(self) -> float:
        """Drive frequency omega + delta; requires an attached mode."""
        if self.mode is None:
            raise ValueError("omega_d needs mode parameters")
        return self.mode.omega + self.delta


def displacement_alpha(t: float, delta: float, alpha_o: float) -> complex:
    """Phase-space displacement alpha_o (1 - exp(-i delta t)) at time t."""
    return alpha_o * (1.0 - cmath.exp(-1j * delta * t))


def trajectory_phase(t: float, delta: float, alpha_o: float) -> float:
    """Phase alpha_o^2 (delta t - sin delta t) accumulated along the trajectory."""
    return alpha_o ** 2 * (delta * t - math.sin(delta * t))


def geometric_phase(m: int, alpha_o: float) -> float:
    """Phase 2 pi m alpha_o^2 left after m closed loops."""
    return TWO_PI * m * alpha_o ** 2


def gate_operating_point(eta_omega: float, m: int = 1, phi_e: float = 0.0,
                         phi_o: float = 0.0, nbar: float = 0.0,
                         mode: ModeParams | None = None) -> GateParams:
    """Parameters closing the trajectory after m loops with geometric phase pi/2.

    The two conditions (closure ``delta tau_g = 2 pi m`` and maximal
    entanglement ``2 pi m alpha_o^2 = pi/2``) give ``delta = 2 eta_omega
    sqrt(m)`` and ``tau_g = 2 pi m / delta``.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    delta = 2.0 * eta_omega * math.sqrt(m)
    tau_g = TWO_PI * m / delta
    return GateParams(eta_omega=eta_omega, delta=delta, m=m, tau_g=tau_g,
                      phi_e=phi_e, phi_o=phi_o, nbar=nbar, mode=mode)


# ---------------------------------------------------------------------------
# ideal entangling map in the computational basis
# ---------------------------------------------------------------------------

def ideal_gate_unitary(phi_e: float = 0.0, phi_o: float = 0.0) -> np.ndarray:
    """4x4 unitary sending each basis state to its Bell-like superposition.

    uu -> (uu + i e^{+i phi_e} dd)/sqrt(2)     dd -> (dd + i e^{-i phi_e} uu)/sqrt(2)
    ud -> (ud + i e^{+i phi_o} du)/sqrt(2)     du -> (du + i e^{-i phi_o} ud)/sqrt(2)
    """
    u = np.array([
        [1, 0, 0, 1j * cmath.exp(-1j * phi_e)],
        [0, 1, 1j * cmath.exp(-1j * phi_o), 0],
        [0, 1j * cmath.exp(1j * phi_o), 1, 0],
        [1j * cmath.exp(1j * phi_e), 0, 0, 1],
    ], dtype=complex)
    return u / math.sqrt(2)


def apply_ideal_gate(state: np.ndarray, phi_e: float = 0.0,
                     phi_o: float = 0.0) -> np.ndarray:
    """Apply the entangling map to a ket (shape (4,)) or density matrix (4x4)."""
    u = ideal_gate_unitary(phi_e, phi_o)
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return u @ state
    return u @ state @ u.conj().T


def target_state(label: str, phi_e: float = 0.0, phi_o: float = 0.0) -> np.ndarray:
    """Bell-like output ket the ideal gate produces from a basis-state input."""
    return apply_ideal_gate(basis_state(label), phi_e, phi_o)


# ---------------------------------------------------------------------------
# truncated Fock register and brute-force propagation
# ---------------------------------------------------------------------------

def destroy(dim: int) -> np.ndarray:
    """Truncated annihilation operator on Fock levels 0 .. dim-1."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def displacement_operator(alpha: complex, dim: int) -> np.ndarray:
    """D(alpha) = exp(alpha a^dag - alpha* a) on the truncated register.

    The generator is exactly anti-Hermitian in the truncated space, so the
    result is unitary; truncation only limits how faithfully it represents
    the infinite-dimensional displacement (guarded by the health check).
    """
    a = destroy(dim)
    return expm(alpha * a.conj().T - np.conjugate(alpha) * a)


def coherent_state(alpha: complex, dim: int) -> np.ndarray:
    """Amplitudes e^{-|alpha|^2/2} alpha^n / sqrt(n!) of a coherent state."""
    if alpha == 0:
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
        return amps
    n = np.arange(dim)
    log_fact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, dim)))))
    return np.exp(-abs(alpha) ** 2 / 2.0 + n * cmath.log(alpha) - log_fact / 2.0)


@dataclass(frozen=True)
class SpinMotionState:
    """Two-qubit spin register tensored with a truncated Fock register.

    ``amps[s, n]`` is the amplitude of computational spin state ``s`` (basis
    order uu, ud, du, dd) with ``n`` motional quanta.
    """

    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 2 or amps.shape[0] != 4:
            raise ValueError(f"expected shape (4, n_max+1), got {amps.shape}")
        object.__setattr__(self, "amps", amps)
        norm = self.norm
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state norm {norm} deviates from 1 beyond 1e-9")

    @property
    def n_max(self) -> int:
        return self.amps.shape[1] - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @property
    def top_population(self) -> float:
        """Population of the highest retained Fock level (truncation health)."""
        return float(np.sum(np.abs(self.amps[:, -1]) ** 2))

    def spin_density(self) -> np.ndarray:
        """Reduced 4x4 spin density matrix (motion traced out)."""
        return self.amps @ self.amps.conj().T

    def spin_populations(self) -> np.ndarray:
        return np.sum(np.abs(self.amps) ** 2, axis=1)


def spin_motion_product(spin: np.ndarray, n: int, n_max: int) -> SpinMotionState:
    """Product state (spin ket) x |n> on a register truncated at n_max."""
    if not 0 <= n <= n_max:
        raise ValueError(f"Fock level {n} outside register 0..{n_max}")
    amps = np.zeros((4, n_max + 1), dtype=complex)
    amps[:, n] = np.asarray(spin, dtype=complex)
    return SpinMotionState(amps)


def _apply_force(amps: np.ndarray, d_plus: np.ndarray, phase: complex) -> np.ndarray:
    """One spin-dependent-force step on computational-basis amplitudes."""
    amps_x = _HX2 @ amps
    amps_x[1] = phase * (d_plus @ amps_x[1])
    # D(-alpha) = D(alpha)^dag
    amps_x[2] = phase * (d_plus.conj().T @ amps_x[2])
    return _HX2 @ amps_x


def propagate_spin_motion(initial: SpinMotionState, params: GateParams, t: float,
                          health_tol: float = 1e-6) -> SpinMotionState:
    """Evolve a spin-motion state for time t under the spin-dependent force.

    In the gate-diagonal (x) spin basis the evolution is the identity on the
    aligned states and ``exp(-i Phi) D(+/- alpha)`` on the anti-aligned
    ones, with ``alpha`` and ``Phi`` the closed-form displacement and
    trajectory phase. The truncation-health invariant (top-level population
    below ``health_tol``) is enforced on input and output.
    """
    if initial.top_population > health_tol:
        raise TruncationError(
            f"initial top-level population {initial.top_population:.2e} "
            f"exceeds {health_tol:.0e}; enlarge the register")
    alpha = displacement_alpha(t, params.delta, params.alpha_o)
    phase = cmath.exp(-1j * trajectory_phase(t, params.delta, params.alpha_o))
    d_plus = displacement_operator(alpha, initial.n_max + 1)
    final = SpinMotionState(_apply_force(initial.amps, d_plus, phase))

    if final.top_population > health_tol:
        raise TruncationError(
            f"propagation leaked {final.top_population:.2e} into the top "
            f"Fock level (threshold {health_tol:.0e}); enlarge the register")
    return final


def fock_cutoff(alpha_abs: float, n_init: int = 0) -> int:
    """Register size keeping a displaced |n_init> comfortably clear of the top."""
    spread = math.sqrt(n_init) + abs(alpha_abs)
    return max(20, math.ceil(spread ** 2 + 7.0 * spread + 8.0)) + n_init


# ---------------------------------------------------------------------------
# brightness and parity signals
# ---------------------------------------------------------------------------

def populations_to_brightness(p: np.ndarray) -> float:
    """Average number of fluorescing ions, 2 P_dd + P_ud + P_du (down = bright)."""
    return float(2.0 * p[3] + p[1] + p[2])


def populations_to_parity(p: np.ndarray) -> float:
    """(P_uu + P_dd) - (P_ud + P_du), the sigma_z x sigma_z expectation."""
    return float(p[0] + p[3] - p[1] - p[2])


def brightness_closed(t: float, delta: float, alpha_o: float,
                      nbar: float = 0.0) -> float:
    """Closed-form brightness 1 - cos(Phi) e^{-|alpha|^2 (2 nbar + 1) / 2}.

    For the ions starting in uu with the driven mode in a thermal state of
    mean occupation ``nbar``; ``nbar = 0`` is the ground-state expression.
    """
    a2 = abs(displacement_alpha(t, delta, alpha_o)) ** 2
    phi = trajectory_phase(t, delta, alpha_o)
    return 1.0 - math.cos(phi) * math.exp(-a2 * (2.0 * nbar + 1.0) / 2.0)


def parity_closed(t: float, delta: float, alpha_o: float,
                  nbar: float = 0.0) -> float:
    """Closed-form parity (1 + e^{-2 |alpha|^2 (2 nbar + 1)}) / 2."""
    a2 = abs(displacement_alpha(t, delta, alpha_o)) ** 2
    return 0.5 * (1.0 + math.exp(-2.0 * a2 * (2.0 * nbar + 1.0)))


def propagated_signals(t: float, delta: float, alpha_o: float, n_init: int = 0,
                       n_max: int | None = None) -> tuple[float, float]:
    """(brightness, parity) from brute-force propagation of uu x |n_init>."""
    eta_omega = alpha_o * delta
    params = GateParams(eta_omega=eta_omega, delta=delta)
    alpha_max = 2.0 * abs(alpha_o)
    if n_max is None:
        n_max = fock_cutoff(alpha_max, n_init)
    state = spin_motion_product(basis_state("uu"), n_init, n_max)
    final = propagate_spin_motion(state, params, t)
    p = final.spin_populations()
    return populations_to_brightness(p), populations_to_parity(p)


def thermal_weights(nbar: float, n_levels: int) -> np.ndarray:
    """Geometric occupation probabilities nbar^n / (1 + nbar)^(n+1)."""
    n = np.arange(n_levels, dtype=float)
    return nbar ** n / (1.0 + nbar) ** (n + 1.0)


def thermal_levels(nbar: float, tail_tol: float = 1e-12) -> int:
    """Number of Fock levels so the neglected geometric tail is below tail_tol."""
    if nbar == 0:
        return 1
    z = nbar / (1.0 + nbar)
    return max(1, math.ceil(math.log(tail_tol) / math.log(z)))


def thermal_signals(t: float, delta: float, alpha_o: float, nbar: float,
                    n_max: int | None = None,
                    tail_tol: float = 1e-12) -> tuple[float, float]:
    """(brightness, parity) averaged over a thermal initial motional state.

    Probability-weighted sum of per-Fock-level propagations, truncated where
    the geometric occupation tail drops below ``tail_tol``. The displacement
    operator is shared across levels (it only depends on t and delta).
    """
    levels = thermal_levels(nbar, tail_tol)
    weights = thermal_weights(nbar, levels)
    if n_max is None:
        n_max = fock_cutoff(2.0 * abs(alpha_o), levels - 1)
    alpha = displacement_alpha(t, delta, alpha_o)
    phase = cmath.exp(-1j * trajectory_phase(t, delta, alpha_o))
    d_plus = displacement_operator(alpha, n_max + 1)

    s_av = 0.0
    parity = 0.0
    for n, w in enumerate(weights):
        start = spin_motion_product(basis_state("uu"), n, n_max)
        final = SpinMotionState(_apply_force(start.amps, d_plus, phase))
        if final.top_population > 1e-6:
            raise TruncationError(
                f"thermal level {n} leaked {final.top_population:.2e} into "
                "the top Fock level; enlarge the register")
        p = final.spin_populations()
        s_av += w * populations_to_brightness(p)
        parity += w * populations_to_parity(p)
    return s_av, parity


def _curve(params: GateParams, grid, nbar, n_max, index) -> np.ndarray:
    closed = (brightness_closed, parity_closed)[index]
    out = []
    for t, delta in grid:
        alpha_o = params.eta_omega / delta
        if nbar == 0:
            out.append(closed(t, delta, alpha_o))
        else:
            dim = fock_cutoff(2.0 * abs(alpha_o), thermal_levels(nbar) - 1)
            if n_max is not None:
                dim = max(dim, n_max)
            out.append(thermal_signals(t, delta, alpha_o, nbar, n_max=dim)[index])
    return np.array(out)


def brightness_curve(params: GateParams, grid, nbar: float | None = None,
                     n_max: int | None = None) -> np.ndarray:
    """Brightness over a grid of (t, delta) points.

    For ``nbar = 0`` the closed form is used; for ``nbar > 0`` the values
    come from probability-weighted Fock propagation (the closed form with
    the (2 nbar + 1)-scaled exponent is a candidate checked against this
    route in the tests, not asserted here). ``n_max`` is a lower bound on
    the Fock register, enlarged automatically when the displacement needs
    more room.
    """
    return _curve(params, grid, params.nbar if nbar is None else nbar, n_max, 0)


def parity_curve(params: GateParams, grid, nbar: float | None = None,
                 n_max: int | None = None) -> np.ndarray:
    """Parity over a grid of (t, delta) points; dispatch as in brightness_curve."""
    return _curve(params, grid, params.nbar if nbar is None else nbar, n_max, 1)


def apply_contrast(values: np.ndarray, contrast: float = 1.0,
                   offset: float = 0.0) -> np.ndarray:
    """Free contrast/offset factors of a fitted signal, c * S + o."""
    return contrast * np.asarray(values, dtype=float) + offset


# ---------------------------------------------------------------------------
# noise channels
# ---------------------------------------------------------------------------

def scattering_channel(rho: np.ndarray, p_sc: float, kappa: float,
                       target: np.ndarray) -> np.ndarray:
    """End-of-gate spontaneous-scattering mixture.

    With probability ``p_sc`` the state is replaced by a mixture retaining
    overlap ``kappa`` with the pure entangled target and spreading the rest
    uniformly over its orthogonal complement, so the output fidelity is
    ``(1 - p_sc) F(rho) + p_sc kappa``.
    """
    if not 0.0 <= p_sc <= 1.0:
        raise ValueError(f"p_sc must be in [0, 1], got {p_sc}")
    if not 0.0 <= kappa <= 1.0:
        raise ValueError(f"kappa must be in [0, 1], got {kappa}")
    proj = projector(target)
    scattered = kappa * proj + (1.0 - kappa) * (np.eye(4) - proj) / 3.0
    return (1.0 - p_sc) * np.asarray(rho, dtype=complex) + p_sc * scattered


def prep_error_channel(rho: np.ndarray, f_prep: float) -> np.ndarray:
    """Depolarizing preparation error with fidelity ``f_prep`` to the ideal input."""
    if not 0.25 <= f_prep <= 1.0:
        raise ValueError(f"f_prep must be in [0.25, 1], got {f_prep}")
    lam = (4.0 * f_prep - 1.0) / 3.0
    return lam * np.asarray(rho, dtype=complex) + (1.0 - lam) * np.eye(4) / 4.0


# ---------------------------------------------------------------------------
# laser/atomic error budget
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorBudget:
    """Raman-laser error budget; inputs in SI angular frequencies and seconds.

    Inputs: optical linewidth ``gamma``, Raman detuning ``delta_raman``, EOM
    Raman efficiency ``epsilon``, Clebsch-Gordan factor ``zeta``, Lamb-Dicke
    parameter ``eta_ld``, hyperfine splitting ``omega_hf``, measured
    differential Stark shift ``dnu_st`` (optional), gate time ``tau_g``
    (optional) and residual post-scatter overlap ``kappa``.

    :func:`error_budget` fills the derived fields (``beta``, scattering
    probability, Stark phase, predicted infidelity).
    """

    gamma: float
    delta_raman: float
    epsilon: float
    zeta: float
    eta_ld: float
    omega_hf: float
    dnu_st: float | None = None
    tau_g: float | None = None
    kappa: float = 0.27

    beta: float | None = None
    gamma_sc: float | None = None
    p_sc_theory: float | None = None
    p_sc_inferred: float | None = None
    p_sc: float | None = None
    phi_st_theory: float | None = None
    phi_st_measured: float | None = None
    phi_st: float | None = None
    infidelity: float | None = None

    def __post_init__(self):
        for name in ("gamma", "delta_raman", "epsilon", "zeta", "eta_ld", "omega_hf"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.delta_raman <= self.gamma:
            raise ValueError("Raman detuning must greatly exceed the linewidth")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must be in [0, 1], got {self.kappa}")


def error_budget(inputs: ErrorBudget) -> ErrorBudget:
    """Complete an :class:`ErrorBudget` with its derived noise figures.

    beta = sqrt(2) pi / (epsilon zeta eta); the theoretical scattering
    probability is 2 beta gamma / Delta and the Stark phase beta omega_hf /
    Delta. When a measured Stark shift is supplied, phi_st = dnu_st tau_g
    and the scattering probability inferred from it is phi_st 2 gamma /
    omega_hf. The predicted infidelity is (1 - kappa) p_sc.
    """
    b = inputs
    beta = math.sqrt(2.0) * math.pi / (b.epsilon * b.zeta * b.eta_ld)
    p_sc_theory = 2.0 * beta * b.gamma / b.delta_raman
    phi_st_theory = beta * b.omega_hf / b.delta_raman

    phi_st_measured = None
    p_sc_inferred = None
    if b.dnu_st is not None and b.tau_g is not None:
        phi_st_measured = b.dnu_st * b.tau_g
        p_sc_inferred = phi_st_measured * 2.0 * b.gamma / b.omega_hf

    p_sc = p_sc_inferred if p_sc_inferred is not None else p_sc_theory
    phi_st = phi_st_measured if phi_st_measured is not None else phi_st_theory
    if not 0.0 <= p_sc <= 1.0:
        raise ValueError(f"scattering probability {p_sc:.3f} outside [0, 1]")
    gamma_sc = p_sc / (2.0 * b.tau_g) if b.tau_g is not None else None

    return replace(
        b, beta=beta, gamma_sc=gamma_sc, p_sc_theory=p_sc_theory,
        p_sc_inferred=p_sc_inferred, p_sc=p_sc, phi_st_theory=phi_st_theory,
        phi_st_measured=phi_st_measured, phi_st=phi_st,
        infidelity=(1.0 - b.kappa) * p_sc)
