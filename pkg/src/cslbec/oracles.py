"""Independent numerical ground truth for the analytic dynamics.

Two oracles, deliberately sharing no code with :mod:`cslbec.dynamics`:

* an Euler-Maruyama sampler for the phase-space Fokker-Planck equation
  (drift d(phi) = zeta*n dt, diffusions Gamma_P in phi and N^2 Gamma_S / 2
  in n, reproducing the Fokker-Planck coefficients Gamma_P/2 and
  N^2 Gamma_S/4);

* a dense Dicke-basis integrator for the full collective-spin master
  equation with J_z dephasing and J_x diffusion Lindblad channels.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import CslPoint, ExperimentSpec
from .dynamics import PhaseMoments, Rates, rates

__all__ = [
    "SdeMoments",
    "DickeState",
    "PositivityError",
    "sde_sample",
    "coherent_spin_state",
    "spin_operators",
    "dicke_evolve",
    "dicke_phase_variance",
]

_BLOCK = 4096  # trajectories per RNG stream; fixed so results never depend
               # on worker count or scheduling


@dataclass(frozen=True)
class SdeMoments:
    """Empirical phase moments from a trajectory ensemble."""

    mean: float
    variance: float
    stderr_mean: float
    stderr_variance: float
    t: float
    n_traj: int
    seed: int


def sde_sample(spec: ExperimentSpec, point: CslPoint, n_traj: int,
               n_steps: int, seed: int) -> SdeMoments:
    """Monte Carlo phase moments at time t from Euler-Maruyama trajectories.

    Initial (phi, n) are Gaussian with variances (xi0^2/N, sigma_n0^2).
    The echo protocol flips the sign of zeta for the second half of the
    steps.  Trajectories are generated in fixed-size blocks, each from a
    counter-based Philox stream keyed by ``seed ^ block_index``, so the
    result is bitwise reproducible for a given (seed, n_traj, n_steps).
    """
    if n_traj < 1000:
        raise ValueError("n_traj must be >= 1000")
    if n_steps < 1000:
        raise ValueError("n_steps must be >= 1000")

    r = rates(point, spec.species, spec.geometry)
    n_atoms = spec.state.n_atoms
    p = spec.protocol
    dt = p.t / n_steps
    sig_phi = math.sqrt(r.gamma_p * dt)
    sig_n = math.sqrt(n_atoms ** 2 * r.gamma_s / 2.0 * dt)

    phi_all = np.empty(n_traj)
    max_abs_n = 0.0
    for block in range(0, n_traj, _BLOCK):
        m = min(_BLOCK, n_traj - block)
        rng = np.random.Generator(np.random.Philox(key=seed ^ (block // _BLOCK)))
        phi = rng.normal(0.0, math.sqrt(spec.sigma_phi0_sq), size=m)
        n = rng.normal(0.0, spec.state.sigma_n0, size=m)
        for step in range(n_steps):
            zeta = p.zeta
            if p.echo and step >= n_steps // 2:
                zeta = -p.zeta
            phi += zeta * n * dt
            if sig_phi > 0.0:
                phi += sig_phi * rng.standard_normal(m)
            if sig_n > 0.0:
                n += sig_n * rng.standard_normal(m)
        phi_all[block:block + m] = phi
        max_abs_n = max(max_abs_n, float(np.max(np.abs(n))))

    if abs(p.zeta) * max_abs_n * dt > 1e-3:
        warnings.warn(
            "dispersion step zeta*|n|*dt exceeds 1e-3 rad; "
            "increase n_steps",
            stacklevel=2,
        )

    mean = float(np.mean(phi_all))
    var = float(np.var(phi_all, ddof=1))
    return SdeMoments(
        mean=mean,
        variance=var,
        stderr_mean=math.sqrt(var / n_traj),
        stderr_variance=var * math.sqrt(2.0 / (n_traj - 1)),
        t=p.t,
        n_traj=n_traj,
        seed=seed,
    )


# --- Dicke-basis master equation --------------------------------------------

class PositivityError(RuntimeError):
    """Density matrix left the positive cone beyond tolerance."""


@dataclass(frozen=True)
class DickeState:
    """Density matrix in the J_z eigenbasis of the J = N/2 spin block.

    Basis ordering is m = -J ... +J.
    """

    n_atoms: int
    rho: np.ndarray

    def check(self, tol_trace: float = 1e-9, tol_pos: float = 1e-8) -> None:
        tr = np.trace(self.rho)
        if abs(tr - 1.0) > tol_trace:
            raise ValueError(f"trace deviates from 1 by {abs(tr - 1.0):.2e}")
        if np.max(np.abs(self.rho - self.rho.conj().T)) > tol_trace:
            raise ValueError("density matrix is not Hermitian")
        w = np.linalg.eigvalsh(self.rho)
        if w[0] < -tol_pos:
            raise PositivityError(
                f"smallest eigenvalue {w[0]:.3e} below -{tol_pos:.0e}"
            )


def spin_operators(n_atoms: int):
    """Dense J_x, J_y, J_z for the symmetric J = N/2 block."""
    j = n_atoms / 2.0
    m = np.arange(-j, j + 1)
    dim = n_atoms + 1
    jz = np.diag(m).astype(complex)
    # raising operator: J+ |j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>
    cp = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.zeros((dim, dim), dtype=complex)
    jp[np.arange(1, dim), np.arange(dim - 1)] = cp
    jm = jp.conj().T
    jx = (jp + jm) / 2.0
    jy = (jp - jm) / 2.0j
    return jx, jy, jz


def coherent_spin_state(n_atoms: int, theta: float = math.pi / 2.0,
                        phi: float = 0.0) -> DickeState:
    """Coherent spin state |theta, phi>; the default points along +x."""
    j = n_atoms / 2.0
    m = np.arange(-j, j + 1)
    log_binom = np.array([
        0.5 * (math.lgamma(n_atoms + 1) - math.lgamma(j + mk + 1)
               - math.lgamma(j - mk + 1))
        for mk in m
    ])
    # log-domain binomial amplitudes keep N ~ 200 well-conditioned
    amp = np.exp(
        log_binom
        + (j + m) * math.log(max(math.cos(theta / 2.0), 1e-300))
        + (j - m) * math.log(max(math.sin(theta / 2.0), 1e-300))
    ) * np.exp(-1j * m * phi)
    amp /= np.linalg.norm(amp)
    return DickeState(n_atoms, np.outer(amp, amp.conj()))


def _evolve_segment(rho, mz, jx, r: Rates, zeta: float,
                    epsilon_over_hbar: float, tau: float, n_steps: int):
    """RK4 in the interaction picture of the diagonal Hamiltonian.

    The Hamiltonian eps/hbar J_z + zeta J_z^2 is diagonal here, so its
    unitary is applied exactly through elementwise phases and RK4 only
    integrates the dissipator, whose J_x operator picks up those phases.
    This removes the stiff free-rotation scale from the stepper; the fast
    oscillation survives in the dissipator coefficients, which is what
    produces the angular averaging of the diffusion channel.
    """
    h = epsilon_over_hbar * mz + zeta * mz ** 2
    dh = h[:, None] - h[None, :]
    # dephasing channel is diagonal in this basis and commutes with H
    deph = r.gamma_p * (
        np.outer(mz, mz) - (mz[:, None] ** 2 + mz[None, :] ** 2) / 2.0
    )

    def rhs(rho_i, time):
        out = deph * rho_i
        if r.gamma_s > 0.0:
            jx_t = jx * np.exp(1j * dh * time)
            jx2_half = (jx_t @ jx_t) / 2.0
            out = out + r.gamma_s * (
                jx_t @ rho_i @ jx_t.conj().T
                - jx2_half @ rho_i - rho_i @ jx2_half
            )
        return out

    dt = tau / n_steps
    for step in range(n_steps):
        time = step * dt
        k1 = rhs(rho, time)
        k2 = rhs(rho + 0.5 * dt * k1, time + 0.5 * dt)
        k3 = rhs(rho + 0.5 * dt * k2, time + 0.5 * dt)
        k4 = rhs(rho + dt * k3, time + dt)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # back to the lab frame
    phase = np.exp(-1j * dh * tau)
    return phase * rho


def dicke_evolve(n_atoms: int, r: Rates, zeta: float,
                 epsilon_over_hbar: float, initial: DickeState, t: float,
                 n_steps: int, echo: bool = False) -> DickeState:
    """Fixed-step 4th-order integration of the collective-spin master equation.

    d(rho)/dt = -i [eps/hbar J_z + zeta J_z^2, rho]
                + Gamma_P (J_z rho J_z - {J_z^2, rho}/2)
                + Gamma_S (J_x rho J_x - {J_x^2, rho}/2)

    Dense (N+1) x (N+1) matrices; intended as an oracle for N <= 200.
    The echo flag flips the sign of zeta at t/2.  For accuracy the step
    must resolve the J_x coefficient oscillation: (eps/hbar) * t / n_steps
    should stay below roughly 0.5.
    """
    if n_atoms > 200:
        raise ValueError("dense Dicke oracle limited to N <= 200")
    if r.gamma_p < 0 or r.gamma_s < 0:
        raise ValueError("rates must be nonnegative")

    jx, _, jz = spin_operators(n_atoms)
    mz = np.real(np.diag(jz))

    rho = initial.rho.astype(complex).copy()
    if echo:
        half = n_steps // 2
        rho = _evolve_segment(rho, mz, jx, r, zeta, epsilon_over_hbar,
                              t / 2.0, half)
        rho = _evolve_segment(rho, mz, jx, r, -zeta, epsilon_over_hbar,
                              t / 2.0, n_steps - half)
    else:
        rho = _evolve_segment(rho, mz, jx, r, zeta, epsilon_over_hbar,
                              t, n_steps)

    state = DickeState(n_atoms, rho)
    state.check()
    return state


def _expect(op: np.ndarray, rho: np.ndarray) -> float:
    return float(np.real(np.trace(op @ rho)))


def dicke_phase_variance(state: DickeState):
    """Phase moments extracted from collective-spin expectation values.

    In the frame rotated about z so that <J_y> = 0, the estimator is
    sigma_phi^2 = Var(J_y') / (<J_x>^2 + <J_y>^2).  Valid for states
    sharply localized on the equator (sigma_phi << 1); a contrast below
    half the maximal spin length flags a biased estimate.
    """
    jx, jy, jz = spin_operators(state.n_atoms)
    rho = state.rho
    ex, ey = _expect(jx, rho), _expect(jy, rho)
    if ex ** 2 + ey ** 2 <= 0.0:
        raise ValueError("state has no transverse spin component")
    alpha = math.atan2(ey, ex)
    jyp = -math.sin(alpha) * jx + math.cos(alpha) * jy
    var_jyp = _expect(jyp @ jyp, rho) - _expect(jyp, rho) ** 2
    contrast = math.hypot(ex, ey) / (state.n_atoms / 2.0)
    if contrast < 0.5:
        warnings.warn(
            f"contrast {contrast:.2f} < 0.5: phase-variance estimator biased",
            stacklevel=2,
        )
    variance = var_jyp / (ex ** 2 + ey ** 2)
    return PhaseMoments(mean=alpha, variance=variance, t=math.nan,
                        valid=math.sqrt(variance) <= math.pi / 3.0)
