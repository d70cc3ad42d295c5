"""Deterministic ensemble-level references for trajectory validation.

The conditioned trajectories must average to the solution of the ensemble
master equation.  This module integrates that equation directly with a
classical fourth-order Runge-Kutta scheme, finds stationary states from
the kernel of the vectorized generator, and quantifies the gap between an
empirical trajectory average and the deterministic solution with a trace
distance and a jackknife standard error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import LindbladModel, check_density_matrix, liouvillian_apply

# Singular values below this count toward the kernel of the generator.
KERNEL_TOL = 1e-8
# A stationary state must satisfy the generator to this accuracy.
RESIDUAL_TOL = 1e-10


class DegenerateSteadyStateError(RuntimeError):
    """The generator kernel is not one-dimensional."""


def integrate_master(model: LindbladModel, rho0, dt: float, steps: int) -> np.ndarray:
    """Integrate the ensemble equation with RK4.

    Returns
    -------
    ndarray
        Density matrices of shape ``(steps + 1, N, N)``, starting at rho0.
    """
    rho = check_density_matrix(rho0, model.dim)
    out = np.empty((steps + 1, model.dim, model.dim), dtype=complex)
    out[0] = rho
    for i in range(1, steps + 1):
        k1 = liouvillian_apply(model, rho)
        k2 = liouvillian_apply(model, rho + 0.5 * dt * k1)
        k3 = liouvillian_apply(model, rho + 0.5 * dt * k2)
        k4 = liouvillian_apply(model, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i] = rho
    return out


def liouvillian_matrix(model: LindbladModel) -> np.ndarray:
    """Matrix of the generator acting on row-major vectorized states."""
    n = model.dim
    eye = np.eye(n)
    h = model.hamiltonian
    mat = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c in model.lindblads:
        cdc = c.conj().T @ c
        mat += np.kron(c, c.conj()) - 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))
    return mat


def steady_state(model: LindbladModel) -> np.ndarray:
    """Unique stationary density matrix of the generator.

    Raises
    ------
    DegenerateSteadyStateError
        If the kernel of the vectorized generator is not one-dimensional
        (singular values below 1e-8 decide membership).
    """
    mat = liouvillian_matrix(model)
    _, svals, vh = np.linalg.svd(mat)
    kernel = svals < KERNEL_TOL
    if int(kernel.sum()) != 1:
        raise DegenerateSteadyStateError(
            f"generator kernel has dimension {int(kernel.sum())}, expected 1"
        )
    rho = vh[-1].conj().reshape(model.dim, model.dim)
    rho = 0.5 * (rho + rho.conj().T)
    trace = np.trace(rho).real
    if abs(trace) < KERNEL_TOL:
        raise DegenerateSteadyStateError("kernel vector has vanishing trace")
    rho = rho / trace
    residual = np.abs(liouvillian_apply(model, rho)).max()
    if residual > RESIDUAL_TOL:
        raise DegenerateSteadyStateError(f"stationary residual {residual} too large")
    return rho


def trace_distance(a, b) -> float:
    """Half the trace norm of the difference of two Hermitian matrices."""
    diff = np.asarray(a, dtype=complex) - np.asarray(b, dtype=complex)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum())


@dataclass
class EnsembleSummary:
    """Trajectory-average versus reference comparison on a time grid."""

    times: np.ndarray
    mean_states: np.ndarray
    trace_distances: np.ndarray
    standard_errors: np.ndarray
    n_trajectories: int

    def passed(self, threshold: float = 3.0, atol: float = 1e-12) -> bool:
        """True when every distance is within threshold standard errors."""
        return bool(
            np.all(self.trace_distances <= threshold * self.standard_errors + atol)
        )

    def to_dict(self, threshold: float = 3.0) -> dict:
        return {
            "times": [float(t) for t in self.times],
            "trace_distance": [float(d) for d in self.trace_distances],
            "stderr": [float(s) for s in self.standard_errors],
            "n_trajectories": int(self.n_trajectories),
            "passed": self.passed(threshold),
        }


def ensemble_summary(times, states, reference) -> EnsembleSummary:
    """Compare a trajectory ensemble against reference density matrices.

    Parameters
    ----------
    times:
        Shared time grid of length T.
    states:
        Normalized state vectors of shape ``(M, T, N)``.
    reference:
        Density matrices of shape ``(T, N, N)`` on the same grid.

    Notes
    -----
    The standard error of each trace distance is estimated by the jackknife
    over trajectories: recompute the distance with each trajectory left out
    and rescale the spread of the leave-one-out values.
    """
    t_arr = np.asarray(times, dtype=float)
    psi = np.asarray(states, dtype=complex)
    ref = np.asarray(reference, dtype=complex)
    if psi.ndim != 3:
        raise ValueError(f"states must have shape (M, T, N), got {psi.shape}")
    m, t_len, n = psi.shape
    if ref.shape != (t_len, n, n) or t_arr.shape[0] != t_len:
        raise ValueError("times, states, and reference grids do not match")
    if m < 2:
        raise ValueError("jackknife needs at least two trajectories")
    mean_states = np.empty((t_len, n, n), dtype=complex)
    distances = np.empty(t_len)
    errors = np.empty(t_len)
    for t in range(t_len):
        proj = np.einsum("mi,mj->mij", psi[:, t], psi[:, t].conj())
        mean = proj.mean(axis=0)
        mean_states[t] = mean
        distances[t] = trace_distance(mean, ref[t])
        loo = (m * mean[None] - proj) / (m - 1) - ref[t][None]
        loo = 0.5 * (loo + np.swapaxes(loo, 1, 2).conj())
        d_loo = 0.5 * np.abs(np.linalg.eigvalsh(loo)).sum(axis=1)
        errors[t] = np.sqrt((m - 1) / m * ((d_loo - d_loo.mean()) ** 2).sum())
    return EnsembleSummary(
        times=t_arr,
        mean_states=mean_states,
        trace_distances=distances,
        standard_errors=errors,
        n_trajectories=m,
    )
