"""Stochastic pure-state trajectories conditioned on diffusive records.

Given a model and a correlation matrix ``u`` for the record noise, the
conditioned state diffuses according to (Ito form, projector P)

    dP = L(P) dt + sum_k [(c_k - <c_k>) P dxi_k^* + H.c.]

and the complex record increments are

    J_k dt = <u_kj c_j^dag + c_k> dt + dxi_k

Three numerically distinct but statistically equivalent steppers are
provided.  The default propagates an unnormalized vector with the linear
generator ``-iH - sum_k c_k^dag c_k / 2 + sum_k J_k^* c_k`` and renormalizes,
which is the cheapest form and the one used by the batched ensemble runner.
A direct Euler step of the projector equation and a normalized nonlinear
vector step are available for cross-checks; pairwise differences under a
shared noise path vanish as the step size shrinks.

Each trajectory owns a counter-based pseudorandom stream derived from
``(seed, trajectory_index)``, so results are reproducible and independent
of how trajectories are batched or distributed over workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .operators import LindbladModel, check_density_matrix, check_pure_state
from .unravelings import UnravelingSpec, sample_increments, validate_u

# A propagated vector whose norm falls below this has left the reachable
# manifold (the step size is far too large); stop rather than renormalize.
NORM_FLOOR = 1e-12
# Conditioning on a record of likelihood below this is numerically void.
LIKELIHOOD_FLOOR = 1e-14
# Projector inputs may deviate from idempotency by at most this much.
PROJECTOR_TOL = 1e-8
# Trajectories are executed in fixed-size index blocks so that results do
# not depend on the worker count.
CHUNK = 256
# Standard normals are pregenerated in time blocks of this many steps.
NOISE_BLOCK = 4096


class NormCollapseError(RuntimeError):
    """The propagated vector norm collapsed below the safe floor."""


class VanishingLikelihoodError(RuntimeError):
    """A measurement outcome with numerically zero probability was applied."""


def trajectory_stream(seed: int, index: int) -> np.random.Generator:
    """Counter-based noise stream owned by trajectory ``index``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class TrajectoryConfig:
    """Run parameters for a single conditioned trajectory.

    ``record_stride`` controls how often the state and record are kept:
    every ``record_stride``-th step start is recorded.
    """

    dt: float
    steps: int
    seed: int
    unraveling: UnravelingSpec
    trajectory_index: int = 0
    record_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.steps < 1:
            raise ValueError(f"steps must be at least 1, got {self.steps}")
        if self.record_stride < 1:
            raise ValueError(f"record_stride must be at least 1, got {self.record_stride}")


@dataclass
class MeasurementRecord:
    """Recorded times, complex currents, and raw noise increments."""

    times: np.ndarray
    currents: np.ndarray
    increments: np.ndarray


def expected_current(model: LindbladModel, u, state) -> np.ndarray:
    """Mean of the record, ``E[J]_k = <u_kj c_j^dag + c_k>``."""
    psi = check_pure_state(state, model.dim)
    a = np.asarray(u, dtype=complex)
    s = np.array([np.vdot(psi, c @ psi) for c in model.lindblads])
    return a @ s.conj() + s


def _linear_generator(model: LindbladModel) -> np.ndarray:
    h = model.hamiltonian
    gen = -1j * h.astype(complex)
    for c in model.lindblads:
        gen -= 0.5 * (c.conj().T @ c)
    return gen


def step_linear(model: LindbladModel, u, state, dxi, dt: float):
    """One linear-generator step; returns the renormalized state and J.

    The unnormalized update is
    ``phi += dt * (-iH - sum c^dag c / 2 + sum J_k^* c_k) phi`` with the
    currents built from the pre-step expectations and the supplied
    increments; the returned state is ``phi`` renormalized.
    """
    psi = check_pure_state(state, model.dim)
    inc = np.asarray(dxi, dtype=complex).reshape(-1)
    if inc.shape[0] != model.num_lindblads:
        raise ValueError(f"expected {model.num_lindblads} increments, got {inc.shape[0]}")
    ej = expected_current(model, u, psi)
    j_dt = ej * dt + inc
    phi = psi + dt * (_linear_generator(model) @ psi)
    for k, c in enumerate(model.lindblads):
        phi = phi + j_dt[k].conjugate() * (c @ psi)
    norm = np.linalg.norm(phi)
    if norm < NORM_FLOOR:
        raise NormCollapseError(f"state norm collapsed to {norm}")
    return phi / norm, j_dt / dt


def step_sme(model: LindbladModel, rho, dxi, dt: float) -> np.ndarray:
    """One Euler step of the projector equation, re-projected to rank one.

    The Euler update is Hermitian and trace preserving but leaks purity at
    second order in dt; the dominant eigenvector is taken as the new state.
    """
    p = check_density_matrix(rho, model.dim)
    if np.abs(p @ p - p).max() > PROJECTOR_TOL:
        raise ValueError("input density matrix is not a rank-one projector")
    inc = np.asarray(dxi, dtype=complex).reshape(-1)
    if inc.shape[0] != model.num_lindblads:
        raise ValueError(f"expected {model.num_lindblads} increments, got {inc.shape[0]}")
    from .operators import liouvillian_apply

    new = p + dt * liouvillian_apply(model, p)
    eye = np.eye(model.dim)
    for k, c in enumerate(model.lindblads):
        d = c - np.trace(c @ p) * eye
        term = d @ p * inc[k].conjugate()
        new = new + term + term.conj().T
    evals, evecs = np.linalg.eigh(new)
    vec = evecs[:, -1]
    return np.outer(vec, vec.conj())


def effective_hamiltonian(model: LindbladModel, state) -> np.ndarray:
    """Non-Hermitian drift generator of the normalized nonlinear step.

    ``H_eff = H - (i/2) sum_k (c_k^dag c_k - 2 <c_k>^* c_k + <c_k>^* <c_k>)``.
    Changing the operator representation changes ``H_eff`` only by a
    c-number multiple of the identity.
    """
    psi = check_pure_state(state, model.dim)
    eye = np.eye(model.dim)
    h = model.hamiltonian.astype(complex)
    for c in model.lindblads:
        s = np.vdot(psi, c @ psi)
        h = h - 0.5j * (c.conj().T @ c - 2.0 * s.conjugate() * c + (s.conjugate() * s) * eye)
    return h


def step_nonlinear_sse(model: LindbladModel, state, dxi, dt: float) -> np.ndarray:
    """One normalized nonlinear vector step driven directly by the increments."""
    psi = check_pure_state(state, model.dim)
    inc = np.asarray(dxi, dtype=complex).reshape(-1)
    if inc.shape[0] != model.num_lindblads:
        raise ValueError(f"expected {model.num_lindblads} increments, got {inc.shape[0]}")
    eye = np.eye(model.dim)
    new = psi + dt * (-1j * (effective_hamiltonian(model, psi) @ psi))
    for k, c in enumerate(model.lindblads):
        s = np.vdot(psi, c @ psi)
        new = new + inc[k].conjugate() * ((c - s * eye) @ psi)
    norm = np.linalg.norm(new)
    if norm < NORM_FLOOR:
        raise NormCollapseError(f"state norm collapsed to {norm}")
    return new / norm


def measurement_operator(model: LindbladModel, currents, dt: float) -> np.ndarray:
    """Kraus operator of one record sample,
    ``1 - iH dt - sum c^dag c dt / 2 + sum J_k^* c_k dt``.

    Averaged over the zero-mean record measure with correlations ``u``,
    the operators resolve the identity up to O(dt^2).
    """
    j = np.asarray(currents, dtype=complex).reshape(-1)
    if j.shape[0] != model.num_lindblads:
        raise ValueError(f"expected {model.num_lindblads} currents, got {j.shape[0]}")
    omega = np.eye(model.dim, dtype=complex) + dt * _linear_generator(model)
    for k, c in enumerate(model.lindblads):
        omega = omega + dt * j[k].conjugate() * c
    return omega


def apply_measurement(omega, rho) -> np.ndarray:
    """Condition a state on one record sample: Omega rho Omega^dag, normalized."""
    o = np.asarray(omega, dtype=complex)
    r = check_density_matrix(rho, o.shape[0])
    new = o @ r @ o.conj().T
    weight = np.trace(new).real
    if weight <= LIKELIHOOD_FLOOR:
        raise VanishingLikelihoodError(f"record likelihood {weight} is numerically zero")
    return new / weight


def gauge_transform_step(state, f, dxi) -> np.ndarray:
    """Multiply the state by the random phase exp(i (f dxi^* + f^* dxi)).

    The exponent is real, so the ray (and every expectation value) is
    unchanged; record statistics are likewise untouched.
    """
    psi = np.asarray(state, dtype=complex)
    fv = np.asarray(f, dtype=complex).reshape(-1)
    inc = np.asarray(dxi, dtype=complex).reshape(-1)
    dchi = float(np.sum(fv * inc.conj() + fv.conj() * inc).real)
    return np.exp(1j * dchi) * psi


def run_trajectory(model: LindbladModel, config: TrajectoryConfig, initial):
    """Propagate one conditioned trajectory with the linear stepper.

    Records the state, current, and increment at every
    ``record_stride``-th step start.

    Returns
    -------
    (ndarray, MeasurementRecord)
        States of shape ``(n_rec, N)`` and the matching record.
    """
    psi = check_pure_state(initial, model.dim)
    stream = trajectory_stream(config.seed, config.trajectory_index)
    spec = config.unraveling
    static_u = None if spec.state_dependent else validate_u(spec.resolve(model))
    n_rec = (config.steps + config.record_stride - 1) // config.record_stride
    k = model.num_lindblads
    times = np.empty(n_rec)
    states = np.empty((n_rec, model.dim), dtype=complex)
    currents = np.empty((n_rec, k), dtype=complex)
    increments = np.empty((n_rec, k), dtype=complex)
    rec = 0
    for i in range(config.steps):
        u = static_u if static_u is not None else validate_u(spec.resolve(model, psi))
        dxi = sample_increments(u, config.dt, stream)
        new_psi, current = step_linear(model, u, psi, dxi, config.dt)
        if i % config.record_stride == 0:
            times[rec] = i * config.dt
            states[rec] = psi
            currents[rec] = current
            increments[rec] = dxi
            rec += 1
        psi = new_psi
    record = MeasurementRecord(times=times, currents=currents, increments=increments)
    return states, record


@dataclass
class EnsembleRun:
    """States and currents of a batch of trajectories on a shared grid."""

    times: np.ndarray
    states: np.ndarray
    currents: np.ndarray


def _resolve_specs(unraveling, n_traj: int) -> list:
    if isinstance(unraveling, (list, tuple)):
        specs = list(unraveling)
        if len(specs) != n_traj:
            raise ValueError(f"got {len(specs)} unravelings for {n_traj} trajectories")
        return specs
    return [unraveling] * n_traj


def _noise_blocks(streams, steps: int, width: int):
    """Yield per-step standard normal slabs of shape (m, width)."""
    done = 0
    while done < steps:
        nb = min(NOISE_BLOCK, steps - done)
        block = np.empty((len(streams), nb, width))
        for m, stream in enumerate(streams):
            block[m] = stream.standard_normal((nb, width))
        for j in range(nb):
            yield block[:, j]
        done += nb


def _run_chunk_single_channel(model, specs, initial, dt, steps, seed, index0, stride):
    """Vectorized linear stepping for K = 1, any mix of unravelings."""
    m = len(specs)
    n = model.dim
    c = model.lindblads[0]
    c_sq = c @ c
    gen = _linear_generator(model)
    psi = np.tile(initial, (m, 1)).astype(complex)
    streams = [trajectory_stream(seed, index0 + i) for i in range(m)]

    state_dep = np.array([s.state_dependent for s in specs])
    signs = np.array(
        [float(getattr(s, "sign", 0.0)) if s.state_dependent else 0.0 for s in specs]
    )
    u_const = np.array(
        [
            0.0 if s.state_dependent else complex(validate_u(s.resolve(model))[0, 0])
            for s in specs
        ],
        dtype=complex,
    )
    any_dep = bool(state_dep.any())

    n_rec = (steps + stride - 1) // stride
    times = np.empty(n_rec)
    states = np.empty((m, n_rec, n), dtype=complex)
    currents = np.empty((m, n_rec, 1), dtype=complex)

    gen_t = np.ascontiguousarray(gen.T)
    c_t = np.ascontiguousarray(c.T)
    c_sq_t = np.ascontiguousarray(c_sq.T)
    rec = 0
    step_index = 0
    from .unravelings import MOMENT_FLOOR

    for z in _noise_blocks(streams, steps, 2):
        c_psi = psi @ c_t
        s = np.einsum("mi,mi->m", psi.conj(), c_psi)
        if any_dep:
            second = np.einsum("mi,mi->m", psi.conj(), psi @ c_sq_t)
            moment = second - s * s
            scale = np.abs(moment)
            safe = np.where(scale > MOMENT_FLOOR, scale, 1.0)
            u_dep = np.where(scale > MOMENT_FLOOR, signs * moment / safe, 0.0)
            u = np.where(state_dep, u_dep, u_const)
        else:
            u = u_const
        r = np.abs(u)
        phi = 0.5 * np.angle(u)
        amp_plus = np.sqrt(dt * (1.0 + r) / 2.0)
        amp_minus = np.sqrt(np.clip(dt * (1.0 - r) / 2.0, 0.0, None))
        dxi = np.exp(1j * phi) * (amp_plus * z[:, 0] + 1j * amp_minus * z[:, 1])
        j_dt = (u * s.conj() + s) * dt + dxi
        if step_index % stride == 0:
            times[rec] = step_index * dt
            states[:, rec] = psi
            currents[:, rec, 0] = j_dt / dt
            rec += 1
        psi = psi + dt * (psi @ gen_t) + j_dt.conj()[:, None] * c_psi
        norms = np.sqrt(np.einsum("mi,mi->m", psi.conj(), psi).real)
        if norms.min() < NORM_FLOOR:
            raise NormCollapseError(f"state norm collapsed to {norms.min()}")
        psi /= norms[:, None]
        step_index += 1
    return times, states, currents


def _run_chunk_shared_u(model, spec, m, initial, dt, steps, seed, index0, stride):
    """Vectorized linear stepping for one shared constant u, any K."""
    n = model.dim
    k = model.num_lindblads
    u = validate_u(spec.resolve(model))
    from .unravelings import CLAMP_TOL, CovarianceError, real_embedding

    cov = real_embedding(u, dt)
    evals, evecs = np.linalg.eigh(cov)
    if evals.min() < -CLAMP_TOL:
        raise CovarianceError(f"covariance eigenvalue {evals.min()} below clamp tolerance")
    color = evecs @ np.diag(np.sqrt(np.clip(evals, 0.0, None)))

    cs = np.stack(model.lindblads)
    gen_t = np.ascontiguousarray(_linear_generator(model).T)
    psi = np.tile(initial, (m, 1)).astype(complex)
    streams = [trajectory_stream(seed, index0 + i) for i in range(m)]

    n_rec = (steps + stride - 1) // stride
    times = np.empty(n_rec)
    states = np.empty((m, n_rec, n), dtype=complex)
    currents = np.empty((m, n_rec, k), dtype=complex)
    rec = 0
    step_index = 0
    for z in _noise_blocks(streams, steps, 2 * k):
        x = z @ color.T
        dxi = x[:, :k] + 1j * x[:, k:]
        c_psi = np.einsum("kij,mj->mki", cs, psi)
        s = np.einsum("mi,mki->mk", psi.conj(), c_psi)
        j_dt = (s.conj() @ u.T + s) * dt + dxi
        if step_index % stride == 0:
            times[rec] = step_index * dt
            states[:, rec] = psi
            currents[:, rec] = j_dt / dt
            rec += 1
        psi = psi + dt * (psi @ gen_t) + np.einsum("mk,mki->mi", j_dt.conj(), c_psi)
        norms = np.sqrt(np.einsum("mi,mi->m", psi.conj(), psi).real)
        if norms.min() < NORM_FLOOR:
            raise NormCollapseError(f"state norm collapsed to {norms.min()}")
        psi /= norms[:, None]
        step_index += 1
    return times, states, currents


def _run_chunk(model, specs, initial, dt, steps, seed, index0, stride):
    k = model.num_lindblads
    if k == 1:
        return _run_chunk_single_channel(
            model, specs, initial, dt, steps, seed, index0, stride
        )
    first = specs[0]
    if not first.state_dependent and all(s == first for s in specs):
        return _run_chunk_shared_u(
            model, first, len(specs), initial, dt, steps, seed, index0, stride
        )
    # General fallback: one trajectory at a time.
    times = None
    states = []
    currents = []
    for i, spec in enumerate(specs):
        config = TrajectoryConfig(
            dt=dt,
            steps=steps,
            seed=seed,
            unraveling=spec,
            trajectory_index=index0 + i,
            record_stride=stride,
        )
        st, rec = run_trajectory(model, config, initial)
        times = rec.times
        states.append(st)
        currents.append(rec.currents)
    return times, np.stack(states), np.stack(currents)


def _run_chunk_star(args):
    return _run_chunk(*args)


def default_workers() -> int:
    """Worker count bounded by the UNRAVEL_THREADS environment variable."""
    raw = os.environ.get("UNRAVEL_THREADS")
    if raw is None:
        return 1
    value = int(raw)
    if value < 1:
        raise ValueError(f"UNRAVEL_THREADS must be a positive integer, got {raw!r}")
    return value


def run_ensemble(
    model: LindbladModel,
    unraveling,
    initial,
    n_traj: int,
    dt: float,
    steps: int,
    seed: int,
    record_stride: int = 1,
    start_index: int = 0,
    workers: int | None = None,
) -> EnsembleRun:
    """Propagate many trajectories and collect states and currents.

    ``unraveling`` is a single specification shared by all trajectories or a
    sequence assigning one per trajectory.  Trajectory ``i`` draws its noise
    from the stream keyed by ``(seed, start_index + i)``; work is split into
    fixed-size index blocks, so output is identical for any worker count.

    Parameters
    ----------
    workers:
        Process count.  Defaults to the UNRAVEL_THREADS environment
        variable, or 1.
    """
    psi0 = check_pure_state(initial, model.dim)
    specs = _resolve_specs(unraveling, n_traj)
    if workers is None:
        workers = default_workers()
    tasks = [
        (model, specs[lo : lo + CHUNK], psi0, dt, steps, seed, start_index + lo, record_stride)
        for lo in range(0, n_traj, CHUNK)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk_star, tasks))
    else:
        parts = [_run_chunk(*t) for t in tasks]
    times = parts[0][0]
    states = np.concatenate([p[1] for p in parts], axis=0)
    currents = np.concatenate([p[2] for p in parts], axis=0)
    return EnsembleRun(times=times, states=states, currents=currents)
