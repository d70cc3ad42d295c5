"""Driven two-level emitter: the standard testbed for record correlations.

A resonantly driven atom with decay rate ``gamma`` and Rabi frequency
``omega`` has Hamiltonian ``(omega/2) sigma_x`` and the single Lindblad
operator ``sqrt(gamma) sigma_minus``.  Basis order is (excited, ground), so
``sigma_z`` is +1 on the excited state, and the Bloch components obey

    x' = -(gamma/2) x
    y' = -(gamma/2) y - omega z
    z' = omega y - gamma (z + 1)

Five record correlations are bundled as named scenarios: the two quadrature
records u = +1 and u = -1, the uncorrelated record u = 0, and the two
extremal state-dependent choices.  For each, the mean record is available
in closed form; the closed forms are redundant consequences of the general
mean-current formula and are kept as cross-checks only.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .operators import LindbladModel, check_pure_state, expectation, projector
from .trajectory import run_ensemble
from .unravelings import (
    FixedU,
    Heterodyne,
    InvariantStateDep,
    UnravelingSpec,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

KET_EXCITED = np.array([1, 0], dtype=complex)
KET_GROUND = np.array([0, 1], dtype=complex)

FIGURE_HEADER = ("t", "x", "y", "z", "re_J", "im_J")

SCENARIOS = (
    "homodyne_x",
    "homodyne_y",
    "heterodyne",
    "invariant_plus",
    "invariant_minus",
)


@dataclass(frozen=True)
class AtomParams:
    """Decay rate and Rabi frequency of the driven emitter."""

    gamma: float = 1.0
    omega: float = 10.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.omega < 0:
            raise ValueError(f"omega must be non-negative, got {self.omega}")


def build_atom(params: AtomParams) -> LindbladModel:
    """Model with H = (omega/2) sigma_x and c = sqrt(gamma) sigma_minus."""
    return LindbladModel(
        hamiltonian=0.5 * params.omega * SIGMA_X,
        lindblads=(np.sqrt(params.gamma) * SIGMA_MINUS,),
    )


def plus_x_state() -> np.ndarray:
    """The +1 eigenstate of sigma_x, the conventional initial condition."""
    return np.array([1, 1], dtype=complex) / np.sqrt(2.0)


def bloch(state) -> np.ndarray:
    """Bloch components (x, y, z) of a state vector or density matrix."""
    s = np.asarray(state, dtype=complex)
    rho = projector(s) if s.ndim == 1 else s
    return np.array(
        [expectation(p, rho).real for p in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
    )


def scenario_spec(name: str) -> UnravelingSpec:
    """Unraveling specification for one of the named scenarios."""
    if name == "homodyne_x":
        return FixedU(u=np.array([[1.0]], dtype=complex))
    if name == "homodyne_y":
        return FixedU(u=np.array([[-1.0]], dtype=complex))
    if name == "heterodyne":
        return Heterodyne()
    if name == "invariant_plus":
        return InvariantStateDep(sign=1)
    if name == "invariant_minus":
        return InvariantStateDep(sign=-1)
    raise ValueError(f"unknown scenario {name!r}; choose one of {SCENARIOS}")


def scenario_expected_current(params: AtomParams, spec: UnravelingSpec, state) -> complex:
    """Closed-form mean record for a named scenario's specification.

    In Bloch terms with root ``g = sqrt(gamma)``: u=+1 gives ``g x``; u=-1
    gives ``g (<s> - <s^dag>)``, i.e. ``-i g y``; u=0 gives ``g <s>``; the
    extremal state-dependent choices give 0 (sign +1) and ``2 g <s>``
    (sign -1).  Each equals the general mean-current formula evaluated at
    the resolved correlation matrix.
    """
    psi = check_pure_state(state, 2)
    g = np.sqrt(params.gamma)
    s = expectation(SIGMA_MINUS, psi)
    if isinstance(spec, FixedU) and spec.u.shape == (1, 1):
        val = complex(spec.u[0, 0])
        if abs(val - 1.0) < 1e-12:
            return complex(g * bloch(psi)[0])
        if abs(val + 1.0) < 1e-12:
            return complex(-1j * g * bloch(psi)[1])
        raise ValueError("no closed form for this fixed correlation value")
    if isinstance(spec, Heterodyne):
        return complex(g * s)
    if isinstance(spec, InvariantStateDep):
        if spec.sign == 1:
            return 0.0 + 0.0j
        return complex(2.0 * g * s)
    raise ValueError(f"no closed form for specification {spec!r}")


def z_drift_residual(states, dt: float, params: AtomParams) -> np.ndarray:
    """Per-step difference between the sampled z motion and its drift.

    For consecutive recorded states (stride 1) returns
    ``z_{i+1} - z_i - dt * (omega y_i - gamma (z_i + 1))``.  Under the
    extremal sign=+1 correlations the noise leaves z entirely, so the
    residual shrinks linearly with dt; for uncorrelated records it carries
    a square-root-of-dt noise component.
    """
    psi = np.asarray(states, dtype=complex)
    if psi.ndim != 2 or psi.shape[0] < 2:
        raise ValueError("need at least two consecutive states")
    z = (np.abs(psi[:, 0]) ** 2 - np.abs(psi[:, 1]) ** 2).real
    y = 2.0 * (psi[:, 0].conj() * psi[:, 1]).imag
    drift = params.omega * y[:-1] - params.gamma * (z[:-1] + 1.0)
    return z[1:] - z[:-1] - dt * drift


def sme_u1_decomposed_step(rho, dzeta: float, params: AtomParams, dt: float) -> np.ndarray:
    """One u = +1 projector step written in commutator/anticommutator form.

    The noise term splits into a Hamiltonian-like rotation and a positive
    back-action piece:
    ``sqrt(gamma) ({sigma_x - <sigma_x>, P}/2 - (i/2)[sigma_y, P]) dzeta``.
    Identical to the generic projector step with u = +1 and a real
    increment, including the rank-one re-projection.
    """
    from .operators import check_density_matrix, liouvillian_apply

    model = build_atom(params)
    p = check_density_matrix(rho, 2)
    g = np.sqrt(params.gamma)
    x_val = expectation(SIGMA_X, p).real
    centered_x = SIGMA_X - x_val * np.eye(2)
    noise = g * (
        0.5 * (centered_x @ p + p @ centered_x) - 0.5j * (SIGMA_Y @ p - p @ SIGMA_Y)
    )
    new = p + dt * liouvillian_apply(model, p) + float(dzeta) * noise
    evals, evecs = np.linalg.eigh(new)
    vec = evecs[:, -1]
    return np.outer(vec, vec.conj())


def write_figure_csvs(
    params: AtomParams,
    dt: float,
    t_max: float,
    seed: int,
    output_dir,
    record_stride: int = 1,
) -> dict:
    """Run one trajectory per scenario and write Bloch/record CSV files.

    Every scenario starts from the +x eigenstate and uses the stream keyed
    by ``(seed, scenario_index)``.  Returns the manifest that is also
    written to ``manifest.json``.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_atom(params)
    steps = int(round(t_max / dt))
    manifest = {
        "parameters": {
            "gamma": params.gamma,
            "omega": params.omega,
            "dt": dt,
            "t_max": t_max,
            "record_stride": record_stride,
        },
        "seed": int(seed),
        "scenarios": {},
    }
    for index, name in enumerate(SCENARIOS):
        run = run_ensemble(
            model,
            scenario_spec(name),
            plus_x_state(),
            n_traj=1,
            dt=dt,
            steps=steps,
            seed=seed,
            record_stride=record_stride,
            start_index=index,
            workers=1,
        )
        path = out / f"{name}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(FIGURE_HEADER)
            for row in range(run.times.shape[0]):
                b = bloch(run.states[0, row])
                current = run.currents[0, row, 0]
                writer.writerow(
                    [
                        f"{run.times[row]:.10g}",
                        f"{b[0]:.12g}",
                        f"{b[1]:.12g}",
                        f"{b[2]:.12g}",
                        f"{current.real:.12g}",
                        f"{current.imag:.12g}",
                    ]
                )
        manifest["scenarios"][name] = {"file": path.name, "trajectory_index": index}
    with (out / "manifest.json").open("w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest
