"""Finite-dimensional open-system models and representation changes.

A model is a Hermitian Hamiltonian ``H`` together with a list of Lindblad
operators ``c_k`` acting on the same N-dimensional Hilbert space.  The
ensemble evolution is generated by

    d(rho)/dt = -i[H, rho] + sum_k (c_k rho c_k^dag - {c_k^dag c_k, rho}/2)

The generator is unchanged under two families of representation changes:
a unitary remixing of the Lindblad operators, and a c-number shift of each
Lindblad operator compensated by a Hamiltonian term.  Both are provided
here, along with the transition rate operator, whose invariance under the
same changes is a useful consistency probe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

# Hermiticity, unitarity, norm and trace checks share one absolute tolerance.
DEFAULT_TOL = 1e-10
# Rank decisions for the linear-independence check use a looser cutoff.
GRAM_RANK_TOL = 1e-8


def _as_complex_matrix(m, name: str) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def check_pure_state(state, dim: int | None = None) -> np.ndarray:
    """Validate a normalized state vector and return it as a complex array."""
    psi = np.asarray(state, dtype=complex)
    if psi.ndim != 1:
        raise ValueError(f"state must be a vector, got shape {psi.shape}")
    if dim is not None and psi.shape[0] != dim:
        raise ValueError(f"state has dimension {psi.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(psi.view(float))):
        raise ValueError("state contains non-finite entries")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > DEFAULT_TOL:
        raise ValueError(f"state norm {norm} is not 1 within {DEFAULT_TOL}")
    return psi


def check_density_matrix(rho, dim: int | None = None) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, positive spectrum."""
    r = _as_complex_matrix(rho, "density matrix")
    if dim is not None and r.shape[0] != dim:
        raise ValueError(f"density matrix has dimension {r.shape[0]}, expected {dim}")
    if np.abs(r - r.conj().T).max() > DEFAULT_TOL:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(r).real - 1.0) > DEFAULT_TOL or abs(np.trace(r).imag) > DEFAULT_TOL:
        raise ValueError("density matrix trace is not 1")
    if np.linalg.eigvalsh(r).min() < -DEFAULT_TOL:
        raise ValueError("density matrix has a negative eigenvalue")
    return r


def projector(state) -> np.ndarray:
    """Rank-one density matrix |psi><psi| for a normalized state vector."""
    psi = check_pure_state(state)
    return np.outer(psi, psi.conj())


def matrix_to_pairs(m) -> list:
    """Encode a complex matrix as row-major nested ``[re, im]`` pairs."""
    a = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_pairs(rows) -> np.ndarray:
    """Decode a matrix from row-major nested ``[re, im]`` pairs."""
    try:
        a = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix encoding: {exc}") from exc
    if a.ndim != 3 or a.shape[2] != 2:
        raise ValueError(f"matrix encoding must have shape (rows, cols, 2), got {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """Hamiltonian plus Lindblad operators defining a Markovian generator.

    Parameters
    ----------
    hamiltonian:
        Hermitian ``(N, N)`` matrix.
    lindblads:
        Sequence of ``(N, N)`` matrices ``c_k``.  Together with the identity
        they must be linearly independent, otherwise the noise channels are
        redundant and the parameterization below is degenerate.
    """

    hamiltonian: np.ndarray
    lindblads: tuple = field(default=())

    def __post_init__(self):
        h = _as_complex_matrix(self.hamiltonian, "hamiltonian")
        if np.abs(h - h.conj().T).max() > DEFAULT_TOL:
            raise ValueError("hamiltonian is not Hermitian")
        cs = tuple(_as_complex_matrix(c, f"lindblads[{k}]") for k, c in enumerate(self.lindblads))
        for k, c in enumerate(cs):
            if c.shape != h.shape:
                raise ValueError(f"lindblads[{k}] has shape {c.shape}, expected {h.shape}")
        n = h.shape[0]
        vecs = np.stack([np.eye(n, dtype=complex).ravel()] + [c.ravel() for c in cs])
        gram = vecs.conj() @ vecs.T
        rank = int(np.sum(np.linalg.eigvalsh(gram) > GRAM_RANK_TOL))
        if rank != len(cs) + 1:
            raise ValueError("identity and Lindblad operators are linearly dependent")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "lindblads", cs)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def num_lindblads(self) -> int:
        return len(self.lindblads)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "hamiltonian": matrix_to_pairs(self.hamiltonian),
            "lindblads": [matrix_to_pairs(c) for c in self.lindblads],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LindbladModel":
        try:
            dim = int(data["dim"])
            h = matrix_from_pairs(data["hamiltonian"])
            cs = tuple(matrix_from_pairs(c) for c in data.get("lindblads", []))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed model object: {exc}") from exc
        if h.shape[0] != dim:
            raise ValueError(f"declared dim {dim} does not match hamiltonian shape {h.shape}")
        return cls(hamiltonian=h, lindblads=cs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "LindbladModel":
        return cls.from_dict(json.loads(text))


def expectation(op, state) -> complex:
    """Expectation value ``<op>`` in a pure state or density matrix.

    Parameters
    ----------
    op:
        ``(N, N)`` operator.
    state:
        Either a state vector of length N or an ``(N, N)`` density matrix.
    """
    a = np.asarray(op, dtype=complex)
    s = np.asarray(state, dtype=complex)
    if s.ndim == 1:
        return complex(np.vdot(s, a @ s))
    if s.ndim == 2:
        return complex(np.trace(a @ s))
    raise ValueError(f"state must be a vector or matrix, got shape {s.shape}")


def liouvillian_apply(model: LindbladModel, rho) -> np.ndarray:
    """Apply the Markovian generator to a Hermitian matrix."""
    r = _as_complex_matrix(rho, "rho")
    if r.shape[0] != model.dim:
        raise ValueError(f"rho has dimension {r.shape[0]}, expected {model.dim}")
    h = model.hamiltonian
    out = -1j * (h @ r - r @ h)
    for c in model.lindblads:
        cdc = c.conj().T @ c
        out += c @ r @ c.conj().T - 0.5 * (cdc @ r + r @ cdc)
    return out


def rotate_lindblads(model: LindbladModel, t_matrix) -> LindbladModel:
    """Remix the Lindblad operators by a unitary matrix, c_k -> T_kl c_l.

    The Hamiltonian is unchanged; the generator is left invariant.
    """
    t = np.asarray(t_matrix, dtype=complex)
    k = model.num_lindblads
    if t.shape != (k, k):
        raise ValueError(f"T must have shape ({k}, {k}), got {t.shape}")
    if np.abs(t.conj().T @ t - np.eye(k)).max() > DEFAULT_TOL:
        raise ValueError("T is not unitary")
    rotated = tuple(
        sum(t[i, l] * model.lindblads[l] for l in range(k)) for i in range(k)
    )
    return LindbladModel(hamiltonian=model.hamiltonian, lindblads=rotated)


def shift_lindblads(model: LindbladModel, chi) -> LindbladModel:
    """Shift each Lindblad operator by a c-number, c_k -> c_k + chi_k.

    The Hamiltonian picks up (i/2) sum_k (chi_k c_k^dag - chi_k^* c_k),
    which is exactly the compensation that leaves the generator invariant.
    """
    x = np.asarray(chi, dtype=complex).reshape(-1)
    k = model.num_lindblads
    if x.shape[0] != k:
        raise ValueError(f"chi must have length {k}, got {x.shape[0]}")
    eye = np.eye(model.dim, dtype=complex)
    shifted = tuple(c + xk * eye for c, xk in zip(model.lindblads, x))
    h = model.hamiltonian + (0.5j) * sum(
        xk * c.conj().T - xk.conjugate() * c for c, xk in zip(model.lindblads, x)
    )
    return LindbladModel(hamiltonian=h, lindblads=shifted)


def transition_rate_operator(model: LindbladModel, state) -> np.ndarray:
    """Positive operator W = sum_k (c_k - <c_k>) P (c_k - <c_k>)^dag.

    W annihilates the state it is built from, and it is invariant under
    both Lindblad remixing and shifting; its trace is the total rate at
    which the state is driven off its ray.
    """
    psi = check_pure_state(state, model.dim)
    p = np.outer(psi, psi.conj())
    w = np.zeros((model.dim, model.dim), dtype=complex)
    for c in model.lindblads:
        d = c - expectation(c, psi) * np.eye(model.dim)
        w += d @ p @ d.conj().T
    return w


def transition_rate(model: LindbladModel, state) -> float:
    """Trace of the transition rate operator, sum_k (<c_k^dag c_k> - |<c_k>|^2)."""
    psi = check_pure_state(state, model.dim)
    total = 0.0
    for c in model.lindblads:
        total += expectation(c.conj().T @ c, psi).real - abs(expectation(c, psi)) ** 2
    return float(total)
