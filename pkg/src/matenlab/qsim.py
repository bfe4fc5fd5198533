"""Single-layer QAOA simulation with pure states and density matrices.

Qubit 0 is the leftmost tensor factor (most significant bit of a basis index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import channels as ch
from .pauli import Observable, expect_string

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class QuboProblem:
    """Cost Hamiltonian H = sum_i h_i Z_i + sum_{i<j} J_ij Z_i Z_j."""

    h: np.ndarray
    j: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=float).reshape(-1)
        j = np.array(self.j, dtype=float)
        n = h.size
        if n < 1:
            raise ValueError("need at least one qubit")
        if j.size == 0:
            j = np.zeros((n, n))
        if j.shape != (n, n):
            raise ValueError(f"coupling matrix must be {n}x{n}")
        if not np.allclose(j, j.T, atol=0.0) or np.any(np.diag(j) != 0):
            raise ValueError("coupling matrix must be symmetric with zero diagonal")
        h.setflags(write=False)
        j.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "j", j)

    @property
    def n_qubits(self) -> int:
        return self.h.size

    @classmethod
    def from_edges(cls, n: int, edges: dict[tuple[int, int], float], h: Sequence[float] | float = 0.0):
        j = np.zeros((n, n))
        for (a, b), w in edges.items():
            j[a, b] = j[b, a] = w
        hv = np.full(n, float(h)) if np.isscalar(h) else np.asarray(h, dtype=float)
        return cls(hv, j)

    def edges(self) -> list[tuple[int, int, float]]:
        n = self.n_qubits
        return [(a, b, self.j[a, b]) for a in range(n) for b in range(a + 1, n) if self.j[a, b] != 0]

    def hamiltonian(self) -> Observable:
        n = self.n_qubits
        obs = Observable(n)
        terms = [({q: "Z"}, self.h[q]) for q in range(n)]
        terms += [({a: "Z", b: "Z"}, w) for a, b, w in self.edges()]
        for sites, c in terms:
            obs = obs + Observable.single(n, sites, c)
        return obs

    def cost_diagonal(self) -> np.ndarray:
        """Diagonal of H in the computational basis (z = +1 for bit 0)."""
        n = self.n_qubits
        idx = np.arange(2**n)
        z = 1 - 2 * ((idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1)
        diag = z @ self.h
        for a, b, w in self.edges():
            diag = diag + w * z[:, a] * z[:, b]
        return diag.astype(float)


@dataclass(frozen=True)
class ParamSetting:
    gamma: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and math.isfinite(self.beta)):
            raise ValueError("QAOA angles must be finite")


def plus_state(n_qubits: int) -> np.ndarray:
    d = 2**n_qubits
    return np.full(d, 1.0 / math.sqrt(d), dtype=complex)


def _apply_1q_all(u: np.ndarray, psi: np.ndarray, n: int) -> np.ndarray:
    t = psi.reshape((2,) * n)
    for q in range(n):
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def rx_mixer(beta: float) -> np.ndarray:
    """exp(-i beta X)."""
    c, s = math.cos(beta), math.sin(beta)
    return np.array([[c, -1j * s], [-1j * s, c]])


def phase_unitary_diagonal(problem: QuboProblem, gamma: float) -> np.ndarray:
    return np.exp(-1j * gamma * problem.cost_diagonal())


def build_qaoa_state(problem: QuboProblem, setting: ParamSetting) -> np.ndarray:
    """exp(-i beta B) exp(-i gamma H) |+>^n with B = sum_i X_i."""
    n = problem.n_qubits
    psi = phase_unitary_diagonal(problem, setting.gamma) * plus_state(n)
    psi = _apply_1q_all(rx_mixer(setting.beta), psi, n)
    return psi / np.linalg.norm(psi)


def expect(state: np.ndarray, obs: Observable | str, atol: float = 1e-10) -> float:
    """Real expectation of an observable (or a single Pauli string) on a state or rho."""
    state = np.asarray(state)
    d = state.shape[0]
    if isinstance(obs, str):
        obs = Observable(len(obs), {obs: 1.0})
    if 2**obs.n_qubits != d or (state.ndim == 2 and state.shape != (d, d)):
        raise ValueError(f"observable on {obs.n_qubits} qubits vs state dimension {d}")
    total = 0.0
    imag = 0.0
    for letters, c in obs.items():
        re, im = expect_string(letters, state)
        total += c * re
        imag += c * im
    if abs(imag) > atol:
        raise ValueError(f"expectation has imaginary part {imag:.3e}")
    return total


def single_qubit_expectations(state: np.ndarray) -> np.ndarray:
    """Array of shape (n, 3) with <X_q>, <Y_q>, <Z_q> for every qubit q."""
    state = np.asarray(state)
    n = int(round(math.log2(state.shape[0])))
    if state.ndim == 1:
        t = state.reshape((2,) * n)
        out = np.empty((n, 3))
        for q in range(n):
            m = np.moveaxis(t, q, 0).reshape(2, -1)
            r = m @ m.conj().T
            out[q] = _bloch(r)
        return out
    t = state.reshape((2,) * (2 * n))
    out = np.empty((n, 3))
    for q in range(n):
        m = np.moveaxis(t, [q, n + q], [0, 1]).reshape(2, 2, -1)
        d_rest = m.shape[2]
        side = int(round(math.sqrt(d_rest)))
        r = np.einsum("abii->ab", m.reshape(2, 2, side, side))
        out[q] = _bloch(r)
    return out


def _bloch(r: np.ndarray) -> np.ndarray:
    return np.array([2 * r[0, 1].real, -2 * r[0, 1].imag, (r[0, 0] - r[1, 1]).real])


# single-qubit rotations taking each basis' eigenvectors to |0>, |1>
BASIS_ROTATIONS = {
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "Y": np.array([[1, -1j], [1, 1j]], dtype=complex) / math.sqrt(2),
    "Z": np.eye(2, dtype=complex),
}


def outcome_probabilities(state: np.ndarray, basis: str) -> np.ndarray:
    u = BASIS_ROTATIONS[basis]
    state = np.asarray(state, dtype=complex)
    n = int(round(math.log2(state.shape[0])))
    if state.ndim == 1:
        probs = np.abs(_apply_1q_all(u, state, n)) ** 2
    else:
        rho = state
        for q in range(n):
            rho = ch.apply_kraus([u], rho, [q])
        probs = np.real(np.diag(rho))
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def sample_basis(state: np.ndarray, basis: str, shots: int, rng: np.random.Generator):
    """Measure every qubit in ``basis`` ``shots`` times.

    Returns ``(means, counts)``: per-qubit means (n_plus - n_minus)/shots, and a
    histogram ``{bitstring: count}`` over the rotated computational basis.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if basis not in BASIS_ROTATIONS:
        raise ValueError(f"basis must be X, Y or Z, got {basis!r}")
    probs = outcome_probabilities(state, basis)
    n = int(round(math.log2(probs.size)))
    counts = rng.multinomial(shots, probs)
    idx = np.arange(probs.size)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    means = (counts @ (1 - 2 * bits)) / shots
    hist = {format(int(i), f"0{n}b"): int(c) for i, c in zip(idx, counts) if c}
    return means.astype(float), hist


def _apply_phase_diag(rho: np.ndarray, diag: np.ndarray) -> np.ndarray:
    return diag[:, None] * rho * diag.conj()[None, :]


def evolve_noisy_qaoa(problem: QuboProblem, setting: ParamSetting, noise: ch.NoiseSpec | None) -> np.ndarray:
    """Density matrix of the single-layer QAOA circuit under ``noise``."""
    n = problem.n_qubits
    if noise is None or noise.is_identity:
        psi = build_qaoa_state(problem, setting)
        return np.outer(psi, psi.conj())
    if noise.placement == "end":
        psi = build_qaoa_state(problem, setting)
        rho = np.outer(psi, psi.conj())
        for targets, chan in noise.channels:
            if max(targets) >= n:
                raise ValueError(f"targets {targets} exceed {n} qubits")
            rho = ch.apply(chan, rho, targets)
        return rho
    # interleaved stochastic over-rotations
    plus = plus_state(n)
    psi = phase_unitary_diagonal(problem, setting.gamma) * plus
    rho = np.outer(psi, psi.conj())
    if noise.omega > 0:
        rho = rho * zz_dephasing_mask(problem, noise.omega)
    u = rx_mixer(setting.beta)
    for q in range(n):
        rho = ch.apply_kraus([u], rho, [q])
    if noise.omega > 0:
        idx = np.arange(2**n)
        for q in range(n):
            flip = idx ^ (1 << (n - 1 - q))
            rho = (1 - noise.omega) * rho + noise.omega * rho[np.ix_(flip, flip)]
    return rho


def zz_dephasing_mask(problem: QuboProblem, omega: float) -> np.ndarray:
    """Elementwise factor of ZZ dephasing with strength ``omega`` on every coupled pair.

    Z_a Z_b rho Z_a Z_b multiplies entry (x, y) by s_x s_y, so each channel
    scales it by (1 - omega) + omega s_x s_y, with s the pair's ZZ eigenvalue.
    """
    n = problem.n_qubits
    idx = np.arange(2**n)
    z = 1 - 2 * ((idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1)
    mask = np.ones((idx.size, idx.size))
    for a, b, _ in problem.edges():
        s = (z[:, a] * z[:, b]).astype(float)
        mask *= (1 - omega) + omega * np.outer(s, s)
    return mask


def two_qubit_rdm(state: np.ndarray, i: int, j: int) -> np.ndarray:
    """Reduced density matrix of qubits (i, j), with i the more significant factor."""
    state = np.asarray(state)
    n = int(round(math.log2(state.shape[0])))
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"invalid qubit pair ({i}, {j}) for {n} qubits")
    if state.ndim == 1:
        m = np.moveaxis(state.reshape((2,) * n), [i, j], [0, 1]).reshape(4, -1)
        return m @ m.conj().T
    t = np.moveaxis(state.reshape((2,) * (2 * n)), [i, j, n + i, n + j], [0, 1, n, n + 1])
    rest = 2 ** (n - 2)
    return np.einsum("akbk->ab", t.reshape(4, rest, 4, rest))


def pair_pauli_expectations(rdm: np.ndarray) -> np.ndarray:
    """4x4 real array of <a (x) b> for a, b in (I, X, Y, Z) on a two-qubit state."""
    out = np.empty((4, 4))
    for a in range(4):
        for b in range(4):
            out[a, b] = np.real(np.trace(np.kron(ch.PAULIS[a], ch.PAULIS[b]) @ rdm))
    return out


def check_density_matrix(rho: np.ndarray) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit trace and PSD."""
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise ValueError(f"density matrix trace {np.trace(rho).real:.15f} != 1")
    lam = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
    if lam < -PSD_FLOOR:
        raise ValueError(f"density matrix has eigenvalue {lam:.3e}")


def random_state(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return v / np.linalg.norm(v)


def random_density_matrix(n_qubits: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    d = 2**n_qubits
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
