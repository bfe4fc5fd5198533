"""Heisenberg-picture (dual) channel algebra.

The dual of ``E(rho) = sum_kl chi_kl P_k rho P_l^dagger`` is
``E#(O) = sum_kl chi_kl P_l^dagger O P_k``; it satisfies
``Tr[O E(rho)] = Tr[E#(O) rho]``, so noise can be pushed onto observables and
expectation values evaluated on the ideal state.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import channels as ch
from .pauli import LETTERS, Observable
from .qsim import QuboProblem

COEFF_LABELS = tuple(a + b for a in "XYZ" for b in "IXYZ")


@dataclass(frozen=True, eq=False)
class CoeffVec:
    """Dual-map Pauli coefficients P_AB with A in {X,Y,Z}, B in {I,X,Y,Z}.

    ``values`` is ordered (P_XI, P_XX, P_XY, P_XZ, P_YI, ..., P_ZZ).
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape != (12,):
            raise ValueError("CoeffVec needs 12 values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, label: str) -> float:
        return float(self.values[COEFF_LABELS.index(label)])

    def rows(self) -> np.ndarray:
        """3x4 view: row A in (X, Y, Z), columns (I, X, Y, Z)."""
        return self.values.reshape(3, 4)

    @classmethod
    def identity(cls) -> "CoeffVec":
        return cls(np.array([0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1], dtype=float))

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(COEFF_LABELS, self.values)}


# --------------------------------------------------------------------------
# numeric duals
# --------------------------------------------------------------------------


def single_qubit_transfer(chan: ch.Channel) -> np.ndarray:
    """4x4 real matrix T with E#(sigma_a) = sum_b T[a, b] sigma_b, order (I, X, Y, Z)."""
    if chan.n_qubits != 1:
        raise ValueError("single_qubit_transfer needs a one-qubit channel")
    out = np.zeros((4, 4))
    for a in range(4):
        dual = ch.dual_matrix(chan, ch.PAULIS[a])
        obs = Observable.from_matrix(dual)
        out[a] = [obs.coeff(b) for b in LETTERS]
    return out


def _sitewise_dual(transfers: Sequence[np.ndarray], obs: Observable) -> Observable:
    out: dict[str, float] = {}
    for letters, c in obs.items():
        options = []
        for q, letter in enumerate(letters):
            row = transfers[q][LETTERS.index(letter)]
            options.append([(LETTERS[b], row[b]) for b in range(4) if row[b] != 0.0])
        for combo in itertools.product(*options):
            key = "".join(b for b, _ in combo)
            out[key] = out.get(key, 0.0) + c * math.prod(w for _, w in combo)
    return Observable(obs.n_qubits, out)


def dual_apply(chan: ch.Channel, obs: Observable, targets: Sequence[int] | None = None) -> Observable:
    """Pauli expansion of E#(O).

    A one-qubit channel applied to a multi-qubit observable without ``targets``
    acts identically on every qubit.  Products of one-qubit channels are applied
    site by site without forming dense matrices.
    """
    n = obs.n_qubits
    if targets is None and chan.n_qubits == 1 and n > 1:
        t = single_qubit_transfer(chan)
        return _sitewise_dual([t] * n, obs)
    if targets is None:
        if chan.n_qubits != n:
            raise ValueError(f"channel arity {chan.n_qubits} != observable size {n}")
        if isinstance(chan, ch.Product) and all(f.n_qubits == 1 for f in chan.factors):
            return _sitewise_dual([single_qubit_transfer(f) for f in chan.factors], obs)
    elif len(targets) != chan.n_qubits:
        raise ValueError(f"channel arity {chan.n_qubits} != {len(targets)} targets")
    dense = ch.dual_matrix(chan, obs.matrix(), targets)
    return Observable.from_matrix(dense)


# --------------------------------------------------------------------------
# closed-form single-qubit coefficients and the affine map to chi parameters
# --------------------------------------------------------------------------


def noisy_pauli_coeffs(chi: np.ndarray | ch.ChiVec12) -> CoeffVec:
    """Coefficients of the dual images of X, Y, Z for a single-qubit chi."""
    v = chi if isinstance(chi, ch.ChiVec12) else ch.params_from_chi(chi)
    p0, p1, p2, p3 = v.p0, v.p1, v.p2, v.p3
    vals = [
        4 * v.t01, p0 + p1 - p2 - p3, 2 * (v.t12 - v.v03), 2 * (v.t13 + v.v02),
        4 * v.t02, 2 * (v.t12 + v.v03), p0 + p2 - p1 - p3, 2 * (v.t23 - v.v01),
        4 * v.t03, 2 * (v.t13 - v.v02), 2 * (v.t23 + v.v01), p0 + p3 - p1 - p2,
    ]  # fmt: skip
    return CoeffVec(np.array(vals, dtype=float))


@dataclass(frozen=True, eq=False)
class AffineCoeffMap:
    """P = matrix @ chi12 + offset, chi12 ordered as ``channels.PARAM_NAMES``."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        cond = np.linalg.cond(self.matrix)
        if not np.isfinite(cond) or cond > 1e12:
            raise ValueError(f"coefficient map is singular (cond={cond:.3e})")

    def forward(self, v: ch.ChiVec12) -> CoeffVec:
        return CoeffVec(self.matrix @ v.as_array() + self.offset)

    def inverse(self, p: CoeffVec) -> ch.ChiVec12:
        return ch.ChiVec12.from_array(np.linalg.solve(self.matrix, p.values - self.offset))


_COEFF_MAP: AffineCoeffMap | None = None


def coeff_map() -> AffineCoeffMap:
    """The fixed affine map from the twelve chi parameters to CoeffVec."""
    global _COEFF_MAP
    if _COEFF_MAP is None:
        offset = noisy_pauli_coeffs(ch.ChiVec12()).values
        cols = [noisy_pauli_coeffs(ch.ChiVec12.from_array(e)).values - offset for e in np.eye(12)]
        _COEFF_MAP = AffineCoeffMap(np.array(cols).T, offset)
    return _COEFF_MAP


def chi_from_coeffs(p: CoeffVec) -> ch.ChiVec12:
    return coeff_map().inverse(p)


# --------------------------------------------------------------------------
# analytic transformed cost Hamiltonians
# --------------------------------------------------------------------------


def _z_image(problem: QuboProblem, z_coeffs: dict[str, float], zz_fn=None) -> Observable:
    """sum_i h_i E#(Z_i) + sum_{i<j} J_ij E#(Z_i) E#(Z_j) for a site-independent E#(Z)."""
    n = problem.n_qubits
    terms: dict[str, float] = {}

    def add(sites: dict[int, str], c: float) -> None:
        letters = ["I"] * n
        for q, s in sites.items():
            letters[q] = s
        key = "".join(letters)
        terms[key] = terms.get(key, 0.0) + c

    for i in range(n):
        for a, ca in z_coeffs.items():
            add({i: a} if a != "I" else {}, problem.h[i] * ca)
    for i, j, w in problem.edges():
        for a, ca in z_coeffs.items():
            for b, cb in z_coeffs.items():
                sites = {}
                if a != "I":
                    sites[i] = a
                if b != "I":
                    sites[j] = b
                add(sites, w * ca * cb)
    return Observable(n, terms)


def depolarizing_h_prime(p: float, problem: QuboProblem) -> Observable:
    """p H1 + p^2 H2."""
    return _z_image(problem, {"Z": p})


def amplitude_damping_h_prime(gamma: float, problem: QuboProblem) -> Observable:
    """(1-g) H1 + g sum h + (1-g)^2 H2 + g^2 sum J + g(1-g) sum_{i<j} J_ij (Z_i + Z_j)."""
    n = problem.n_qubits
    g = gamma
    h1 = Observable(n, {_one(n, i, "Z"): problem.h[i] for i in range(n)})
    h2 = Observable(n, {_two(n, i, j): w for i, j, w in problem.edges()})
    const = g * float(problem.h.sum()) + g * g * sum(w for _, _, w in problem.edges())
    cross = amplitude_damping_cross_term(problem)
    return (1 - g) * h1 + (1 - g) ** 2 * h2 + Observable.identity(n, const) + g * (1 - g) * cross


def amplitude_damping_cross_term(problem: QuboProblem) -> Observable:
    """sum_{i<j} J_ij (Z_i + Z_j) = sum_i Z_i sum_{j != i} J_ij."""
    n = problem.n_qubits
    return Observable(n, {_one(n, i, "Z"): float(problem.j[i].sum()) for i in range(n)})


def cross_term_scale(problem: QuboProblem, rtol: float = 1e-12) -> float | None:
    """Constant ``a`` with sum_{j != i} J_ij = a h_i for all i, or None if none exists."""
    row = problem.j.sum(axis=1)
    h = problem.h
    if np.all(h == 0):
        return None
    idx = np.flatnonzero(h != 0)
    a = row[idx[0]] / h[idx[0]]
    if np.allclose(row, a * h, rtol=rtol, atol=rtol):
        return float(a)
    return None


def generic_z_image(chi: np.ndarray) -> tuple[float, float, float, float]:
    """(p_I, p_X, p_Y, p_Z) with E#(Z) = p_I I + p_X X + p_Y Y + p_Z Z."""
    row = noisy_pauli_coeffs(chi).rows()[2]
    return float(row[0]), float(row[1]), float(row[2]), float(row[3])


def generic_h_prime(
    p_i: float,
    p_x: float,
    p_y: float,
    p_z: float,
    problem: QuboProblem,
    max_small_order: int | None = None,
    z2_symmetric: bool = False,
) -> Observable:
    """H' for an identical generic single-qubit channel on every qubit.

    With the defaults every cross term is kept.  ``max_small_order`` drops
    terms whose combined power of (p_I, p_X, p_Y) exceeds it, and
    ``z2_symmetric`` drops Pauli strings with an odd number of Y plus Z
    letters, whose expectation vanishes on Z2-symmetric states.  Both filters
    together (order 1, symmetric) give p_Z^2 H + p_Z p_Y sum_{i != j} J_ij Z_i Y_j
    for problems without fields.
    """
    n = problem.n_qubits
    coeffs = {"I": p_i, "X": p_x, "Y": p_y, "Z": p_z}
    terms: dict[str, float] = {}

    def add(sites: dict[int, str], c: float, order: int) -> None:
        if max_small_order is not None and order > max_small_order:
            return
        letters = ["I"] * n
        for q, s in sites.items():
            letters[q] = s
        key = "".join(letters)
        if z2_symmetric and sum(ch_ in "YZ" for ch_ in key) % 2 == 1:
            return
        terms[key] = terms.get(key, 0.0) + c

    for i in range(n):
        for a, ca in coeffs.items():
            add({i: a} if a != "I" else {}, problem.h[i] * ca, int(a != "Z"))
    for i, j, w in problem.edges():
        for a, ca in coeffs.items():
            for b, cb in coeffs.items():
                sites = {}
                if a != "I":
                    sites[i] = a
                if b != "I":
                    sites[j] = b
                add(sites, w * ca * cb, int(a != "Z") + int(b != "Z"))
    return Observable(n, terms)


def mixer_overrotation_h_prime(delta_beta: float, problem: QuboProblem) -> Observable:
    """H' for a constant extra mixer rotation exp(-i delta_beta X) on every qubit.

    Each Z maps to cos(2 db) Z + sin(2 db) Y, so the couplings give
    cos^2(2 db) H2 + sin(4 db)/2 sum_{i != j} J_ij Z_i Y_j + sin^2(2 db) sum_{i<j} J_ij Y_i Y_j.
    """
    c, s = math.cos(2 * delta_beta), math.sin(2 * delta_beta)
    return _z_image(problem, {"Z": c, "Y": s})


def analytic_h_prime(kind: str, params, problem: QuboProblem) -> Observable:
    """Transformed cost Hamiltonian E#(H) for a channel family acting on every qubit.

    ``params`` is a scalar or tuple as accepted by the family:
    ``depolarizing`` p; ``amplitude_damping`` gamma; ``phase_damping`` gamma;
    ``generic`` (p_I, p_X, p_Y, p_Z); ``pauli`` (p0, p1, p2, p3);
    ``averaged_mixer_overrotation`` delta_beta.
    """
    if kind == "depolarizing":
        return depolarizing_h_prime(float(params), problem)
    if kind == "amplitude_damping":
        return amplitude_damping_h_prime(float(params), problem)
    if kind == "phase_damping":
        return problem.hamiltonian()
    if kind == "generic":
        return generic_h_prime(*params, problem)
    if kind == "pauli":
        p0, p1, p2, p3 = params
        return depolarizing_h_prime(p0 + p3 - p1 - p2, problem)
    if kind == "averaged_mixer_overrotation":
        return mixer_overrotation_h_prime(float(params), problem)
    raise ValueError(f"unsupported channel kind {kind!r}")


def channel_for_kind(kind: str, params) -> ch.Channel:
    """Single-qubit channel whose dual the matching ``analytic_h_prime`` describes.

    For ``generic`` pass a single-qubit chi matrix; its Z image supplies the
    coefficients used by :func:`analytic_h_prime`.
    """
    if kind == "depolarizing":
        return ch.depolarizing(float(params))
    if kind == "amplitude_damping":
        return ch.amplitude_damping(float(params))
    if kind == "phase_damping":
        return ch.phase_damping(float(params))
    if kind == "pauli":
        return ch.pauli_channel(*params)
    if kind == "generic":
        return ch.Chi(np.asarray(params))
    if kind == "averaged_mixer_overrotation":
        db = float(params)
        return ch.unitary_channel(np.array([[math.cos(db), -1j * math.sin(db)], [-1j * math.sin(db), math.cos(db)]]))
    raise ValueError(f"unsupported channel kind {kind!r}")


# --------------------------------------------------------------------------
# perturbed eigenstates of classical Hamiltonians
# --------------------------------------------------------------------------


def perturbed_eigenstate(n_qubits: int, m: int, eps: float) -> np.ndarray:
    """(|m> - i eps sum_k X_k |m>) / sqrt(1 + N eps^2)."""
    d = 2**n_qubits
    psi = np.zeros(d, dtype=complex)
    psi[m] = 1.0
    for k in range(n_qubits):
        psi[m ^ (1 << (n_qubits - 1 - k))] += -1j * eps
    return psi / math.sqrt(1 + n_qubits * eps * eps)


def perturbed_energy_scale(problem: QuboProblem, m: int, eps: float) -> float:
    """<H> on the perturbed eigenstate divided by the unperturbed energy E_m."""
    diag = problem.cost_diagonal()
    psi = perturbed_eigenstate(problem.n_qubits, m, eps)
    return float(np.sum(diag * np.abs(psi) ** 2) / diag[m])


def predicted_energy_scale(n_qubits: int, eps: float) -> float:
    """Fourth-order expansion 1 - 4 eps^2 + 4 N eps^4 (couplings only, no fields)."""
    return 1 - 4 * eps**2 + 4 * n_qubits * eps**4


def exact_energy_scale(n_qubits: int, eps: float) -> float:
    """Closed form (1 + (N - 4) eps^2) / (1 + N eps^2) for coupling-only Hamiltonians."""
    return (1 + (n_qubits - 4) * eps**2) / (1 + n_qubits * eps**2)


def _one(n: int, i: int, letter: str) -> str:
    s = ["I"] * n
    s[i] = letter
    return "".join(s)


def _two(n: int, i: int, j: int) -> str:
    s = ["I"] * n
    s[i] = s[j] = "Z"
    return "".join(s)
