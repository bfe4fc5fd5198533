"""CPTP channels in process-matrix (chi), Kraus, mixture and product form.

A chi matrix for ``n`` qubits is a ``4**n x 4**n`` complex matrix in the
unnormalized tensor-Pauli basis, acting as

    E(rho) = sum_kl chi[k, l] P_k rho P_l^dagger.

With unnormalized Paulis a trace-preserving chi has unit trace, and its
diagonal entries are the probabilities of the Pauli errors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .pauli import PAULIS, SX, SZ, pauli_basis
from .special import bessel_ratio

#: eigenvalue floor for complete positivity
PSD_FLOOR = 1e-10
#: max-norm tolerance on the trace-preservation residual
TP_TOL = 1e-10
#: eigenvalues dropped when turning chi into Kraus operators
KRAUS_DROP = 1e-12


class NotCompletelyPositive(ValueError):
    """Raised when a chi matrix has an eigenvalue below ``-PSD_FLOOR``."""


# --------------------------------------------------------------------------
# twelve-parameter single-qubit chi
# --------------------------------------------------------------------------

PARAM_NAMES = ("p1", "p2", "p3", "t01", "t02", "t03", "t12", "t13", "t23", "v01", "v02", "v03")


@dataclass(frozen=True)
class ChiVec12:
    """Free parameters of a trace-preserving single-qubit chi matrix.

    ``p0`` is not stored; it is fixed by ``p0 = 1 - p1 - p2 - p3``.
    """

    p1: float = 0.0
    p2: float = 0.0
    p3: float = 0.0
    t01: float = 0.0
    t02: float = 0.0
    t03: float = 0.0
    t12: float = 0.0
    t13: float = 0.0
    t23: float = 0.0
    v01: float = 0.0
    v02: float = 0.0
    v03: float = 0.0

    @property
    def p0(self) -> float:
        return 1.0 - self.p1 - self.p2 - self.p3

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "ChiVec12":
        values = np.asarray(values, dtype=float)
        if values.shape != (12,):
            raise ValueError("expected 12 parameters")
        return cls(*(float(v) for v in values))

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in PARAM_NAMES}


def chi_matrix(v: ChiVec12) -> np.ndarray:
    """Lay out the 4x4 chi matrix of ``v`` without any positivity check.

    The layout keeps the matrix Hermitian and trace preserving for every
    parameter value; some imaginary parts of the Pauli-Pauli block are tied to
    the real identity-Pauli couplings ``t0k``.
    """
    p0, p1, p2, p3 = v.p0, v.p1, v.p2, v.p3
    t01, t02, t03 = v.t01, v.t02, v.t03
    t12, t13, t23 = v.t12, v.t13, v.t23
    v01, v02, v03 = v.v01, v.v02, v.v03
    return np.array(
        [
            [p0, t01 + 1j * v01, t02 + 1j * v02, t03 + 1j * v03],
            [t01 - 1j * v01, p1, t12 - 1j * t03, t13 + 1j * t02],
            [t02 - 1j * v02, t12 + 1j * t03, p2, t23 - 1j * t01],
            [t03 - 1j * v03, t13 - 1j * t02, t23 + 1j * t01, p3],
        ],
        dtype=complex,
    )


def chi_from_params(v: ChiVec12) -> np.ndarray:
    """Build the single-qubit chi matrix and reject it if it is not CP."""
    chi = chi_matrix(v)
    lam = np.linalg.eigvalsh(chi)[0]
    if lam < -PSD_FLOOR:
        raise NotCompletelyPositive(f"chi has eigenvalue {lam:.3e}")
    return chi


def params_from_chi(chi: np.ndarray) -> ChiVec12:
    """Read the twelve parameters back from a single-qubit chi matrix.

    Only the entries that the layout treats as independent are read; a TP
    chi is reproduced exactly by :func:`chi_matrix`.
    """
    chi = np.asarray(chi)
    if chi.shape != (4, 4):
        raise ValueError("params_from_chi expects a single-qubit chi")
    return ChiVec12(
        p1=chi[1, 1].real,
        p2=chi[2, 2].real,
        p3=chi[3, 3].real,
        t01=chi[0, 1].real,
        t02=chi[0, 2].real,
        t03=chi[0, 3].real,
        t12=chi[1, 2].real,
        t13=chi[1, 3].real,
        t23=chi[2, 3].real,
        v01=chi[0, 1].imag,
        v02=chi[0, 2].imag,
        v03=chi[0, 3].imag,
    )


# --------------------------------------------------------------------------
# channel forms
# --------------------------------------------------------------------------


def _n_from_dim(dim: int, base: int) -> int:
    n = int(round(math.log(dim, base)))
    if base**n != dim or n < 1:
        raise ValueError(f"dimension {dim} is not a power of {base}")
    return n


@dataclass(frozen=True, eq=False)
class Chi:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("chi must be square")
        _n_from_dim(m.shape[0], 4)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_qubits(self) -> int:
        return _n_from_dim(self.matrix.shape[0], 4)

    def chi(self) -> np.ndarray:
        return self.matrix

    def kraus(self) -> list[np.ndarray]:
        return kraus_from_chi(self.matrix)


@dataclass(frozen=True, eq=False)
class Kraus:
    operators: tuple

    def __post_init__(self):
        ops = tuple(np.array(a, dtype=complex) for a in self.operators)
        if not ops:
            raise ValueError("empty Kraus set")
        shape = ops[0].shape
        if any(a.shape != shape for a in ops) or shape[0] != shape[1]:
            raise ValueError("Kraus operators must be square and equally shaped")
        _n_from_dim(shape[0], 2)
        object.__setattr__(self, "operators", ops)

    @property
    def n_qubits(self) -> int:
        return _n_from_dim(self.operators[0].shape[0], 2)

    def chi(self) -> np.ndarray:
        return chi_from_kraus(self.operators)

    def kraus(self) -> list[np.ndarray]:
        return list(self.operators)


@dataclass(frozen=True, eq=False)
class Mixture:
    """Convex combination of channels of equal arity."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), ch) for w, ch in self.components)
        if not comps:
            raise ValueError("empty mixture")
        weights = np.array([w for w, _ in comps])
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be a probability vector")
        if len({ch.n_qubits for _, ch in comps}) != 1:
            raise ValueError("mixture components must have equal arity")
        object.__setattr__(self, "components", comps)

    @property
    def n_qubits(self) -> int:
        return self.components[0][1].n_qubits

    def chi(self) -> np.ndarray:
        return sum(w * ch.chi() for w, ch in self.components)

    def kraus(self) -> list[np.ndarray]:
        return kraus_from_chi(self.chi())


@dataclass(frozen=True, eq=False)
class Product:
    """Tensor product of channels; factor 0 acts on the leftmost qubits."""

    factors: tuple

    def __post_init__(self):
        if not self.factors:
            raise ValueError("empty product")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def n_qubits(self) -> int:
        return sum(f.n_qubits for f in self.factors)

    def chi(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for f in self.factors:
            out = np.kron(out, f.chi())
        return out

    def kraus(self) -> list[np.ndarray]:
        return kraus_from_chi(self.chi())


Channel = Union[Chi, Kraus, Mixture, Product]


# --------------------------------------------------------------------------
# conversions and checks
# --------------------------------------------------------------------------


def chi_from_kraus(ops: Sequence[np.ndarray]) -> np.ndarray:
    """chi[k, l] = sum_j a_jk conj(a_jl) with K_j = sum_k a_jk P_k."""
    ops = [np.asarray(a, dtype=complex) for a in ops]
    d = ops[0].shape[0]
    basis = pauli_basis(_n_from_dim(d, 2))
    # a_jk = Tr[P_k K_j] / d  (Paulis are Hermitian)
    coeffs = np.einsum("kab,jba->jk", basis, np.array(ops)) / d
    return coeffs.T @ coeffs.conj()


def kraus_from_chi(chi: np.ndarray) -> list[np.ndarray]:
    chi = np.asarray(chi, dtype=complex)
    basis = pauli_basis(_n_from_dim(chi.shape[0], 4))
    lam, vec = np.linalg.eigh((chi + chi.conj().T) / 2)
    if lam[0] < -PSD_FLOOR:
        raise NotCompletelyPositive(f"chi has eigenvalue {lam[0]:.3e}")
    ops = []
    for j in np.flatnonzero(lam > KRAUS_DROP)[::-1]:
        ops.append(math.sqrt(lam[j]) * np.tensordot(vec[:, j], basis, axes=1))
    return ops


def tp_operator(chi: np.ndarray) -> np.ndarray:
    """sum_kl chi[k, l] P_l^dagger P_k, which equals the identity for TP maps."""
    chi = np.asarray(chi, dtype=complex)
    basis = pauli_basis(_n_from_dim(chi.shape[0], 4))
    weighted = np.tensordot(chi.T, basis, axes=1)  # A_l = sum_k chi_kl P_k
    return np.einsum("lab,lbc->ac", basis, weighted)


@dataclass(frozen=True)
class CPTPReport:
    is_cp: bool
    is_tp: bool
    min_eigenvalue: float
    tp_residual: float

    def as_dict(self) -> dict:
        return {
            "is_cp": self.is_cp,
            "is_tp": self.is_tp,
            "min_eigenvalue": self.min_eigenvalue,
            "tp_residual": self.tp_residual,
        }


def validate_cptp(ch: Channel | np.ndarray) -> CPTPReport:
    chi = ch if isinstance(ch, np.ndarray) else ch.chi()
    herm = (chi + chi.conj().T) / 2
    lam = float(np.linalg.eigvalsh(herm)[0])
    resid = tp_operator(chi) - np.eye(int(round(math.sqrt(chi.shape[0]))))
    tp_res = float(np.max(np.abs(resid)))
    return CPTPReport(
        is_cp=lam >= -PSD_FLOOR and np.allclose(chi, chi.conj().T, atol=1e-12),
        is_tp=tp_res <= TP_TOL,
        min_eigenvalue=lam,
        tp_residual=tp_res,
    )


# --------------------------------------------------------------------------
# builtin channel families
# --------------------------------------------------------------------------


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def identity_channel(n_qubits: int = 1) -> Chi:
    chi = np.zeros((4**n_qubits, 4**n_qubits), dtype=complex)
    chi[0, 0] = 1.0
    return Chi(chi)


def unitary_channel(u: np.ndarray) -> Kraus:
    return Kraus((np.asarray(u, dtype=complex),))


def pauli_channel(p0: float, p1: float, p2: float, p3: float) -> Chi:
    probs = np.array([p0, p1, p2, p3], dtype=float)
    if np.any(probs < -1e-12) or abs(probs.sum() - 1.0) > 1e-10:
        raise ValueError("Pauli probabilities must lie on the simplex")
    return Chi(np.diag(probs).astype(complex))


def depolarizing(p: float) -> Chi:
    """Rescales every Pauli by ``p``; ``p = 1`` is the identity, ``p = 0`` fully depolarizes."""
    if not -1.0 / 3.0 - 1e-12 <= p <= 1.0:
        raise ValueError(f"depolarizing parameter must lie in [-1/3, 1], got {p}")
    q = (1.0 - p) / 4.0
    return pauli_channel(1.0 - 3.0 * q, q, q, q)


def fully_depolarizing(n_qubits: int) -> Chi:
    d2 = 4**n_qubits
    return Chi(np.eye(d2, dtype=complex) / d2)


def amplitude_damping(gamma: float) -> Kraus:
    _check_unit("gamma", gamma)
    a1 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]])
    a2 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]])
    return Kraus((a1, a2))


def phase_damping(gamma: float) -> Kraus:
    _check_unit("gamma", gamma)
    a1 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]])
    a2 = np.array([[0.0, 0.0], [0.0, math.sqrt(gamma)]])
    return Kraus((a1, a2))


def zz_overrotation(omega: float) -> Kraus:
    """Two-qubit ZZ dephasing from stochastic phasing angles."""
    _check_unit("omega", omega)
    zz = np.kron(SZ, SZ)
    return Kraus((math.sqrt(1.0 - omega) * np.eye(4), math.sqrt(omega) * zz))


def x_overrotation(omega: float) -> Kraus:
    """Single-qubit X dephasing from stochastic mixing angles."""
    _check_unit("omega", omega)
    return Kraus((math.sqrt(1.0 - omega) * np.eye(2), math.sqrt(omega) * SX))


def von_mises_mixer(beta: float, kappa: float) -> Chi:
    """Average of ``exp(-i (beta + eps) X)`` over von Mises distributed ``eps``.

    With ``r = I2(kappa)/I0(kappa)``:
    rho -> (1 + r cos 2b)/2 rho + (1 - r cos 2b)/2 X rho X - i r sin(2b)/2 [X, rho].
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    r = bessel_ratio(kappa, 2)
    c, s = math.cos(2 * beta), math.sin(2 * beta)
    chi = np.zeros((4, 4), dtype=complex)
    chi[0, 0] = (1 + r * c) / 2
    chi[1, 1] = (1 - r * c) / 2
    # -i r s / 2 (X rho - rho X): X rho I has chi[1, 0], I rho X has chi[0, 1]
    chi[1, 0] = -0.5j * r * s
    chi[0, 1] = 0.5j * r * s
    return Chi(chi)


def von_mises_phase(gamma: float, coupling: float, kappa: float) -> Kraus:
    """Average of a ZZ phase gate with von Mises distributed angle error."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    r = bessel_ratio(kappa, 2)
    ph = np.exp(2j * gamma * coupling)
    a1 = np.diag([1.0, -ph, -ph, 1.0])
    a2 = np.diag([1.0, ph, ph, 1.0])
    return Kraus((math.sqrt((1 - r) / 2) * a1, math.sqrt((1 + r) / 2) * a2))


_BUILTINS = {
    "identity": identity_channel,
    "depolarizing": depolarizing,
    "amplitude_damping": amplitude_damping,
    "phase_damping": phase_damping,
    "pauli": pauli_channel,
    "zz_overrotation": zz_overrotation,
    "x_overrotation": x_overrotation,
    "von_mises_mixer": von_mises_mixer,
    "von_mises_phase": von_mises_phase,
}


def builtin(kind: str, *args, **kwargs) -> Channel:
    """Construct a named channel, e.g. ``builtin("depolarizing", 0.9)``."""
    try:
        factory = _BUILTINS[kind]
    except KeyError:
        raise ValueError(f"unknown channel kind {kind!r}") from None
    return factory(*args, **kwargs)


# --------------------------------------------------------------------------
# random channels
# --------------------------------------------------------------------------


def random_local_chi(rng: np.random.Generator, stats: dict | None = None) -> np.ndarray:
    """Random single-qubit chi by element-wise rejection sampling.

    Diagonal weights are drawn uniformly from [0, 1] and normalized to sum to one.
    Each of the nine couplings ``t_kl``, ``v_0k`` is then drawn uniformly from
    [-1, 1] in turn, redrawing that element until the partially filled matrix is
    positive semidefinite.  The number of redraws is added to ``stats["rejections"]``.
    """
    p = rng.uniform(0.0, 1.0, size=4)
    p = p / p.sum()
    values = np.zeros(12)
    values[:3] = p[1:]
    rejections = 0
    for idx in range(3, 12):
        while True:
            values[idx] = rng.uniform(-1.0, 1.0)
            chi = chi_matrix(ChiVec12.from_array(values))
            if np.linalg.eigvalsh(chi)[0] >= 0.0:
                break
            rejections += 1
    if stats is not None:
        stats["rejections"] = stats.get("rejections", 0) + rejections
    return chi_matrix(ChiVec12.from_array(values))


def random_isometry(d_in: int, d_out: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in))
    q, r = np.linalg.qr(g)
    # fix column phases so the distribution does not depend on QR sign conventions
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """Random n-qubit chi from a Stinespring isometry with environment size ``4**n``."""
    if not 1 <= n_qubits <= 5:
        raise ValueError("random_channel supports 1..5 qubits")
    d = 2**n_qubits
    env = 4**n_qubits
    v = random_isometry(d, d * env, rng)
    ops = v.reshape(env, d, d)
    chi = chi_from_kraus(ops)
    return (chi + chi.conj().T) / 2


def random_pauli_chi(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """Diagonal chi with a probability vector drawn uniformly from the simplex."""
    probs = rng.dirichlet(np.ones(4**n_qubits))
    return np.diag(probs).astype(complex)


# --------------------------------------------------------------------------
# application, Choi matrices, marginals
# --------------------------------------------------------------------------


def _apply_left(op: np.ndarray, tensor: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = len(axes)
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def _apply_superop_1q(ops: Sequence[np.ndarray], rho: np.ndarray, q: int, n: int) -> np.ndarray:
    """Single-qubit channel as one 4x4 superoperator contraction."""
    sup = sum(np.einsum("ac,bd->abcd", a, a.conj()) for a in ops)
    lo, hi = 2**q, 2 ** (n - q - 1)
    view = rho.reshape(lo, 2, hi, lo, 2, hi)
    out = np.einsum("abcd,lcmrdn->lamrbn", sup, view, optimize=True)
    return out.reshape(rho.shape)


def apply_kraus(ops: Sequence[np.ndarray], rho: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    d = rho.shape[0]
    n = _n_from_dim(d, 2)
    k = _n_from_dim(ops[0].shape[0], 2)
    if len(targets) != k:
        raise ValueError(f"channel acts on {k} qubits but {len(targets)} targets given")
    if len(set(targets)) != k or min(targets) < 0 or max(targets) >= n:
        raise ValueError(f"invalid targets {targets} for {n} qubits")
    if k == 1:
        return _apply_superop_1q(ops, rho, targets[0], n)
    if list(targets) == list(range(n)):
        stack = np.asarray(ops)
        return np.einsum("aij,jk,alk->il", stack, rho, stack.conj(), optimize=True)
    tensor = rho.reshape((2,) * (2 * n))
    rows = list(targets)
    cols = [n + t for t in targets]
    out = np.zeros_like(tensor)
    for a in ops:
        out += _apply_left(a.conj(), _apply_left(a, tensor, rows), cols)
    return out.reshape(d, d)


def apply(ch: Channel, rho: np.ndarray, targets: Sequence[int] | None = None) -> np.ndarray:
    """Apply ``ch`` to the qubits ``targets`` of a density matrix (default: all)."""
    rho = np.asarray(rho, dtype=complex)
    n = _n_from_dim(rho.shape[0], 2)
    if targets is None:
        targets = list(range(n))
    targets = list(targets)
    if len(targets) != ch.n_qubits:
        raise ValueError(f"channel arity {ch.n_qubits} != {len(targets)} targets")
    if isinstance(ch, Product):
        pos = 0
        for f in ch.factors:
            rho = apply(f, rho, targets[pos : pos + f.n_qubits])
            pos += f.n_qubits
        return rho
    return apply_kraus(ch.kraus(), rho, targets)


def dual_matrix(ch: Channel, obs: np.ndarray, targets: Sequence[int] | None = None) -> np.ndarray:
    """Heisenberg-picture action sum_kl chi_kl P_l^dagger O P_k on a dense operator."""
    obs = np.asarray(obs, dtype=complex)
    n = _n_from_dim(obs.shape[0], 2)
    targets = list(range(n)) if targets is None else list(targets)
    if len(targets) != ch.n_qubits:
        raise ValueError(f"channel arity {ch.n_qubits} != {len(targets)} targets")
    if isinstance(ch, Product):
        pos = 0
        for f in ch.factors:
            obs = dual_matrix(f, obs, targets[pos : pos + f.n_qubits])
            pos += f.n_qubits
        return obs
    return apply_kraus([a.conj().T for a in ch.kraus()], obs, targets)


def _vec_basis(n_qubits: int) -> np.ndarray:
    basis = pauli_basis(n_qubits)
    return basis.reshape(basis.shape[0], -1).T  # columns are row-major vec(P_k)


def choi(ch: Channel | np.ndarray) -> np.ndarray:
    """Unit-trace Choi matrix (E x id)(|Omega><Omega|) with |Omega> = sum_i |ii>/sqrt(d)."""
    chi = ch if isinstance(ch, np.ndarray) else ch.chi()
    n = _n_from_dim(chi.shape[0], 4)
    vb = _vec_basis(n)
    mat = vb @ chi @ vb.conj().T
    mat = (mat + mat.conj().T) / 2
    return mat / np.trace(mat).real


def marginal_chi(chi: np.ndarray, keep: int) -> np.ndarray:
    """Partial trace of an n-qubit chi over every qubit except ``keep``."""
    chi = np.asarray(chi, dtype=complex)
    n = _n_from_dim(chi.shape[0], 4)
    if n < 2:
        raise ValueError("marginal_chi needs at least two qubits")
    if not 0 <= keep < n:
        raise IndexError(f"qubit {keep} out of range for {n} qubits")
    t = chi.reshape((4,) * (2 * n))
    t = np.moveaxis(t, [keep, n + keep], [0, n])
    t = t.reshape(4, 4 ** (n - 1), 4, 4 ** (n - 1))
    return np.einsum("aibi->ab", t)


def maten_of(chi: np.ndarray) -> Product:
    """Tensor product of all single-qubit marginals of ``chi``."""
    n = _n_from_dim(np.asarray(chi).shape[0], 4)
    return Product(tuple(Chi(marginal_chi(chi, k)) for k in range(n)))


def mix(c: float, local: Channel, nonlocal_: Channel) -> Chi:
    """(1 - c) local + c nonlocal, combined at the chi level."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"correlation weight must lie in [0, 1], got {c}")
    if local.n_qubits != nonlocal_.n_qubits:
        raise ValueError("mixed channels must have equal arity")
    return Chi((1.0 - c) * local.chi() + c * nonlocal_.chi())


def max_entangled_chi(n_qubits: int) -> np.ndarray:
    """Projector onto (1/2) sum_i |i i ... i> over n four-dimensional factors."""
    if n_qubits < 2:
        raise ValueError("max_entangled_chi needs n >= 2")
    d2 = 4**n_qubits
    psi = np.zeros(d2, dtype=complex)
    stride = (d2 - 1) // 3  # index of |1 1 ... 1>
    psi[[0, stride, 2 * stride, 3 * stride]] = 0.5
    return np.outer(psi, psi.conj())


# --------------------------------------------------------------------------
# noise placement
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """Where noise enters a single-layer QAOA circuit.

    ``placement="end"`` applies each ``(targets, channel)`` pair in ``channels``
    to the ideal output state.  ``placement="interleaved"`` applies ZZ dephasing
    with strength ``omega`` after every coupled pair's phase gate and X dephasing
    on every qubit after the mixer.
    """

    placement: str = "end"
    channels: tuple = field(default_factory=tuple)
    omega: float = 0.0

    def __post_init__(self):
        if self.placement not in ("end", "interleaved"):
            raise ValueError(f"unknown placement {self.placement!r}")
        chans = tuple((tuple(int(t) for t in targets), ch) for targets, ch in self.channels)
        for targets, ch in chans:
            if len(targets) != ch.n_qubits:
                raise ValueError(f"channel arity {ch.n_qubits} != targets {targets}")
        object.__setattr__(self, "channels", chans)
        _check_unit("omega", self.omega)

    @classmethod
    def end_of_circuit(cls, channel: Channel, targets: Sequence[int] | None = None) -> "NoiseSpec":
        targets = tuple(range(channel.n_qubits)) if targets is None else tuple(targets)
        return cls("end", ((targets, channel),))

    @classmethod
    def local(cls, chis: Sequence[np.ndarray | Channel]) -> "NoiseSpec":
        """One single-qubit channel per qubit, applied at the end of the circuit."""
        chans = []
        for q, c in enumerate(chis):
            chans.append(((q,), c if not isinstance(c, np.ndarray) else Chi(c)))
        return cls("end", tuple(chans))

    @classmethod
    def interleaved(cls, omega: float) -> "NoiseSpec":
        return cls("interleaved", (), omega)

    @property
    def is_identity(self) -> bool:
        return self.placement == "end" and not self.channels


# --------------------------------------------------------------------------
# JSON serialization
# --------------------------------------------------------------------------


def _encode_matrix(m: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).ravel()]


def _decode_matrix(entries: list, dim: int) -> np.ndarray:
    arr = np.array([complex(re, im) for re, im in entries], dtype=complex)
    if arr.size != dim * dim:
        raise ValueError(f"expected {dim * dim} entries, got {arr.size}")
    return arr.reshape(dim, dim)


def channel_to_dict(ch: Channel) -> dict:
    if isinstance(ch, Chi):
        return {"n_qubits": ch.n_qubits, "form": "chi", "entries": _encode_matrix(ch.matrix)}
    if isinstance(ch, Kraus):
        return {
            "n_qubits": ch.n_qubits,
            "form": "kraus",
            "entries": [_encode_matrix(a) for a in ch.operators],
        }
    if isinstance(ch, Mixture):
        return {
            "n_qubits": ch.n_qubits,
            "form": "mixture",
            "entries": [{"weight": w, "channel": channel_to_dict(c)} for w, c in ch.components],
        }
    if isinstance(ch, Product):
        return {
            "n_qubits": ch.n_qubits,
            "form": "product",
            "entries": [channel_to_dict(f) for f in ch.factors],
        }
    raise TypeError(f"not a channel: {type(ch).__name__}")


def channel_from_dict(doc: dict) -> Channel:
    form = doc["form"]
    n = int(doc["n_qubits"])
    if form == "chi":
        return Chi(_decode_matrix(doc["entries"], 4**n))
    if form == "kraus":
        return Kraus(tuple(_decode_matrix(e, 2**n) for e in doc["entries"]))
    if form == "mixture":
        return Mixture(tuple((e["weight"], channel_from_dict(e["channel"])) for e in doc["entries"]))
    if form == "product":
        return Product(tuple(channel_from_dict(e) for e in doc["entries"]))
    raise ValueError(f"unknown channel form {form!r}")


def channel_to_json(ch: Channel) -> str:
    return json.dumps(channel_to_dict(ch))


def channel_from_json(text: str) -> Channel:
    return channel_from_dict(json.loads(text))

