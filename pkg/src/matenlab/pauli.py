"""Pauli matrices, Pauli strings and real-weighted Pauli observables.

Conventions used throughout the package:

* single-qubit Pauli order is ``(I, X, Y, Z)`` and the matrices are unnormalized,
  so ``Tr[P_k P_l] = 2 delta_kl``;
* qubit 0 is the leftmost tensor factor, which makes it the most significant bit
  of a computational-basis index;
* an n-qubit tensor-Pauli index is ``sum_q k_q * 4**(n - 1 - q)``.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

PAULIS = (I2, SX, SY, SZ)
LETTERS = "IXYZ"

#: numeric cut below which observable coefficients are dropped
COEFF_CUTOFF = 1e-14


def pauli_matrix(letters: str) -> np.ndarray:
    """Dense matrix of a Pauli string such as ``"XIZ"``."""
    out = np.ones((1, 1), dtype=complex)
    for ch in letters:
        out = np.kron(out, PAULIS[LETTERS.index(ch)])
    return out


@lru_cache(maxsize=8)
def pauli_basis(n_qubits: int) -> np.ndarray:
    """All ``4**n`` tensor-Pauli matrices, stacked as ``(4**n, 2**n, 2**n)``."""
    mats = [pauli_matrix("".join(s)) for s in itertools.product(LETTERS, repeat=n_qubits)]
    basis = np.array(mats)
    basis.setflags(write=False)
    return basis


def pauli_labels(n_qubits: int) -> list[str]:
    return ["".join(s) for s in itertools.product(LETTERS, repeat=n_qubits)]


def pauli_index(letters: str) -> int:
    idx = 0
    for ch in letters:
        idx = 4 * idx + LETTERS.index(ch)
    return idx


def _masks(letters: str) -> tuple[int, int, int]:
    """Bit masks (x_mask, z_mask, n_y) for a Pauli string; qubit 0 is the MSB."""
    n = len(letters)
    x_mask = z_mask = 0
    n_y = 0
    for q, ch in enumerate(letters):
        bit = 1 << (n - 1 - q)
        if ch in "XY":
            x_mask |= bit
        if ch in "YZ":
            z_mask |= bit
        if ch == "Y":
            n_y += 1
    return x_mask, z_mask, n_y


def _parity(arr: np.ndarray) -> np.ndarray:
    out = np.zeros_like(arr)
    while np.any(arr):
        out ^= arr & 1
        arr = arr >> 1
    return out


def pauli_action(letters: str) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(perm, phase)`` with ``P|j> = phase[j] |perm[j]>``."""
    n = len(letters)
    x_mask, z_mask, n_y = _masks(letters)
    idx = np.arange(2**n)
    sign = 1 - 2 * _parity(idx & z_mask)
    phase = (1j**n_y) * sign
    return idx ^ x_mask, phase


def expect_string(letters: str, state: np.ndarray) -> tuple[float, float]:
    """Real and imaginary parts of ``<P>`` on a state vector or density matrix.

    Works without building the ``2**n x 2**n`` Pauli matrix.
    """
    perm, phase = pauli_action(letters)
    if state.ndim == 1:
        val = np.vdot(state[perm], phase * state)
    else:
        # Tr[P rho] = sum_j phase[j] rho[j, perm[j]]
        val = np.sum(phase * state[np.arange(state.shape[0]), perm])
    return float(np.real(val)), complex(val).imag


class Observable:
    """Real linear combination of Pauli strings on a fixed number of qubits.

    Terms are kept in canonical form: letter sequences sorted lexicographically,
    duplicates merged, coefficients with magnitude below ``1e-14`` dropped.
    """

    __slots__ = ("n_qubits", "_terms")

    def __init__(self, n_qubits: int, terms: Mapping[str, float] | Iterable[tuple[str, float]] = ()):
        self.n_qubits = int(n_qubits)
        acc: dict[str, float] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for letters, coeff in items:
            if len(letters) != self.n_qubits or any(ch not in LETTERS for ch in letters):
                raise ValueError(f"bad Pauli string {letters!r} for {self.n_qubits} qubits")
            acc[letters] = acc.get(letters, 0.0) + float(np.real(coeff))
        self._terms = {k: acc[k] for k in sorted(acc) if abs(acc[k]) >= COEFF_CUTOFF}

    # construction helpers -------------------------------------------------
    @classmethod
    def single(cls, n_qubits: int, sites: Mapping[int, str], coeff: float = 1.0) -> "Observable":
        letters = ["I"] * n_qubits
        for q, ch in sites.items():
            letters[q] = ch
        return cls(n_qubits, {"".join(letters): coeff})

    @classmethod
    def identity(cls, n_qubits: int, coeff: float = 1.0) -> "Observable":
        return cls(n_qubits, {"I" * n_qubits: coeff})

    @classmethod
    def from_matrix(cls, mat: np.ndarray, atol: float = 1e-10) -> "Observable":
        """Expand a Hermitian matrix in the Pauli basis.

        Raises ``ValueError`` if any coefficient has an imaginary part above ``atol``.
        """
        d = mat.shape[0]
        n = int(round(np.log2(d)))
        basis = pauli_basis(n)
        coeffs = np.einsum("kij,ji->k", basis, mat) / d
        if np.max(np.abs(coeffs.imag), initial=0.0) > atol:
            raise ValueError("operator is not Hermitian: complex Pauli coefficients")
        return cls(n, zip(pauli_labels(n), coeffs.real))

    # views --------------------------------------------------------------
    @property
    def terms(self) -> dict[str, float]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, letters: str) -> float:
        return self._terms.get(letters, 0.0)

    def __len__(self) -> int:
        return len(self._terms)

    def matrix(self) -> np.ndarray:
        d = 2**self.n_qubits
        out = np.zeros((d, d), dtype=complex)
        for letters, c in self._terms.items():
            perm, phase = pauli_action(letters)
            out[perm, np.arange(d)] += c * phase
        return out

    # algebra --------------------------------------------------------------
    def __add__(self, other: "Observable") -> "Observable":
        if not isinstance(other, Observable):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        return Observable(self.n_qubits, itertools.chain(self.items(), other.items()))

    def __sub__(self, other: "Observable") -> "Observable":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "Observable":
        return Observable(self.n_qubits, {k: scalar * v for k, v in self.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "Observable":
        return (-1.0) * self

    def allclose(self, other: "Observable", atol: float = 1e-10) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coeff(k) - other.coeff(k)) <= atol for k in keys)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Observable):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __repr__(self) -> str:
        body = " + ".join(f"{c:.6g}*{k}" for k, c in self._terms.items()) or "0"
        return f"Observable({self.n_qubits}, {body})"
