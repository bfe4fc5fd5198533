"""Independent dense reference implementations used as test oracles.

Everything here is built from explicit Kronecker products, matrix exponentials
and textbook formulas, without calling into the package.
"""

from __future__ import annotations

import itertools
from functools import reduce

import numpy as np
from scipy.linalg import expm, sqrtm

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_all(ops):
    return reduce(np.kron, ops, np.eye(1, dtype=complex))


def pauli(letters: str) -> np.ndarray:
    return kron_all([PAULI[c] for c in letters])


def paulis(n: int) -> list[np.ndarray]:
    return [pauli("".join(t)) for t in itertools.product("IXYZ", repeat=n)]


def embed(op: np.ndarray, q: int, n: int) -> np.ndarray:
    return kron_all([op if k == q else I2 for k in range(n)])


def embed_pair(a: np.ndarray, b: np.ndarray, i: int, j: int, n: int) -> np.ndarray:
    return kron_all([a if k == i else b if k == j else I2 for k in range(n)])


def cost_matrix(h, j) -> np.ndarray:
    n = len(h)
    out = sum(h[i] * embed(Z, i, n) for i in range(n))
    for a in range(n):
        for b in range(a + 1, n):
            if j[a][b]:
                out = out + j[a][b] * embed_pair(Z, Z, a, b, n)
    return out


def qaoa_state(h, j, gamma, beta) -> np.ndarray:
    n = len(h)
    plus = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    mixer = sum(embed(X, q, n) for q in range(n))
    return expm(-1j * beta * mixer) @ expm(-1j * gamma * cost_matrix(h, j)) @ plus


def apply_chi(chi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """sum_kl chi_kl P_k rho P_l^dagger on the full register."""
    n = int(round(np.log(chi.shape[0]) / np.log(4)))
    ps = paulis(n)
    return sum(chi[k, l] * ps[k] @ rho @ ps[l].conj().T for k in range(len(ps)) for l in range(len(ps)))


def dual_chi(chi: np.ndarray, obs: np.ndarray) -> np.ndarray:
    """sum_kl chi_kl P_l^dagger O P_k."""
    n = int(round(np.log(chi.shape[0]) / np.log(4)))
    ps = paulis(n)
    return sum(chi[k, l] * ps[l].conj().T @ obs @ ps[k] for k in range(len(ps)) for l in range(len(ps)))


def chi_of_kraus(ops) -> np.ndarray:
    """chi_kl = sum_i c_ik conj(c_il) with A_i = sum_k c_ik P_k."""
    d = ops[0].shape[0]
    n = int(round(np.log2(d)))
    ps = paulis(n)
    c = np.array([[np.trace(p.conj().T @ a) / d for p in ps] for a in ops])
    return c.T @ c.conj()


def choi_of_kraus(ops) -> np.ndarray:
    d = ops[0].shape[0]
    omega = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    proj = np.outer(omega, omega.conj())
    return sum(np.kron(a, np.eye(d)) @ proj @ np.kron(a, np.eye(d)).conj().T for a in ops)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    s = sqrtm(a)
    return float(np.real(np.trace(sqrtm(s @ b @ s))) ** 2)


def partial_trace_keep(m: np.ndarray, keep: int, n: int, dim: int) -> np.ndarray:
    """Trace out every factor except ``keep`` with explicit index loops."""
    out = np.zeros((dim, dim), dtype=complex)
    others = list(itertools.product(range(dim), repeat=n - 1))
    for a in range(dim):
        for b in range(dim):
            total = 0.0
            for rest in others:
                ia = list(rest[:keep]) + [a] + list(rest[keep:])
                ib = list(rest[:keep]) + [b] + list(rest[keep:])
                ra = int(np.ravel_multi_index(ia, (dim,) * n))
                rb = int(np.ravel_multi_index(ib, (dim,) * n))
                total += m[ra, rb]
            out[a, b] = total
    return out


def random_kraus(d: int, r: int, rng: np.random.Generator) -> list[np.ndarray]:
    g = rng.normal(size=(d * r, d)) + 1j * rng.normal(size=(d * r, d))
    q, _ = np.linalg.qr(g)
    return [q[k * d : (k + 1) * d] for k in range(r)]


def random_rho(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)
