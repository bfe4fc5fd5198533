"""Distances, fidelities and correlations for comparing channels and data."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import channels as ch

PSD_TOL = 1e-8
TRACE_TOL = 1e-9
CONSTANT_STD = 1e-12
# Dirichlet concentration for lower-bound starting points
START_CONCENTRATION = 0.1
SVD_DIM_LIMIT = 256  # above this, one eigendecomposition is traded for speed


class UndefinedCorrelation(ValueError):
    """Pearson correlation requested for a constant vector."""


def l2_chi(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of a - b."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def _support(lam: np.ndarray, dim: int) -> np.ndarray:
    if lam[0] < -PSD_TOL:
        raise ValueError(f"matrix is not PSD (eigenvalue {lam[0]:.3e})")
    return lam > dim * np.finfo(float).eps * max(lam[-1], 0.0)


def _psd_factor(m: np.ndarray) -> np.ndarray:
    """Return F with m = F F^dagger, keeping only eigenvalues above round-off."""
    lam, vec = np.linalg.eigh((m + m.conj().T) / 2)
    keep = _support(lam, m.shape[0])
    return vec[:, keep] * np.sqrt(lam[keep])


def state_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2 of two density matrices.

    Up to ``SVD_DIM_LIMIT`` the value is the squared sum of singular values of
    sqrt(a) sqrt(b), which is accurate to round-off.  Larger inputs use one
    eigendecomposition, taken on the lower-rank input.
    """
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    for m in (a, b):
        if abs(np.trace(m).real - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {np.trace(m).real:.12f} != 1")
    fa = _psd_factor(a)
    if a.shape[0] <= SVD_DIM_LIMIT:
        # singular values of sqrt(a) sqrt(b) avoid square roots of round-off
        sv = np.linalg.svd(fa.conj().T @ _psd_factor(b), compute_uv=False)
        return float(np.sum(sv) ** 2)
    rank_b = int(np.count_nonzero(_support(np.linalg.eigvalsh((b + b.conj().T) / 2), b.shape[0])))
    if rank_b < fa.shape[1]:
        fa, b = _psd_factor(b), a
    inner = fa.conj().T @ b @ fa
    lam = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    return float(np.sum(np.sqrt(np.clip(lam, 0.0, None))) ** 2)


def classical_fidelity(p: np.ndarray, q: np.ndarray) -> float:
    """(sum_i sqrt(p_i q_i))^2, the fidelity of commuting diagonal states."""
    return float(np.sum(np.sqrt(np.clip(p, 0, None) * np.clip(q, 0, None))) ** 2)


def choi_fidelity(ch1: ch.Channel | np.ndarray, ch2: ch.Channel | np.ndarray, report: dict | None = None) -> float:
    """State fidelity between the normalized Choi matrices of two channels.

    A chi matrix with eigenvalues below -1e-10 (for instance a raw fitted one)
    is first projected with ``maten.project_cptp``; the distances moved are
    stored in ``report["projection_distance"]`` as a pair when ``report`` is given.
    """
    from .maten import project_cptp

    chis = [c if isinstance(c, np.ndarray) else c.chi() for c in (ch1, ch2)]
    if chis[0].shape != chis[1].shape:
        raise ValueError("channels act on different numbers of qubits")
    dists = []
    for k, chi in enumerate(chis):
        lam = np.linalg.eigvalsh((chi + chi.conj().T) / 2)[0]
        if lam < -ch.PSD_FLOOR:
            chis[k], d = project_cptp(chi)
        else:
            d = 0.0
        dists.append(d)
    if report is not None:
        report["projection_distance"] = tuple(dists)
    return state_fidelity(ch.choi(chis[0]), ch.choi(chis[1]))


# --------------------------------------------------------------------------
# correlations
# --------------------------------------------------------------------------


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    if x.size != y.size:
        raise ValueError("pearson needs vectors of equal length")
    if x.size < 2:
        raise ValueError("pearson needs at least two points")
    if np.std(x) < CONSTANT_STD or np.std(y) < CONSTANT_STD:
        raise UndefinedCorrelation("correlation undefined for a constant vector")
    xc, yc = x - x.mean(), y - y.mean()
    r = float(np.dot(xc, yc) / math.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))
    return max(-1.0, min(1.0, r))


def mean_correlation(pairs: Sequence[tuple[np.ndarray, np.ndarray]], labels: Sequence[str] = ()) -> float:
    """Average Pearson r over (predicted, observed) pairs, skipping undefined ones.

    Returns nan if every pair is undefined.
    """
    rs = []
    skipped = []
    for k, (x, y) in enumerate(pairs):
        try:
            rs.append(pearson(x, y))
        except UndefinedCorrelation:
            skipped.append(labels[k] if k < len(labels) else str(k))
    if skipped:
        warnings.warn(f"constant data, correlation excluded for {', '.join(skipped)}", stacklevel=3)
    return float(np.mean(rs)) if rs else math.nan


def avg_xyz_correlation(predicted, observed) -> float:
    """(r_X + r_Y + r_Z)/3, each r pooling every qubit and setting of that basis."""
    if predicted.values.shape != observed.values.shape:
        raise ValueError("tables differ in shape")
    pairs = [(predicted.values[:, :, b], observed.values[:, :, b]) for b in range(3)]
    return mean_correlation(pairs, list("XYZ"))


def qubit_correlation(predicted, observed, qubit: int) -> float:
    """Average over bases of the Pearson r across settings for one qubit."""
    pairs = [(predicted.values[qubit, :, b], observed.values[qubit, :, b]) for b in range(3)]
    return mean_correlation(pairs, [f"qubit {qubit} {a}" for a in "XYZ"])


# --------------------------------------------------------------------------
# marginal approximation analysis
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FidelityRecord:
    chi00: float
    fidelity: float
    n_qubits: int
    channel_kind: str  # "full" or "pauli"
    restarts: int = 0


def ma_fidelity(chi: np.ndarray) -> float:
    """Fidelity between a unit-trace chi matrix and the product of its marginals."""
    return state_fidelity(chi, ch.maten_of(chi).chi())


def pauli_marginal_product(probs: np.ndarray, n_qubits: int) -> np.ndarray:
    """Product of single-qubit marginals of a distribution over 4**n Pauli strings."""
    t = np.asarray(probs, dtype=float).reshape((4,) * n_qubits)
    out = np.ones(1)
    for q in range(n_qubits):
        axes = tuple(k for k in range(n_qubits) if k != q)
        out = np.kron(out, t.sum(axis=axes))
    return out


def pauli_ma_fidelity(probs: np.ndarray, n_qubits: int) -> float:
    return classical_fidelity(probs, pauli_marginal_product(probs, n_qubits))


def hurwitz_probs(thetas: Sequence[float]) -> np.ndarray:
    """Map M angles to a probability vector of length M + 1.

    The last angle is outermost: p_1 = cos^2(theta_M),
    p_2 = cos^2(theta_{M-1}) sin^2(theta_M), ..., p_{M+1} = prod_k sin^2(theta_k).
    """
    th = np.asarray(thetas, dtype=float)[::-1]
    c2, s2 = np.cos(th) ** 2, np.sin(th) ** 2
    tail = np.concatenate([[1.0], np.cumprod(s2)])
    return np.concatenate([c2 * tail[:-1], tail[-1:]])


def hurwitz_angles(probs: Sequence[float]) -> np.ndarray:
    """Inverse of :func:`hurwitz_probs`, with angles in [0, pi/2]."""
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    p = p / p.sum()
    t = np.empty(p.size - 1)
    rem = 1.0
    for j, pj in enumerate(p[:-1]):
        c2 = min(1.0, pj / rem) if rem > 0 else 1.0
        t[j] = math.acos(math.sqrt(c2))
        rem -= pj
    return t[::-1]


def _hurwitz_amplitudes(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Signed square roots a of the Hurwitz probabilities and da/dt.

    ``t`` is ordered outermost first, so a_0 = cos t_0, a_1 = sin t_0 cos t_1, ...
    """
    m = t.size
    s, c = np.sin(t), np.cos(t)
    prefix = np.concatenate([[1.0], np.cumprod(s)])  # prefix[j] = prod_{l<j} sin t_l
    tail_c = np.append(c, 1.0)
    amps = prefix * tail_c
    # seg[k, j] = prod_{k < l <= j} sin t_l (1 on and below the diagonal)
    seg = np.cumprod(np.where(np.arange(m)[None, :] > np.arange(m)[:, None], s[None, :], 1.0), axis=1)
    jac = np.zeros((m + 1, m))
    jac[np.arange(m), np.arange(m)] = -prefix[:m] * s
    rows, cols = np.tril_indices(m + 1, -1, m)
    # da_j/dt_k for k < j: prod_{l<j, l != k} sin t_l * cos t_k * (cos t_j or 1)
    jac[rows, cols] = prefix[cols] * seg[cols, rows - 1] * c[cols] * tail_c[rows]
    return amps, jac


def _pauli_ma_value_and_grad(amps: np.ndarray, n_qubits: int) -> tuple[float, np.ndarray]:
    """S = sum_i |a_i| sqrt(q_i) with q the marginal product of p = a^2, and dS/da."""
    shape = (4,) * n_qubits
    p = (amps**2).reshape(shape)
    margins = [p.sum(axis=tuple(k for k in range(n_qubits) if k != q)) for q in range(n_qubits)]
    q_t = np.ones(shape)
    for q, mq in enumerate(margins):
        q_t = q_t * mq.reshape([4 if k == q else 1 for k in range(n_qubits)])
    root_q = np.sqrt(q_t)
    w = np.abs(amps).reshape(shape) * root_q
    ratio_sum = np.zeros(shape)
    for q, mq in enumerate(margins):
        g = w.sum(axis=tuple(k for k in range(n_qubits) if k != q))
        r = np.divide(g, mq, out=np.zeros(4), where=mq > 0)
        ratio_sum = ratio_sum + r.reshape([4 if k == q else 1 for k in range(n_qubits)])
    grad = np.sign(amps) * root_q.ravel() + amps * ratio_sum.ravel()
    return float(w.sum()), grad


def minimize_ma_fidelity(
    n_qubits: int,
    chi00_grid: Sequence[float],
    restarts: int = 32,
    seed: int = 0,
) -> list[FidelityRecord]:
    """Lowest fidelity between a Pauli channel and its marginal product at fixed chi00.

    The outermost Hurwitz angle is pinned so its cos^2 equals chi00; the rest
    are optimized by SLSQP with an analytic gradient from ``restarts`` random
    starting points.  Starts are drawn from a sparse Dirichlet(0.1) distribution
    over the non-identity entries, since minima sit near sparse vectors.
    """
    if n_qubits not in (2, 3):
        raise ValueError("minimize_ma_fidelity supports n = 2 or 3")
    m = 4**n_qubits - 1
    seeds = np.random.SeedSequence(seed).spawn(len(chi00_grid))
    out = []
    for c00, ss in zip(chi00_grid, seeds):
        if not 0.0 <= c00 <= 1.0:
            raise ValueError(f"chi00 must lie in [0, 1], got {c00}")
        pinned = math.acos(math.sqrt(c00))

        def objective(free: np.ndarray) -> tuple[float, np.ndarray]:
            t = np.concatenate([[pinned], free[::-1]])
            amps, jac = _hurwitz_amplitudes(t)
            val, grad_a = _pauli_ma_value_and_grad(amps, n_qubits)
            grad_t = 2.0 * val * (grad_a @ jac)
            return val * val, grad_t[1:][::-1]

        rng = np.random.default_rng(ss)
        best = objective(np.zeros(m - 1))[0]
        used = 0
        if c00 < 1.0:
            for _ in range(restarts):
                probs = np.concatenate([[c00], (1.0 - c00) * rng.dirichlet(np.full(m, START_CONCENTRATION))])
                x0 = hurwitz_angles(probs)[:-1]
                res = minimize(objective, x0, jac=True, method="SLSQP", options={"maxiter": 300, "ftol": 1e-12})
                best = min(best, objective(res.x)[0])
                used += 1
        out.append(FidelityRecord(float(c00), best, n_qubits, "pauli", used))
    return out


def fidelity_sweep(kind: str, n_qubits: int, samples: int, seed: int) -> list[FidelityRecord]:
    """Fidelity between random channels and the product of their marginals."""
    if kind == "full":
        if n_qubits not in (2, 3, 4):
            raise ValueError("full sweeps support n = 2, 3, 4")
    elif kind == "pauli":
        if n_qubits not in (2, 3, 4, 5):
            raise ValueError("Pauli sweeps support n = 2..5")
    else:
        raise ValueError(f"unknown sweep kind {kind!r}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(samples):
        if kind == "full":
            chi = ch.random_channel(n_qubits, rng)
            fid = ma_fidelity(chi)
            c00 = float(chi[0, 0].real)
        else:
            probs = np.diag(ch.random_pauli_chi(n_qubits, rng)).real
            fid = pauli_ma_fidelity(probs, n_qubits)
            c00 = float(probs[0])
        out.append(FidelityRecord(c00, fid, n_qubits, kind))
    return out


def two_qubit_labels() -> list[str]:
    return [a + b for a, b in itertools.product("XYZ", repeat=2)]
