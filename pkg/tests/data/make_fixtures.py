"""Regenerate the expectation-table fixtures in this directory.

Everything is computed from the dense references in tests/oracles.py, so the
frozen coefficient rows are independent of the package.  Run from the
repository root:  python3 tests/data/make_fixtures.py
"""

import json
import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from oracles import I2, PAULI, chi_of_kraus, embed, qaoa_state, random_kraus  # noqa: E402

N = 3
H = np.ones(N)
J = np.zeros((N, N))
for i in range(N - 1):
    J[i, i + 1] = J[i + 1, i] = 1.0


def angles(count, rng):
    return rng.uniform(0, 2 * np.pi, count), rng.uniform(0, np.pi, count)


def apply_local(rho, ops_per_qubit):
    for q, ops in enumerate(ops_per_qubit):
        full = [embed(a, q, N) for a in ops]
        rho = sum(a @ rho @ a.conj().T for a in full)
    return rho


def apply_pair_then_local(rho, pair_ops, last_ops):
    full = [np.kron(a, I2) for a in pair_ops]
    rho = sum(a @ rho @ a.conj().T for a in full)
    full = [embed(a, N - 1, N) for a in last_ops]
    return sum(a @ rho @ a.conj().T for a in full)


def expectations(rho):
    return np.array([[np.trace(embed(PAULI[b], q, N) @ rho).real for b in "XYZ"] for q in range(N)])


def table(gammas, betas, noise):
    ideal, noisy = [], []
    for g, b in zip(gammas, betas):
        psi = qaoa_state(H, J, g, b)
        rho = np.outer(psi, psi.conj())
        ideal.append(expectations(rho))
        noisy.append(expectations(noise(rho)))
    return np.array(ideal), np.array(noisy)  # (settings, qubit, basis)


def sample(values, shots, rng):
    k = rng.binomial(shots, (1 + np.clip(values, -1, 1)) / 2)
    return 2 * k / shots - 1


def write_csv(path, gammas, betas, values, shots):
    lines = ["qubit,setting_index,gamma,beta,basis,value,shots"]
    for q in range(N):
        for s in range(len(gammas)):
            for b, letter in enumerate("XYZ"):
                lines.append(f"{q},{s},{float(gammas[s])!r},{float(betas[s])!r},{letter},{float(values[s, q, b])!r},{shots}")
    path.write_text("\n".join(lines) + "\n")


def fit_rows(ideal, noisy):
    """Per qubit and basis, least squares of noisy_b on (1, ideal_X, ideal_Y, ideal_Z)."""
    out = []
    for q in range(N):
        design = np.column_stack([np.ones(ideal.shape[0]), ideal[:, q, :]])
        out.append(np.linalg.lstsq(design, noisy[:, q, :], rcond=None)[0].T.tolist())
    return out


def encode(chi):
    return [[float(x.real), float(x.imag)] for x in chi.ravel()]


def main():
    rng = np.random.default_rng(20240611)
    train = angles(20, rng)
    test = angles(12, rng)
    local_ops = [random_kraus(2, 2, rng) for _ in range(N)]
    pair_ops = random_kraus(4, 3, rng)
    last_ops = random_kraus(2, 2, rng)
    scenarios = {
        "local": lambda r: apply_local(r, local_ops),
        "nonlocal": lambda r: apply_pair_then_local(r, pair_ops, last_ops),
    }
    expected = {"n_qubits": N, "h": 1.0, "J": 1.0, "family": "line", "scenarios": {}}
    for name, noise in scenarios.items():
        ideal, noisy = table(*train, noise)
        write_csv(HERE / f"{name}_train.csv", *train, noisy, "exact")
        _, noisy_test = table(*test, noise)
        write_csv(HERE / f"{name}_test.csv", *test, noisy_test, "exact")
        expected["scenarios"][name] = {"coeff_rows": fit_rows(ideal, noisy)}
    ideal, noisy = table(*train, scenarios["local"])
    sampled = sample(noisy, 4000, rng)
    write_csv(HERE / "sampled_train.csv", *train, sampled, 4000)
    expected["scenarios"]["sampled"] = {"coeff_rows": fit_rows(ideal, sampled)}
    expected["scenarios"]["local"]["chi"] = [encode(chi_of_kraus(ops)) for ops in local_ops]
    (HERE / "expected.json").write_text(json.dumps(expected, indent=1) + "\n")


if __name__ == "__main__":
    main()
