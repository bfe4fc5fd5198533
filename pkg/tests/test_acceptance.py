"""Acceptance criteria, each run at its stated tolerance.

Every test records a PASS/FAIL line in ``conftest.ACCEPTANCE_RESULTS`` (shown
in the terminal summary) before asserting, so a failing criterion still
reports its measured values.
"""

import itertools
import json
import math
import time
from collections import defaultdict
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from conftest import ACCEPTANCE_RESULTS
from matenlab import channels as ch
from matenlab import cli, experiments, metrics, qsim
from matenlab import dualmap as dm
from matenlab.experiments import resolve_config
from matenlab.qsim import ParamSetting, QuboProblem

DATA = Path(__file__).parent / "data"


def record(num, name, ok, detail):
    ACCEPTANCE_RESULTS[num] = (name, bool(ok), detail)
    print(f"[{'PASS' if ok else 'FAIL'}] {num:2d}. {name}: {detail}")
    assert ok, detail


def random_problem(n, rng, zero_h=False, low=-1.0):
    h = np.zeros(n) if zero_h else rng.uniform(low, 1, n)
    j = np.triu(rng.uniform(low, 1, (n, n)), 1)
    return QuboProblem(h, j + j.T)


def random_setting(rng):
    return ParamSetting(rng.uniform(0, 2 * math.pi), rng.uniform(0, math.pi))


def test_01_dual_trace_identity():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for k in range(200):
        n = 1 + k % 2
        d = 2**n
        chan = ch.Chi(ch.random_channel(n, rng))
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        o = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        obs = o + o.conj().T
        lhs = np.trace(obs @ ch.apply(chan, rho))
        rhs = np.trace(ch.dual_matrix(chan, obs) @ rho)
        worst = max(worst, abs(lhs - rhs))
    elapsed = time.perf_counter() - start
    record(1, "dual-trace identity", worst < 1e-10 and elapsed < 10, f"max error {worst:.2e}, {elapsed:.1f} s")


def test_02_analytic_dual_agreement():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    fixed = {
        "depolarizing": 0.7,
        "amplitude_damping": 0.35,
        "pauli": (0.6, 0.1, 0.2, 0.1),
        "phase_damping": 0.5,
        "averaged_mixer_overrotation": 0.13,
    }
    worst = defaultdict(float)
    for _ in range(50):
        prob = random_problem(3, rng)
        s = random_setting(rng)
        psi = qsim.build_qaoa_state(prob, s)
        rho = np.outer(psi, psi.conj())
        h = prob.hamiltonian()
        chi = ch.random_local_chi(rng)
        cases = [(k, p, dm.channel_for_kind(k, p)) for k, p in fixed.items()]
        cases.append(("generic", dm.generic_z_image(chi), ch.Chi(chi)))
        for kind, params, chan in cases:
            noisy = ch.apply(ch.Product((chan,) * 3), rho)
            err = abs(qsim.expect(rho, dm.analytic_h_prime(kind, params, prob)) - qsim.expect(noisy, h))
            worst[kind] = max(worst[kind], err)
    elapsed = time.perf_counter() - start
    top = max(worst.values())
    record(2, "analytic-dual agreement", top < 1e-9 and elapsed < 60, f"max error {top:.2e} over {len(worst)} kinds, {elapsed:.1f} s")


def test_03_perfect_local_recovery():
    start = time.perf_counter()
    cfg = resolve_config("local-recovery", {"n_settings_grid": [16], "shots_grid": ["exact"], "trials": 100}, seed=3)
    _, rows = experiments.run_local_recovery(cfg)
    l2 = np.array([r[3] for r in rows])
    elapsed = time.perf_counter() - start
    passed = int(np.sum(l2 < 1e-8))
    record(3, "perfect local recovery", passed == 100 and elapsed < 30,
           f"{passed}/100 trials below 1e-8 (max {l2.max():.2e}), {elapsed:.1f} s")  # fmt: skip


def test_04_shot_scaling():
    start = time.perf_counter()
    shots = [10**3, 10**4, 10**5, 10**6]
    cfg = resolve_config("local-recovery", {"n_settings_grid": [16], "shots_grid": shots, "trials": 20}, seed=4)
    _, rows = experiments.run_local_recovery(cfg)
    mean = [np.mean([r[3] for r in rows if r[1] == s]) for s in shots]
    slope = np.polyfit(np.log10(shots), np.log10(mean), 1)[0]
    elapsed = time.perf_counter() - start
    curve = ", ".join(f"{m:.2e}" for m in mean)
    record(4, "shot scaling", -1.6 <= slope <= -1.0 and elapsed < 600,
           f"slope {slope:.3f} (mean L2 {curve}), {elapsed:.1f} s")  # fmt: skip


def test_05_worst_case_floor():
    floors = {n: metrics.ma_fidelity(ch.max_entangled_chi(n)) for n in (2, 3)}
    exact = all(abs(f - 4.0**-n) < 1e-9 for n, f in floors.items())
    lowest = {}
    for kind, n in itertools.product(("full", "pauli"), (2, 3)):
        recs = metrics.fidelity_sweep(kind, n, 1000, seed=5 + n)
        lowest[(kind, n)] = min(r.fidelity for r in recs)
    above = all(v >= 4.0**-n - 1e-9 for (_, n), v in lowest.items())
    detail = "; ".join(f"{k} n={n} min {v:.4f}" for (k, n), v in lowest.items())
    record(5, "worst-case floor", exact and above,
           f"max-entangled {floors[2]:.6f}, {floors[3]:.6f}; {detail}")  # fmt: skip


def _sweep_summary(rows):
    cs = sorted({r[0] for r in rows})
    corr = [np.mean([r[2] for r in rows if r[0] == c]) for c in cs]
    fid = [np.mean([r[3] for r in rows if r[0] == c]) for c in cs]
    at0 = [r for r in rows if r[0] == 0.0]
    return cs, corr, fid, min(r[2] for r in at0), min(r[3] for r in at0)


def test_06_nonlocal_sweep_shape():
    start = time.perf_counter()
    ok, parts = True, []
    for n in (2, 4):
        cfg = resolve_config("nonlocal-sweep", {"n_qubits": n, "trials": 20}, seed=6)
        _, rows = experiments.run_nonlocal_sweep(cfg)
        cs, corr, fid, corr0, fid0 = _sweep_summary(rows)
        rho = spearmanr(cs, fid)[0]
        ok &= corr0 > 0.999 and fid0 > 0.999 and corr[-1] < corr[-2] and rho <= 0
        parts.append(
            f"n={n}: c=0 min corr {corr0:.6f} fid {fid0:.6f}, corr(0.9) {corr[-2]:.4f} corr(1) {corr[-1]:.4f}, "
            f"spearman {rho:.3f}"
        )
    elapsed = time.perf_counter() - start
    record(6, "nonlocal sweep shape", ok and elapsed < 600, "; ".join(parts) + f"; {elapsed:.1f} s")


def test_07_overrotation_sweep():
    start = time.perf_counter()
    low = [0.0, 0.01, 0.02, 0.03, 0.04, 0.05]
    ring = resolve_config("overrotation-sweep", {"families": ["ring"], "omega_grid": low}, seed=7)
    _, rows = experiments.run_overrotation_sweep(ring)
    min_corr = min(r[3] for r in rows)
    fid0 = [r[5] for r in rows if r[1] == 0.0]
    complete = resolve_config("overrotation-sweep", {"families": ["complete"], "omega_grid": [0.02, 0.5]}, seed=7)
    _, rows = experiments.run_overrotation_sweep(complete)
    f = {w: np.mean([r[5] for r in rows if r[1] == w]) for w in (0.02, 0.5)}
    elapsed = time.perf_counter() - start
    # the same clause at the ten-qubit scale, reported for comparison only
    big = resolve_config(
        "overrotation-sweep",
        {"n_qubits": 10, "families": ["complete"], "omega_grid": [0.02, 0.5], "n_settings": 8, "n_testing": 4, "trials": 1},
        seed=7,
    )
    _, rows = experiments.run_overrotation_sweep(big)
    f10 = {r[1]: r[5] for r in rows}
    ok = min_corr > 0.99 and max(abs(x - 1) for x in fid0) < 1e-9 and f[0.5] > f[0.02] and elapsed < 900
    record(7, "overrotation sweep", ok,
           f"N=6 ring min 1q corr {min_corr:.6f}, fidelity at 0 {min(fid0):.12f}; N=6 complete "
           f"F(0.02) {f[0.02]:.4f} F(0.5) {f[0.5]:.4f}; N=10 complete F(0.02) {f10[0.02]:.4f} "
           f"F(0.5) {f10[0.5]:.4f}; {elapsed:.1f} s")  # fmt: skip


def test_08_hurwitz_lower_bound():
    grid2 = [round(0.01 * k, 2) for k in range(61)] + [round(0.8 + 0.02 * k, 2) for k in range(11)]
    lb2 = {r.chi00: r.fidelity for r in metrics.minimize_ma_fidelity(2, grid2, restarts=32, seed=8)}
    samples = metrics.fidelity_sweep("pauli", 2, 10000, seed=80)
    violations, compared = 0, 0
    for g, low in lb2.items():
        near = [s.fidelity for s in samples if abs(s.chi00 - g) <= 0.01]
        compared += len(near)
        violations += sum(f < low for f in near)
    grid3 = [round(0.8 + 0.02 * k, 2) for k in range(11)]
    lb3 = {r.chi00: r.fidelity for r in metrics.minimize_ma_fidelity(3, grid3, restarts=32, seed=9)}
    gap = max(abs(lb2[g] - lb3[g]) for g in grid3)
    worst = max(grid3, key=lambda g: abs(lb2[g] - lb3[g]))
    record(8, "Hurwitz lower bound", violations == 0 and gap <= 0.05,
           f"{violations} of {compared} binned samples below the n=2 curve; max n=2/n=3 gap {gap:.4f} "
           f"at chi00={worst} ({lb2[worst]:.4f} vs {lb3[worst]:.4f})")  # fmt: skip


def test_09_odd_yz_strings_vanish():
    rng = np.random.default_rng(9)
    odd = ["".join(p) for p in itertools.product("IXYZ", repeat=4) if sum(c in "YZ" for c in p) % 2]
    worst = 0.0
    for _ in range(20):
        psi = qsim.build_qaoa_state(random_problem(4, rng, zero_h=True), random_setting(rng))
        worst = max(worst, max(abs(qsim.expect(psi, p)) for p in odd))
    record(9, "symmetric-problem parity property", worst < 1e-10, f"max |<P>| {worst:.2e} over {len(odd)} strings x 20")


def test_10_energy_scaling():
    rng = np.random.default_rng(10)
    parts, ok = [], True
    for n, eps in itertools.product((3, 4), (0.01, 0.05)):
        prob = random_problem(n, rng, zero_h=True, low=0.0)
        m = int(rng.integers(2**n))
        resid = abs(dm.perturbed_energy_scale(prob, m, eps) - dm.predicted_energy_scale(n, eps))
        ok &= resid < 10 * eps**6
        parts.append(f"N={n} eps={eps}: {resid / eps**6:.2f} eps^6")
    record(10, "perturbed eigenvalue scaling", ok, "residual " + ", ".join(parts) + " (limit 10 eps^6)")


def test_11_ingestion_golden(tmp_path):
    expected = json.loads((DATA / "expected.json").read_text())
    config = tmp_path / "c.json"
    problem = {"family": "line", "J": 1.0, "h": 1.0}
    config.write_text(json.dumps({"n_qubits": 3, "problem": problem, "testing": str(DATA / "local_test.csv")}))
    code = cli.main(["characterize", "--config", str(config), "--ingest", str(DATA / "local_train.csv"),
                     "--out", str(tmp_path / "one")])  # fmt: skip
    (sc,) = json.loads((tmp_path / "one" / "characterize.json").read_text())["scenarios"]
    decode = lambda e: np.array([complex(a, b) for a, b in e]).reshape(4, 4)  # noqa: E731
    l2 = max(
        np.linalg.norm(decode(t) - decode(q["chi"])) for t, q in zip(expected["scenarios"]["local"]["chi"], sc["qubits"])
    )
    scenarios = [
        {"name": name, "ingest": str(DATA / f"{name}_train.csv")}
        for name in ("local", "nonlocal", "sampled")
    ]  # fmt: skip
    cfg = resolve_config("characterize", {"n_qubits": 3, "problem": problem, "scenarios": scenarios})
    _, table = experiments.run(cfg, tmp_path / "all")
    _, rows = experiments.read_csv_rows(table)
    columns = list(rows[0])
    ok = code == 0 and l2 < 1e-8 and columns == ["qubit", "local", "nonlocal", "sampled"] and len(rows) == 3
    record(11, "ingestion golden test", ok, f"max L2 {l2:.2e}; table columns {','.join(columns)} x {len(rows)} qubits")


def test_12_random_chi_baseline():
    rng = np.random.default_rng(12)
    stats = {}
    d = np.array([metrics.l2_chi(ch.random_local_chi(rng, stats), ch.random_local_chi(rng, stats)) for _ in range(10000)])
    mean, std = d.mean(), d.std(ddof=1)
    record(12, "random-chi L2 baseline", abs(mean - 0.8) <= 3 * std,
           f"mean {mean:.3f} std {std:.3f} (reference 0.800 +- 0.125); {stats['rejections']} redraws")  # fmt: skip
