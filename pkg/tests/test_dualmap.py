import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matenlab import channels as ch
from matenlab import dualmap as dm
from matenlab import qsim
from matenlab.pauli import Observable
from matenlab.qsim import ParamSetting, QuboProblem
from oracles import dual_chi, embed, pauli, qaoa_state

seeds = st.integers(0, 2**31)


def random_problem(n, rng, zero_h=False):
    h = np.zeros(n) if zero_h else rng.uniform(-1, 1, n)
    j = np.triu(rng.uniform(-1, 1, (n, n)), 1)
    return QuboProblem(h, j + j.T)


def test_dual_examples():
    p = 0.63
    assert dm.dual_apply(ch.depolarizing(p), Observable(1, {"Z": 1})).allclose(Observable(1, {"Z": p}))
    g = 0.3
    zz = Observable(2, {"ZZ": 1.0})
    expected = Observable(2, {"ZZ": (1 - g) ** 2, "ZI": g * (1 - g), "IZ": g * (1 - g), "II": g * g})
    assert dm.dual_apply(ch.amplitude_damping(g), zz).allclose(expected, atol=1e-12)


@given(seeds, st.integers(1, 2))
def test_dual_apply_matches_dense_oracle(seed, n):
    rng = np.random.default_rng(seed)
    chi = ch.random_channel(n, rng)
    obs = Observable(n, {"".join(rng.choice(list("IXYZ"), size=n)): 1.0, "Z" * n: 0.4})
    ref = Observable.from_matrix(dual_chi(chi, obs.matrix()))
    assert dm.dual_apply(ch.Chi(chi), obs).allclose(ref, atol=1e-12)


def test_sitewise_and_product_duals_agree_with_dense(rng):
    a, b, c = (ch.Chi(ch.random_local_chi(rng)) for _ in range(3))
    obs = Observable(3, {"XYZ": 1.0, "ZIZ": -0.5, "IYI": 2.0})
    prod = ch.Product((a, b, c))
    dense = Observable.from_matrix(dual_chi(prod.chi(), obs.matrix()))
    assert dm.dual_apply(prod, obs).allclose(dense, atol=1e-12)
    same = Observable.from_matrix(dual_chi(ch.Product((a, a, a)).chi(), obs.matrix()))
    assert dm.dual_apply(a, obs).allclose(same, atol=1e-12)


def test_dual_arity_errors(rng):
    two = ch.Chi(ch.random_channel(2, rng))
    with pytest.raises(ValueError):
        dm.dual_apply(two, Observable(3, {"ZZZ": 1.0}))
    with pytest.raises(ValueError):
        dm.dual_apply(two, Observable(3, {"ZZZ": 1.0}), targets=[0])


def test_coeff_examples():
    assert np.array_equal(dm.noisy_pauli_coeffs(np.diag([1, 0, 0, 0])).values, dm.CoeffVec.identity().values)
    p = 0.4
    c = dm.noisy_pauli_coeffs(ch.depolarizing(p).chi())
    expected = np.zeros(12)
    expected[[1, 6, 11]] = p
    assert np.allclose(c.values, expected, atol=1e-15)
    assert c["YY"] == c.rows()[1, 2]


@given(seeds)
def test_coeffs_match_numeric_dual(seed):
    chi = ch.random_local_chi(np.random.default_rng(seed))
    coeffs = dm.noisy_pauli_coeffs(chi)
    for a, letter in enumerate("XYZ"):
        img = Observable.from_matrix(dual_chi(chi, pauli(letter)))
        assert np.allclose([img.coeff(b) for b in "IXYZ"], coeffs.rows()[a], atol=1e-12)


@given(seeds)
def test_coefficient_bound(seed):
    chi = ch.random_local_chi(np.random.default_rng(seed))
    assert np.all(np.abs(dm.noisy_pauli_coeffs(chi).values) <= 1 + 1e-9)


def test_coeff_map_examples():
    assert np.array_equal(dm.chi_from_coeffs(dm.CoeffVec.identity()).as_array(), np.zeros(12))
    p = 0.25
    vals = np.zeros(12)
    vals[[1, 6, 11]] = p
    v = dm.chi_from_coeffs(dm.CoeffVec(vals))
    assert np.allclose([v.p1, v.p2, v.p3], (1 - p) / 4, atol=1e-15)
    assert np.allclose(v.as_array()[3:], 0, atol=1e-15)
    assert np.linalg.cond(dm.coeff_map().matrix) < 10


def test_coeff_map_roundtrip(rng):
    worst = 0.0
    for _ in range(100):
        v = ch.params_from_chi(ch.random_local_chi(rng))
        p = dm.coeff_map().forward(v)
        assert np.allclose(p.values, dm.noisy_pauli_coeffs(v).values, atol=1e-15)
        worst = max(worst, np.max(np.abs(dm.chi_from_coeffs(p).as_array() - v.as_array())))
    assert worst < 1e-12


def test_coeff_vec_validation():
    with pytest.raises(ValueError):
        dm.CoeffVec(np.zeros(11))
    assert set(dm.CoeffVec.identity().as_dict()) == set(dm.COEFF_LABELS)


def _check_kind(kind, params, prob, rng, chan=None, trials=5):
    h_prime = dm.analytic_h_prime(kind, params, prob)
    chan = chan or dm.channel_for_kind(kind, params)
    h = prob.hamiltonian()
    for _ in range(trials):
        s = ParamSetting(*rng.uniform(0, 2 * math.pi, 2))
        psi = qsim.build_qaoa_state(prob, s)
        rho = np.outer(psi, psi.conj())
        noisy = ch.apply(ch.Product((chan,) * prob.n_qubits), rho)
        assert abs(qsim.expect(rho, h_prime) - qsim.expect(noisy, h)) < 1e-9


@pytest.mark.parametrize("zero_h", [False, True])
def test_analytic_h_prime_matches_simulation(zero_h, rng):
    prob = random_problem(3, rng, zero_h)
    _check_kind("depolarizing", 0.7, prob, rng)
    _check_kind("amplitude_damping", 0.35, prob, rng)
    _check_kind("phase_damping", 0.5, prob, rng)
    _check_kind("pauli", (0.6, 0.1, 0.2, 0.1), prob, rng)
    _check_kind("averaged_mixer_overrotation", 0.13, prob, rng)
    chi = ch.random_local_chi(rng)
    _check_kind("generic", dm.generic_z_image(chi), prob, rng, chan=dm.channel_for_kind("generic", chi))


def test_unsupported_kind():
    prob = QuboProblem([1.0], np.zeros((1, 1)))
    with pytest.raises(ValueError):
        dm.analytic_h_prime("leakage", 0.1, prob)
    with pytest.raises(ValueError):
        dm.channel_for_kind("leakage", 0.1)


def test_depolarizing_maxcut_rescales_by_p_squared(rng):
    prob = random_problem(4, rng, zero_h=True)
    p = 0.8
    assert dm.analytic_h_prime("depolarizing", p, prob).allclose(prob.hamiltonian() * (p * p))


def test_amplitude_damping_max_k_colorable(rng):
    j = np.triu(rng.uniform(0, 1, (4, 4)), 1)
    j = j + j.T
    prob = QuboProblem(-j.sum(axis=1), j)
    g = 0.2
    const = g * prob.h.sum() + g * g * j[np.triu_indices(4, 1)].sum()
    expected = prob.hamiltonian() * (1 - g) ** 2 + Observable.identity(4, const)
    assert dm.analytic_h_prime("amplitude_damping", g, prob).allclose(expected, atol=1e-12)


def test_amplitude_damping_cross_term_special_cases():
    n, hv, jv = 5, 0.7, 1.3
    complete = QuboProblem.from_edges(n, {(a, b): jv for a in range(n) for b in range(a + 1, n)}, hv)
    assert abs(dm.cross_term_scale(complete) - jv * (n - 1) / hv) < 1e-12
    ring = QuboProblem.from_edges(n, {tuple(sorted((a, (a + 1) % n))): jv for a in range(n)}, hv)
    assert abs(dm.cross_term_scale(ring) - jv * 2 / hv) < 1e-12
    h1 = Observable(n, {"".join("Z" if k == i else "I" for k in range(n)): hv for i in range(n)})
    assert dm.amplitude_damping_cross_term(ring).allclose(h1 * (jv * 2 / hv))
    line = QuboProblem.from_edges(n, {(a, a + 1): jv for a in range(n - 1)}, hv)
    assert dm.cross_term_scale(line) is None


def test_phase_damping_leaves_classical_hamiltonian(rng):
    prob = random_problem(3, rng)
    assert dm.analytic_h_prime("phase_damping", 0.9, prob) == prob.hamiltonian()


def test_generic_filters_reduce_to_symmetric_form(rng):
    prob = random_problem(4, rng, zero_h=True)
    p_i, p_x, p_y, p_z = 0.01, 0.02, 0.03, 0.9
    reduced = dm.generic_h_prime(p_i, p_x, p_y, p_z, prob, max_small_order=1, z2_symmetric=True)
    expected = prob.hamiltonian() * (p_z * p_z)
    n = 4
    zy = {}
    for i, j, w in prob.edges():
        for a, b in ((i, j), (j, i)):
            key = "".join("Z" if k == a else "Y" if k == b else "I" for k in range(n))
            zy[key] = zy.get(key, 0.0) + w * p_z * p_y
    assert reduced.allclose(expected + Observable(n, zy), atol=1e-14)


def test_generic_matches_pauli_reduction():
    prob = QuboProblem.from_edges(3, {(0, 1): 1.0, (1, 2): -0.5}, [0.2, 0.0, -0.4])
    p0, p1, p2, p3 = 0.7, 0.1, 0.15, 0.05
    generic = dm.generic_h_prime(0.0, 0.0, 0.0, p0 + p3 - p1 - p2, prob)
    assert generic.allclose(dm.analytic_h_prime("pauli", (p0, p1, p2, p3), prob))


def test_mixer_overrotation_expression(rng):
    prob = random_problem(3, rng, zero_h=True)
    db = 0.21
    c2, s4, s2 = math.cos(2 * db) ** 2, math.sin(4 * db) / 2, math.sin(2 * db) ** 2
    terms = {}
    for i, j, w in prob.edges():
        key = lambda a, b: "".join(a if k == i else b if k == j else "I" for k in range(3))  # noqa: E731
        terms[key("Z", "Z")] = c2 * w
        terms[key("Z", "Y")] = s4 * w
        terms[key("Y", "Z")] = s4 * w
        terms[key("Y", "Y")] = s2 * w
    assert dm.analytic_h_prime("averaged_mixer_overrotation", db, prob).allclose(Observable(3, terms), atol=1e-14)


def test_perturbed_state_matches_dense_construction():
    n, m, eps = 3, 5, 0.07
    e = np.zeros(8)
    e[m] = 1
    x_sum = sum(embed(np.array([[0, 1], [1, 0]]), q, n) for q in range(n))
    ref = (e - 1j * eps * x_sum @ e) / math.sqrt(1 + n * eps * eps)
    assert np.allclose(dm.perturbed_eigenstate(n, m, eps), ref)


@pytest.mark.parametrize("n", [3, 4])
@pytest.mark.parametrize("eps", [0.01, 0.05, 0.2])
def test_energy_scale_closed_form(n, eps, rng):
    j = np.triu(rng.uniform(0.5, 1.5, (n, n)), 1)
    prob = QuboProblem(np.zeros(n), j + j.T)
    diag = prob.cost_diagonal()
    m = int(np.argmax(np.abs(diag)))
    measured = dm.perturbed_energy_scale(prob, m, eps)
    assert abs(measured - dm.exact_energy_scale(n, eps)) < 1e-13
    # leading deviation from the fourth-order form is -4 N^2 eps^6
    resid = measured - dm.predicted_energy_scale(n, eps)
    assert abs(resid + 4 * n * n * eps**6) < 20 * n**3 * eps**8


def test_analytic_cost_on_qaoa_states_matches_oracle(rng):
    prob = random_problem(3, rng)
    psi = qaoa_state(prob.h, prob.j, 0.4, 1.1)
    h = dm.analytic_h_prime("depolarizing", 1.0, prob)
    assert abs((psi.conj() @ h.matrix() @ psi).real - qsim.expect(psi, prob.hamiltonian())) < 1e-12
