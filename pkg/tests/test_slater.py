import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from supersinglet.families import ProjectorFamily
from supersinglet.slater import (
    apply_s_mu,
    apply_t_mu,
    check_singlet,
    haar_unitary,
    permutation_operator,
    permutation_sign,
    permutations,
    r_mu,
    s_mu,
    singlet_deviation,
    slater_state,
    symmetrize,
    t_mu,
)
from supersinglet.tensor import apply_product, tensor_product


def det_sign(sigma):
    return round(np.linalg.det(np.eye(len(sigma))[list(sigma)]))


def brute_slater(d):
    psi = np.zeros(d**d)
    for word in itertools.product(range(d), repeat=d):
        if len(set(word)) == d:
            psi[int("".join(map(str, word)), d)] = det_sign(word) / math.sqrt(math.factorial(d))
    return psi


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_slater_matches_determinant_oracle(d):
    psi = slater_state(d)
    assert_allclose(psi, brute_slater(d), atol=1e-15)
    assert np.count_nonzero(psi) == math.factorial(d)
    assert_allclose(np.linalg.norm(psi), 1, atol=1e-12)


def test_slater_examples():
    assert_allclose(slater_state(2), np.array([0, 1, -1, 0]) / math.sqrt(2))
    psi = slater_state(3)
    assert_allclose(psi[int("012", 3)], 1 / math.sqrt(6))
    assert_allclose(psi[int("021", 3)], -1 / math.sqrt(6))
    with pytest.raises(ValueError):
        slater_state(9)
    with pytest.raises(ValueError):
        slater_state(1)


def test_permutations_lexicographic_with_signs():
    perms = list(permutations(3))
    assert [p for p, _ in perms] == sorted(itertools.permutations(range(3)))
    for p, s in perms:
        assert s == det_sign(p) == permutation_sign(p)


def test_permutation_operator_examples():
    assert_array_equal(permutation_operator([0, 1, 2], 2), np.eye(8))
    swap = permutation_operator([1, 0], 2)
    ket01 = np.zeros(4)
    ket01[1] = 1
    assert_array_equal(swap @ ket01, np.eye(4)[2])
    psi = slater_state(3)
    for i, j in itertools.combinations(range(3), 2):
        sigma = list(range(3))
        sigma[i], sigma[j] = sigma[j], sigma[i]
        assert_allclose(permutation_operator(sigma, 3) @ psi, -psi, atol=1e-12)
    with pytest.raises(ValueError):
        permutation_operator([0, 0, 1], 2)


def test_permutation_operator_is_representation():
    for a, b in itertools.product(itertools.permutations(range(3)), repeat=2):
        va, vb = permutation_operator(a, 2), permutation_operator(b, 2)
        u = va @ vb
        assert_allclose(u.T @ u, np.eye(8), atol=1e-15)
        # composition stays inside the permutation group
        assert any(np.array_equal(u, permutation_operator(c, 2)) for c in itertools.permutations(range(3)))


def test_symmetrize_examples(four3):
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert_allclose(symmetrize([x, x]), np.kron(x, x))
    assert_allclose(symmetrize([x, np.eye(2)]), (np.kron(x, np.eye(2)) + np.kron(np.eye(2), x)) / 2)
    p = four3.projectors[0]
    assert_allclose(3 * symmetrize([p, np.eye(3), np.eye(3)]), t_mu(four3, 0), atol=1e-14)
    with pytest.raises(ValueError):
        symmetrize([np.eye(2), np.eye(3)])


@given(st.integers(0, 10**6))
def test_symmetrize_commutes_with_permutations(seed):
    rng = np.random.default_rng(seed)
    ops = [rng.standard_normal((2, 2)) for _ in range(3)]
    s = symmetrize(ops)
    for sigma in itertools.permutations(range(3)):
        v = permutation_operator(sigma, 2)
        assert np.max(np.abs(v @ s - s @ v)) <= 1e-10


def test_s_mu_trace_and_normalized_symmetrizer(rank3):
    s = s_mu(rank3, 0)
    assert_allclose(np.trace(s), 12, atol=1e-12)
    # oracle: the normalized d!-term symmetrizer of R_mu
    ref = math.comb(3, 1) * symmetrize([rank3.projectors[0], np.eye(3) - rank3.projectors[0], np.eye(3) - rank3.projectors[0]])
    assert_allclose(s, ref, atol=1e-12)


@pytest.mark.parametrize("name", ["four3", "rank3"])
def test_stabilization_d3(name, request):
    f = request.getfixturevalue(name)
    psi = slater_state(3)
    for mu in range(f.N):
        s = s_mu(f, mu)
        assert np.max(np.abs(s @ s - s)) <= 1e-10
        assert np.max(np.abs(s - s.T)) <= 1e-10
        assert_allclose(s @ psi, psi, atol=1e-12)
        assert_allclose(apply_s_mu(f, mu, psi), s @ psi, atol=1e-12)
        assert_allclose(psi @ r_mu(f, mu) @ psi, 1 / 3, atol=1e-12)


def test_r_mu_expectation_d5(four5):
    psi = slater_state(5)
    for mu in range(4):
        p = four5.projectors[mu]
        rpsi = apply_product(psi, [p, p, np.eye(5) - p, np.eye(5) - p, np.eye(5) - p])
        assert_allclose(psi @ rpsi, 1 / 10, atol=1e-12)


def test_s_mu_rejects_bad_rank(four3):
    bad = ProjectorFamily(4, 3, Fraction(4, 3), 0, four3.projectors, four3.kind)
    with pytest.raises(ValueError):
        s_mu(bad, 0)


def test_t_mu_identities(four3):
    psi = slater_state(3)
    ts = [t_mu(four3, mu) for mu in range(4)]
    assert_allclose(sum(ts), 4 / 3 * 3 * np.eye(27), atol=1e-12)
    for mu, t in enumerate(ts):
        s = s_mu(four3, mu)
        assert np.max(np.abs(t @ s - s)) <= 1e-10
        assert_allclose(t @ psi, psi, atol=1e-12)
        assert_allclose(apply_t_mu(four3, mu, psi), psi, atol=1e-12)


def test_haar_unitary_is_unitary_and_seeded():
    u = haar_unitary(4, np.random.default_rng(7))
    assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
    assert_array_equal(u, haar_unitary(4, np.random.default_rng(7)))


def test_singlet_property():
    psi = slater_state(3)
    assert singlet_deviation(psi, np.eye(3)) <= 1e-15
    assert check_singlet(psi, 100, seed=0) <= 1e-10
    # U^{x3} acts on the antisymmetric line as det(U)
    u = haar_unitary(3, np.random.default_rng(3))
    out = tensor_product([u, u, u]) @ psi
    assert_allclose(out, np.linalg.det(u) * psi, atol=1e-12)


def test_product_state_is_not_singlet():
    e = np.zeros(27)
    e[0] = 1
    assert check_singlet(e, 5, seed=0) > 0.1
