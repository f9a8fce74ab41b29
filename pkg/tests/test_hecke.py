from __future__ import annotations

import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mpcong.congruence import IdentityFailure, compute_F, derive_params
from mpcong.forms import basis_S
from mpcong.hecke import (
    HeckeSystem,
    HypothesisError,
    MatrixModMk,
    OrderCapExceeded,
    blind_order,
    build_X,
    certify,
    check_hypotheses,
    check_Us_recursion,
    full_order,
    half_integral_lambda,
    hecke_matrix,
    hecke_T,
    projective_order,
    required_trunc,
)
from mpcong.series import QSeries, QuadChar


def legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def chi12(n: int) -> int:
    return {1: 1, 11: 1, 5: -1, 7: -1}.get(n % 12, 0)


def reference_T(coeffs: dict[int, int], trunc: int, ell: int, lam_h: int, M: int) -> dict[int, int]:
    """T_{ell^2} on a dict of coefficients by the textbook formula."""
    out = {}
    for n in range(-(-trunc // (ell * ell))):
        b = coeffs.get(ell * ell * n, 0)
        b += chi12(ell) * legendre((-1) ** lam_h * n, ell) * ell ** (lam_h - 1) * coeffs.get(n, 0)
        if n % (ell * ell) == 0:
            b += ell ** (2 * lam_h - 1) * coeffs.get(n // (ell * ell), 0)
        out[n] = b % M
    return out


@pytest.fixture(scope="module")
def sys_7_5():
    return HeckeSystem.build(derive_params(7, 1, 3), 5)


@pytest.fixture(scope="module")
def sys_25_13():
    return HeckeSystem.build(derive_params(5, 2, 3), 13)


# -- the operator ---------------------------------------------------------------


@pytest.mark.parametrize("ell,a", [(5, 6), (13, 0), (37, 3)])
def test_hecke_T_eigenvalues(ell, a):
    p = derive_params(7, 1, 3)
    N = ell * ell * 60
    f = basis_S(p.gamma, p.lam, N, p.modulus).elements[0]
    g = hecke_T(f, ell, half_integral_lambda(p))
    assert g.trunc == 60
    assert g == f.truncate(60) * a


@pytest.mark.parametrize("m,k,r,ell", [(7, 1, 3, 11), (5, 2, 3, 7), (11, 1, 5, 13), (13, 1, 1, 5)])
def test_hecke_T_matches_reference(m, k, r, ell):
    p = derive_params(m, k, r)
    lam_h = half_integral_lambda(p)
    N = ell * ell * 150
    for f in basis_S(p.gamma, p.lam, N, p.modulus).elements[:2]:
        got = hecke_T(f, ell, lam_h)
        ref = reference_T({n: f[n] for n in range(N)}, N, ell, lam_h, p.mk)
        assert [got[n] for n in range(got.trunc)] == [ref[n] for n in range(got.trunc)]


def test_hecke_T_preserves_support_class():
    p = derive_params(11, 1, 5)
    f = basis_S(p.gamma, p.lam, 7 * 7 * 400, p.modulus).elements[0]
    g = hecke_T(f, 7, half_integral_lambda(p))
    assert all(n % 24 == p.gamma for n, _ in g.terms())


def test_hecke_T_rejects_bad_ell():
    f = QSeries.one(100, derive_params(7, 1, 3).modulus)
    for ell in (2, 3, 7, 9):
        with pytest.raises(HypothesisError):
            hecke_T(f, ell, 7)


def test_eigenvalue_from_unit_coefficient(sys_7_5):
    p = sys_7_5.params
    f = basis_S(p.gamma, p.lam, 25 * 200, p.modulus).elements[0]
    g = hecke_T(f, 5, sys_7_5.lam_h)
    n = next(n for n, c in f.terms() if c % 7)
    assert g[n] * pow(f[n], -1, 7) % 7 == sys_7_5.eigenvalue() == 6


# -- hypotheses -------------------------------------------------------------------


@pytest.mark.parametrize(
    "triple,ell,name",
    [((7, 1, 2), 5, "r odd"), ((5, 1, 7), 7, "r < m^k"), ((7, 1, 3), 7, "ell prime"),
     ((7, 1, 3), 3, "ell prime"), ((7, 1, 3), 15, "ell prime")],
)
def test_hypothesis_errors_name_the_hypothesis(triple, ell, name):
    with pytest.raises(HypothesisError) as info:
        check_hypotheses(derive_params(*triple), ell)
    assert info.value.hypothesis.startswith(name)


def test_required_trunc():
    assert required_trunc(derive_params(5, 2, 3), 13) == 169 * (21 + 120) + 24


# -- matrices and orders ------------------------------------------------------------


def test_build_X_example():
    X = build_X(MatrixModMk(np.array([[6]]), 7), 5, 3, 6)
    assert X.tolist() == [[6, 1], [(-pow(5, 13, 7)) % 7, 0]]
    assert X.tolist() == [[6, 1], [2, 0]]


def test_build_X_blocks():
    A = MatrixModMk(np.arange(9).reshape(3, 3), 25)
    X = build_X(A, 13, 21, 48)
    s = (-pow(13, 21 + 96 - 2, 25)) % 25
    e = np.array(X.tolist())
    assert (e[:3, :3] == np.array(A.tolist())).all()
    assert (e[:3, 3:] == np.eye(3)).all()
    assert (e[3:, :3] == s * np.eye(3)).all()
    assert (e[3:, 3:] == 0).all()


def test_zero_A_order_divides_four_times_scalar_order():
    M = 49
    for ell in (5, 11, 13):
        X = build_X(MatrixModMk(np.zeros((2, 2), dtype=np.int64), M), ell, 3, 6)
        s = (-pow(ell, 13, M)) % M
        t = next(t for t in range(1, M) if pow(s, t, M) == 1)
        assert (4 * t) % full_order(X) == 0
        assert (X @ X).scalar_value() == s


def test_scalar_matrix_order():
    M = 125
    for c in (2, 7, 124, 26):
        t = next(t for t in range(1, 200) if pow(c, t, M) == 1)
        X = MatrixModMk.scalar_matrix(3, c, M)
        assert full_order(X) == t
        assert projective_order(X) == (1, c)


@given(
    st.sampled_from([(5, 2), (7, 2), (5, 3), (11, 1)]),
    st.integers(1, 3),
    st.integers(0, 2**32 - 1),
)
def test_lifted_orders_match_blind_iteration(mk, d, seed):
    m, k = mk
    M = m**k
    rng = np.random.default_rng(seed)
    while True:
        E = rng.integers(0, M, (d, d))
        X = MatrixModMk(E, M)
        if X.det_mod_prime(m):
            break
    K, c = projective_order(X)
    assert K == blind_order(X, scalar=True)
    assert (X**K).scalar_value() == c
    Mo = full_order(X)
    assert Mo == blind_order(X, scalar=False)
    assert Mo % K == 0
    assert pow(c, Mo // K, M) == 1


def test_order_cap_is_reported():
    X = MatrixModMk(np.array([[2, 1], [1, 1]]), 5**4)
    with pytest.raises(OrderCapExceeded):
        full_order(X, cap=3)


def test_singular_X_rejected():
    with pytest.raises(ValueError):
        projective_order(MatrixModMk(np.array([[5, 0], [0, 1]]), 25))


@pytest.mark.parametrize("ell,K", [(5, 6), (13, 2)])
def test_orders_for_7_1_3(ell, K):
    s = HeckeSystem.build(derive_params(7, 1, 3), ell)
    assert s.K == K
    assert s.M_order % s.K == 0
    assert pow(s.c, s.M_order // s.K, 7) == 1
    assert s.K == blind_order(s.X, True) and s.M_order == blind_order(s.X, False)


def test_5_2_3_orders(sys_25_13):
    assert sys_25_13.d == 5
    assert (sys_25_13.K, sys_25_13.M_order) == (100, 100)
    assert (sys_25_13.X ** 100).is_identity()
    for t in (20, 50, 4, 25):
        assert (sys_25_13.X ** t).scalar_value() is None


def test_5_2_3_matrix_is_lower_triangular_in_ascending_basis(sys_25_13):
    A = np.array(sys_25_13.A.tolist())
    assert (np.triu(A, 1) == 0).all()
    assert list(np.diag(A)) == [12, 22, 22, 12, 17]


# -- closure and the U recursion -------------------------------------------------------


@pytest.mark.parametrize(
    "m,k,r,ell", [(7, 1, 3, 11), (7, 1, 3, 59), (11, 1, 3, 5), (13, 1, 5, 7), (5, 2, 3, 7), (11, 1, 7, 13)]
)
def test_closure_residual_vanishes(m, k, r, ell):
    p = derive_params(m, k, r)
    N = 2 * required_trunc(p, ell)
    A, basis, verified = hecke_matrix(p, ell, N)
    assert verified >= N // (ell * ell)
    for i, f in enumerate(basis.elements):
        img = hecke_T(f, ell, half_integral_lambda(p))
        assert (img - basis.combine(A.tolist()[i])).is_zero()


def test_miller_and_monomial_bases_give_similar_matrices():
    p = derive_params(5, 2, 3)
    mono = HeckeSystem.build(p, 7)
    mill = HeckeSystem.build(p, 7, reduced=True)
    assert (mono.K, mono.M_order) == (mill.K, mill.M_order)


@pytest.mark.parametrize("s,N", [(1, 10000), (2, 25 * 25 * 120)])
def test_U_recursion_7_1_3(sys_7_5, s, N):
    chk = check_Us_recursion(sys_7_5, s, N)
    assert chk.ok, chk.detail


@pytest.mark.parametrize("s", [1, 2])
def test_U_recursion_higher_dimension(s):
    sys = HeckeSystem.build(derive_params(13, 1, 3), 5)
    assert sys.d == 2
    assert check_Us_recursion(sys, s, 25 ** s * (sys.params.gamma + 24 * sys.d + 200)).ok


def test_U_recursion_detects_a_wrong_matrix(sys_7_5):
    A = MatrixModMk(np.array([[5]]), 7)
    bad = dataclasses.replace(sys_7_5, A=A, X=build_X(A, 5, 3, 6))
    chk = check_Us_recursion(bad, 1, 10000)
    assert not chk.ok and chk.first_mismatch is not None


def test_perturbed_matrix_fails_closure():
    p = derive_params(5, 2, 3)
    A, basis, _ = hecke_matrix(p, 7)
    rows = A.tolist()
    rows[1][0] = (rows[1][0] + 1) % 25
    f = basis.elements[1]
    img = hecke_T(f, 7, half_integral_lambda(p))
    assert not (img - basis.combine(rows[1])).is_zero()


# -- certificates -------------------------------------------------------------------


def test_certificates_5_2_3(sys_25_13):
    vanish, period = certify(sys_25_13, oracle_n_max=10, index_budget=10_000)
    assert vanish.exponent == 199 and period.exponent == 200
    assert "13^199" in vanish.statement() and "13^(200+i)" in period.statement()
    assert "13 ∤ n" in vanish.side_condition()
    assert all(v.passed for v in vanish.verifications + period.verifications)


def test_certificates_7_1_3_with_oracle():
    sys = HeckeSystem.build(derive_params(7, 1, 3), 13)
    vanish, period = certify(sys, oracle_n_max=60)
    assert vanish.exponent == 3
    methods = [v.method for v in vanish.verifications]
    assert methods == ["hecke-closure", "matrix", "oracle-residue"]
    assert all(v.passed for v in vanish.verifications)
    assert period.exponent == 2 * sys.M_order


def test_vanishing_visible_in_F():
    # p_3((7*13^3 n + 3)/24) are coefficients of F at q^(24t + gamma) with 7t + 1 = that index
    p = derive_params(7, 1, 3)
    N = 24 * 60000
    F = compute_F(p, N)
    base = 7 * 13**3
    checked = 0
    for n in range(1, 200):
        if n % 13 == 0 or (base * n + 3) % 24:
            continue
        idx = (base * n + 3) // 24
        t, rem = divmod(idx - p.beta, p.mk)
        assert rem == 0
        if 24 * t + p.gamma >= N:
            break
        assert F[24 * t + p.gamma] == 0
        checked += 1
    assert checked >= 3


def test_identity_failure_on_foreign_basis():
    p = derive_params(7, 1, 3)
    N = required_trunc(p, 5)
    good = basis_S(p.gamma, p.lam, N, p.modulus)
    f = good.elements[0]
    tampered = f + QSeries.monomial(p.gamma + 24, f.trunc, 1, p.modulus)
    with pytest.raises(IdentityFailure):
        hecke_matrix(p, 5, N, basis=dataclasses.replace(good, elements=(tampered,)))


@pytest.mark.parametrize("m,k,r,ell", [(13, 1, 1, 7), (11, 1, 7, 19), (13, 1, 5, 11), (17, 1, 1, 19), (7, 2, 1, 11)])
def test_sign_in_middle_term_is_needed_for_closure(m, k, r, ell, monkeypatch):
    p = derive_params(m, k, r)
    assert half_integral_lambda(p) % 2 == 1 and ell % 4 == 3
    hecke_matrix(p, ell)
    monkeypatch.setattr(QuadChar, "signed_legendre", staticmethod(lambda ell_, e: QuadChar.legendre(ell_)))
    with pytest.raises(IdentityFailure):
        hecke_matrix(p, ell)
