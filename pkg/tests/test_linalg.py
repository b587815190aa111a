import numpy as np
import pytest

from spectraldp.errors import InputError, RankError
from spectraldp.linalg import (
    Projector,
    SymMatrix,
    adjacency_distance,
    basic_coherence,
    coherence_r,
    coherence_r_rect,
    spectral_gap,
    subspace_closeness,
    svd_full,
    symmetrize_embed,
    threshold_rank,
    top_r_projector,
    wedin_bound_check,
)


def sym(a):
    return SymMatrix.from_array(np.asarray(a, dtype=float), symmetrize=True)


def random_sym(rng, n, scale=1.0):
    A = rng.normal(size=(n, n)) * scale
    return SymMatrix.from_array(A, symmetrize=True)


# ---------------------------------------------------------------- oracles


def brute_coherence_r(M, r):
    """Naive rank-r coherence: build the projector, take the max absolute
    entry over the whole matrix (not just the diagonal)."""
    import scipy.linalg

    lam, V = scipy.linalg.eigh(np.asarray(M))
    order = np.argsort(-np.abs(lam))
    U = V[:, order[:r]]
    P = U @ U.T
    return M.shape[0] / r * np.max(np.abs(P))


def brute_basic_coherence(M, rank_rtol=1e-10):
    import scipy.linalg

    lam, V = scipy.linalg.eigh(np.asarray(M))
    order = np.argsort(-np.abs(lam))
    lam, V = lam[order], V[:, order]
    keep = np.abs(lam) > rank_rtol * np.abs(lam[0])
    return M.shape[0] * np.max(np.abs(V[:, keep])) ** 2


# ---------------------------------------------------------------- SymMatrix


def test_symmatrix_rejects_asymmetry_and_nonfinite():
    with pytest.raises(InputError):
        SymMatrix(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(InputError):
        SymMatrix(np.array([[np.nan, 0.0], [0.0, 0.0]]))
    with pytest.raises(InputError):
        SymMatrix(np.zeros((2, 3)))


def test_symmatrix_symmetrize_is_exact():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(7, 7))
    M = SymMatrix.from_array(A, symmetrize=True)
    assert np.array_equal(M.values, M.values.T)


# ---------------------------------------------------------------- svd_full


def test_svd_identity():
    dec = svd_full(sym(np.eye(3)))
    assert np.allclose(dec.singular_values, [1, 1, 1])


def test_svd_rank_one_all_ones():
    n = 4
    dec = svd_full(sym(np.ones((n, n))))
    assert np.allclose(dec.singular_values, [4, 0, 0, 0], atol=1e-12)
    assert np.allclose(dec.left_vectors[:, 0], np.ones(n) / 2)


def test_svd_diagonal_signs():
    dec = svd_full(sym(np.diag([3.0, -2.0, 1.0])))
    assert np.allclose(dec.singular_values, [3, 2, 1])
    # sigma_2 corresponds to the negative eigenvalue on coordinate 2
    assert np.allclose(np.abs(dec.left_vectors[:, 1]), [0, 1, 0])
    assert dec.signs[1] == -1
    assert np.allclose(dec.reconstruct(), np.diag([3.0, -2.0, 1.0]))


def test_svd_deterministic_and_sign_convention():
    rng = np.random.default_rng(42)
    M = random_sym(rng, 9)
    d1, d2 = svd_full(M), svd_full(M)
    assert np.array_equal(d1.left_vectors, d2.left_vectors)
    for j in range(9):
        col = d1.left_vectors[:, j]
        lead = np.argmax(np.abs(col) > 1e-9 * np.max(np.abs(col)))
        assert col[lead] > 0


def test_svd_reconstruction_fuzz():
    rng = np.random.default_rng(7)
    for _ in range(25):
        M = random_sym(rng, rng.integers(1, 12))
        dec = svd_full(M)
        ref = max(M.frobenius_norm(), 1e-300)
        assert np.linalg.norm(dec.reconstruct() - M.values) <= 1e-7 * ref


# ---------------------------------------------------------------- projector


def test_top_r_projector_trivial_cases():
    assert np.allclose(top_r_projector(svd_full(sym(np.eye(3))), 3).matrix(), np.eye(3))
    P = top_r_projector(svd_full(sym(np.ones((4, 4)))), 1).matrix()
    assert np.allclose(P, np.ones((4, 4)) / 4)
    P2 = top_r_projector(svd_full(sym(np.diag([3.0, 2.0, 1.0]))), 2).matrix()
    assert np.allclose(P2, np.diag([1.0, 1.0, 0.0]))


def test_projector_invariants_fuzz():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 10))
        r = int(rng.integers(1, n + 1))
        P = top_r_projector(svd_full(random_sym(rng, n)), r)
        mat = P.matrix()
        assert np.max(np.abs(mat @ mat - mat)) < 1e-8
        assert np.max(np.abs(mat - mat.T)) < 1e-8
        assert abs(np.trace(mat) - r) < 1e-8


def test_projector_rejects_bad_basis():
    with pytest.raises(InputError):
        Projector(basis=np.ones((3, 2)))


def test_top_r_projector_range_check():
    dec = svd_full(sym(np.eye(3)))
    with pytest.raises(InputError):
        top_r_projector(dec, 0)
    with pytest.raises(InputError):
        top_r_projector(dec, 4)


# ---------------------------------------------------------------- coherence


def test_coherence_r_delocalized_spike():
    n = 8
    assert coherence_r(sym(np.ones((n, n))), 1) == pytest.approx(1.0)


def test_coherence_r_localized_spike():
    n = 8
    E = np.zeros((n, n))
    E[0, 0] = 1.0
    assert coherence_r(sym(E), 1) == pytest.approx(8.0)


def test_coherence_r_spiked_identity_vs_basic():
    # ones-dyad plus identity/n: the spike is fully delocalized, so the
    # rank-1 coherence is 1, while the basic notion blows up with the
    # (basis-dependent) degenerate bulk.
    n = 16
    M = sym(np.ones((n, n)) + np.eye(n) / n)
    assert coherence_r(M, 1) == pytest.approx(1.0, abs=1e-9)
    assert coherence_r(M, 1) == pytest.approx(brute_coherence_r(M.values, 1), abs=1e-9)

    # oracle over an explicit orthonormal eigenbasis of the (n-1)-dim
    # eigenspace: the Helmert-style vector (1,...,1,-(k))/sqrt(k(k+1))
    # with k = n-1 has largest entry sqrt((n-1)/n).
    helmert_max = (n - 1) / np.sqrt((n - 1) * n)
    assert n * helmert_max**2 >= n / 2


def test_basic_coherence_trivial():
    n = 5
    assert basic_coherence(sym(np.eye(n))) == pytest.approx(n)
    assert basic_coherence(sym(np.ones((n, n)) / n)) == pytest.approx(1.0)


def test_coherence_matches_bruteforce_fuzz():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 12))
        M = random_sym(rng, n)
        dec = svd_full(M)
        rank = dec.numerical_rank()
        r = int(rng.integers(1, rank + 1))
        assert coherence_r(M, r) == pytest.approx(brute_coherence_r(M.values, r), abs=1e-8)
        assert basic_coherence(M) == pytest.approx(brute_basic_coherence(M.values), abs=1e-8)


def test_coherence_range_and_monotone_bound():
    rng = np.random.default_rng(12)
    for _ in range(30):
        n = int(rng.integers(2, 10))
        M = random_sym(rng, n)
        rank = svd_full(M).numerical_rank()
        mu_bar = basic_coherence(M)
        for r in range(1, rank + 1):
            mu = coherence_r(M, r)
            assert 1.0 - 1e-9 <= mu <= n / r + 1e-9
            assert mu <= mu_bar + 1e-8


def test_coherence_rank_error():
    M = sym(np.ones((6, 6)))  # rank 1
    with pytest.raises(RankError):
        coherence_r(M, 2)


def test_coherence_r_rect_matches_symmetric_case():
    rng = np.random.default_rng(13)
    M = random_sym(rng, 7)
    assert coherence_r_rect(M.values, 2) == pytest.approx(coherence_r(M, 2), abs=1e-9)


# ---------------------------------------------------------------- gap


def test_spectral_gap_examples():
    assert spectral_gap(svd_full(sym(np.eye(3))), 1) == pytest.approx(0.0)
    assert spectral_gap(svd_full(sym(np.diag([3.0, 1.0, 1.0]))), 1) == pytest.approx(2.0)
    assert spectral_gap(svd_full(sym(np.diag([5.0, 5.0, 2.0]))), 2) == pytest.approx(3.0)
    assert spectral_gap(svd_full(sym(np.diag([5.0, 5.0, 2.0]))), 3) == pytest.approx(2.0)


# ---------------------------------------------------------------- closeness


def test_subspace_closeness_identical_and_orthogonal():
    dec = svd_full(sym(np.diag([3.0, 2.0, 1.0, 0.5])))
    P = top_r_projector(dec, 2)
    assert subspace_closeness(P, dec.left_vectors[:, :2]) == pytest.approx(0.0, abs=1e-12)
    assert subspace_closeness(P, dec.left_vectors[:, 2:4]) == pytest.approx(1.0)


def test_subspace_closeness_plane_angle():
    theta = np.pi / 6
    U = np.eye(4)[:, :2]
    tilted = np.column_stack([
        np.eye(4)[:, 0],
        np.cos(theta) * np.eye(4)[:, 1] + np.sin(theta) * np.eye(4)[:, 2],
    ])
    assert subspace_closeness(Projector(basis=tilted), U) == pytest.approx(np.sin(theta))


def test_subspace_closeness_basis_invariance():
    rng = np.random.default_rng(21)
    n, r = 8, 3
    Q, _ = np.linalg.qr(rng.normal(size=(n, r)))
    P = Projector(basis=np.linalg.qr(rng.normal(size=(n, r)))[0])
    # rotate the basis of the reference subspace
    R, _ = np.linalg.qr(rng.normal(size=(r, r)))
    assert subspace_closeness(P, Q) == pytest.approx(subspace_closeness(P, Q @ R), abs=1e-8)


def test_subspace_closeness_dimension_check():
    P = Projector(basis=np.eye(4)[:, :1])
    with pytest.raises(InputError):
        subspace_closeness(P, np.eye(4)[:, :2])


# ---------------------------------------------------------------- adjacency


def test_adjacency_distance_examples():
    A = sym(np.zeros((4, 4)))
    assert adjacency_distance(A, A) == 0.0
    E = np.zeros((4, 4))
    E[0, 1] = E[1, 0] = 1.0
    assert adjacency_distance(A, sym(E)) == pytest.approx(np.sqrt(2.0))


def test_adjacency_distance_sandwich_fuzz():
    rng = np.random.default_rng(31)
    for _ in range(50):
        A = random_sym(rng, 5)
        B = random_sym(rng, 5)
        E = B.values - A.values
        d = adjacency_distance(A, B)
        assert d <= np.sum(np.abs(E)) + 1e-9
        assert d >= np.linalg.norm(E) - 1e-9


# ---------------------------------------------------------------- embed


def test_symmetrize_embed_examples():
    M = symmetrize_embed(np.array([[1.0]]))
    assert np.array_equal(M.values, np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(svd_full(M).singular_values, [1, 1])

    assert np.array_equal(symmetrize_embed(np.zeros((2, 3))).values, np.zeros((5, 5)))

    dec = svd_full(symmetrize_embed(np.diag([2.0, 1.0])))
    assert np.allclose(dec.singular_values, [2, 2, 1, 1])


# ---------------------------------------------------------------- wedin / weyl


def test_wedin_check_identity_pair():
    M = sym(np.diag([4.0, 1.0, 0.0]))
    rep = wedin_bound_check(M, M, 1)
    assert rep.lhs == pytest.approx(0.0, abs=1e-12)
    assert rep.holds


def test_wedin_check_direct():
    M = sym(np.diag([3.0, 1.0]))
    E = np.array([[0.0, 0.1], [0.1, 0.0]])
    rep = wedin_bound_check(M, sym(M.values + E), 1)
    assert rep.gap_condition
    assert rep.holds


def test_wedin_and_weyl_fuzz():
    rng = np.random.default_rng(99)
    for _ in range(200):
        n = int(rng.integers(3, 12))
        M = random_sym(rng, n, scale=2.0)
        dec = svd_full(M)
        E = random_sym(rng, n, scale=0.02)
        Mp = SymMatrix.from_array(M.values + E.values)
        # Weyl: singular values move by at most the spectral norm of E
        sp = svd_full(Mp).singular_values
        assert np.all(np.abs(sp - dec.singular_values)
                      <= np.linalg.norm(E.values, 2) + 1e-9)
        # projector sensitivity whenever the gap condition holds
        for r in range(1, n):
            rep = wedin_bound_check(M, Mp, r)
            if rep.gap_condition:
                assert rep.holds


def test_threshold_rank():
    M = sym(np.diag([3.0, 2.0, 0.5]))
    assert threshold_rank(M, 1.0) == 2
    assert threshold_rank(M, 0.1) == 3
    assert threshold_rank(M, 4.0) == 0
