import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascadetrees import symcore, treemodel
from cascadetrees.errors import CyclicEdges, InvalidCenter, InvalidCorrelation

from conftest import random_corr
from oracles import (
    brute_force_best_tree,
    path_product_cov,
    random_tree_edges,
    star_cov_schur,
    tree_kl_closed_form,
)


def test_prufer_count():
    from oracles import all_spanning_trees

    trees = list(all_spanning_trees(5))
    assert len(trees) == 125
    assert len({tuple(sorted(t)) for t in trees}) == 125


def test_chow_liu_five_node_tree(sigma5):
    tree = treemodel.chow_liu(sigma5)
    # expected tree, relabeled to 0-based nodes
    assert tree.edges == ((0, 1, 0.9), (0, 2, 0.6), (0, 3, 0.8), (3, 4, 0.8))
    assert tree.components == ((0, 1, 2, 3, 4),)


def test_chow_liu_identity_is_forest():
    tree = treemodel.chow_liu(np.eye(4))
    assert tree.edges == ()
    assert tree.components == ((0,), (1,), (2,), (3,))
    np.testing.assert_array_equal(tree.covariance, np.eye(4))


def test_chow_liu_disconnected_blocks(rng):
    a, b = random_corr(rng, 3), random_corr(rng, 2)
    m = np.zeros((5, 5))
    m[:3, :3] = a
    m[3:, 3:] = b
    tree = treemodel.chow_liu(m)
    assert len(tree.edges) == 3
    assert tree.components == ((0, 1, 2), (3, 4))
    assert np.all(tree.covariance[:3, 3:] == 0)


def test_chow_liu_rejects_unit_correlation():
    m = np.array([[1.0, 1.0, 0.2], [1.0, 1.0, 0.2], [0.2, 0.2, 1.0]])
    with pytest.raises(InvalidCorrelation):
        treemodel.chow_liu(m)


def test_chow_liu_tie_break_is_lexicographic():
    m = np.full((3, 3), 0.5)
    np.fill_diagonal(m, 1.0)
    tree = treemodel.chow_liu(m)
    assert tree.edge_set == {(0, 1), (0, 2)}


def test_chow_liu_beats_all_125_trees(rng):
    corr = random_corr(rng, 5)
    tree = treemodel.chow_liu(corr)
    best_edges, best_kl = brute_force_best_tree(corr)
    got = symcore.kl_gauss(corr, tree.covariance)
    assert got == pytest.approx(best_kl, abs=1e-9)
    assert tree.edge_set == set(best_edges)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6))
def test_chow_liu_optimal_small(seed, n):
    corr = random_corr(np.random.default_rng(seed), n, dof=n + 3)
    tree = treemodel.chow_liu(corr)
    _, best_kl = brute_force_best_tree(corr)
    assert symcore.kl_gauss(corr, tree.covariance) == pytest.approx(best_kl, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 30))
def test_tree_model_properties(seed, n):
    corr = random_corr(np.random.default_rng(seed), n)
    tree = treemodel.chow_liu(corr)
    cov = tree.covariance
    assert len(tree.edges) == n - len(tree.components)
    np.testing.assert_allclose(np.diag(cov), 1.0, atol=1e-12)
    for u, v, r in tree.edges:
        assert cov[u, v] == r == corr[u, v]
    prec = np.linalg.inv(cov)
    edges = tree.edge_set
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges:
                assert abs(prec[u, v]) <= 1e-9
    # moment matching and the closed-form KL
    assert np.trace(corr @ prec) == pytest.approx(n, abs=1e-8)
    d_star = -0.5 * np.linalg.slogdet(corr @ prec)[1]
    assert symcore.kl_gauss(corr, cov) == pytest.approx(d_star, abs=1e-8)
    assert d_star == pytest.approx(tree_kl_closed_form(corr, edges), abs=1e-8)


def test_tree_covariance_five_node_t1():
    edges = [(0, 1, 0.9), (0, 2, 0.6), (0, 3, 0.8), (3, 4, 0.8)]
    cov = treemodel.tree_covariance(5, edges)
    assert cov[1, 4] == pytest.approx(0.576, abs=1e-12)
    # path product 0.6 * 0.8 * 0.8 = 0.384
    assert cov[2, 4] == pytest.approx(0.6 * 0.8 * 0.8, abs=1e-12)
    np.testing.assert_allclose(cov, path_product_cov(5, edges), atol=1e-14)


def test_tree_covariance_zero_edges():
    cov = treemodel.tree_covariance(3, [(0, 1, 0.0), (1, 2, 0.0)])
    np.testing.assert_array_equal(cov, np.eye(3))


def test_tree_covariance_errors():
    with pytest.raises(CyclicEdges):
        treemodel.tree_covariance(3, [(0, 1, 0.1), (1, 2, 0.1), (0, 2, 0.1)])
    with pytest.raises(InvalidCorrelation):
        treemodel.tree_covariance(2, [(0, 1, 1.0)])


def test_tree_covariance_matches_path_oracle(rng):
    for n in (2, 7, 40):
        edges = random_tree_edges(rng, n)
        np.testing.assert_allclose(
            treemodel.tree_covariance(n, edges), path_product_cov(n, edges), atol=1e-14
        )


def test_tree_covariance_with_variances(rng):
    edges = random_tree_edges(rng, 6)
    var = rng.uniform(0.5, 3.0, 6)
    cov = treemodel.tree_covariance(6, edges, variances=var)
    sd = np.sqrt(var)
    np.testing.assert_allclose(cov, path_product_cov(6, edges) * np.outer(sd, sd), atol=1e-13)


def test_star_tree_two_nodes():
    m = np.array([[1.0, 0.3], [0.3, 1.0]])
    np.testing.assert_array_equal(treemodel.star_tree(m, 0).covariance, m)


def test_star_tree_five_node(sigma5):
    star = treemodel.star_tree(sigma5, 0)
    cov = star.covariance
    assert cov[1, 2] == pytest.approx(0.9 * 0.6, abs=1e-15)
    np.testing.assert_allclose(cov[0], sigma5[0])
    np.testing.assert_allclose(cov, star_cov_schur(sigma5, 0), atol=1e-12)
    rest = [1, 2, 3, 4]
    schur = cov[np.ix_(rest, rest)] - np.outer(cov[rest, 0], cov[0, rest])
    assert np.max(np.abs(schur - np.diag(np.diag(schur)))) <= 1e-12


def test_star_tree_identity_and_errors():
    np.testing.assert_array_equal(treemodel.star_tree(np.eye(4), 2).covariance, np.eye(4))
    with pytest.raises(InvalidCenter):
        treemodel.star_tree(np.eye(3), 3)


def test_star_tree_matches_schur_on_covariance(rng):
    x = rng.standard_normal((40, 5))
    cov = x.T @ x / 40
    for c in range(5):
        np.testing.assert_allclose(
            treemodel.star_tree(cov, c).covariance, star_cov_schur(cov, c), atol=1e-12
        )


def test_best_star_identity():
    center, tree = treemodel.best_star(np.eye(4))
    assert center == 0
    np.testing.assert_array_equal(tree.covariance, np.eye(4))


def test_best_star_five_node(sigma5):
    kls = [symcore.kl_gauss(sigma5, star_cov_schur(sigma5, c)) for c in range(5)]
    center, _ = treemodel.best_star(sigma5)
    assert center == int(np.argmin(kls))


def test_best_star_exact_when_realizable(rng):
    edges = [(2, v, r) for v, r in zip([0, 1, 3, 4], rng.uniform(-0.8, 0.8, 4))]
    src = treemodel.tree_covariance(5, edges)
    center, tree = treemodel.best_star(src)
    assert center == 2
    assert symcore.kl_gauss(src, tree.covariance) <= 1e-12
