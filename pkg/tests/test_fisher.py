import numpy as np
import pytest

from qnt.exceptions import DimensionTooLarge, SingularDistribution, SingularFIM
from qnt.fisher import FisherMatrix, classical_fim, qcrb, qfim_general
from qnt.multicast import ghz_distribution, z_distribution
from qnt.network import StarNetwork


def finite_difference_fim(star, variant, h=1e-5):
    """Fisher matrix from central differences of the exact tables."""
    table = z_distribution if variant == "Z" else ghz_distribution
    theta = star.parameters()
    p = table(star).probs
    grads = []
    for j in range(star.n):
        up = theta.copy()
        down = theta.copy()
        up[j] += h
        down[j] -= h
        grads.append((table(star.with_parameters(up)).probs - table(star.with_parameters(down)).probs) / (2 * h))
    g = np.array(grads)
    return (g / p) @ g.T


@pytest.mark.parametrize("variant", ["Z", "GHZ"])
def test_classical_fim_matches_finite_differences(variant):
    star = StarNetwork.uniform(4, 0.1)
    np.testing.assert_allclose(classical_fim(star, variant).entries,
                               finite_difference_fim(star, variant), atol=1e-5, rtol=0)


@pytest.mark.parametrize("variant", ["Z", "GHZ"])
def test_classical_fim_asymmetric_star(variant):
    star = StarNetwork.depolarizing([0.3, 0.05, 0.2, 0.6, 0.12])
    np.testing.assert_allclose(classical_fim(star, variant).entries,
                               finite_difference_fim(star, variant), atol=1e-5, rtol=0)


def test_bitflip_fim_matches_finite_differences():
    star = StarNetwork.bitflip([0.1, 0.2, 0.15, 0.3])
    np.testing.assert_allclose(classical_fim(star, "Z").entries,
                               finite_difference_fim(star, "Z"), atol=1e-5, rtol=0)


def test_maximally_mixed_point_is_singular():
    fim = classical_fim(StarNetwork.uniform(4, 0.75), "Z")
    with pytest.raises(SingularFIM):
        qcrb(fim)


def test_leaf_permutation_symmetry():
    f = classical_fim(StarNetwork.uniform(4, 0.2), "Z").entries
    perm = [0, 2, 3, 1]
    np.testing.assert_allclose(f[np.ix_(perm, perm)], f, atol=1e-12)


def test_noiseless_boundary_rejected():
    with pytest.raises(SingularDistribution):
        classical_fim(StarNetwork.uniform(4, 0.0), "Z")


@pytest.mark.parametrize("variant, init", [("Z", "single_zero"), ("GHZ", "bell_pair")])
def test_qfim_reduces_to_classical(variant, init):
    star = StarNetwork.uniform(4, 0.1)
    np.testing.assert_allclose(qfim_general(star, init).entries,
                               classical_fim(star, variant).entries, atol=1e-5, rtol=0)


def test_qfim_near_noiseless_limit():
    fim = qfim_general(StarNetwork.uniform(4, 1e-3), "single_zero")
    assert np.all(np.isfinite(fim.entries))
    assert np.linalg.eigvalsh(fim.entries).min() >= -1e-8 * np.abs(fim.entries).max()


def test_qfim_size_guard():
    with pytest.raises(DimensionTooLarge):
        qfim_general(StarNetwork.uniform(8, 0.1), "single_zero")


def test_lambda_cut_sensitivity(capsys):
    # outcomes needing three flips have eigenvalues near 3e-10 here
    star = StarNetwork.uniform(7, 1e-3)
    base = qfim_general(star, "single_zero", lambda_cut=1e-10).entries
    rel = {}
    for cut in (1e-14, 1e-12, 1e-8):
        other = qfim_general(star, "single_zero", lambda_cut=cut).entries
        rel[cut] = np.abs(other - base).max() / np.abs(base).max()
    with capsys.disabled():
        print("\nlambda_cut sensitivity (n=7, theta=1e-3, relative to 1e-10): "
              + ", ".join(f"{c:g} -> {r:.2e}" for c, r in rel.items()))
    assert rel[1e-14] < 1e-9
    assert rel[1e-8] < 1e-4


def test_qcrb_examples():
    assert qcrb(np.eye(4)) == pytest.approx(4)
    assert qcrb(np.diag([4.0, 1, 1, 1])) == pytest.approx(3.25)
    assert qcrb(FisherMatrix(np.eye(3))) == pytest.approx(3)


def test_qcrb_blows_up_near_singularity():
    near = qcrb(classical_fim(StarNetwork.uniform(4, 0.74), "Z"))
    mid = qcrb(classical_fim(StarNetwork.uniform(4, 0.5), "Z"))
    assert near > 10 * mid


def test_fisher_matrix_validation():
    with pytest.raises(ValueError):
        FisherMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        FisherMatrix(np.array([[1.0, 0.0], [0.0, -1.0]]))
    assert FisherMatrix(np.eye(2)).parameter_labels == ("theta_0", "theta_1")
