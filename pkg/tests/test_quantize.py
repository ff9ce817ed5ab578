import numpy as np
import pytest

from cofkit.quantize import (
    Palette,
    _lloyd,
    assign_hard,
    cluster_affinity,
    default_sigma_r,
    kmeans_palette,
    load_palette,
    save_palette,
)
from reference import naive_assign


def _lab_like(rng, h, w):
    lab = np.empty((h, w, 3))
    lab[:, :, 0] = rng.random((h, w)) * 100.0
    lab[:, :, 1:] = rng.random((h, w, 2)) * 160.0 - 80.0
    return lab


def test_exact_palette_recovered_when_colors_match_k():
    colors = np.array(
        [[10.0, 0.0, 0.0], [50.0, 20.0, -30.0], [90.0, -40.0, 60.0]]
    )
    rng = np.random.default_rng(0)
    img = colors[rng.integers(0, 3, (30, 30))]
    pal = kmeans_palette(img, k=3, grid_spacing=1, seed=42)
    got = pal.centers[np.lexsort(pal.centers.T[::-1])]
    want = colors[np.lexsort(colors.T[::-1])]
    assert np.abs(got - want).max() < 1e-6


def test_k1_center_is_grid_mean():
    rng = np.random.default_rng(1)
    img = _lab_like(rng, 25, 25)
    pal = kmeans_palette(img, k=1, grid_spacing=3, seed=42)
    grid = img[::3, ::3].reshape(-1, 3)
    assert np.abs(pal.centers[0] - grid.mean(axis=0)).max() < 1e-9


def test_two_blob_centers_match_blob_means():
    rng = np.random.default_rng(2)
    a = np.array([20.0, -60.0, -60.0]) + rng.normal(0, 0.5, (400, 3))
    b = np.array([80.0, 60.0, 60.0]) + rng.normal(0, 0.5, (500, 3))
    pix = np.concatenate([a, b])
    rng.shuffle(pix)
    img = pix.reshape(30, 30, 3)
    pal = kmeans_palette(img, k=2, grid_spacing=1, seed=42)
    # oracle: means of the two blobs, computed by simple halves of Lab L
    lo = pix[pix[:, 0] < 50].mean(axis=0)
    hi = pix[pix[:, 0] >= 50].mean(axis=0)
    got = pal.centers[np.argsort(pal.centers[:, 0])]
    assert np.abs(got - np.stack([lo, hi])).max() < 1e-3


def test_palette_is_deterministic():
    rng = np.random.default_rng(3)
    img = _lab_like(rng, 40, 40)
    p1 = kmeans_palette(img, k=6, grid_spacing=2, seed=42)
    p2 = kmeans_palette(img, k=6, grid_spacing=2, seed=42)
    assert np.array_equal(p1.centers, p2.centers)
    g1 = assign_hard(img, p1)
    g2 = assign_hard(img, p2)
    assert np.array_equal(g1, g2)


def test_effective_k_reduction_warns():
    img = np.zeros((20, 20, 3))
    img[:, 10:] = 5.0
    with pytest.warns(UserWarning, match="distinct"):
        pal = kmeans_palette(img, k=8, grid_spacing=1, seed=42)
    assert pal.k == 2


def test_lloyd_objective_non_increasing():
    rng = np.random.default_rng(4)
    samples = rng.random((300, 3)) * 100.0
    init = samples[rng.choice(300, 5, replace=False)]
    _, objective = _lloyd(samples, init)
    assert len(objective) >= 1
    assert all(b <= a + 1e-9 for a, b in zip(objective, objective[1:]))


def test_assign_exact_center_and_tie_rule():
    centers = np.array(
        [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [4.0, 3.0, 0.0], [20.0, 0.0, 0.0]]
    )
    pal = Palette(centers=centers, k=4, seed=0)
    img = np.array([[[4.0, 3.0, 0.0], [15.0, 0.0, 0.0]]])  # exact hit, midpoint tie
    labels = assign_hard(img, pal)
    assert labels[0, 0] == 2
    assert labels[0, 1] == 1  # equidistant from centers 1 and 3 -> lowest


def test_assign_matches_exhaustive_scan():
    rng = np.random.default_rng(5)
    img = _lab_like(rng, 12, 14)
    pal = kmeans_palette(img, k=5, grid_spacing=1, seed=42)
    assert np.array_equal(assign_hard(img, pal), naive_assign(img, pal.centers))


def test_assign_inverts_palette_lookup():
    rng = np.random.default_rng(6)
    centers = rng.random((7, 3)) * 100.0
    pal = Palette(centers=centers, k=7, seed=0)
    img = centers[np.arange(7) % 7].reshape(1, 7, 3)
    assert np.array_equal(assign_hard(img, pal), np.arange(7).reshape(1, 7))


def test_affinity_sigma_zero_is_identity():
    pal = Palette(centers=np.random.default_rng(7).random((5, 3)), k=5, seed=0)
    assert np.array_equal(cluster_affinity(pal, 0.0), np.eye(5))


def test_affinity_two_point_softmax():
    d = 3.0
    pal = Palette(
        centers=np.array([[0.0, 0.0, 0.0], [d, 0.0, 0.0]]), k=2, seed=0
    )
    sigma_r = 2.0
    e = np.exp(-d * d / (2 * sigma_r * sigma_r))
    K = cluster_affinity(pal, sigma_r)
    assert np.allclose(K, [[1 / (1 + e), e / (1 + e)], [e / (1 + e), 1 / (1 + e)]])


def test_affinity_matches_direct_formula():
    rng = np.random.default_rng(8)
    pal = Palette(centers=rng.random((4, 3)) * 50.0, k=4, seed=0)
    sigma_r = 7.5
    K = cluster_affinity(pal, sigma_r)
    for a in range(4):
        row = np.array(
            [
                np.exp(
                    -((pal.centers[a] - pal.centers[b]) ** 2).sum()
                    / (2 * sigma_r * sigma_r)
                )
                for b in range(4)
            ]
        )
        assert np.abs(K[a] - row / row.sum()).max() < 1e-12


def test_affinity_rows_stochastic_and_diagonal_dominant():
    rng = np.random.default_rng(9)
    for trial in range(10):
        k = int(rng.integers(2, 9))
        pal = Palette(centers=rng.random((k, 3)) * 100.0, k=k, seed=0)
        K = cluster_affinity(pal, float(rng.random() * 30 + 0.1))
        assert np.abs(K.sum(axis=1) - 1.0).max() < 1e-12
        assert (K >= 0).all()
        assert np.allclose(K.max(axis=1), np.diag(K))


def test_default_sigma_r_hand_cases():
    two = Palette(
        centers=np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]), k=2, seed=0
    )
    assert abs(default_sigma_r(two) - 10.0) < 1e-12
    three = Palette(
        centers=np.array([[0.0, 0, 0], [1.0, 0, 0], [5.0, 0, 0]]), k=3, seed=0
    )
    assert abs(default_sigma_r(three) - 2.0) < 1e-12
    with pytest.raises(ValueError):
        default_sigma_r(Palette(centers=np.zeros((1, 3)), k=1, seed=0))


def test_default_sigma_r_matches_brute_force():
    rng = np.random.default_rng(10)
    pal = Palette(centers=rng.random((9, 3)) * 80.0, k=9, seed=0)
    dists = []
    for a in range(9):
        best = min(
            np.sqrt(((pal.centers[a] - pal.centers[b]) ** 2).sum())
            for b in range(9)
            if b != a
        )
        dists.append(best)
    assert abs(default_sigma_r(pal) - np.mean(dists)) < 1e-12


def test_palette_json_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    pal = Palette(centers=rng.random((6, 3)) * 100.0, k=6, seed=42)
    save_palette(pal, tmp_path / "p.json")
    back = load_palette(tmp_path / "p.json")
    assert back.k == 6 and back.seed == 42
    assert np.array_equal(back.centers, pal.centers)


def test_palette_validation():
    with pytest.raises(ValueError):
        Palette(centers=np.zeros((3, 2)), k=3, seed=0)
    with pytest.raises(ValueError):
        Palette(centers=np.zeros((3, 3)), k=4, seed=0)
    with pytest.raises(ValueError):
        Palette(centers=np.full((2, 3), np.inf), k=2, seed=0)
    with pytest.raises(ValueError):
        kmeans_palette(np.zeros((4, 4, 3)), k=0)
    with pytest.raises(ValueError):
        kmeans_palette(np.zeros((4, 4, 3)), k=2, grid_spacing=0)
