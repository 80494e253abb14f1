"""Smoke tests for the armarecon python module.

Each test cross-checks a bound operation against an independent numpy computation.
"""

import struct

import numpy as np
import pytest

import armarecon as ar


def test_version_and_config_keys():
    assert isinstance(ar.__version__, str)
    keys = ar.config_keys()
    assert "lambda_recon" in keys
    assert "alpha" in keys


def test_roi_histogram_matches_numpy():
    values = [0.0, 0.049, 0.05, 0.999, 1.0, 0.5]
    bins = ar.roi_histogram(values, 20)
    expected = np.zeros(20)
    for v in values:
        expected[min(int(v * 20), 19)] += 1.0 / len(values)
    np.testing.assert_allclose(bins, expected, rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        ar.roi_histogram([1.5], 20)


def test_synth_cohort_block_structure():
    fm = ar.synth_cohort(20, 3, 8, 0.2, 0.05, seed=5)
    data = np.asarray(fm.data)
    assert data.shape == (20, 24)
    sums = data.reshape(20, 3, 8).sum(axis=2)
    np.testing.assert_allclose(sums, 1.0, atol=1e-12)
    assert sum(fm.labels) == 10

    again = ar.synth_cohort(20, 3, 8, 0.2, 0.05, seed=5)
    np.testing.assert_array_equal(data, np.asarray(again.data))


def test_build_adjacency_matches_numpy_cosine():
    rng = np.random.default_rng(3)
    rows = rng.uniform(0.0, 1.0, size=(12, 6))
    graph = ar.build_adjacency(rows, 0.85)

    norms = np.linalg.norm(rows, axis=1)
    cosine = (rows @ rows.T) / np.outer(norms, norms)
    expected = (cosine > 0.85).astype(float)
    np.fill_diagonal(expected, 0.0)
    np.testing.assert_array_equal(np.asarray(graph.adjacency), expected)

    # Normalization: D^{-1/2} (A+I) D^{-1/2}.
    ahat = expected + np.eye(12)
    dinv = 1.0 / np.sqrt(ahat.sum(axis=1))
    atil = ahat * np.outer(dinv, dinv)
    np.testing.assert_allclose(np.asarray(graph.normalized), atil, atol=1e-14)


def test_laplacian_spectrum_and_exact_filter_vs_numpy():
    rng = np.random.default_rng(11)
    a = (rng.uniform(size=(9, 9)) < 0.4).astype(float)
    a = np.triu(a, 1)
    a = a + a.T
    lap = np.asarray(ar.normalized_laplacian(a))
    eigenvalues = np.linalg.eigvalsh(lap)
    assert eigenvalues.min() >= -1e-10
    assert eigenvalues.max() <= 2.0 + 1e-10

    h = rng.standard_normal((9, 4))
    p, q = [0.7, -0.2], [0.3, 0.1]
    filtered = np.asarray(ar.arma_exact_filter(lap, p, q, h))
    numerator = p[0] * np.eye(9) + p[1] * lap
    denominator = np.eye(9) + q[0] * lap + q[1] * (lap @ lap)
    expected = np.linalg.solve(denominator, numerator @ h)
    np.testing.assert_allclose(filtered, expected, atol=1e-10)


def test_fixed_point_vs_numpy_solve():
    rng = np.random.default_rng(13)
    a = (rng.uniform(size=(8, 8)) < 0.5).astype(float)
    a = np.triu(a, 1)
    a = a + a.T
    atil = np.asarray(ar.normalize_adjacency(a))
    h = rng.standard_normal((8, 2))
    x, iterations = ar.arma_fixed_point(atil, 0.7, 1.5, h, tol=1e-13, max_iter=100000)
    expected = 1.5 * np.linalg.solve(np.eye(8) - 0.7 * atil, h)
    np.testing.assert_allclose(np.asarray(x), expected, rtol=1e-8)
    assert iterations > 1


def test_frequency_response():
    assert ar.frequency_response([1.0], [1.0], 1.0) == 0.5
    assert ar.frequency_response([0.25, 0.5], [0.0, 0.0], 0.0) == 0.25
    with pytest.raises(RuntimeError):
        ar.frequency_response([1.0], [-0.5], 2.0)


def test_stratified_folds_counts():
    labels = [0] * 10 + [1] * 10
    folds = ar.stratified_folds(labels, 0.9, 3, seed=7)
    assert len(folds) == 3
    for train, test in folds:
        train = np.asarray(train)
        test = np.asarray(test)
        assert (train ^ test).all()
        assert train[:10].sum() == 9 and train[10:].sum() == 9


def test_binary_metrics_auc():
    metrics = ar.binary_metrics([0.9, 0.8, 0.8, 0.1], [1, 1, 0, 0], [True] * 4)
    assert metrics["auc"] == 0.875
    one_class = ar.binary_metrics([0.5, 0.1], [1, 1], [True, True])
    assert one_class["auc"] is None


def _write_minimal_nifti(path, volume, slope=0.0, inter=0.0):
    """Independent NIfTI-1 writer built directly from the header layout."""
    header = bytearray(348)
    struct.pack_into("<i", header, 0, 348)
    dims = volume.shape
    struct.pack_into("<8h", header, 40, 3, dims[0], dims[1], dims[2], 1, 1, 1, 1)
    struct.pack_into("<h", header, 70, 16)  # float32
    struct.pack_into("<h", header, 72, 32)
    struct.pack_into("<f", header, 108, 352.0)
    struct.pack_into("<f", header, 112, slope)
    struct.pack_into("<f", header, 116, inter)
    header[344:348] = b"n+1\x00"
    payload = volume.astype("<f4").tobytes(order="F")
    with open(path, "wb") as out:
        out.write(bytes(header) + b"\x00" * 4 + payload)


def test_nifti_ingestion_and_subject_features(tmp_path):
    fa = np.array([[[0.05, 0.15], [0.95, 0.45]]], dtype=np.float32).reshape(1, 2, 2)
    atlas = np.array([[[1.0, 1.0], [2.0, 2.0]]], dtype=np.float32).reshape(1, 2, 2)
    fa_path = tmp_path / "fa.nii"
    atlas_path = tmp_path / "atlas.nii"
    _write_minimal_nifti(fa_path, fa)
    _write_minimal_nifti(atlas_path, atlas)

    vol = ar.load_nifti(str(fa_path))
    assert list(vol.dims) == [1, 2, 2]
    np.testing.assert_allclose(np.asarray(vol.voxels), fa.flatten(order="F"), atol=1e-7)

    row = np.asarray(ar.subject_features(vol, ar.load_nifti(str(atlas_path)), [1, 2], 10))
    assert row.shape == (20,)
    assert row[0] == 0.5 and row[1] == 0.5  # ROI 1: 0.05, 0.15
    assert row[10 + 9] == 0.5 and row[10 + 4] == 0.5  # ROI 2: 0.95, 0.45


def test_feature_csv_round_trip(tmp_path):
    fm = ar.synth_cohort(8, 2, 5, 0.2, 0.05, seed=2)
    path = tmp_path / "features.csv"
    ar.write_feature_csv(fm, str(path))
    back = ar.read_feature_csv(str(path))
    np.testing.assert_array_equal(np.asarray(fm.data), np.asarray(back.data))
    assert back.labels == fm.labels


def test_run_experiment_smoke():
    overrides = {
        "dataset": "synth",
        "synth_n": "24",
        "synth_p": "2",
        "bins": "6",
        "alpha": "0.8",
        "hidden_dim": "6",
        "epochs": "4",
        "folds": "2",
        "train_frac": "0.75",
        "seed": "3",
    }
    report = ar.run_experiment(overrides)
    assert len(report["per_fold"]) == 2
    assert 0.0 <= report["mean"]["acc"] <= 1.0
    again = ar.run_experiment(overrides)
    assert report["per_fold"] == again["per_fold"]

    with pytest.raises(ValueError):
        ar.run_experiment({"alpha": "1.5"})
