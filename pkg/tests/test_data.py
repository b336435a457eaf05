import math

import numpy as np
import pytest

from clusterkit.core import Dataset
from clusterkit.data import (
    DataFormatError,
    blob_params,
    extract_patch_features,
    generate_blobs,
    generate_rings,
    load_csv,
    read_ppm,
    sample_gmm,
    save_assignments_csv,
    save_csv,
    write_ppm,
)
from clusterkit.gmm import GmmParams

# chi-square critical value for 2 degrees of freedom at p = 0.001: -2 ln(0.001)
CHI2_DF2_P001 = 13.815510557964274


def write(tmp_path, name, text, mode="w"):
    path = tmp_path / name
    if mode == "w":
        path.write_text(text)
    else:
        path.write_bytes(text)
    return path


class TestLoadCsv:
    def test_plain(self, tmp_path):
        ds = load_csv(write(tmp_path, "a.csv", "0,0\n1,1\n"))
        assert ds.points.tolist() == [[0, 0], [1, 1]]

    def test_header_skipped(self, tmp_path):
        ds = load_csv(write(tmp_path, "a.csv", "x,y\n0,0\n"))
        assert ds.points.tolist() == [[0, 0]]

    def test_ragged_row(self, tmp_path):
        with pytest.raises(DataFormatError) as info:
            load_csv(write(tmp_path, "a.csv", "1,2\n3\n"))
        assert info.value.line == 2

    def test_non_numeric_after_header(self, tmp_path):
        with pytest.raises(DataFormatError) as info:
            load_csv(write(tmp_path, "a.csv", "x,y\n1,2\n3,abc\n"))
        assert info.value.line == 3

    @pytest.mark.parametrize("text", ["", "x,y\n", "\n\n"])
    def test_empty(self, tmp_path, text):
        with pytest.raises(DataFormatError):
            load_csv(write(tmp_path, "a.csv", text))

    def test_non_finite(self, tmp_path):
        with pytest.raises(DataFormatError) as info:
            load_csv(write(tmp_path, "a.csv", "1,2\nnan,3\n"))
        assert info.value.line == 2

    def test_round_trip_bit_exact(self, tmp_path, rng):
        x = rng.normal(size=(50, 3)) * 10.0 ** rng.integers(-30, 30, size=(50, 3))
        x[0, 0] = 0.1 + 0.2
        path = tmp_path / "rt.csv"
        save_csv(path, Dataset(x))
        assert load_csv(path).points.tobytes() == Dataset(x).points.tobytes()
        save_csv(path, Dataset(x), header=["a", "b", "c"])
        assert load_csv(path).points.tobytes() == Dataset(x).points.tobytes()


class TestSaveAssignments:
    def test_plain(self, tmp_path):
        path = tmp_path / "out.csv"
        save_assignments_csv(path, [0, 1])
        assert path.read_text() == "1,1\n2,2\n"

    def test_noise(self, tmp_path):
        path = tmp_path / "out.csv"
        save_assignments_csv(path, [0, -1])
        assert path.read_text() == "1,1\n2,noise\n"

    def test_responsibilities_round_trip(self, tmp_path):
        path = tmp_path / "out.csv"
        resp = np.array([[0.25, 0.75], [1 / 3, 2 / 3]])
        save_assignments_csv(path, [1, 1], resp)
        rows = [line.split(",") for line in path.read_text().splitlines()]
        assert rows[0] == ["1", "2", "0.25", "0.75"]
        back = np.array([[float(v) for v in r[2:]] for r in rows])
        assert back.tobytes() == resp.tobytes()


class TestPpm:
    def test_white_p3(self, tmp_path):
        path = write(tmp_path, "w.ppm", "P3\n2 2\n255\n" + "255 255 255 " * 4 + "\n")
        grid = extract_patch_features(path, 2, 2)
        assert grid.features.points.tolist() == [[1.0, 1.0, 1.0]]

    def test_red_blue_average(self, tmp_path):
        path = write(tmp_path, "rb.ppm", "P3\n# red then blue\n2 1\n255\n255 0 0  0 0 255\n")
        grid = extract_patch_features(path, 2, 1)
        assert grid.features.points.tolist() == [[0.5, 0.0, 0.5]]

    def test_trailing_pixels_dropped(self, tmp_path, rng):
        img = rng.integers(0, 256, size=(5, 5, 3))
        path = tmp_path / "five.ppm"
        write_ppm(path, img)
        grid = extract_patch_features(path, 2, 2)
        assert grid.features.m == 4
        assert grid.grid_shape == (2, 2)
        expected = img[2:4, 0:2].reshape(-1, 3).mean(axis=0) / 255
        np.testing.assert_allclose(grid.features.points[2], expected, rtol=1e-15)

    def test_features_in_unit_interval(self, tmp_path, rng):
        img = rng.integers(0, 1001, size=(12, 9, 3))
        path = tmp_path / "big.ppm"
        write_ppm(path, img, maxval=1000)
        pts = extract_patch_features(path, 3, 4).features.points
        assert pts.shape == (9, 3)
        assert pts.min() >= 0 and pts.max() <= 1

    @pytest.mark.parametrize("maxval", [255, 65535])
    def test_p3_and_p6_agree(self, tmp_path, rng, maxval):
        img = rng.integers(0, maxval + 1, size=(6, 8, 3))
        write_ppm(tmp_path / "a.ppm", img, maxval=maxval)
        write_ppm(tmp_path / "b.ppm", img, maxval=maxval, binary=True)
        a = extract_patch_features(tmp_path / "a.ppm", 2, 3).features.points
        b = extract_patch_features(tmp_path / "b.ppm", 2, 3).features.points
        assert a.tobytes() == b.tobytes()
        assert np.array_equal(read_ppm(tmp_path / "b.ppm")[0], img)

    @pytest.mark.parametrize(
        "content",
        [
            b"P5\n2 2\n255\n" + bytes(4),
            b"P3\n2 2\n",
            b"P3\n2 x\n255\n0 0 0",
            b"P3\n1 1\n255\n0 0",
            b"P6\n2 2\n255\n" + bytes(11),
            b"P3\n1 1\n255\n0 0 300\n",
            b"P3\n1 1\n0\n0 0 0\n",
        ],
        ids=["magic", "header", "bad-int", "p3-short", "p6-short", "over-maxval", "zero-maxval"],
    )
    def test_malformed(self, tmp_path, content):
        path = write(tmp_path, "bad.ppm", content, mode="b")
        with pytest.raises(DataFormatError):
            extract_patch_features(path, 1, 1)


class TestSampleGmm:
    def test_standard_normal_moments(self):
        p = GmmParams([[0.0, 0.0]], [np.eye(2)], [1.0])
        data, labels = sample_gmm(p, 10_000, seed=123)
        x = data.points
        assert np.all(np.abs(x.mean(axis=0)) < 0.05)
        assert np.all(np.abs(np.cov(x.T) - np.eye(2)) < 0.1)
        assert (labels == 0).all()

    def test_zero_prior_never_drawn(self):
        p = GmmParams([[0.0], [5.0]], [[[1.0]], [[1.0]]], [1.0, 0.0])
        _, labels = sample_gmm(p, 500, seed=1)
        assert (labels == 0).all()

    def test_deterministic(self):
        p = blob_params([[0, 0], [3, 3]], sd=[1.0, 0.5], priors=[0.3, 0.7])
        a = sample_gmm(p, 200, seed=77)
        b = sample_gmm(p, 200, seed=77)
        assert a[0].points.tobytes() == b[0].points.tobytes()
        assert np.array_equal(a[1], b[1])

    def test_covariance_applied(self):
        cov = np.array([[4.0, 1.5], [1.5, 1.0]])
        p = GmmParams([[1.0, -1.0]], [cov], [1.0])
        data, _ = sample_gmm(p, 20_000, seed=9)
        np.testing.assert_allclose(np.cov(data.points.T), cov, atol=0.1)
        np.testing.assert_allclose(data.points.mean(axis=0), [1.0, -1.0], atol=0.05)

    def test_label_frequencies_chi_square(self):
        priors = np.array([0.2, 0.5, 0.3])
        p = blob_params([[0.0], [1.0], [2.0]], priors=priors)
        m = 10_000
        _, labels = sample_gmm(p, m, seed=2718)
        observed = np.bincount(labels, minlength=3)
        expected = priors * m
        stat = float(((observed - expected) ** 2 / expected).sum())
        assert stat < CHI2_DF2_P001


class TestRings:
    def test_noise_free_radii(self):
        data, labels = generate_rings(50, [1.0, 2.5, 4.0], noise_sd=0.0, seed=3)
        norms = np.linalg.norm(data.points, axis=1)
        np.testing.assert_allclose(norms, np.array([1.0, 2.5, 4.0])[labels], atol=1e-12)
        assert np.bincount(labels).tolist() == [50, 50, 50]

    def test_separation(self):
        data, labels = generate_rings(100, [1.0, 5.0], noise_sd=0.05, seed=0)
        x = data.points
        cross = np.linalg.norm(x[labels == 0][:, None] - x[labels == 1][None], axis=2).min()
        assert cross > 3

    def test_deterministic(self):
        a, _ = generate_rings(30, [1, 2], noise_sd=0.1, seed=5)
        b, _ = generate_rings(30, [1, 2], noise_sd=0.1, seed=5)
        assert a.points.tobytes() == b.points.tobytes()

    @pytest.mark.parametrize("radii", [[2.0, 1.0], [0.0, 1.0], []])
    def test_bad_radii(self, radii):
        with pytest.raises(ValueError):
            generate_rings(10, radii)


def test_blobs_priors():
    _, labels = generate_blobs(100, [[0, 0], [5, 5]], priors=[1, 0], seed=0)
    assert (labels == 0).all()
