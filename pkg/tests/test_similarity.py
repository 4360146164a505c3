from math import pi

import numpy as np
import pytest

from rulesim.similarity import (
    Convention,
    Measure,
    ResponseMatrix,
    cca_score,
    cka_score,
    compare_all,
    noise_floor,
    pad_to_common_dim,
    permute_units,
    procrustes_distance,
    rotate_units,
    score,
    subsample_units,
)
from rulesim.util import ConfigurationError, DegenerateInputError, IngestionError, ShapeError


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


class TestProcrustes:
    def test_distance_to_itself_is_zero(self, rng):
        responses = rng.standard_normal((60, 8))
        assert procrustes_distance(responses, responses) < 1e-10

    def test_orthogonal_invariance(self, rng):
        a, b = rng.standard_normal((50, 6)), rng.standard_normal((50, 6))
        base = procrustes_distance(a, b)
        rotated = procrustes_distance(a @ random_orthogonal(rng, 6), b @ random_orthogonal(rng, 6))
        assert rotated == pytest.approx(base, abs=1e-8)
        assert procrustes_distance(a, a @ random_orthogonal(rng, 6)) < 1e-8

    def test_permutation_and_scale_invariance(self, rng):
        a = rng.standard_normal((40, 5))
        assert procrustes_distance(a, 3.0 * a[:, rng.permutation(5)]) < 1e-8

    def test_symmetry_and_range(self, rng):
        for _ in range(10):
            a, b = rng.standard_normal((30, 4)), rng.standard_normal((30, 7))
            forward, backward = procrustes_distance(a, b), procrustes_distance(b, a)
            assert forward == pytest.approx(backward, abs=1e-12)
            assert 0.0 <= forward <= pi / 2

    def test_triangle_inequality(self, rng):
        for _ in range(20):
            a, b, c = (rng.standard_normal((25, 5)) for _ in range(3))
            ab, bc, ac = (procrustes_distance(*pair) for pair in [(a, b), (b, c), (a, c)])
            assert ac <= ab + bc + 1e-12

    def test_metric_axioms_on_many_triples(self, rng):
        for _ in range(1000):
            widths = rng.integers(2, 9, size=3)
            a, b, c = (rng.standard_normal((30, width)) for width in widths)
            ab, bc, ac = (procrustes_distance(*pair) for pair in [(a, b), (b, c), (a, c)])
            assert procrustes_distance(b, a) == pytest.approx(ab, abs=1e-8)
            assert ac <= ab + bc + 1e-8
            assert procrustes_distance(a, a) < 1e-8

    def test_two_unit_brute_force(self, rng):
        a, b = rng.standard_normal((20, 2)), rng.standard_normal((20, 2))
        ac, bc = a - a.mean(axis=0), b - b.mean(axis=0)
        ac, bc = ac / np.linalg.norm(ac), bc / np.linalg.norm(bc)
        best = -1.0
        for phi in np.linspace(0, 2 * pi, 20001):
            rotation = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
            for reflection in [np.eye(2), np.diag([1.0, -1.0])]:
                best = max(best, np.sum(ac * (bc @ reflection @ rotation)))
        assert procrustes_distance(a, b) == pytest.approx(np.arccos(best), abs=1e-4)

    def test_zero_padding_matches_explicit_pad(self, rng):
        a, b = rng.standard_normal((30, 3)), rng.standard_normal((30, 6))
        padded_a, padded_b = pad_to_common_dim(a, b)
        assert padded_a.shape == (30, 6)
        assert procrustes_distance(a, b) == pytest.approx(procrustes_distance(padded_a, padded_b))

    def test_centering_removes_offsets(self, rng):
        a = rng.standard_normal((30, 4))
        assert procrustes_distance(a, a + 5.0) < 1e-8
        assert procrustes_distance(a, a + 5.0, center=False) > 1e-3

    def test_zero_matrix_is_degenerate(self, rng):
        with pytest.raises(DegenerateInputError):
            procrustes_distance(np.ones((10, 3)), rng.standard_normal((10, 3)))

    def test_row_mismatch(self, rng):
        with pytest.raises(ShapeError):
            procrustes_distance(rng.standard_normal((10, 3)), rng.standard_normal((11, 3)))


class TestCKA:
    def test_identical_is_one(self, rng):
        a = rng.standard_normal((50, 6))
        assert cka_score(a, a) == pytest.approx(1.0)

    def test_invariant_to_rotation_and_isotropic_scale(self, rng):
        a, b = rng.standard_normal((50, 6)), rng.standard_normal((50, 4))
        base = cka_score(a, b)
        assert cka_score(2.0 * a @ random_orthogonal(rng, 6), b) == pytest.approx(base)

    def test_range(self, rng):
        value = cka_score(rng.standard_normal((40, 3)), rng.standard_normal((40, 9)))
        assert 0.0 <= value <= 1.0

    def test_constant_is_degenerate(self, rng):
        with pytest.raises(DegenerateInputError):
            cka_score(np.full((10, 2), 3.0), rng.standard_normal((10, 2)))


class TestCCA:
    def test_invertible_map_gives_one(self, rng):
        a = rng.standard_normal((100, 4))
        mixing = rng.standard_normal((4, 4)) + 4 * np.eye(4)
        assert cca_score(a, a @ mixing) == pytest.approx(1.0, abs=1e-8)

    def test_range(self, rng):
        value = cca_score(rng.standard_normal((100, 5)), rng.standard_normal((100, 5)))
        assert 0.0 <= value <= 1.0

    def test_too_few_rows_collapse(self, rng):
        with pytest.raises(DegenerateInputError):
            cca_score(rng.standard_normal((4, 3)), rng.standard_normal((4, 3)))


class TestScores:
    def test_conventions(self, rng):
        a = rng.standard_normal((50, 5))
        scores = {result.measure: result for result in compare_all(a, a)}
        assert scores[Measure.PROCRUSTES].convention == Convention.DISTANCE
        assert scores[Measure.CKA].convention == Convention.SIMILARITY
        complement = scores[Measure.CKA].complement()
        assert complement.convention == Convention.DISTANCE
        assert complement.value == pytest.approx(0.0, abs=1e-12)

    def test_procrustes_has_no_complement(self, rng):
        result = score("procrustes", rng.standard_normal((20, 2)), rng.standard_normal((20, 3)))
        assert result.padded_to == 3
        with pytest.raises(ConfigurationError):
            result.complement()


class TestPreprocessing:
    def test_rotation_keeps_distance_zero(self, rng):
        a = rng.standard_normal((30, 5))
        assert procrustes_distance(a, rotate_units(a, seed=1)) < 1e-8
        assert procrustes_distance(a, permute_units(a, seed=1)) < 1e-8

    def test_rotation_needs_two_units(self, rng):
        with pytest.raises(ShapeError):
            rotate_units(rng.standard_normal((10, 1)), seed=0)

    def test_subsample(self, rng):
        a = rng.standard_normal((10, 8))
        first, second = subsample_units(a, 3, seed=4), subsample_units(a, 3, seed=4)
        np.testing.assert_array_equal(first, second)
        assert first.shape == (10, 3)
        with pytest.raises(ShapeError):
            subsample_units(a, 9, seed=0)

    def test_response_matrix_is_preserved(self, rng):
        responses = ResponseMatrix.from_array(rng.standard_normal((2, 5, 4)), source="data")
        rotated = rotate_units(responses, seed=0)
        assert isinstance(rotated, ResponseMatrix)
        assert (rotated.n_conditions, rotated.n_steps, rotated.source) == (2, 5, "data")


class TestResponseFiles:
    def test_write_read_write_is_byte_identical(self, tmp_path, rng):
        responses = ResponseMatrix.from_array(rng.standard_normal((3, 4, 5)), source="surrogate")
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        responses.write_csv(str(first))
        loaded = ResponseMatrix.read_csv(str(first))
        loaded.write_csv(str(second))
        assert first.read_bytes() == second.read_bytes()
        np.testing.assert_array_equal(loaded.data, responses.data)
        assert loaded.source == "surrogate"

    def test_header_layout(self, tmp_path):
        responses = ResponseMatrix(np.array([[1.0, 0.5], [0.25, -2.0]]), 1, 2)
        path = tmp_path / "r.csv"
        responses.write_csv(str(path))
        assert path.read_text().splitlines() == [
            "# conditions=1 steps=2 units=2 source=model",
            "1,0.5",
            "0.25,-2",
        ]

    def test_malformed_header(self, tmp_path):
        path = write_lines(tmp_path / "r.csv", ["conditions=1", "1,2"])
        with pytest.raises(IngestionError) as error:
            ResponseMatrix.read_csv(path)
        assert error.value.line == 1

    def test_wrong_value_count(self, tmp_path):
        header = "# conditions=1 steps=2 units=2 source=data"
        path = write_lines(tmp_path / "r.csv", [header, "1,2", "3"])
        with pytest.raises(IngestionError) as error:
            ResponseMatrix.read_csv(path)
        assert error.value.line == 3

    def test_non_numeric_value(self, tmp_path):
        header = "# conditions=1 steps=2 units=2 source=data"
        path = write_lines(tmp_path / "r.csv", [header, "1,x", "3,4"])
        with pytest.raises(IngestionError) as error:
            ResponseMatrix.read_csv(path)
        assert error.value.line == 2

    def test_non_finite_value(self, tmp_path):
        header = "# conditions=1 steps=2 units=2 source=data"
        path = write_lines(tmp_path / "r.csv", [header, "1,2", "nan,4"])
        with pytest.raises(IngestionError) as error:
            ResponseMatrix.read_csv(path)
        assert error.value.line == 3

    def test_missing_rows(self, tmp_path):
        header = "# conditions=2 steps=2 units=1 source=data"
        path = write_lines(tmp_path / "r.csv", [header, "1", "2", "3"])
        with pytest.raises(IngestionError):
            ResponseMatrix.read_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestionError):
            ResponseMatrix.read_csv(str(tmp_path / "absent.csv"))

    def test_invalid_utf8_header(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_bytes(b"\xff\xfe# conditions=1 steps=1 units=1 source=data\n1\n")
        with pytest.raises(IngestionError) as error:
            ResponseMatrix.read_csv(str(path))
        assert error.value.line == 1

    def test_invalid_utf8_row(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_bytes(b"# conditions=1 steps=2 units=1 source=data\n1\n\xc3(\n")
        with pytest.raises(IngestionError) as error:
            ResponseMatrix.read_csv(str(path))
        assert error.value.line == 3

    def test_row_count_must_match_layout(self):
        with pytest.raises(ShapeError):
            ResponseMatrix(np.zeros((5, 2)), 2, 2)


class TestNoiseFloor:
    def test_shapes_and_ranges(self, rng):
        reference = rng.standard_normal((40, 20))
        model = rng.standard_normal((40, 12))
        result = noise_floor(reference, model, n_sample=5, n_repeats=7, seed=0)
        assert result.data_data.shape == (7,) and result.model_data.shape == (7,)
        assert np.all((result.data_data >= 0) & (result.data_data <= pi / 2))
        assert set(result.summary()) == {
            "data_data_mean",
            "data_data_std",
            "model_data_mean",
            "model_data_std",
        }

    def test_shared_structure_lowers_the_floor(self, rng):
        latent = rng.standard_normal((60, 3))
        reference = latent @ rng.standard_normal((3, 30)) + 0.1 * rng.standard_normal((60, 30))
        model = rng.standard_normal((60, 15))
        result = noise_floor(reference, model, n_sample=10, n_repeats=5, seed=1)
        assert result.data_data.mean() < result.model_data.mean()

    def test_needs_disjoint_groups(self, rng):
        with pytest.raises(ShapeError):
            noise_floor(rng.standard_normal((10, 6)), rng.standard_normal((10, 6)), 4, 2, 0)
