import numpy as np
import pytest

from samplets import io as sio
from samplets.cluster_tree import PointCloud
from samplets.errors import InvalidInput
from samplets.sparse import (
    Permutation,
    SparseSym,
    fill_reducing_order,
    sparse_cholesky,
)


@pytest.fixture
def cloud():
    rng = np.random.default_rng(0)
    return PointCloud(rng.uniform(-1, 1, size=(17, 3)))


class TestPointFiles:
    def test_csv_round_trip(self, tmp_path, cloud):
        path = tmp_path / "pts.csv"
        sio.write_points_csv(path, cloud)
        again = sio.read_points(path)
        np.testing.assert_array_equal(again.coords, cloud.coords)

    def test_csv_header_detection(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("x,y\n0.5,1.5\n-2.0,3.25\n")
        cloud = sio.read_points(path)
        np.testing.assert_allclose(cloud.coords, [[0.5, 1.5], [-2.0, 3.25]])

    def test_binary_round_trip(self, tmp_path, cloud):
        path = tmp_path / "pts.bin"
        sio.write_points_binary(path, cloud)
        again = sio.read_points(path)
        np.testing.assert_array_equal(again.coords, cloud.coords)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidInput, match="no-such"):
            sio.read_points(tmp_path / "no-such.csv")

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "vec.bin"
        sio.write_vector_binary(path, np.ones(3))
        with pytest.raises(InvalidInput, match="wrong magic"):
            sio.read_points(path)

    def test_bad_rows_rejected(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(InvalidInput, match="inconsistent"):
            sio.read_points(path)


class TestVectorFiles:
    def test_csv_round_trip(self, tmp_path):
        vals = np.array([1.0, -2.5, 3e-17, 4.125])
        path = tmp_path / "v.csv"
        sio.write_vector_csv(path, vals)
        np.testing.assert_array_equal(sio.read_vector(path), vals)

    def test_binary_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        vals = rng.normal(size=101)
        path = tmp_path / "v.bin"
        sio.write_vector_binary(path, vals)
        np.testing.assert_array_equal(sio.read_vector(path), vals)

    def test_multi_column_rejected(self, tmp_path):
        path = tmp_path / "v.csv"
        path.write_text("1.0,2.0\n3.0,4.0\n")
        with pytest.raises(InvalidInput, match="single CSV column"):
            sio.read_vector(path)


class TestMatrixMarket:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        dense = (rng.random((9, 9)) < 0.3) * rng.normal(size=(9, 9))
        dense = np.tril(dense) + np.tril(dense, -1).T
        dense += np.diag(np.abs(dense).sum(axis=1) + 1)
        a = SparseSym.from_dense(dense)
        path = tmp_path / "k.mtx"
        sio.write_matrix_market(path, a)
        header = path.read_text().splitlines()[0]
        assert header == "%%MatrixMarket matrix coordinate real general"
        again = sio.read_matrix_market(path)
        np.testing.assert_allclose(again.to_dense(), dense)

    def test_symmetric_header_accepted(self, tmp_path):
        path = tmp_path / "s.mtx"
        path.write_text("%%MatrixMarket matrix coordinate real symmetric\n"
                        "2 2 3\n1 1 4.0\n2 1 1.0\n2 2 3.0\n")
        a = sio.read_matrix_market(path)
        np.testing.assert_allclose(a.to_dense(), [[4.0, 1.0], [1.0, 3.0]])

    def test_asymmetric_general_rejected(self, tmp_path):
        path = tmp_path / "bad.mtx"
        path.write_text("%%MatrixMarket matrix coordinate real general\n"
                        "2 2 2\n1 2 5.0\n2 2 1.0\n")
        with pytest.raises(InvalidInput, match="not symmetric"):
            sio.read_matrix_market(path)

    def test_deterministic_bytes(self, tmp_path):
        a = SparseSym.from_dense(np.array([[2.0, -1.0], [-1.0, 2.0]]))
        p1, p2 = tmp_path / "a.mtx", tmp_path / "b.mtx"
        sio.write_matrix_market(p1, a)
        sio.write_matrix_market(p2, a)
        assert p1.read_bytes() == p2.read_bytes()


class TestFactorFiles:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        dense = (rng.random((12, 12)) < 0.3) * rng.normal(size=(12, 12))
        dense = np.tril(dense, -1) + np.tril(dense, -1).T
        dense += np.diag(np.abs(dense).sum(axis=1) + 1)
        a = SparseSym.from_dense(dense)
        factor = sparse_cholesky(a, fill_reducing_order(a), rho=0.25)
        path = tmp_path / "f.chol"
        sio.write_factor(path, factor)
        again = sio.read_factor(path)
        assert again.n == factor.n
        assert again.rho == factor.rho
        np.testing.assert_array_equal(again.perm.order, factor.perm.order)
        np.testing.assert_array_equal(again.indices, factor.indices)
        np.testing.assert_array_equal(again.values, factor.values)
        b = rng.normal(size=12)
        np.testing.assert_allclose(again.solve(b), factor.solve(b))

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "junk.chol"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 40)
        with pytest.raises(InvalidInput, match="wrong magic"):
            sio.read_factor(path)
