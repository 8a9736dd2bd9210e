import numpy as np
import pytest

from errors import RejectedInputError
from matrix_io import read_matrix, read_vector, write_matrix, write_vector
from sensing import gen_fourier, gen_gaussian


def test_real_matrix_is_exact(tmp_path):
    path = str(tmp_path / "A.txt")
    A = gen_gaussian(6, 10, 3)
    write_matrix(path, A)
    back = read_matrix(path)
    np.testing.assert_array_equal(back, A)
    assert back.flags["F_CONTIGUOUS"]
    with open(path) as f:
        assert f.readline() == "6 10 real\n"


def test_complex_matrix_is_exact(tmp_path):
    path = str(tmp_path / "F.txt")
    A = gen_fourier(4, 8, 1)
    write_matrix(path, A)
    back = read_matrix(path)
    assert np.iscomplexobj(back)
    np.testing.assert_array_equal(back, A)


def test_vector_files(tmp_path):
    path = str(tmp_path / "y.txt")
    write_vector(path, np.array([1.0, -0.5, 2.25]))
    with open(path) as f:
        assert f.read() == "3 1 real\n1\n-0.5\n2.25\n"
    np.testing.assert_array_equal(read_vector(path), [1.0, -0.5, 2.25])


def test_read_vector_needs_one_column(tmp_path):
    path = str(tmp_path / "A.txt")
    write_matrix(path, np.eye(2))
    with pytest.raises(RejectedInputError):
        read_vector(path)


@pytest.mark.parametrize("text", [
    "2 2\n1 0\n0 1\n",
    "2 two real\n1 0 0 1\n",
    "2 2 quaternion\n1 0 0 1\n",
    "0 2 real\n",
    "2 2 real\n1 0 0\n",
    "2 2 complex\n1 0 0 1\n",
    "1 2 real\n1 x\n",
])
def test_malformed_files_are_rejected(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(RejectedInputError):
        read_matrix(str(path))


def test_write_rejects_higher_rank(tmp_path):
    with pytest.raises(RejectedInputError):
        write_matrix(str(tmp_path / "T.txt"), np.zeros((2, 2, 2)))
