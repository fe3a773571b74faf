import numpy as np
import pytest

from spectralaug import ValidationError, dump_matrix, load_matrix


def test_round_trip_exact(tmp_path, gen):
    m = gen.standard_normal((5, 3)) * 10.0 ** gen.integers(-8, 8, size=(5, 3))
    path = tmp_path / "m.csv"
    dump_matrix(m, path)
    assert np.array_equal(load_matrix(path), m)


def test_serialization_is_stable(tmp_path, gen):
    m = gen.standard_normal((4, 4))
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    dump_matrix(m, p1)
    dump_matrix(m, p2)
    assert p1.read_bytes() == p2.read_bytes()


@pytest.mark.parametrize("body", ["1.0,nan\n2.0,3.0\n", "1.0,inf\n2.0,3.0\n", "1.0\n2.0,3.0\n",
                                  "1.0,oops\n", ""])
def test_rejects_bad_files(tmp_path, body):
    path = tmp_path / "bad.csv"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(ValidationError):
        load_matrix(path)


def test_rejects_nan_on_write(tmp_path):
    with pytest.raises(ValidationError):
        dump_matrix(np.array([[np.nan, 1.0]]), tmp_path / "x.csv")
