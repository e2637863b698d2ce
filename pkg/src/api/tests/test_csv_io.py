import io

import numpy as np
import pytest

from helpers.csv_io import normalize_points, read_points, read_rows, write_rows
from helpers.errors import DomainError, UsageError


def test_write_rows_format():
    buffer = io.StringIO()
    write_rows([{"n": 10, "error": 1e-7, "converged": True, "sampled": None}], buffer)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == "# schema=1"
    assert lines[1] == "n,error,converged,sampled"
    assert lines[2] == "10,9.9999999999999995e-08,true,"


def test_write_rows_to_path(tmp_path):
    path = tmp_path / "out" / "rows.csv"
    write_rows([{"a": 1.5, "b": float("nan")}], path)
    frame = read_rows(path)
    assert frame["a"].tolist() == [1.5]
    assert np.isnan(frame["b"][0])


def test_write_rows_needs_rows():
    with pytest.raises(UsageError):
        write_rows([], io.StringIO())


def test_read_points(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("x1,x2,y,sigma\n0.1,0.2,1.0,0.3\n-0.5,0.4,2.0,0.25\n")
    points, y, sigma = read_points(path, 2)
    np.testing.assert_array_equal(points, [[0.1, 0.2], [-0.5, 0.4]])
    np.testing.assert_array_equal(y, [1.0, 2.0])
    np.testing.assert_array_equal(sigma, [0.3, 0.25])


def test_read_points_without_optional_columns(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("# comment\nx1\n0.1\n0.2\n")
    points, y, sigma = read_points(path)
    assert points.shape == (2, 1)
    assert y is None and sigma is None


def test_read_points_errors(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(UsageError):
        read_points(path)

    path.write_text("x1,x2\n0.1,0.2\n")
    with pytest.raises(UsageError):
        read_points(path, 3)

    path.write_text("x1,y\n0.1,1\n,2\n")
    with pytest.raises(DomainError):
        read_points(path)


def test_normalize_points():
    points = np.array([[2.0, 10.0], [4.0, 11.0], [3.0, 12.0]])
    mapped, center, scale = normalize_points(points)
    np.testing.assert_array_equal(center, [3.0, 11.0])
    assert scale == 1.0
    assert np.all(np.abs(mapped) <= 1.0)
    np.testing.assert_allclose(mapped[0], [-1.0, -1.0])
