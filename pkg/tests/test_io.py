import csv
import json

import numpy as np
import pytest

from oecs import analytic_flow
from oecs.errors import ConfigError, DataError
from oecs.geostrophic import SshGrid
from oecs.grid_field import GridAxis, GriddedField
from oecs.io import (read_grid, read_ssh, sha256_file, write_csv, write_grid, write_json,
                     write_polylines, write_ssh)


def _gridded(nt=None):
    f = analytic_flow("cellular")
    ta = GridAxis(0.0, 0.5, nt) if nt else None
    return GriddedField.from_function(f.velocity, GridAxis(-1, 0.1, 7), GridAxis(0, 0.2, 5), ta)


@pytest.mark.parametrize("nt", [None, 3])
def test_grid_round_trip(tmp_path, nt):
    g = _gridded(nt)
    write_grid(tmp_path / "a.grid", g)
    back = read_grid(tmp_path / "a.grid")
    assert np.array_equal(back.u, g.u) and np.array_equal(back.v, g.v)
    assert back.x_axis == g.x_axis and back.y_axis == g.y_axis
    assert (back.t_axis is None) == (nt is None)


def test_ssh_round_trip(tmp_path):
    h = np.arange(12.0).reshape(3, 4) / 7
    s = SshGrid(GridAxis(0, 1, 4), GridAxis(-30, 1, 3), None, h)
    write_ssh(tmp_path / "a.ssh", s)
    assert np.array_equal(read_ssh(tmp_path / "a.ssh").h, s.h)


def test_bad_header(tmp_path):
    p = tmp_path / "bad.grid"
    p.write_text("NOT-A-GRID\n1 1 1\n0 1 0 1 0 1\n0 0\n")
    with pytest.raises(DataError):
        read_grid(p)


def test_truncated_samples(tmp_path):
    p = tmp_path / "short.grid"
    p.write_text("OECS-GRID 1\n2 2 1\n0 1 0 1 0 1\n0 0\n1 1\n")
    with pytest.raises(DataError):
        read_grid(p)


def test_nonfinite_samples(tmp_path):
    p = tmp_path / "nan.grid"
    p.write_text("OECS-GRID 1\n2 1 1\n0 1 0 1 0 1\n0 nan\n1 1\n")
    with pytest.raises(DataError):
        read_grid(p)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        read_grid(tmp_path / "nope.grid")


def test_csv_and_polylines(tmp_path):
    write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 0.1], {"a": 2, "b": 1 / 3}])
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows == [["a", "b"], ["1", "0.1"], ["2", repr(1 / 3)]]
    write_polylines(tmp_path / "p.csv", [({"k": 7}, [[0, 0], [1, 1]]), ({"k": 8}, [[2, 2]])])
    rows = list(csv.reader(open(tmp_path / "p.csv")))
    assert rows[0] == ["curve", "vertex", "x", "y", "k"] and len(rows) == 4


def test_json_deterministic(tmp_path):
    obj = {"b": np.float64(0.5), "a": np.arange(3), "c": np.int64(4)}
    write_json(tmp_path / "1.json", obj)
    write_json(tmp_path / "2.json", dict(reversed(list(obj.items()))))
    assert sha256_file(tmp_path / "1.json") == sha256_file(tmp_path / "2.json")
    assert json.load(open(tmp_path / "1.json")) == {"a": [0, 1, 2], "b": 0.5, "c": 4}
