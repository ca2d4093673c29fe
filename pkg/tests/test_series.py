import numpy as np
import pytest

from z2automaton.series import SeriesTable, mean_stderr


def table(**kw):
    args = dict(axis="time", x=[1.0, 2.0, 3.0], mean=[0.5, 0.4, 0.3],
                stderr=[0.01, 0.01, 0.01], n=[10, 10, 10],
                metadata={"config": {"L": 8}})
    args.update(kw)
    return SeriesTable(**args)


class TestValidation:
    def test_axis_checked(self):
        with pytest.raises(ValueError):
            table(axis="bananas")

    def test_x_strictly_increasing(self):
        with pytest.raises(ValueError):
            table(x=[1.0, 1.0, 2.0])

    def test_counts_positive(self):
        with pytest.raises(ValueError):
            table(n=[10, 0, 10])

    def test_stderr_nonnegative(self):
        with pytest.raises(ValueError):
            table(stderr=[0.01, -0.01, 0.0])


class TestRoundtrip:
    def test_csv_roundtrip_bitexact(self, tmp_path):
        tab = table(mean=[0.1234567890123456, 1e-17, 3.0])
        path = str(tmp_path / "t.csv")
        tab.write(path)
        back = SeriesTable.read(path)
        assert np.array_equal(back.x, tab.x)
        assert np.array_equal(back.mean, tab.mean)
        assert back.metadata["config"]["L"] == 8
        assert back.axis == "time"

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="header"):
            SeriesTable.read(str(path))

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        tab = table()
        tab.write(str(tmp_path / "t.csv"))
        leftovers = [f for f in tmp_path.iterdir() if f.name.startswith(".tmp")]
        assert not leftovers

    def test_window(self):
        tab = table()
        w = tab.window(2, 3)
        assert list(w.x) == [2.0, 3.0]


def test_mean_stderr_matches_numpy():
    rng = np.random.default_rng(1)
    data = rng.normal(size=(50, 4))
    mean, err = mean_stderr(data)
    assert np.allclose(mean, data.mean(axis=0))
    assert np.allclose(err, data.std(axis=0, ddof=1) / np.sqrt(50))


def test_mean_stderr_single_sample():
    mean, err = mean_stderr(np.ones((1, 3)))
    assert np.all(err == 0)
