from __future__ import annotations

import math

import numpy as np
import pytest

from metasens.report import CSV_COLUMNS, SobolEntry, SobolReport, range_flag
from metasens.rng import as_generator, stream


def test_report_csv_round_trip(tmp_path):
    rep = SobolReport(("a", "b", "c"))
    rep.add(SobolEntry((0,), "first", 0.25, "pce_analytic"))
    rep.add(SobolEntry((0, 2), "subset", 1 / 3, "gp_realizations", std=0.01, N=100, m=10, seed=4, mc_se=0.002))
    rep.add(SobolEntry((1,), "total", -0.01, "pick_freeze_total", N=50, seed="1-2", flag=range_flag(-0.01)))
    rep.to_csv(tmp_path / "r.csv")
    text = (tmp_path / "r.csv").read_text()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert "a+c" in text and "\r" not in text
    back = SobolReport.from_csv(tmp_path / "r.csv", ("a", "b", "c"))
    assert back.estimate((0, 2)) == 1 / 3
    assert back.get((1,), "total").flag == "out_of_range"
    assert math.isnan(back.get((0,)).std)
    np.testing.assert_array_equal(back.vector("first"), [0.25, np.nan, np.nan])
    with pytest.raises(KeyError):
        back.get((1, 2))


def test_range_flag():
    assert range_flag(0.0) == "" and range_flag(1.0) == ""
    assert range_flag(1.0 + 1e-12) == "out_of_range"
    assert range_flag(math.nan) == "out_of_range"


def test_streams_are_keyed_and_reproducible():
    a = stream(1, 2, "x").random(5)
    assert np.array_equal(a, stream(1, 2, "x").random(5))
    assert not np.array_equal(a, stream(1, 2, "y").random(5))
    assert not np.array_equal(stream(1, 2).random(5), stream(2, 1).random(5))
    assert np.array_equal(as_generator((1, 2)).random(3), stream(1, 2).random(3))
    g = np.random.default_rng(0)
    assert as_generator(g) is g
    with pytest.raises(ValueError):
        stream(-1)
