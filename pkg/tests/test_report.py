import os

from ddc import SolverConfig, SweepGrid
from ddc.report import render_class_histogram, render_scan, render_sweep_maps
from ddc.survey import class_survey, sweep_gw, ws_scan

FAST = SolverConfig(seed=61, restarts=10)


def test_sweep_maps_written(tmp_path):
    records = sweep_gw(SweepGrid(step=0.5), FAST)
    paths = render_sweep_maps(records, str(tmp_path / "map"))
    assert [os.path.basename(p) for p in paths] == ["map_nmax.png", "map_measures.png"]
    assert all(os.path.getsize(p) > 5000 for p in paths)


def test_scan_figure_written(tmp_path):
    records = ws_scan([0.1, 0.2, 0.3], FAST)
    (path,) = render_scan(records, str(tmp_path / "ws"))
    assert path.endswith("ws_scan.png")
    assert os.path.getsize(path) > 5000


def test_histogram_written(tmp_path):
    records = class_survey("w_class", 5, FAST)
    (path,) = render_class_histogram(records, str(tmp_path / "w"))
    assert path.endswith("w_hist.png")
    assert os.path.getsize(path) > 5000
