import json
import math
import os

import numpy as np
import pytest

from ddc import SolverConfig, SweepGrid
from ddc.survey import (
    CSV_HEADER,
    Task,
    advantage_fraction,
    build_state,
    class_survey,
    compute_record,
    nmax_percentages,
    record_to_row,
    row_to_record,
    run_tasks,
    sweep_gw,
    ws_scan,
)

FAST = SolverConfig(seed=31, restarts=15)


class TestGrid:
    def test_simplex_point_count_default(self):
        grid = SweepGrid(step=0.02)
        pts = grid.points()
        assert len(pts) == 51 * 52 // 2
        assert all(a + b <= 1.0 + 1e-9 for a, b in pts)

    def test_coarse_grid(self):
        grid = SweepGrid(step=0.5)
        assert grid.points() == [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0),
                                 (0.5, 0.0), (0.5, 0.5), (1.0, 0.0)]

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            SweepGrid(step=0.0)


class TestRecords:
    def test_round_trip_row(self):
        rec = compute_record(Task("gw", (1 / 3, 1 / 3), 0), seed=5, cfg=FAST)
        row = record_to_row(rec)
        back = row_to_record(row)
        assert back.n_max == rec.n_max == 6
        assert back.params[:2] == rec.params[:2]
        assert math.isnan(back.params[2]) and math.isnan(back.params[3])
        assert record_to_row(back) == row

    def test_deterministic_from_seed_and_index(self):
        a = compute_record(Task("w_class", (), 3), seed=9, cfg=FAST)
        b = compute_record(Task("w_class", (), 3), seed=9, cfg=FAST)
        assert a == b
        c = compute_record(Task("w_class", (), 4), seed=9, cfg=FAST)
        assert c != a

    def test_sampled_family_params_digest(self):
        rec = compute_record(Task("w_class", (), 7), seed=9, cfg=FAST)
        st = build_state("w_class", (), __import__("ddc").rng.child_seed(9, 7, 0))
        nz = np.flatnonzero(np.abs(st.amplitudes) > 1e-14)
        assert rec.params[0] == 7.0
        assert abs(complex(rec.params[1], rec.params[2]) - st.amplitudes[nz[0]]) < 1e-15

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            build_state("nope", (), 0)


class TestWsScan:
    def test_paper_points(self):
        records = ws_scan([0.02, 0.2], SolverConfig(seed=77, restarts=50), threads=1)
        assert [r.n_max for r in records] == [5, 4]


class TestPersistence:
    def test_csv_schema_and_manifest(self, tmp_path):
        out = str(tmp_path / "scan.csv")
        ws_scan([0.2, 0.5], FAST, out_path=out)
        lines = open(out).read().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 3
        assert lines[1].startswith("ws,0.2")
        man = json.load(open(out + ".manifest.json"))
        assert man["seed"] == FAST.seed
        assert man["counts"]["records"] == 2
        assert man["config"]["restarts"] == 15
        assert not os.path.exists(out + ".partial")
        assert not os.path.exists(out + ".checkpoint.json")

    def test_identical_reruns_byte_identical(self, tmp_path):
        out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        ws_scan([0.1, 0.3], FAST, out_path=out1)
        ws_scan([0.1, 0.3], FAST, out_path=out2)
        assert open(out1, "rb").read() == open(out2, "rb").read()

    def test_thread_count_does_not_change_bytes(self, tmp_path):
        out1, out2 = str(tmp_path / "t1.csv"), str(tmp_path / "t2.csv")
        tasks = [Task("w_class", (), i) for i in range(6)]
        run_tasks(tasks, 11, FAST, threads=1, out_path=out1)
        run_tasks(tasks, 11, FAST, threads=2, out_path=out2)
        assert open(out1, "rb").read() == open(out2, "rb").read()

    def test_checkpoint_resume_byte_identical(self, tmp_path):
        import hashlib

        tasks = [Task("w_class", (), i) for i in range(8)]
        extra = {"kind": "adhoc"}
        clean = str(tmp_path / "clean.csv")
        run_tasks(tasks, 13, FAST, threads=1, out_path=clean,
                  checkpoint_every=3, manifest_extra=extra)

        # simulate an interrupted run: first 5 records persisted, then resume
        resumed = str(tmp_path / "resumed.csv")
        head = [record_to_row(compute_record(t, 13, FAST)) for t in tasks[:5]]
        with open(resumed + ".partial", "w") as fh:
            fh.write("\n".join(head) + "\n")
        digest = hashlib.sha256(json.dumps({
            "seed": 13,
            "config": {"tolerance": FAST.tolerance, "restarts": FAST.restarts,
                       "max_iterations": FAST.max_iterations,
                       "use_capacity_bound": FAST.use_capacity_bound},
            "task": {"kind": "adhoc", "total": len(tasks)},
        }, sort_keys=True).encode()).hexdigest()
        with open(resumed + ".checkpoint.json", "w") as fh:
            json.dump({"digest": digest, "completed": 5}, fh)
        run_tasks(tasks, 13, FAST, threads=1, out_path=resumed, manifest_extra=extra)
        assert open(resumed, "rb").read() == open(clean, "rb").read()
        assert (open(resumed + ".manifest.json", "rb").read()
                == open(clean + ".manifest.json", "rb").read())

    def test_stale_checkpoint_ignored(self, tmp_path):
        out = str(tmp_path / "s.csv")
        with open(out + ".partial", "w") as fh:
            fh.write("garbage row\n")
        with open(out + ".checkpoint.json", "w") as fh:
            json.dump({"digest": "not-matching", "completed": 1}, fh)
        records = ws_scan([0.1], FAST, out_path=out)
        assert len(records) == 1
        lines = open(out).read().splitlines()
        assert len(lines) == 2 and lines[1].startswith("ws,0.1")


class TestSmallSurveys:
    def test_class_survey_records_and_percentages(self):
        records = class_survey("w_class", 12, FAST, threads=2)
        assert len(records) == 12
        assert all(r.class_label == "W_CLASS" for r in records)
        assert all(4 <= r.n_max <= 8 for r in records)
        pct = nmax_percentages(records)
        assert abs(sum(pct.values()) - 100.0) < 1e-9

    def test_sweep_key_points(self):
        grid = SweepGrid(alpha_min=1 / 3, alpha_max=1 / 3,
                         beta_min=1 / 3, beta_max=1 / 3, step=1.0)
        records = sweep_gw(grid, SolverConfig(seed=41, restarts=50))
        assert len(records) == 1
        assert records[0].n_max == 6  # the W point
        assert abs(records[0].measures.ggm - 1 / 3) < 1e-9

    def test_advantage_fraction(self):
        records = class_survey("w_class", 10, FAST)
        frac = advantage_fraction(records, 4)
        assert 0.0 <= frac <= 1.0

    def test_records_rerun_from_params_and_seed(self):
        # every persisted row re-runs to the same n_max from its own fields
        records = class_survey("ghz_class", 5, FAST)
        for rec in records:
            task = Task(rec.family, (), int(rec.params[0]))
            again = compute_record(task, rec.seed, FAST)
            assert again.n_max == rec.n_max
            assert again.params == rec.params
