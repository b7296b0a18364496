"""Batch surveys: parameter sweeps and Monte Carlo class statistics.

Every record is a pure function of (family, construction params, record
index, survey seed, solver config): record i draws its state from the stream
(seed, i, 0) and hands the solver the sub-seed derived from (seed, i, 1).
Worker count therefore never changes any output byte, only wall time.

Persistence is a fixed-schema CSV (one record per row, reals at 17
significant digits) plus a JSON manifest; long runs checkpoint every
``checkpoint_every`` records to a sidecar that allows byte-identical resume.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .measures import MeasureReport, measure_report
from .rng import child_seed, limit_blas_threads, stream
from .solver import DdcResult, SolverConfig, compute_nmax, dumps_document
from .states import (
    GHZ_CLASS,
    W_CLASS,
    PureState,
    make_dicke4,
    make_gw,
    make_ws,
    sample_class,
)

CSV_HEADER = (
    "family,param1,param2,param3,param4,class_label,n_max,"
    "ggm,neg_sq_monogamy,dc_capacity_bits,three_tangle,seed"
)

CLASS_FAMILIES = {"ghz_class": GHZ_CLASS, "w_class": W_CLASS}
DICKE_FAMILIES = {"gw4": 1, "dicke42": 2}


@dataclass(frozen=True)
class SurveyRecord:
    family: str
    params: tuple[float, float, float, float]
    class_label: str
    n_max: int
    measures: MeasureReport
    seed: int


@dataclass(frozen=True)
class SweepGrid:
    """Inclusive (alpha, beta) grid on the simplex alpha + beta <= 1."""

    alpha_min: float = 0.0
    alpha_max: float = 1.0
    beta_min: float = 0.0
    beta_max: float = 1.0
    step: float = 0.02

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")

    def points(self) -> list[tuple[float, float]]:
        out = []
        na = int(math.floor((self.alpha_max - self.alpha_min) / self.step + 1e-9))
        nb = int(math.floor((self.beta_max - self.beta_min) / self.step + 1e-9))
        for i in range(na + 1):
            a = self.alpha_min + i * self.step
            for j in range(nb + 1):
                b = self.beta_min + j * self.step
                if a + b <= 1.0 + 1e-9:
                    out.append((a, b))
        return out


@dataclass(frozen=True)
class Task:
    family: str
    cparams: tuple[float, ...]
    index: int


def build_state(family: str, cparams: tuple[float, ...], state_seed: int) -> PureState:
    """Construct the record's state; sampled families draw from state_seed."""
    if family == "gw":
        return make_gw(cparams[0], cparams[1])
    if family == "ws":
        return make_ws(cparams[0])
    if family in CLASS_FAMILIES:
        return sample_class(CLASS_FAMILIES[family], state_seed)
    if family in DICKE_FAMILIES:
        r = DICKE_FAMILIES[family]
        rng = stream(state_seed)
        x = rng.standard_normal(math.comb(4, r)) + 1j * rng.standard_normal(math.comb(4, r))
        return make_dicke4(r, x / np.linalg.norm(x))
    raise ValueError(f"unknown survey family {family!r}")


def _stored_params(task: Task, state: PureState) -> tuple[float, float, float, float]:
    if task.family in ("gw", "ws"):
        p = tuple(task.cparams) + (math.nan,) * (4 - len(task.cparams))
        return p[:4]
    # sampled families: record index plus an amplitude digest for re-run checks
    a0 = _first_support_amplitude(state)
    return (float(task.index), float(a0.real), float(a0.imag), math.nan)


def _first_support_amplitude(state: PureState) -> complex:
    amps = state.amplitudes
    nz = np.flatnonzero(np.abs(amps) > 1e-14)
    return complex(amps[nz[0]]) if nz.size else 0j


def compute_record(task: Task, seed: int, cfg: SolverConfig) -> SurveyRecord:
    """One survey record; deterministic in (task, seed, cfg)."""
    state_seed = child_seed(seed, task.index, 0)
    solver_seed = child_seed(seed, task.index, 1)
    state = build_state(task.family, task.cparams, state_seed)
    result: DdcResult = compute_nmax(state, SolverConfig(
        tolerance=cfg.tolerance,
        restarts=cfg.restarts,
        max_iterations=cfg.max_iterations,
        seed=solver_seed,
        use_capacity_bound=cfg.use_capacity_bound,
    ))
    label = ""
    if task.family == "ghz_class":
        label = "GHZ_CLASS"
    elif task.family == "w_class":
        label = "W_CLASS"
    return SurveyRecord(
        family=task.family,
        params=_stored_params(task, state),
        class_label=label,
        n_max=result.n_max,
        measures=measure_report(state),
        seed=seed,
    )


def _worker(args) -> SurveyRecord:
    task, seed, cfg = args
    return compute_record(task, seed, cfg)


def run_tasks(
    tasks: list[Task],
    seed: int,
    cfg: SolverConfig,
    threads: int = 1,
    out_path: str | None = None,
    checkpoint_every: int = 500,
    manifest_extra: dict | None = None,
    skip: int = 0,
    progress=None,
) -> list[SurveyRecord]:
    """Compute records in index order, optionally persisting with checkpoints."""
    records: list[SurveyRecord] = []
    limit_blas_threads()
    sink = _CsvSink(out_path, tasks, seed, cfg, manifest_extra or {}, checkpoint_every)
    todo = tasks[sink.completed:]
    args = ((t, seed, cfg) for t in todo)
    if threads > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=threads, initializer=limit_blas_threads) as pool:
            iterator = pool.map(_worker, args, chunksize=4)
            for rec in iterator:
                records.append(rec)
                sink.append(rec)
                if progress:
                    progress(len(records))
    else:
        for a in args:
            rec = _worker(a)
            records.append(rec)
            sink.append(rec)
            if progress:
                progress(len(records))
    return sink.finish(records)


def record_to_row(rec: SurveyRecord) -> str:
    m = rec.measures
    vals = [rec.family]
    vals += [_g17(p) for p in rec.params]
    vals.append(rec.class_label)
    vals.append(str(rec.n_max))
    vals += [_g17(v) for v in (m.ggm, m.neg_sq_monogamy, m.dc_capacity_bits, m.three_tangle)]
    vals.append(str(rec.seed))
    return ",".join(vals)


def _g17(v: float) -> str:
    return format(float(v), ".17g")


def row_to_record(row: str) -> SurveyRecord:
    parts = row.split(",")
    return SurveyRecord(
        family=parts[0],
        params=tuple(float(p) for p in parts[1:5]),
        class_label=parts[5],
        n_max=int(parts[6]),
        measures=MeasureReport(
            ggm=float(parts[7]),
            neg_sq_monogamy=float(parts[8]),
            dc_capacity_bits=float(parts[9]),
            three_tangle=float(parts[10]),
        ),
        seed=int(parts[11]),
    )


class _CsvSink:
    """Ordered CSV writer with atomic checkpoint/resume; inert without a path."""

    def __init__(self, out_path, tasks, seed, cfg, manifest_extra, checkpoint_every):
        self.out_path = out_path
        self.checkpoint_every = max(1, checkpoint_every)
        self.rows: list[str] = []
        self.completed = 0
        self.manifest = {
            "seed": seed,
            "config": {
                "tolerance": cfg.tolerance,
                "restarts": cfg.restarts,
                "max_iterations": cfg.max_iterations,
                "use_capacity_bound": cfg.use_capacity_bound,
            },
            "task": dict(manifest_extra, total=len(tasks)),
            "git_describe": _git_describe(),
        }
        self.digest = hashlib.sha256(
            json.dumps(
                {k: self.manifest[k] for k in ("seed", "config", "task")}, sort_keys=True
            ).encode()
        ).hexdigest()
        if out_path:
            self._try_resume()

    def _ckpt_path(self):
        return self.out_path + ".checkpoint.json"

    def _partial_path(self):
        return self.out_path + ".partial"

    def _try_resume(self):
        try:
            with open(self._ckpt_path()) as fh:
                ck = json.load(fh)
            if ck.get("digest") != self.digest:
                return
            with open(self._partial_path()) as fh:
                rows = fh.read().splitlines()
            if len(rows) != ck.get("completed", -1):
                return
            self.rows = rows
            self.completed = len(rows)
        except (OSError, json.JSONDecodeError):
            return

    def append(self, rec: SurveyRecord):
        self.rows.append(record_to_row(rec))
        if self.out_path and len(self.rows) % self.checkpoint_every == 0:
            self._write_checkpoint()

    def _write_checkpoint(self):
        _atomic_write(self._partial_path(), "\n".join(self.rows) + "\n")
        _atomic_write(
            self._ckpt_path(),
            json.dumps({"digest": self.digest, "completed": len(self.rows)}) + "\n",
        )

    def finish(self, fresh_records: list[SurveyRecord]) -> list[SurveyRecord]:
        all_records = [row_to_record(r) for r in self.rows[: self.completed]] + fresh_records
        if self.out_path:
            hist: dict[str, int] = {}
            for r in all_records:
                hist[str(r.n_max)] = hist.get(str(r.n_max), 0) + 1
            self.manifest["counts"] = {
                "records": len(all_records),
                "n_max_histogram": dict(sorted(hist.items())),
            }
            _atomic_write(self.out_path, CSV_HEADER + "\n" + "\n".join(self.rows) + "\n")
            _atomic_write(self.out_path + ".manifest.json", dumps_document(self.manifest))
            for p in (self._partial_path(), self._ckpt_path()):
                try:
                    os.remove(p)
                except OSError:
                    pass
        return all_records


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=10,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        return out.stdout.strip() if out.returncode == 0 else "unknown"
    except OSError:
        return "unknown"


# ---------------------------------------------------------------------------
# concrete surveys


def sweep_gw(
    grid: SweepGrid,
    cfg: SolverConfig,
    threads: int = 1,
    out_path: str | None = None,
    checkpoint_every: int = 500,
    progress=None,
) -> list[SurveyRecord]:
    """n_max and measures over the (alpha, beta) simplex grid."""
    tasks = [
        Task("gw", (a, b), i) for i, (a, b) in enumerate(grid.points())
    ]
    extra = {"kind": "sweep_gw", "grid": [grid.alpha_min, grid.alpha_max,
                                          grid.beta_min, grid.beta_max, grid.step]}
    return run_tasks(tasks, cfg.seed, cfg, threads, out_path, checkpoint_every,
                     manifest_extra=extra, progress=progress)


def class_survey(
    family: str,
    count: int,
    cfg: SolverConfig,
    threads: int = 1,
    out_path: str | None = None,
    checkpoint_every: int = 500,
    progress=None,
) -> list[SurveyRecord]:
    """Monte Carlo n_max statistics over one SLOCC class or Dicke family."""
    if family not in CLASS_FAMILIES and family not in DICKE_FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if count < 1:
        raise ValueError("count must be at least 1")
    tasks = [Task(family, (), i) for i in range(count)]
    extra = {"kind": "class_survey", "family": family, "count": count}
    return run_tasks(tasks, cfg.seed, cfg, threads, out_path, checkpoint_every,
                     manifest_extra=extra, progress=progress)


def ws_scan(
    a_values,
    cfg: SolverConfig,
    threads: int = 1,
    out_path: str | None = None,
    progress=None,
) -> list[SurveyRecord]:
    """n_max along the interpolation between the W state and |000>."""
    a_values = [float(a) for a in a_values]
    if any(not 0.0 <= a <= 1.0 for a in a_values):
        raise ValueError("a values must lie in [0, 1]")
    tasks = [Task("ws", (a,), i) for i, a in enumerate(a_values)]
    extra = {"kind": "ws_scan", "count": len(a_values)}
    return run_tasks(tasks, cfg.seed, cfg, threads, out_path,
                     manifest_extra=extra, progress=progress)


def advantage_fraction(records: list[SurveyRecord], classical_limit: int) -> float:
    if not records:
        return 0.0
    return sum(1 for r in records if r.n_max > classical_limit) / len(records)


def nmax_percentages(records: list[SurveyRecord]) -> dict[int, float]:
    out: dict[int, float] = {}
    for r in records:
        out[r.n_max] = out.get(r.n_max, 0) + 1
    return {k: 100.0 * v / len(records) for k, v in sorted(out.items())}
