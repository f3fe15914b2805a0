"""Batch runner and competition-style scoring.

Runs engines over a directory of `.sl` benchmarks under a wallclock
limit, applies both post-processors, persists one JSON line per record
(so a crashed run resumes), and scores outcomes with pseudo-logarithmic
time and size buckets.
"""

from __future__ import annotations

import json
import multiprocessing as mp
import os
import time
from bisect import bisect_right
from dataclasses import dataclass, field, asdict

from .core import SygusError, term_size
from .engine import Budget, cegis_solve, unify_solve, extract_pbe_points, Failure
from .frontend import parse_file, parse_solution
from .oracle import VerifyConfig, check_conformance, verify

TIME_EDGES = (1, 3, 10, 30, 100, 300, 1000, 3600)
SIZE_EDGES = (10, 30, 100, 300, 1000)

OUTCOMES = (
    "solved",
    "failed",
    "timeout",
    "nonconformant",
    "semantics-failed",
    "unknown-verified",
)


class DataError(SygusError):
    pass


def time_bucket(seconds) -> int:
    """Index on the scale [0,1), [1,3), [3,10), [10,30), [30,100),
    [100,300), [300,1000), [1000,3600), >=3600."""
    if seconds < 0:
        raise ValueError("negative wallclock")
    return bisect_right(TIME_EDGES, seconds)


def size_bucket(count) -> int:
    """Index on the scale [1,10), [10,30), [30,100), [100,300),
    [300,1000), >=1000."""
    if count < 1:
        raise ValueError("expression size must be >= 1")
    return bisect_right(SIZE_EDGES, count)


@dataclass
class RunRecord:
    benchmark: str
    engine: str
    outcome: str
    wallclock: float
    size: int = None
    cpu: float = None
    solution: str = None  # emitted define-fun text when solved

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line):
        return cls(**json.loads(line))


@dataclass
class ScoreReport:
    engines: dict  # engine -> counts
    benchmarks: dict  # benchmark -> per-benchmark summary

    def to_json(self, indent=2):
        return json.dumps({"engines": self.engines, "benchmarks": self.benchmarks}, indent=indent, sort_keys=True)


def score(records) -> ScoreReport:
    """Solved / uniquely-solved / among-the-fastest counts plus
    per-benchmark time and size ranges."""
    seen = set()
    for r in records:
        key = (r.engine, r.benchmark)
        if key in seen:
            raise DataError(f"duplicate record for {key}")
        seen.add(key)
        if r.outcome not in OUTCOMES:
            raise DataError(f"unknown outcome {r.outcome!r}")
    engines = {}
    for r in records:
        engines.setdefault(
            r.engine,
            {"solved": 0, "unknown_verified": 0, "uniquely_solved": 0, "among_fastest": 0},
        )
    by_benchmark = {}
    for r in records:
        by_benchmark.setdefault(r.benchmark, []).append(r)
    benchmarks = {}
    for bench, rs in by_benchmark.items():
        solved = [r for r in rs if r.outcome == "solved"]
        for r in rs:
            if r.outcome == "solved":
                engines[r.engine]["solved"] += 1
            elif r.outcome == "unknown-verified":
                engines[r.engine]["unknown_verified"] += 1
        entry = {
            "solved_by": sorted(r.engine for r in solved),
            "time_range": None,
            "size_range": None,
            "fastest": [],
        }
        if solved:
            times = [r.wallclock for r in solved]
            entry["time_range"] = [min(times), max(times)]
            sizes = [r.size for r in solved if r.size is not None]
            if sizes:
                entry["size_range"] = [min(sizes), max(sizes)]
            best = min(time_bucket(t) for t in times)
            fastest = sorted(r.engine for r in solved if time_bucket(r.wallclock) == best)
            entry["fastest"] = fastest
            for e in fastest:
                engines[e]["among_fastest"] += 1
            if len(solved) == 1:
                engines[solved[0].engine]["uniquely_solved"] += 1
        benchmarks[bench] = entry
    return ScoreReport(engines, benchmarks)


# ---------------------------------------------------------------------------
# Suite execution


@dataclass
class SuiteConfig:
    engine: str = "auto"  # "cegis" | "unif" | "auto"
    engine_id: str = None  # record label; defaults to the engine name
    timeout: float = 60.0
    workers: int = 1
    max_size: int = 20
    max_pred_size: int = 9
    seed: int = 0
    smt_cmd: object = None
    records_path: str = None
    solutions_dir: str = None

    def label(self):
        return self.engine_id or self.engine


def _pick_solver(problem, engine):
    if engine == "cegis":
        return cegis_solve
    if engine == "unif":
        return unify_solve
    # auto: unification for invariant and PBE problems and for grammars with
    # a conditional production; plain enumeration otherwise.
    if problem.invariant_spec is not None:
        return unify_solve
    try:
        if extract_pbe_points(problem) is not None:
            return unify_solve
    except SygusError:
        pass
    from .engine import _conditional_kind

    for t in problem.targets:
        if _conditional_kind(t.grammar)[0] is not None and len(problem.targets) == 1:
            return unify_solve
    return cegis_solve


def solve_benchmark(path, cfg: SuiteConfig):
    """Parse, solve and post-process one benchmark.

    Returns (outcome, wallclock, cpu, size, solution_text).
    """
    t0 = time.monotonic()
    c0 = time.process_time()
    try:
        problem = parse_file(path)
    except Exception:
        return ("failed", time.monotonic() - t0, time.process_time() - c0, None, None)
    budget = Budget(
        wallclock=cfg.timeout,
        max_term_size=cfg.max_size,
        max_pred_size=cfg.max_pred_size,
        seed=cfg.seed,
    )
    vcfg = VerifyConfig(seed=cfg.seed, smt_cmd=cfg.smt_cmd)
    solver = _pick_solver(problem, cfg.engine)
    result = solver(problem, budget, vcfg)
    wall = time.monotonic() - t0
    cpu = time.process_time() - c0
    if isinstance(result, Failure):
        outcome = "timeout" if result.reason == "budget-exhausted" else "failed"
        return (outcome, wall, cpu, None, None)
    for name, fun in result.funs.items():
        if check_conformance(fun.body, problem.target(name).grammar).kind != "valid":
            return ("nonconformant", wall, cpu, None, result.emit())
    verdict = verify(problem, result.as_map(), vcfg)
    total = sum(term_size(f.body) for f in result.funs.values())
    if verdict.kind == "valid":
        return ("solved", wall, cpu, total, result.emit())
    if verdict.kind == "unknown":
        return ("unknown-verified", wall, cpu, total, result.emit())
    return ("semantics-failed", wall, cpu, None, result.emit())


def _worker(path, cfg, conn):
    try:
        out = solve_benchmark(path, cfg)
    except Exception as e:  # a crashing engine fails its record only
        out = ("failed", 0.0, 0.0, None, f"; error: {e}")
        out = (out[0], out[1], out[2], out[3], None)
    conn.send(out)
    conn.close()


def run_suite(bench_dir, cfg: SuiteConfig):
    """Run every `.sl` file under `bench_dir`; returns RunRecord list.

    Records are appended to `cfg.records_path` as they complete; on
    restart, benchmarks already recorded for this engine are skipped.
    """
    paths = sorted(
        os.path.join(bench_dir, f) for f in os.listdir(bench_dir) if f.endswith(".sl")
    )
    done = {}
    records = []
    if cfg.records_path and os.path.exists(cfg.records_path):
        with open(cfg.records_path) as fh:
            for line in fh:
                if line.strip():
                    r = RunRecord.from_json(line)
                    if r.engine == cfg.label():
                        done[r.benchmark] = r
    pending = []
    for p in paths:
        bench = os.path.basename(p)
        if bench in done:
            records.append(done[bench])
        else:
            pending.append(p)

    ctx = mp.get_context("fork")
    active = {}  # proc -> (bench, conn, start)
    idx = 0

    def launch():
        nonlocal idx
        while idx < len(pending) and len(active) < max(1, cfg.workers):
            path = pending[idx]
            idx += 1
            parent, child = ctx.Pipe(duplex=False)
            proc = ctx.Process(target=_worker, args=(path, cfg, child))
            proc.start()
            child.close()
            active[proc] = (os.path.basename(path), parent, time.monotonic())

    def emit(record):
        records.append(record)
        if cfg.records_path:
            with open(cfg.records_path, "a") as fh:
                fh.write(record.to_json() + "\n")
        if cfg.solutions_dir and record.solution:
            os.makedirs(cfg.solutions_dir, exist_ok=True)
            with open(os.path.join(cfg.solutions_dir, record.benchmark + ".sol"), "w") as fh:
                fh.write(record.solution + "\n")

    launch()
    grace = 5.0  # wallclock slack before the parent terminates a worker
    while active:
        for proc in list(active):
            bench, conn, start = active[proc]
            if conn.poll(0.02):
                outcome, wall, cpu, size, solution = conn.recv()
                proc.join()
                del active[proc]
                emit(RunRecord(bench, cfg.label(), outcome, wall, size, cpu, solution))
            elif time.monotonic() - start > cfg.timeout + grace:
                proc.terminate()
                proc.join()
                del active[proc]
                emit(RunRecord(bench, cfg.label(), "timeout", cfg.timeout, None, None, None))
        launch()
    return records


def load_records(path):
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                out.append(RunRecord.from_json(line))
    return out
