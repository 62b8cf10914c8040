"""
Benchmark harness: timed assemblies, speed factor c, storage factor gamma and
the h/p/d suites.
"""
import csv
import logging
import math
import os
import time
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional

import numpy as np

from config.settings import config
from core.assembly import AssemblyJob, required_variant, reset_values, run_method
from core.colouring import greedy_colouring, validate_colouring
from core.errors import BenchError
from core.formats import (
    CracMatrix, CsrMatrix, SparseMatrix, crac_from_pattern, crac_locate, csr_from_pattern,
    binary_row_search, linear_row_search, coordinates
)
from core.mesh_builder import build_dof_map, generate_structured, refine_uniform
from core.pattern import SparsityPattern, build_pattern, values_size_mb
from models.bench import (
    BenchConfig, BenchFailure, BenchRecord, BenchReport, MatrixFormat, Method, Suite, Variant
)
from models.colouring import Colouring
from models.mesh import Mesh
from parsers.msh_parser import load_mesh
from utils.logging_utils import log_bench_event

logger = logging.getLogger("cracbench.bench")

RAW_HEADER = ["suite", "mesh", "n", "p", "d", "dofs", "nnz", "method", "format",
              "threads", "run", "micros"]
SUMMARY_HEADER = ["suite", "mesh", "n", "p", "d", "dofs", "nnz", "method", "format",
                  "threads", "t_avg", "t_min", "c", "gamma", "values_mb"]

DEFAULT_MESH = {
    Suite.H: "gen:6",
    Suite.P: f"gen:{config.bench.p_suite_n}",
    Suite.D: f"gen:{config.bench.d_suite_n}",
    Suite.SINGLE: "gen:6",
}


def time_assembly(method: Method, job: AssemblyJob, runs: int,
                  colouring: Optional[Colouring] = None,
                  warmup_runs: Optional[int] = None) -> List[float]:
    """
    Assemble runs times and return each run's duration in microseconds.

    Values are reset before every run outside the timed region; warm-up runs
    are not recorded.
    """
    if runs < 1:
        raise BenchError(f"runs must be >= 1, got {runs}")
    warmup_runs = config.bench.warmup_runs if warmup_runs is None else warmup_runs

    for _ in range(warmup_runs):
        reset_values(job.target)
        run_method(method, job, colouring)

    timings = []
    for _ in range(runs):
        reset_values(job.target)
        start = time.perf_counter_ns()
        run_method(method, job, colouring)
        timings.append((time.perf_counter_ns() - start) / 1000.0)
    return timings


def speed_factor(t_avg_seq: float, t_avg_method: float) -> float:
    """c = t_avg(sequential) / t_avg(method)"""
    if t_avg_seq <= 0 or t_avg_method <= 0:
        raise BenchError(f"average times must be positive, got {t_avg_seq} and {t_avg_method}")
    return t_avg_seq / t_avg_method


def storage_factor(crac: CracMatrix, csr: CsrMatrix) -> float:
    """gamma = len(col_align) / len(cols)"""
    if csr.cols.size == 0:
        raise BenchError("storage factor is undefined for an empty pattern")
    if crac.nnz != csr.nnz:
        raise BenchError("CRAC and CSR matrices hold different patterns")
    return crac.col_align.size / csr.cols.size


@dataclass
class BenchCase:
    """One mesh / order / DOFs-per-node combination of a suite"""
    suite: Suite
    mesh_label: str
    n: Optional[int]
    p: int
    d: int
    mesh_factory: Callable[[], Mesh]

    @property
    def label(self) -> str:
        return f"{self.suite.value}/{self.mesh_label}/p={self.p}/d={self.d}"


def default_max_order(d: int) -> int:
    """Highest p of the p-suite: 8 for scalar problems, 4 for d=4"""
    return max(1, int(config.bench.max_order / math.sqrt(d)))


def default_h_levels(d: int) -> int:
    """Number of h-suite meshes; the finest mesh shrinks as d grows"""
    return max(1, len(config.bench.h_sizes) - int(math.log2(d)))


def iter_cases(bench_config: BenchConfig) -> Iterator[BenchCase]:
    """Cases of the configured suite in execution order"""
    suite = bench_config.suite
    source = bench_config.mesh or DEFAULT_MESH[suite]
    base, base_n = load_mesh(source)
    base_label = source if base_n is not None else os.path.basename(source)

    if suite is Suite.H:
        levels = bench_config.levels or default_h_levels(bench_config.d)
        if base_n is not None:
            for level in range(levels):
                n = base_n * 2 ** level
                yield BenchCase(suite, f"gen:{n}", n, bench_config.p, bench_config.d,
                                lambda n=n: generate_structured(n))
        else:
            mesh = base
            for level in range(levels):
                if level:
                    mesh = refine_uniform(mesh)
                yield BenchCase(suite, f"{base_label}@r{level}", None, bench_config.p,
                                bench_config.d, lambda mesh=mesh: mesh)
    elif suite is Suite.P:
        low, high = bench_config.p_range or (1, default_max_order(bench_config.d))
        for p in range(low, high + 1):
            yield BenchCase(suite, base_label, base_n, p, bench_config.d, lambda: base)
    elif suite is Suite.D:
        low, high = bench_config.d_range
        for d in range(low, high + 1):
            yield BenchCase(suite, base_label, base_n, bench_config.p, d, lambda: base)
    else:
        yield BenchCase(suite, base_label, base_n, bench_config.p, bench_config.d, lambda: base)


def _build_target(pattern: SparsityPattern, matrix_format: MatrixFormat, variant: Variant) -> SparseMatrix:
    if matrix_format is MatrixFormat.CSR:
        return csr_from_pattern(pattern, variant)
    return crac_from_pattern(pattern, variant)


def _fail_case(report: BenchReport, case: BenchCase, methods, formats, error: BaseException) -> None:
    for matrix_format in formats:
        for method in methods:
            report.failures.append(BenchFailure(case.label, method, matrix_format, repr(error)))
    log_bench_event("CASE_FAILED", case.label, data={"error": repr(error)}, level="ERROR")
    logger.error(f"Case {case.label} failed: {error!r}")


def run_case(case: BenchCase, bench_config: BenchConfig, report: BenchReport) -> None:
    methods = bench_config.methods
    formats = bench_config.formats
    log_bench_event("CASE_STARTED", case.label, data={"p": case.p, "d": case.d})

    try:
        mesh = case.mesh_factory()
        dof_map = build_dof_map(mesh, case.p, case.d)
        pattern = build_pattern(dof_map)
        gamma = None
        if pattern.nnz:
            gamma = storage_factor(crac_from_pattern(pattern), csr_from_pattern(pattern))
        colouring = None
        if Method.COLOUR_VEC in methods:
            colouring = greedy_colouring(mesh, dof_map)
            # Checked once here; timed runs assemble without debug checks
            validate_colouring(colouring, dof_map)
        lookups = None
        if bench_config.lookup_samples and pattern.nnz:
            lookups = time_lookups(pattern, bench_config.lookup_samples)
    except MemoryError as e:
        _fail_case(report, case, methods, formats, e)
        return

    values_mb = values_size_mb(pattern)
    if values_mb > config.bench.l3_cache_mb:
        log_bench_event("CACHE_EXCEEDED", case.label,
                        data={"values_mb": values_mb, "l3_cache_mb": config.bench.l3_cache_mb})

    if lookups is not None:
        report.lookups[case.label] = lookups
        log_bench_event("LOOKUPS_TIMED", case.label, data=lookups)

    for matrix_format in formats:
        targets: Dict[Variant, SparseMatrix] = {}
        measured: List[BenchRecord] = []
        for method in methods:
            threads = 1 if method is Method.SEQUENTIAL else bench_config.threads
            try:
                variant = required_variant(method)
                if variant not in targets:
                    targets[variant] = _build_target(pattern, matrix_format, variant)
                job = AssemblyJob.from_dof_map(dof_map, targets[variant], threads,
                                               debug_checks=False)
                timings = time_assembly(method, job, bench_config.runs, colouring,
                                        bench_config.warmup_runs)
            except MemoryError as e:
                report.failures.append(BenchFailure(case.label, method, matrix_format, repr(e)))
                log_bench_event("CASE_FAILED", case.label, method.value, matrix_format.value,
                                data={"error": repr(e)}, level="ERROR")
                continue

            record = BenchRecord(
                suite=case.suite, mesh=case.mesh_label, n=case.n, p=case.p, d=case.d,
                dofs=dof_map.global_dof_count, nnz=pattern.nnz, method=method,
                matrix_format=matrix_format, threads=threads, t_i=timings,
                gamma=gamma, values_mb=values_mb,
            )
            measured.append(record)
            log_bench_event("CASE_FINISHED", case.label, method.value, matrix_format.value,
                            data={"t_avg": record.t_avg, "t_min": record.t_min, "nnz": pattern.nnz})

        baseline = next((r for r in measured if r.method is Method.SEQUENTIAL), None)
        if baseline is not None:
            for record in measured:
                record.c = speed_factor(baseline.t_avg, record.t_avg)
        report.records.extend(measured)


def run_suite(bench_config: BenchConfig) -> BenchReport:
    """Measure every (case, format, method) of the configured suite"""
    report = BenchReport(config=bench_config)
    logger.info(f"Running {bench_config.suite.value}-suite: "
                f"methods={[m.value for m in bench_config.methods]} "
                f"formats={[f.value for f in bench_config.formats]} "
                f"runs={bench_config.runs} threads={bench_config.threads}")
    for case in iter_cases(bench_config):
        run_case(case, bench_config, report)
    logger.info(f"Suite finished: {len(report.records)} records, {len(report.failures)} failures")
    return report


def write_raw_csv(report: BenchReport, path: str) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RAW_HEADER)
        for record in report.records:
            row = record.to_dict()
            prefix = [row[key] for key in RAW_HEADER[:10]]
            for run, micros in enumerate(record.t_i, start=1):
                writer.writerow(prefix + [run, f"{micros:.3f}"])


def write_summary_csv(report: BenchReport, path: str) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=SUMMARY_HEADER)
        writer.writeheader()
        for record in report.records:
            row = record.to_dict()
            for key in ("t_avg", "t_min"):
                row[key] = f"{row[key]:.3f}"
            for key in ("c", "gamma"):
                if row[key] != "":
                    row[key] = f"{row[key]:.6f}"
            row["values_mb"] = f"{row['values_mb']:.6f}"
            writer.writerow(row)


def write_report(report: BenchReport, output_dir: str) -> Dict[str, str]:
    """Write raw and summary CSVs into output_dir; returns their paths"""
    os.makedirs(output_dir, exist_ok=True)
    suite = report.config.suite.value
    paths = {
        "raw": os.path.join(output_dir, f"{suite}_raw.csv"),
        "summary": os.path.join(output_dir, f"{suite}_summary.csv"),
    }
    write_raw_csv(report, paths["raw"])
    write_summary_csv(report, paths["summary"])
    logger.info(f"Wrote {paths['raw']} and {paths['summary']}")
    return paths


def format_summary_table(report: BenchReport) -> str:
    """Plain-text summary, one line per record"""
    header = f"{'case':<28} {'method':<11} {'fmt':<5} {'dofs':>9} {'nnz':>10} " \
             f"{'t_avg[us]':>12} {'t_min[us]':>12} {'c':>7} {'gamma':>7}"
    lines = [header, "-" * len(header)]
    for r in report.records:
        c = f"{r.c:.3f}" if r.c is not None else "-"
        gamma = f"{r.gamma:.4f}" if r.gamma is not None else "-"
        lines.append(f"{r.case:<28} {r.method.value:<11} {r.matrix_format.value:<5} {r.dofs:>9} "
                     f"{r.nnz:>10} {r.t_avg:>12.1f} {r.t_min:>12.1f} {c:>7} {gamma:>7}")
    for failure in report.failures:
        lines.append(f"{failure.case:<28} {failure.method.value:<11} "
                     f"{failure.matrix_format.value:<5} FAILED {failure.error}")
    if report.lookups:
        lines.append("")
        lines.append(f"{'case':<28} {'lookup':<11} {'us/lookup':>10}")
        for case, timings in report.lookups.items():
            for name, micros in timings.items():
                lines.append(f"{case:<28} {name:<11} {micros:>10.4f}")
    return "\n".join(lines)


def time_lookups(pattern: SparsityPattern, samples: int = 1000, seed: int = 0) -> Dict[str, float]:
    """
    Average microseconds per coefficient lookup of stored entries, for CSR
    linear and binary row search and CRAC block search.
    """
    if pattern.nnz == 0:
        raise BenchError("cannot time lookups on an empty pattern")
    csr = csr_from_pattern(pattern)
    crac = crac_from_pattern(pattern)
    rows, cols = coordinates(csr)
    picks = np.random.default_rng(seed).integers(0, pattern.nnz, size=samples)
    queries = list(zip(rows[picks].tolist(), cols[picks].tolist()))
    row_ptr = pattern.row_ptr.tolist()

    def csr_with(search):
        return lambda r, c: search(csr.cols, row_ptr[r], row_ptr[r + 1], c)

    strategies = {
        "csr-linear": csr_with(linear_row_search),
        "csr-binary": csr_with(binary_row_search),
        "crac-block": lambda r, c: crac_locate(crac, r, c),
    }
    results = {}
    for name, lookup in strategies.items():
        start = time.perf_counter_ns()
        for r, c in queries:
            lookup(r, c)
        results[name] = (time.perf_counter_ns() - start) / 1000.0 / samples
    return results
