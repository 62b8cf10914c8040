"""
Command-line front end for cracbench.

Subcommands: gen-mesh, colour, assemble, bench, verify.
Exit codes: 0 success, 1 usage error, 2 verification failure, 3 runtime error.
"""
import argparse
import logging
import sys
import time
from typing import List, Optional

from pydantic import ValidationError

from config.settings import config
from core.assembly import AssemblyJob, required_variant, reset_values, run_method
from core.bench import format_summary_table, run_suite, storage_factor, write_report
from core.colouring import colour_distribution, greedy_colouring, write_colouring_csv
from core.errors import CracBenchError
from core.formats import crac_from_pattern, csr_from_pattern, memory_footprint, write_matrix_market
from core.mesh_builder import build_dof_map, generate_structured
from core.pattern import build_pattern, values_size_mb
from core.verification import verify_assembly
from models.bench import BenchConfig, MatrixFormat, Method, Suite
from models.colouring import Colouring
from parsers.msh_parser import MshParseError, load_mesh, write_msh
from utils.logging_utils import setup_logging

logger = logging.getLogger("cracbench.main")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY_FAILED = 2
EXIT_RUNTIME = 3

METHOD_HELP = ("comma separated: seq (sequential), atomic (Atc), spin (Sp), "
               "spin-vec (Sp_vec), colour-vec (Col_vec)")


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _enum_list(enum_cls, label: str):
    valid = ", ".join(member.value for member in enum_cls)

    def parse(text: str):
        try:
            return enum_cls.parse_list(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"unknown {label} in {text!r}; valid {label}s: {valid}")

    return parse


def _single_enum(enum_cls, label: str):
    parse_list = _enum_list(enum_cls, label)

    def parse(text: str):
        values = parse_list(text)
        if len(values) != 1:
            raise argparse.ArgumentTypeError(f"expected exactly one {label}")
        return values[0]

    return parse


def build_parser() -> CliParser:
    parser = CliParser(prog="cracbench", description="Parallel sparse matrix assembly benchmarks")
    parser.add_argument("--log-level", default=None,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-mesh", help="write a structured n x n quad mesh (MSH 2.2)")
    gen.add_argument("--n", type=positive_int, required=True, help="elements per side")
    gen.add_argument("--out", required=True, help="output .msh path")

    colour = commands.add_parser("colour", help="greedy element colouring and its distribution")
    colour.add_argument("--mesh", default="gen:6", help="MSH file or gen:N")
    colour.add_argument("--p", type=positive_int, default=1)
    colour.add_argument("--d", type=positive_int, default=1)
    colour.add_argument("--csv", help="write element_id,colour to this path")

    assemble = commands.add_parser("assemble", help="one timed assembly")
    assemble.add_argument("--mesh", default="gen:6", help="MSH file or gen:N")
    assemble.add_argument("--p", type=positive_int, default=1)
    assemble.add_argument("--d", type=positive_int, default=1)
    assemble.add_argument("--method", type=_single_enum(Method, "method"), default=Method.SEQUENTIAL,
                          help="one of: seq, atomic (Atc), spin (Sp), spin-vec (Sp_vec), colour-vec (Col_vec)")
    assemble.add_argument("--format", dest="matrix_format", type=_single_enum(MatrixFormat, "format"),
                          default=MatrixFormat.CSR, help="csr or crac")
    assemble.add_argument("--threads", type=positive_int, default=None)
    assemble.add_argument("--dump", help="write the assembled matrix in Matrix Market format")

    bench = commands.add_parser("bench", help="run an h, p, d or single benchmark suite")
    bench.add_argument("--suite", type=Suite, choices=list(Suite), default=Suite.H,
                       metavar="{h,p,d,single}")
    bench.add_argument("--mesh", default=None, help="MSH file or gen:N (default per suite)")
    bench.add_argument("--p", type=positive_int, default=None, help="fixed order (not with --suite p)")
    bench.add_argument("--d", type=positive_int, default=None, help="fixed DOFs per node (not with --suite d)")
    bench.add_argument("--methods", type=_enum_list(Method, "method"), default=list(Method), help=METHOD_HELP)
    bench.add_argument("--formats", type=_enum_list(MatrixFormat, "format"), default=list(MatrixFormat),
                       help="comma separated: csr, crac")
    bench.add_argument("--runs", type=positive_int, default=config.bench.runs)
    bench.add_argument("--threads", type=positive_int, default=None)
    bench.add_argument("--levels", type=positive_int, default=None, help="number of h-suite meshes")
    bench.add_argument("--lookups", type=positive_int, default=None, metavar="SAMPLES",
                       help="also time SAMPLES coefficient lookups per case (CSR linear, CSR binary, CRAC block)")
    bench.add_argument("--out", default=config.bench.output_dir, help="output directory for CSV files")

    verify = commands.add_parser("verify", help="cross-check all methods and formats")
    verify.add_argument("--mesh", default="gen:6", help="MSH file or gen:N")
    verify.add_argument("--p", type=positive_int, default=1)
    verify.add_argument("--d", type=positive_int, default=1)
    verify.add_argument("--threads", type=positive_int, default=None)
    verify.add_argument("--inject-fault", type=_single_enum(Method, "method"), default=None,
                        help=argparse.SUPPRESS)
    return parser


def _threads(args) -> int:
    return args.threads or config.assembly.default_threads


def cmd_gen_mesh(args) -> int:
    mesh = generate_structured(args.n)
    with open(args.out, "w") as handle:
        handle.write(write_msh(mesh))
    print(f"Wrote {mesh.n_nodes} nodes, {mesh.n_elements} quads to {args.out}")
    return EXIT_OK


def cmd_colour(args) -> int:
    mesh, _ = load_mesh(args.mesh)
    dof_map = build_dof_map(mesh, args.p, args.d)
    colouring: Colouring = greedy_colouring(mesh, dof_map)
    print(f"{colouring.n_colours} colours for {mesh.n_elements} elements")
    for colour, fraction in colour_distribution(colouring):
        print(f"  colour {colour}: {fraction * 100:.2f}%")
    if args.csv:
        write_colouring_csv(colouring, args.csv)
    return EXIT_OK


def cmd_assemble(args) -> int:
    mesh, _ = load_mesh(args.mesh)
    dof_map = build_dof_map(mesh, args.p, args.d)
    pattern = build_pattern(dof_map)
    build = csr_from_pattern if args.matrix_format is MatrixFormat.CSR else crac_from_pattern
    target = build(pattern, required_variant(args.method))
    threads = 1 if args.method is Method.SEQUENTIAL else _threads(args)
    colouring = greedy_colouring(mesh, dof_map) if args.method is Method.COLOUR_VEC else None

    job = AssemblyJob.from_dof_map(dof_map, target, threads)
    # Untimed first pass compiles the kernels
    run_method(args.method, job, colouring)
    reset_values(target)
    start = time.perf_counter_ns()
    run_method(args.method, job, colouring)
    micros = (time.perf_counter_ns() - start) / 1000.0

    print(f"dofs={dof_map.global_dof_count} nnz={pattern.nnz} values_mb={values_size_mb(pattern):.6f}")
    if pattern.nnz:
        gamma = storage_factor(crac_from_pattern(pattern), csr_from_pattern(pattern))
        print(f"gamma={gamma:.6f}")
    print(f"method={args.method.value} format={args.matrix_format.value} threads={threads} "
          f"micros={micros:.1f} sum={float(target.values.sum())!r}")
    footprint = memory_footprint(target)
    print("bytes: " + " ".join(f"{key}={value}" for key, value in footprint.items()))
    if args.dump:
        write_matrix_market(target, args.dump)
    return EXIT_OK


def cmd_bench(args, parser: CliParser) -> int:
    if args.suite is Suite.P and args.p is not None:
        parser.error("--p conflicts with --suite p (the suite varies p)")
    if args.suite is Suite.D and args.d is not None:
        parser.error("--d conflicts with --suite d (the suite varies d)")

    bench_config = BenchConfig(
        suite=args.suite,
        mesh=args.mesh,
        p=args.p or 1,
        d=args.d or 1,
        levels=args.levels,
        methods=args.methods,
        formats=args.formats,
        runs=args.runs,
        threads=_threads(args),
        lookup_samples=args.lookups or 0,
        output_dir=args.out,
    )
    report = run_suite(bench_config)
    write_report(report, bench_config.output_dir)
    print(format_summary_table(report))
    return EXIT_OK


def cmd_verify(args) -> int:
    mesh, _ = load_mesh(args.mesh)
    fault_hook = None
    if args.inject_fault is not None:
        def fault_hook(method, matrix_format, target):
            if method is args.inject_fault and matrix_format is MatrixFormat.CRAC and target.nnz:
                target.values[target.nnz // 2] += 1.0

    result = verify_assembly(mesh, args.p, args.d, _threads(args), fault_hook)
    print(result.report())
    return EXIT_OK if result.ok else EXIT_VERIFY_FAILED


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging("cracbench.main", level=args.log_level)

    try:
        if args.command == "gen-mesh":
            return cmd_gen_mesh(args)
        if args.command == "colour":
            return cmd_colour(args)
        if args.command == "assemble":
            return cmd_assemble(args)
        if args.command == "bench":
            return cmd_bench(args, parser)
        return cmd_verify(args)
    except ValidationError as e:
        print(f"cracbench: invalid configuration: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CracBenchError, MshParseError, OSError, ValueError, MemoryError) as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        print(f"cracbench: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        logger.error(f"{args.command} failed unexpectedly: {e!r}", exc_info=True)
        print(f"cracbench: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("cracbench stopped by user (KeyboardInterrupt).")
        sys.exit(EXIT_RUNTIME)
