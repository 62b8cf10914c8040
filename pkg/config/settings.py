"""
Configuration settings for cracbench
Environment driven, with .env support for local overrides
"""
import os
from dataclasses import dataclass, field
from typing import Tuple
from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name, "").strip()
    if value:
        try:
            return int(value)
        except ValueError:
            pass
    return default


def _env_bool(name: str, default: bool) -> bool:
    value = os.getenv(name, "").strip().lower()
    if not value:
        return default
    return value in ("1", "true", "yes", "on")


@dataclass
class FormatsConfig:
    """Sparse matrix storage configuration"""
    # Rows with more entries than this use binary search in CSR lookups
    linear_search_threshold: int = field(
        default_factory=lambda: _env_int("CRAC_LINEAR_SEARCH_THRESHOLD", 30))


@dataclass
class AssemblyConfig:
    """Parallel assembly configuration"""
    default_threads: int = field(
        default_factory=lambda: _env_int("CRAC_THREADS", os.cpu_count() or 1))
    chunks_per_thread: int = 8
    debug_checks: bool = field(default_factory=lambda: _env_bool("CRAC_DEBUG", False))


@dataclass
class BenchSettings:
    """Benchmark harness defaults"""
    runs: int = field(default_factory=lambda: _env_int("CRAC_BENCH_RUNS", 30))
    warmup_runs: int = 1
    output_dir: str = os.getenv("CRAC_BENCH_DIR", "bench_results")
    l3_cache_mb: float = 16.0
    h_sizes: Tuple[int, ...] = (6, 12, 24, 48, 96, 192, 384, 768)
    p_suite_n: int = 48
    d_suite_n: int = 192
    max_order: int = 8


@dataclass
class LoggingConfig:
    """Logging configuration"""
    log_level: str = os.getenv("LOG_LEVEL", "INFO")
    log_dir: str = os.getenv("LOG_DIR", "logs")
    bench_log_file: str = "bench.log"
    system_log_file: str = "system.log"
    error_log_file: str = "errors.log"
    max_log_size_mb: int = 10
    backup_count: int = 5


class Config:
    """Main configuration class"""

    def __init__(self):
        self.formats = FormatsConfig()
        self.assembly = AssemblyConfig()
        self.bench = BenchSettings()
        self.logging = LoggingConfig()

    def reload(self):
        """Re-read the environment (and .env) into fresh sections"""
        load_dotenv(override=True)
        self.__init__()


# Global config instance
config = Config()
