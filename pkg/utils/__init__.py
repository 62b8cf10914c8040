"""
Utilities module for cracbench
"""
from .logging_utils import (
    setup_logging, get_bench_logger, log_bench_event
)

__all__ = [
    'setup_logging', 'get_bench_logger', 'log_bench_event'
]
