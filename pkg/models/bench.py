"""
Benchmark data models: suites, methods, formats, configuration and results
"""
from dataclasses import dataclass, field
from enum import Enum
from statistics import fmean
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator


class Suite(Enum):
    """Benchmark suite"""
    H = "h"            # refine the mesh
    P = "p"            # raise the polynomial order
    D = "d"            # raise the DOFs per node
    SINGLE = "single"  # one mesh / p / d case


class Method(Enum):
    """Assembly method (CLI name)"""
    SEQUENTIAL = "seq"
    ATOMIC = "atomic"          # Atc
    SPIN = "spin"              # Sp
    SPIN_VEC = "spin-vec"      # Sp_vec
    COLOUR_VEC = "colour-vec"  # Col_vec

    @classmethod
    def parse_list(cls, text: str) -> List["Method"]:
        return [cls(token.strip()) for token in text.split(",") if token.strip()]


class MatrixFormat(Enum):
    """Sparse storage format"""
    CSR = "csr"
    CRAC = "crac"

    @classmethod
    def parse_list(cls, text: str) -> List["MatrixFormat"]:
        return [cls(token.strip()) for token in text.split(",") if token.strip()]


class Variant(Enum):
    """Synchronisation variant of a matrix"""
    PLAIN = "plain"
    ATOMIC = "atomic"        # atomically addable values
    LOCKABLE = "lockable"    # spin_int row pointers


class BenchConfig(BaseModel):
    """Validated benchmark configuration"""
    suite: Suite = Suite.H
    mesh: Optional[str] = None  # "gen:N" or an MSH file; None picks the suite default
    p: int = Field(default=1, ge=1)
    d: int = Field(default=1, ge=1)
    p_range: Optional[Tuple[int, int]] = None  # None: 1..default_max_order(d)
    d_range: Tuple[int, int] = (1, 8)
    levels: Optional[int] = Field(default=None, ge=1)
    methods: List[Method] = Field(default_factory=lambda: list(Method))
    formats: List[MatrixFormat] = Field(default_factory=lambda: list(MatrixFormat))
    runs: int = Field(default=30, ge=1)
    warmup_runs: int = Field(default=1, ge=0)
    threads: int = Field(default=1, ge=1)
    lookup_samples: int = Field(default=0, ge=0)  # 0: no lookup timing
    output_dir: str = "bench_results"

    @field_validator("p_range", "d_range")
    @classmethod
    def check_range(cls, value: Optional[Tuple[int, int]]) -> Optional[Tuple[int, int]]:
        if value is None:
            return value
        low, high = value
        if low < 1 or high < low:
            raise ValueError(f"invalid range {low}..{high}")
        return value

    @field_validator("methods", "formats")
    @classmethod
    def check_not_empty(cls, value: list) -> list:
        if not value:
            raise ValueError("at least one entry is required")
        return list(dict.fromkeys(value))

    @model_validator(mode="after")
    def ensure_sequential(self) -> "BenchConfig":
        # Sequential is the baseline for the speed factor
        if Method.SEQUENTIAL not in self.methods:
            self.methods = [Method.SEQUENTIAL] + list(self.methods)
        return self


@dataclass
class BenchRecord:
    """Timings and structural measures of one (case, method, format)"""
    suite: Suite
    mesh: str
    n: Optional[int]
    p: int
    d: int
    dofs: int
    nnz: int
    method: Method
    matrix_format: MatrixFormat
    threads: int
    t_i: List[float] = field(default_factory=list)  # microseconds
    c: Optional[float] = None
    gamma: Optional[float] = None
    values_mb: float = 0.0

    @property
    def t_avg(self) -> float:
        return fmean(self.t_i)

    @property
    def t_min(self) -> float:
        return min(self.t_i)

    @property
    def case(self) -> str:
        return f"{self.suite.value}/{self.mesh}/p={self.p}/d={self.d}"

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary (summary columns)"""
        return {
            "suite": self.suite.value,
            "mesh": self.mesh,
            "n": "" if self.n is None else self.n,
            "p": self.p,
            "d": self.d,
            "dofs": self.dofs,
            "nnz": self.nnz,
            "method": self.method.value,
            "format": self.matrix_format.value,
            "threads": self.threads,
            "t_avg": self.t_avg,
            "t_min": self.t_min,
            "c": "" if self.c is None else self.c,
            "gamma": "" if self.gamma is None else self.gamma,
            "values_mb": self.values_mb,
        }


@dataclass
class BenchFailure:
    """A case that could not be measured"""
    case: str
    method: Method
    matrix_format: MatrixFormat
    error: str


@dataclass
class BenchReport:
    """Records of a suite in deterministic case/method/format order"""
    config: BenchConfig
    records: List[BenchRecord] = field(default_factory=list)
    failures: List[BenchFailure] = field(default_factory=list)
    lookups: Dict[str, Dict[str, float]] = field(default_factory=dict)  # case -> us per lookup

    def find(self, case: str, method: Method, matrix_format: MatrixFormat) -> Optional[BenchRecord]:
        for record in self.records:
            if record.case == case and record.method == method and record.matrix_format == matrix_format:
                return record
        return None

    @property
    def cases(self) -> List[str]:
        seen: List[str] = []
        for record in self.records:
            if record.case not in seen:
                seen.append(record.case)
        return seen
