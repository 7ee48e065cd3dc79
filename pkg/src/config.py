"""Configuration management for the sinh-Gordon toolkit."""
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

from .errors import ConfigurationError

SUBALGEBRA_IDS = tuple(f"S{i}" for i in range(1, 17))
COMMANDS = ("verify-algebra", "verify-invariants", "reduce", "solve", "certify", "elliptic", "kdv-check")
FORMATS = ("json", "csv", "svg")


class Config:
    """Manages numeric defaults loaded from ``config/defaults.yaml``."""

    def __init__(self, config_path: str = None):
        """Initialize configuration from YAML file."""
        if config_path is None:
            config_path = Path(__file__).parent.parent / "config" / "defaults.yaml"

        self.config_path = Path(config_path)
        try:
            with open(self.config_path, 'r') as f:
                self._config = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigurationError(f"Could not read configuration {self.config_path}: {e}")

    def _section(self, name: str) -> Dict[str, Any]:
        return self._config.get(name, {})

    @property
    def generators(self) -> int:
        """Get number of Grassmann generators."""
        return int(self._section('grassmann').get('generators', 4))

    @property
    def body_tolerance(self) -> float:
        """Get invertibility threshold on the body."""
        return float(self._section('grassmann').get('body_tolerance', 1e-12))

    @property
    def fd_step(self) -> float:
        """Get finite-difference step."""
        return float(self._section('numerics').get('fd_step', 1e-5))

    @property
    def residual_tolerance(self) -> float:
        """Get certification tolerance for full PDE residuals."""
        return float(self._section('numerics').get('residual_tolerance', 1e-6))

    @property
    def reduced_tolerance(self) -> float:
        """Get tolerance for reduced ODE residuals."""
        return float(self._section('numerics').get('reduced_tolerance', 1e-8))

    @property
    def constraint_tolerance(self) -> float:
        """Get tolerance for algebraic constraints such as eta*lambda = C0."""
        return float(self._section('numerics').get('constraint_tolerance', 1e-8))

    @property
    def rk4_substeps(self) -> int:
        """Get RK4 substeps per grid interval."""
        return int(self._section('numerics').get('rk4_substeps', 4))

    @property
    def grids(self) -> Dict[str, str]:
        """Get default grid specs."""
        return dict(self._section('grids'))

    @property
    def results_dir(self) -> Path:
        """Get reports directory."""
        return Path(self._section('output').get('results_dir', 'results'))

    @property
    def seed(self) -> int:
        """Get default RNG seed."""
        return int(self._section('output').get('seed', 0))

    def get_threads(self) -> int:
        """Get worker thread cap from environment or defaults."""
        env_threads = os.getenv('SUPERSINH_THREADS')
        if env_threads:
            try:
                return max(1, int(env_threads))
            except ValueError:
                raise ConfigurationError(f"SUPERSINH_THREADS must be an integer, got '{env_threads}'")
        return max(1, int(self._section('numerics').get('threads', 1)))


@dataclass(frozen=True)
class SigmaGrid:
    """Uniform grid over the symmetry variable."""

    lo: float
    hi: float
    n: int

    def points(self):
        import numpy as np
        return np.linspace(self.lo, self.hi, self.n)

    def __str__(self) -> str:
        return f"{self.lo:g}:{self.hi:g}:{self.n}"


@dataclass(frozen=True)
class Window:
    """Rectangle in the (x, t) plane sampled on an n-by-n grid."""

    xlo: float
    xhi: float
    tlo: float
    thi: float
    n: int = 101

    def mesh(self):
        import numpy as np
        x = np.linspace(self.xlo, self.xhi, self.n)
        t = np.linspace(self.tlo, self.thi, self.n)
        return np.meshgrid(x, t, indexing='ij')

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def __str__(self) -> str:
        return f"{self.xlo:g}:{self.xhi:g}:{self.tlo:g}:{self.thi:g}:{self.n}"


def _floats(spec: str, what: str) -> List[float]:
    try:
        return [float(p) for p in str(spec).split(':')]
    except ValueError:
        raise ConfigurationError(f"Malformed {what} '{spec}'")


def parse_grid(spec: str) -> SigmaGrid:
    """Parse ``lo:hi:n``."""
    parts = _floats(spec, "grid")
    if len(parts) != 3:
        raise ConfigurationError(f"Grid must be lo:hi:n, got '{spec}'")
    lo, hi, n = parts[0], parts[1], int(parts[2])
    if n < 2 or not lo < hi:
        raise ConfigurationError(f"Grid '{spec}' needs lo < hi and at least 2 points")
    return SigmaGrid(lo, hi, n)


def parse_window(spec: str) -> Window:
    """Parse ``xlo:xhi:tlo:thi[:n]``."""
    parts = _floats(spec, "window")
    if len(parts) not in (4, 5):
        raise ConfigurationError(f"Window must be xlo:xhi:tlo:thi[:n], got '{spec}'")
    n = int(parts[4]) if len(parts) == 5 else 101
    window = Window(parts[0], parts[1], parts[2], parts[3], n)
    if n < 2 or not window.xlo < window.xhi or not window.tlo < window.thi:
        raise ConfigurationError(f"Window '{spec}' is empty")
    return window


Literal = Union[float, List[List[float]], None]


@dataclass
class RunConfig:
    """Everything a single CLI run depends on; hashed into the run id."""

    command: str = "solve"
    subalgebra: str = "S4"
    epsilon: int = 1
    c0: Literal = None
    c1: Optional[float] = None
    c2: float = 0.0
    mu: Literal = None
    nu: Literal = None
    k: Literal = None
    ic: Dict[str, Literal] = field(default_factory=dict)
    branch: int = 1
    grid: Optional[str] = None
    window: Optional[str] = None
    tolerance: Optional[float] = None
    reduced_tolerance: Optional[float] = None
    constraint_tolerance: Optional[float] = None
    generators: Optional[int] = None
    solution: Optional[str] = None
    out: Optional[str] = None
    formats: List[str] = field(default_factory=lambda: ["json"])
    seed: Optional[int] = None
    sentinel: bool = False
    points: List[float] = field(default_factory=list)
    modulus: float = 0.5

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        """Load a JSON or YAML run file (JSON parses as YAML)."""
        path = Path(path)
        if path.is_dir():
            path = path / "run.yaml"
        try:
            with open(path, 'r') as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigurationError(f"Could not read run configuration {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigurationError(f"Run configuration {path} must be a mapping")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown run configuration keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def with_overrides(self, **flags) -> "RunConfig":
        """Copy with explicit flags applied; ``None`` means not given."""
        data = asdict(self)
        for key, value in flags.items():
            if value is None:
                continue
            if key == 'ic':
                data['ic'] = {**data['ic'], **{k: v for k, v in value.items() if v is not None}}
            else:
                data[key] = value
        return RunConfig(**data)

    def resolve(self, settings: Config) -> "RunConfig":
        """Fill unset grids and tolerances from the defaults file."""
        grids = settings.grids
        s1 = self.subalgebra == "S1"
        return self.with_overrides(
            grid=self.grid or grids.get('s1_sigma' if s1 else 'sigma'),
            window=self.window or grids.get('s1_window' if s1 else 'window'),
            tolerance=self.tolerance or settings.residual_tolerance,
            reduced_tolerance=self.reduced_tolerance or settings.reduced_tolerance,
            constraint_tolerance=self.constraint_tolerance or settings.constraint_tolerance,
            seed=self.seed if self.seed is not None else settings.seed,
            generators=self.generators or settings.generators,
        )

    def validate(self) -> "RunConfig":
        """Check ids, signs, literal parities, grids and tolerances."""
        from .grassmann import Parity, Supernumber, parity_of

        if self.command not in COMMANDS:
            raise ConfigurationError(f"Unknown command '{self.command}'")
        if self.subalgebra not in SUBALGEBRA_IDS:
            raise ConfigurationError(f"Unknown subalgebra '{self.subalgebra}'")
        if self.epsilon not in (1, -1):
            raise ConfigurationError(f"epsilon must be +1 or -1, got {self.epsilon}")
        if self.branch not in (1, -1):
            raise ConfigurationError(f"branch must be +1 or -1, got {self.branch}")
        if self.generators is not None and not 1 <= self.generators <= 12:
            raise ConfigurationError(f"generators must be between 1 and 12, got {self.generators}")
        expected = {'c0': Parity.EVEN, 'mu': Parity.ODD, 'nu': Parity.ODD, 'k': Parity.ODD}
        for name, parity in expected.items():
            value = getattr(self, name)
            if value is None:
                continue
            literal = Supernumber.from_literal(value, self.n_generators)
            if not literal.is_zero() and parity_of(literal) is not parity:
                raise ConfigurationError(f"{name} must be {parity}, got {parity_of(literal)}")
        for name in ('tolerance', 'reduced_tolerance', 'constraint_tolerance'):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigurationError(f"{name} must be positive, got {value}")
        if self.grid is not None:
            parse_grid(self.grid)
        if self.window is not None:
            parse_window(self.window)
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ConfigurationError(f"Unknown output formats: {', '.join(bad)}")
        return self

    def literal(self, name: str):
        """Parse a stored literal into a Supernumber (zero when unset)."""
        from .grassmann import Supernumber
        return Supernumber.from_literal(getattr(self, name), self.n_generators)

    def ic_value(self, name: str):
        """Initial condition as a Supernumber, or None when unset."""
        from .grassmann import Supernumber
        value = self.ic.get(name)
        if value is None:
            return None
        return Supernumber.from_literal(value, self.n_generators)

    @property
    def n_generators(self) -> int:
        """Generator count, falling back to the ring default before resolve."""
        from .grassmann import DEFAULT_GENERATORS
        return self.generators or DEFAULT_GENERATORS

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @property
    def run_id(self) -> str:
        """md5 of the canonical JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.md5(canonical.encode()).hexdigest()
