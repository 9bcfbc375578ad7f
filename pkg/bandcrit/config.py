import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError
from .limits import MODES, DEFAULT_MODE, DEFAULT_TRUNCATION, MIN_TRUNCATION
from .specfun import MAX_DEGREE

logger = logging.getLogger(__name__)

COMMANDS = ('covariance', 'simulate', 'limits', 'spectrum', 'su2', 'blockgate', 'verify')
VERIFY_GROUPS = ('ratio', 'limits', 'spectrum', 'su2', 'blockgate', 'trend', 'determinism')
VERIFY_TRUNCATION = 40


def parse_complex(value, name='value'):
    """
    Complex number from a JSON value: a number, a [re, im] pair or a string
    such as '0.3+0.1j'.
    """
    try:
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError(value)
            return complex(float(value[0]), float(value[1]))
        if isinstance(value, str):
            return complex(value.replace(' ', ''))
        return complex(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"Cannot read '{value}' as a complex number", field=name)


def complex_to_json(value):
    value = complex(value)
    if value.imag == 0:
        return value.real
    return [value.real, value.imag]


@dataclass
class ExperimentConfig:
    """
    Resolved settings of one bandcrit run.

    Keys of the JSON document are the field names; values not given keep the
    defaults below. ``w`` and ``kappa`` are alternatives: at most one may be
    given, and kappa = 1 is used when neither is.
    """
    command: str = 'simulate'
    n: list = field(default_factory=lambda: [128])
    w: float = None
    kappa: float = None
    z: complex = 0j
    zeta_grid: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    n_samples: int = 2000
    seed: int = 1
    truncation: int = None
    mode: str = DEFAULT_MODE
    kappa_u: float = None
    quad_order: int = 200
    k_max: int = 7
    u_star: float = 1.0
    spectrum_w: float = 50.0
    ells: list = field(default_factory=lambda: [1, 2, 3])
    ws: list = field(default_factory=lambda: [20.0, 40.0, 80.0])
    tr_s: float = 2.0
    su2_orders: list = field(default_factory=lambda: [64, 64, 64])
    n_scenarios: int = 1000
    violate: int = None
    threads: int = 1
    out: str = '.'
    plot: bool = False
    progress: bool = False
    verify_only: list = field(default_factory=list)
    verify_samples: int = 2000
    verify_cs_runs: int = 50
    verify_oracle_samples: int = 20000
    trend_n: list = field(default_factory=lambda: [64, 128, 256])
    trend_samples: int = 4000
    determinism_skip: list = field(default_factory=lambda: ['trend'])
    determinism_threads: int = 2

    def __post_init__(self):
        self.z = parse_complex(self.z, 'z')
        self.zeta_grid = [parse_complex(v, 'zeta_grid') for v in self.zeta_grid]
        if isinstance(self.n, (int, np.integer)):
            self.n = [int(self.n)]

    @classmethod
    def from_dict(cls, values):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigurationError(f"Unknown configuration key(s): {', '.join(unknown)}",
                                     field=unknown[0])
        if 'w' in values and 'kappa' in values \
                and values['w'] is not None and values['kappa'] is not None:
            raise ConfigurationError("Give either w or kappa, not both", field='w')
        return cls(**values)

    @classmethod
    def from_json(cls, json_path):
        """
        Load a configuration document.
        """
        try:
            with open(json_path, 'r') as f:
                values = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Invalid JSON in {json_path}: {e}", field='config')
        if not isinstance(values, dict):
            raise ConfigurationError("Configuration must be a JSON object", field='config')
        return cls.from_dict(values)

    @classmethod
    def load(cls, json_path=None, **overrides):
        """
        Defaults, then the JSON file if given, then non-None overrides;
        the result is validated.
        """
        config = cls() if json_path is None else cls.from_json(json_path)
        return config.with_overrides(**overrides).validated()

    def with_overrides(self, **overrides):
        """
        Copy with every non-None override applied. Setting one of w, kappa
        clears the other.
        """
        values = {k: v for k, v in overrides.items() if v is not None}
        if not values:
            return dataclasses.replace(self)
        known = {f.name for f in dataclasses.fields(self)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigurationError(f"Unknown configuration key(s): {', '.join(unknown)}",
                                     field=unknown[0])
        if 'w' in values and 'kappa' in values:
            raise ConfigurationError("Give either w or kappa, not both", field='w')
        if 'w' in values:
            values['kappa'] = None
        elif 'kappa' in values:
            values['w'] = None
        return dataclasses.replace(self, **values)

    def validated(self):
        """
        Check field values; returns self.
        """
        if self.command not in COMMANDS:
            raise ConfigurationError(f"Unknown command '{self.command}'", field='command')
        if len(self.n) == 0 or any(int(n) != n or n < 1 for n in self.n):
            raise ConfigurationError("n must be a nonempty list of positive integers", field='n')
        if self.w is not None and self.kappa is not None:
            raise ConfigurationError("Give either w or kappa, not both", field='w')
        if self.w is not None and not self.w > 0:
            raise ConfigurationError(f"w must be positive, got {self.w}", field='w')
        if self.kappa is not None and not self.kappa > 0:
            raise ConfigurationError(f"kappa must be positive, got {self.kappa}", field='kappa')
        if not abs(self.z) < 1:
            raise ConfigurationError(f"z must satisfy |z| < 1, got {self.z}", field='z')
        if self.command in ('simulate', 'limits') and len(self.zeta_grid) == 0:
            raise ConfigurationError("zeta_grid must not be empty", field='zeta_grid')
        if self.n_samples < 2:
            raise ConfigurationError("n_samples must be at least 2", field='n_samples')
        if self.truncation is not None and (int(self.truncation) != self.truncation
                                            or self.truncation < MIN_TRUNCATION):
            raise ConfigurationError(f"truncation must be an integer >= {MIN_TRUNCATION}",
                                     field='truncation')
        if self.mode not in MODES:
            raise ConfigurationError(f"Unknown mode '{self.mode}'", field='mode')
        if self.kappa_u is not None and not self.kappa_u > 0:
            raise ConfigurationError("kappa_u must be positive", field='kappa_u')
        if not 0 < self.u_star <= 1:
            raise ConfigurationError("u_star must lie in (0, 1]", field='u_star')
        # the self-checks need a finer order than the one requested
        if not 4 * self.k_max <= self.quad_order < MAX_DEGREE:
            raise ConfigurationError(f"quad_order must lie in [4 * k_max, {MAX_DEGREE})",
                                     field='quad_order')
        if len(self.su2_orders) != 3:
            raise ConfigurationError("su2_orders needs three entries", field='su2_orders')
        if any(not 1 <= order < MAX_DEGREE for order in self.su2_orders):
            raise ConfigurationError(f"su2_orders must lie in [1, {MAX_DEGREE})",
                                     field='su2_orders')
        if self.violate not in (None, 1, 2, 3, 4):
            raise ConfigurationError("violate must be 1-4", field='violate')
        if self.threads < 1:
            raise ConfigurationError("threads must be at least 1", field='threads')
        unknown_groups = sorted(set(self.verify_only) - set(VERIFY_GROUPS))
        if unknown_groups:
            raise ConfigurationError(f"Unknown verify group(s): {', '.join(unknown_groups)}",
                                     field='verify_only')
        return self

    def resolved_kappa(self, n):
        """
        kappa for dimension n: the given kappa, W / sqrt(n), or 1.
        """
        if self.w is not None:
            return self.w / np.sqrt(n)
        return 1.0 if self.kappa is None else self.kappa

    def resolved_truncation(self):
        if self.truncation is not None:
            return int(self.truncation)
        if self.command == 'verify':
            return VERIFY_TRUNCATION
        return DEFAULT_TRUNCATION

    def resolved_kappa_u(self, n=None):
        """
        kappa_* u_* for the limit curves; explicit kappa_u wins.
        """
        if self.kappa_u is not None:
            return self.kappa_u
        u_star = np.sqrt(1 - abs(self.z)**2)
        return self.resolved_kappa(self.n[-1] if n is None else n) * u_star

    def to_dict(self):
        out = dataclasses.asdict(self)
        out['z'] = complex_to_json(self.z)
        out['zeta_grid'] = [complex_to_json(v) for v in self.zeta_grid]
        # settings that never change results
        for key in ('threads', 'out', 'progress', 'plot'):
            out.pop(key)
        return out

    def config_hash(self):
        """
        SHA-256 of the canonical JSON of the result-relevant settings.
        """
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode()).hexdigest()

    @property
    def out_dir(self):
        path = Path(self.out)
        path.mkdir(parents=True, exist_ok=True)
        return path
