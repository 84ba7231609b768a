"""Run configuration: a validated YAML schema and factories for its parts.

A configuration is a nested mapping with the sections below; every field has
a default, unknown keys are rejected, and schema violations raise ConfigError
with the dotted path of the offending field so command-line users get exact
diagnostics. ``RunConfig.to_dict`` emits the full tree (defaults included),
and ``parse_config(cfg.to_dict())`` reproduces an equal RunConfig, which is
the round-trip property the manifest echo relies on.

    model:      kind (vdp | burgers | linear-random) and its parameters
    mu:         parameter vector, default model.default_mu
    time:       scheme (tableau name) and n_steps
    shooting:   method, tolerances, eps_gmres, m_precondition, guess
    dual:       method and tolerance of the adjoint two-point solve
    floquet:    leading-eigenvalue count, tolerance, stability margin
    grad_check: finite-difference step ladder
    optimize:   objective/constraint indices, targets, bounds, loop controls
    sweep:      solver-comparison matrix (methods x tolerances x m)
    out, seed, workers: artifact directory and run controls
"""

from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from .dirk import TimeGrid
from .errors import ConfigError
from .models import make_burgers_1d, make_forced_vdp, make_random_linear_periodic
from .models.linear import make_linear_qoi
from .tableaux import tableau_library

_MODEL_KINDS = ("vdp", "burgers", "linear-random")
_DEFAULT_PERIODS = {"vdp": 2.0 * np.pi, "burgers": 1.0, "linear-random": 1.0}
_SHOOTING_METHODS = ("newton-krylov", "fixed-point", "l-bfgs", "steepest-descent")


@dataclass
class ModelConfig:
    kind: str = "vdp"
    period: float = None
    # burgers
    n_cells: int = 64
    viscosity: float = 0.02
    drag: float = 0.4
    mass: str = "fem"
    # linear-random
    dim: int = 12
    seed: int = 0
    target_radius: float = 0.6
    n_harmonics: int = 2
    forcing_scale: float = 1.0
    complex_pair: bool = True
    spd_mass: bool = False


@dataclass
class TimeConfig:
    scheme: str = "dirk3"
    n_steps: int = 100


@dataclass
class ShootingConfig:
    method: str = "newton-krylov"
    tol: float = 1e-10
    max_iter: int = 50
    eps_gmres: float = 1e-3
    m_precondition: int = 0
    stage_tol: float = 1e-12
    guess: list = None


@dataclass
class DualConfig:
    method: str = "gmres"
    tol: float = 1e-4
    max_iter: int = 400


@dataclass
class FloquetConfig:
    k: int = 6
    tol: float = 1e-8
    margin: float = 1e-8


@dataclass
class GradCheckConfig:
    taus: list = field(default_factory=lambda: [1e-4, 1e-5, 1e-6, 1e-7, 1e-8])


@dataclass
class OptimizeConfig:
    objective: int = 0
    constraints: list = field(default_factory=list)
    targets: list = field(default_factory=list)
    lower: list = None
    upper: list = None
    tol_opt: float = 1e-6
    tol_con: float = 1e-5
    max_outer: int = 12
    max_inner: int = 40
    memory: int = 10
    penalty0: float = 1.0


@dataclass
class SweepConfig:
    methods: list = field(default_factory=lambda: list(_SHOOTING_METHODS))
    tols: list = field(default_factory=lambda: [1e-8])
    m_values: list = field(default_factory=lambda: [0])
    max_iter: int = 4000


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    mu: list = None
    time: TimeConfig = field(default_factory=TimeConfig)
    shooting: ShootingConfig = field(default_factory=ShootingConfig)
    dual: DualConfig = field(default_factory=DualConfig)
    floquet: FloquetConfig = field(default_factory=FloquetConfig)
    grad_check: GradCheckConfig = field(default_factory=GradCheckConfig)
    optimize: OptimizeConfig = field(default_factory=OptimizeConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    out: str = None
    seed: int = 0
    workers: int = 1

    def to_dict(self):
        """Full configuration tree, defaults included, as plain data."""
        return asdict(self)


_SECTIONS = {
    "model": ModelConfig,
    "time": TimeConfig,
    "shooting": ShootingConfig,
    "dual": DualConfig,
    "floquet": FloquetConfig,
    "grad_check": GradCheckConfig,
    "optimize": OptimizeConfig,
    "sweep": SweepConfig,
}


def _coerce(path, value, default):
    """Check/convert one leaf against the type implied by its default."""
    if value is None or default is None and not isinstance(default, (int, float)):
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return list(value)
    return value


def _parse_section(name, cls, data):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected a mapping, got {data!r}")
    section = cls()
    fields = {f: getattr(section, f) for f in section.__dataclass_fields__}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown key '{name}.{key}'")
        setattr(section, key, _coerce(f"{name}.{key}", value, fields[key]))
    return section


def _require_positive(path, value):
    try:
        ok = value > 0.0
    except TypeError:
        ok = False
    if not ok:
        raise ConfigError(f"{path}: must be positive, got {value!r}")


def parse_config(data):
    """Validate a configuration mapping into a RunConfig.

    Raises ConfigError naming the dotted path of the first offending field.
    """
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"configuration root: expected a mapping, got {data!r}")
    cfg = RunConfig()
    for key, value in data.items():
        if key in _SECTIONS:
            setattr(cfg, key, _parse_section(key, _SECTIONS[key], value))
        elif key == "mu":
            cfg.mu = _coerce("mu", value, [])
        elif key == "out":
            cfg.out = _coerce("out", value, "")
        elif key == "seed":
            cfg.seed = _coerce("seed", value, 0)
        elif key == "workers":
            cfg.workers = _coerce("workers", value, 1)
        else:
            raise ConfigError(f"unknown key '{key}'")

    m = cfg.model
    if m.kind not in _MODEL_KINDS:
        raise ConfigError(
            f"model.kind: unknown model {m.kind!r}, expected one of {_MODEL_KINDS}")
    if m.period is None:
        m.period = float(_DEFAULT_PERIODS[m.kind])
    _require_positive("model.period", m.period)
    _require_positive("model.viscosity", m.viscosity)
    _require_positive("model.drag", m.drag)
    if m.mass not in ("fem", "identity"):
        raise ConfigError(f"model.mass: expected 'fem' or 'identity', got {m.mass!r}")
    if cfg.time.scheme not in ("backward-euler", "sdirk2", "dirk3"):
        raise ConfigError(f"time.scheme: unknown tableau {cfg.time.scheme!r}")
    if cfg.time.n_steps < 1:
        raise ConfigError(f"time.n_steps: must be at least 1, got {cfg.time.n_steps}")
    if cfg.shooting.method not in _SHOOTING_METHODS:
        raise ConfigError(
            f"shooting.method: unknown method {cfg.shooting.method!r}, "
            f"expected one of {_SHOOTING_METHODS}")
    for path, value in (("shooting.tol", cfg.shooting.tol),
                        ("shooting.stage_tol", cfg.shooting.stage_tol),
                        ("shooting.eps_gmres", cfg.shooting.eps_gmres),
                        ("dual.tol", cfg.dual.tol),
                        ("floquet.tol", cfg.floquet.tol),
                        ("optimize.tol_opt", cfg.optimize.tol_opt),
                        ("optimize.tol_con", cfg.optimize.tol_con),
                        ("optimize.penalty0", cfg.optimize.penalty0)):
        _require_positive(path, value)
    if cfg.shooting.m_precondition < 0:
        raise ConfigError("shooting.m_precondition: must be nonnegative")
    if cfg.dual.method not in ("gmres", "fixed-point"):
        raise ConfigError(
            f"dual.method: expected 'gmres' or 'fixed-point', got {cfg.dual.method!r}")
    if cfg.floquet.k < 1:
        raise ConfigError("floquet.k: must be at least 1")
    for tau in cfg.grad_check.taus:
        if not isinstance(tau, (int, float)) or not tau > 0.0:
            raise ConfigError(f"grad_check.taus: entries must be positive, got {tau!r}")
    opt = cfg.optimize
    if opt.objective in opt.constraints:
        raise ConfigError("optimize.objective: must not also be a constraint index")
    if len(opt.constraints) != len(opt.targets):
        raise ConfigError("optimize.targets: need one target per constraint index")
    if (opt.lower is None) != (opt.upper is None):
        raise ConfigError("optimize.lower/upper: give both bounds or neither")
    if opt.lower is not None:
        try:
            lo = np.asarray(opt.lower, dtype=float)
            hi = np.asarray(opt.upper, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("optimize.lower/upper: bounds must be numeric lists")
        if lo.shape != hi.shape:
            raise ConfigError("optimize.lower/upper: bounds must have equal length")
        if np.any(lo > hi):
            raise ConfigError("optimize.lower: lower bounds exceed upper bounds")
    for method in cfg.sweep.methods:
        if method not in _SHOOTING_METHODS:
            raise ConfigError(f"sweep.methods: unknown method {method!r}")
    for tol in cfg.sweep.tols:
        if not isinstance(tol, (int, float)) or not tol > 0.0:
            raise ConfigError(f"sweep.tols: entries must be positive, got {tol!r}")
    for mval in cfg.sweep.m_values:
        if not isinstance(mval, int) or mval < 0:
            raise ConfigError(f"sweep.m_values: entries must be nonnegative integers")
    if cfg.workers < 1:
        raise ConfigError("workers: must be at least 1")
    return cfg


def load_config(path):
    """Parse a YAML file into a RunConfig; syntax errors keep line marks."""
    try:
        with open(path) as fh:
            try:
                data = yaml.safe_load(fh)
            except yaml.YAMLError as err:
                raise ConfigError(f"{path}: {err}")
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror or err}")
    try:
        return parse_config(data)
    except ConfigError as err:
        raise ConfigError(f"{path}: {err}")


def build_model(cfg):
    """Instantiate (model, qoi) from the model section."""
    m = cfg.model
    if m.kind == "vdp":
        return make_forced_vdp(m.period)
    if m.kind == "burgers":
        return make_burgers_1d(m.n_cells, m.viscosity, m.period,
                               mass=m.mass, drag=m.drag)
    model = make_random_linear_periodic(
        m.dim, m.period, m.seed, target_radius=m.target_radius,
        n_harmonics=m.n_harmonics, mass="spd" if m.spd_mass else "identity",
        forcing_scale=m.forcing_scale, complex_pair=m.complex_pair)
    return model, make_linear_qoi(model)


def build_tableau(cfg):
    return tableau_library(cfg.time.scheme)


def build_grid(cfg, model):
    return TimeGrid.uniform(model.period, cfg.time.n_steps)


def resolve_mu(cfg, model):
    """The run's parameter vector: the mu section or the model default."""
    if cfg.mu is None:
        return np.array(model.default_mu, dtype=float)
    try:
        mu = np.asarray(cfg.mu, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"mu: must be a numeric list, got {cfg.mu!r}")
    if mu.shape != (model.n_params,):
        raise ConfigError(
            f"mu: expected {model.n_params} entries for model "
            f"'{cfg.model.kind}', got {mu.size}")
    return mu


def resolve_guess(cfg, model):
    """The shooting initial state: the guess field or zeros."""
    if cfg.shooting.guess is None:
        return np.zeros(model.dim)
    try:
        guess = np.asarray(cfg.shooting.guess, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(
            f"shooting.guess: must be a numeric list, got {cfg.shooting.guess!r}")
    if guess.shape != (model.dim,):
        raise ConfigError(
            f"shooting.guess: expected {model.dim} entries, got {guess.size}")
    return guess
