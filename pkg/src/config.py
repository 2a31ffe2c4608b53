"""Run configuration: load YAML/JSON, apply defaults, validate before any computation."""

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import yaml

from src.errors import ConfigError, InvalidParameter, NotPTSymmetricError
from src.model import (
    POLY_TOL,
    ComplexPolynomial,
    PhysicalConstants,
    QuasiFreeParams,
    is_pt_symmetric,
    make_quasi_free_mu,
    quasi_free_params_of,
)
from src.operators import PotentialSpec
from src.spectral import BOUNDARY_CHOICES, CONTOUR_CHOICES, DEFAULT_REALITY_TOL, grid_defaults

COMMANDS = ("check", "spectrum", "momentum", "pct", "fig1", "sweep")
OUTPUT_FORMATS = ("json", "text", "html")


@dataclass(frozen=True)
class SolverConfig:
    contour: str
    half_length: float
    n_points: int
    order: int
    n_levels: int
    boundary: str
    strict: bool


@dataclass(frozen=True)
class Tolerances:
    reality: float
    accuracy: float
    quadrature: float
    pt: float


@dataclass(frozen=True)
class Fig1Config:
    beta_over_alpha: tuple[float, ...]
    levels: tuple[int, ...]
    alpha_xi_max: float
    n_points: int


@dataclass(frozen=True)
class SweepConfig:
    alpha: tuple[float, float]
    beta: tuple[float, float]
    cells: tuple[int, int]
    n_levels: int
    half_length_scale: float
    max_points: int
    workers: int


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; `echo` is the same content with every default filled in."""

    mu: ComplexPolynomial
    quasi_free: Optional[QuasiFreeParams]
    potential: PotentialSpec
    constants: PhysicalConstants
    solver: SolverConfig
    tolerances: Tolerances
    momentum_eigenvalues: tuple[float, ...]
    fig1: Fig1Config
    sweep: SweepConfig
    output_dir: Path
    output_format: str
    echo: dict[str, Any]

    def with_output(self, output_dir: Optional[Path] = None, output_format: Optional[str] = None) -> "RunConfig":
        """Apply command-line overrides for the output location/format."""
        if output_format is not None and output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"must be one of {OUTPUT_FORMATS}", field="output.format")
        new_dir = output_dir if output_dir is not None else self.output_dir
        new_format = output_format or self.output_format
        echo = dict(self.echo)
        echo["output"] = {"dir": str(new_dir), "format": new_format}
        return dataclasses.replace(self, output_dir=new_dir, output_format=new_format, echo=echo)


def _load_config(config_path: Path) -> dict[str, Any]:
    """Load YAML (or JSON, a YAML subset) and return it as a dict."""
    try:
        with open(config_path, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {config_path}", field="config") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {config_path}: {e}", field="config") from e
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", field="config")
    return data


def _section(data: dict[str, Any], name: str) -> dict[str, Any]:
    section = data.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError("must be a mapping", field=name)
    return section


def _number(value: Any, field: str, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"must be a number, got {value!r}", field=field)
    value = float(value)
    if positive and not value > 0:
        raise ConfigError(f"must be positive, got {value}", field=field)
    return value


def _integer(value: Any, field: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"must be an integer >= {minimum}, got {value!r}", field=field)
    return value


def _get_mu(model: dict[str, Any]) -> tuple[ComplexPolynomial, Optional[QuasiFreeParams]]:
    """Extract mu from model.mu: either quasi_free {alpha, beta} or coefficients [[re, im], ...]."""
    mu_spec = model.get("mu") or {"quasi_free": {"alpha": 1.0, "beta": 0.0}}
    if not isinstance(mu_spec, dict):
        raise ConfigError("must be a mapping with quasi_free or coefficients", field="model.mu")
    if "quasi_free" in mu_spec:
        qf = mu_spec["quasi_free"] or {}
        alpha = _number(qf.get("alpha", 1.0), "model.mu.quasi_free.alpha")
        beta = _number(qf.get("beta", 0.0), "model.mu.quasi_free.beta")
        try:
            params = QuasiFreeParams(alpha=alpha, beta=beta)
        except InvalidParameter as e:
            raise ConfigError(str(e), field="model.mu.quasi_free.alpha") from e
        return make_quasi_free_mu(params), params
    if "coefficients" in mu_spec:
        try:
            mu = ComplexPolynomial.from_json(mu_spec["coefficients"] or [])
        except (InvalidParameter, TypeError, ValueError) as e:
            raise ConfigError(str(e), field="model.mu.coefficients") from e
        return mu, quasi_free_params_of(mu)
    raise ConfigError("needs quasi_free or coefficients", field="model.mu")


def _get_potential(model: dict[str, Any]) -> PotentialSpec:
    spec = model.get("potential") or {}
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return PotentialSpec.zero()
    if kind != "polynomial":
        raise ConfigError(f"kind must be zero or polynomial, got {kind!r}", field="model.potential.kind")
    try:
        return PotentialSpec.polynomial(ComplexPolynomial.from_json(spec.get("coefficients") or []))
    except (InvalidParameter, TypeError, ValueError) as e:
        raise ConfigError(str(e), field="model.potential.coefficients") from e


def _get_solver_config(data: dict[str, Any], mu: ComplexPolynomial, quasi_free: Optional[QuasiFreeParams]) -> SolverConfig:
    """Extract solver config; grid defaults depend on the contour (and alpha)."""
    solver = _section(data, "solver")
    contour = solver.get("contour", "shifted" if quasi_free else "real_axis")
    if contour not in CONTOUR_CHOICES:
        raise ConfigError(f"must be one of {CONTOUR_CHOICES}, got {contour!r}", field="solver.contour")
    if contour == "shifted" and quasi_free is None:
        raise ConfigError("the shifted contour needs mu = alpha^2 x^2 + 2i beta x", field="solver.contour")
    default_L, default_N, default_order = grid_defaults(mu, contour)
    half_length = solver.get("half_length")
    n_points = solver.get("n_points")
    order = solver.get("order")
    boundary = solver.get("boundary", "auto")
    if boundary not in BOUNDARY_CHOICES:
        raise ConfigError(f"must be one of {BOUNDARY_CHOICES}, got {boundary!r}", field="solver.boundary")
    order = default_order if order is None else order
    if order not in (2, 4) or (contour == "shifted" and order != 2):
        raise ConfigError(f"order {order!r} not available on the {contour} contour", field="solver.order")
    return SolverConfig(
        contour=contour,
        half_length=default_L if half_length is None else _number(half_length, "solver.half_length", positive=True),
        n_points=default_N if n_points is None else _integer(n_points, "solver.n_points", minimum=7),
        order=order,
        n_levels=_integer(solver.get("n_levels", 3), "solver.n_levels"),
        boundary=boundary,
        strict=bool(solver.get("strict", False)),
    )


def _get_tolerances(data: dict[str, Any], contour: str) -> Tolerances:
    tol = _section(data, "tolerances")
    reality = tol.get("reality")
    return Tolerances(
        reality=DEFAULT_REALITY_TOL[contour] if reality is None else _number(reality, "tolerances.reality", positive=True),
        accuracy=_number(tol.get("accuracy", 1e-3), "tolerances.accuracy", positive=True),
        quadrature=_number(tol.get("quadrature", 1e-13), "tolerances.quadrature", positive=True),
        pt=_number(tol.get("pt", POLY_TOL), "tolerances.pt"),
    )


def _get_fig1_config(data: dict[str, Any]) -> Fig1Config:
    fig1 = _section(data, "fig1")
    ratios = tuple(_number(r, "fig1.beta_over_alpha") for r in fig1.get("beta_over_alpha", [0.0, 0.25, 0.5, 1.0]))
    levels = tuple(_integer(n, "fig1.levels") for n in fig1.get("levels", [1, 2]))
    n_points = _integer(fig1.get("n_points", 401), "fig1.n_points", minimum=3)
    if n_points % 2 == 0:
        raise ConfigError("must be odd so the grid contains xi = 0", field="fig1.n_points")
    if not ratios or not levels:
        raise ConfigError("needs at least one ratio and one level", field="fig1")
    return Fig1Config(
        beta_over_alpha=ratios,
        levels=levels,
        alpha_xi_max=_number(fig1.get("alpha_xi_max", 10.0), "fig1.alpha_xi_max", positive=True),
        n_points=n_points,
    )


def _get_range(value: Any, field: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"must be a [low, high] pair, got {value!r}", field=field)
    lo, hi = _number(value[0], field), _number(value[1], field)
    if hi < lo:
        raise ConfigError(f"low {lo} exceeds high {hi}", field=field)
    return lo, hi


def _get_sweep_config(data: dict[str, Any]) -> SweepConfig:
    sweep = _section(data, "sweep")
    alpha = _get_range(sweep.get("alpha", [0.5, 2.0]), "sweep.alpha")
    if alpha[0] <= 0:
        raise ConfigError("alpha must be positive", field="sweep.alpha")
    cells = sweep.get("cells", [5, 5])
    if not isinstance(cells, (list, tuple)) or len(cells) != 2:
        raise ConfigError(f"must be an [n_alpha, n_beta] pair, got {cells!r}", field="sweep.cells")
    return SweepConfig(
        alpha=alpha,
        beta=_get_range(sweep.get("beta", [0.0, 2.0]), "sweep.beta"),
        cells=(_integer(cells[0], "sweep.cells"), _integer(cells[1], "sweep.cells")),
        n_levels=_integer(sweep.get("n_levels", 3), "sweep.n_levels"),
        half_length_scale=_number(sweep.get("half_length_scale", 10.0), "sweep.half_length_scale", positive=True),
        max_points=_integer(sweep.get("max_points", 801), "sweep.max_points", minimum=7),
        workers=_integer(sweep.get("workers", 4), "sweep.workers"),
    )


def parse_config(config_path: Path) -> RunConfig:
    """Load, default and validate a run configuration; PT violations raise NotPTSymmetricError."""
    data = _load_config(Path(config_path))
    model = _section(data, "model")
    mu, quasi_free = _get_mu(model)
    potential = _get_potential(model)
    const = _section(data, "constants")
    try:
        constants = PhysicalConstants(
            hbar=_number(const.get("hbar", 1.0), "constants.hbar"),
            mass=_number(const.get("mass", 1.0), "constants.mass"),
        )
    except InvalidParameter as e:
        raise ConfigError(str(e), field="constants") from e
    solver = _get_solver_config(data, mu, quasi_free)
    tolerances = _get_tolerances(data, solver.contour)
    if not is_pt_symmetric(mu, tolerances.pt):
        raise NotPTSymmetricError("mu is not PT-symmetric", field="model.mu")
    if not is_pt_symmetric(potential.poly, tolerances.pt):
        raise NotPTSymmetricError("potential is not PT-symmetric", field="model.potential")
    momentum = _section(data, "momentum")
    momentum_eigenvalues = tuple(
        _number(p, "momentum.eigenvalues") for p in momentum.get("eigenvalues", [0.0, 1.7, -3.2])
    )
    fig1 = _get_fig1_config(data)
    sweep = _get_sweep_config(data)
    output = _section(data, "output")
    output_format = output.get("format", "json")
    if output_format not in OUTPUT_FORMATS:
        raise ConfigError(f"must be one of {OUTPUT_FORMATS}", field="output.format")
    output_dir = Path(output.get("dir", "results"))

    echo = {
        "model": {
            "mu": mu.to_json(),
            "quasi_free": {"alpha": quasi_free.alpha, "beta": quasi_free.beta} if quasi_free else None,
            "potential": {"kind": potential.kind, "coefficients": potential.poly.to_json()},
        },
        "constants": {"hbar": constants.hbar, "mass": constants.mass},
        "solver": dataclasses.asdict(solver),
        "tolerances": dataclasses.asdict(tolerances),
        "momentum": {"eigenvalues": list(momentum_eigenvalues)},
        "fig1": dataclasses.asdict(fig1),
        "sweep": dataclasses.asdict(sweep),
        "output": {"dir": str(output_dir), "format": output_format},
    }
    return RunConfig(
        mu=mu,
        quasi_free=quasi_free,
        potential=potential,
        constants=constants,
        solver=solver,
        tolerances=tolerances,
        momentum_eigenvalues=momentum_eigenvalues,
        fig1=fig1,
        sweep=sweep,
        output_dir=output_dir,
        output_format=output_format,
        echo=echo,
    )
