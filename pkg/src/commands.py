"""Command implementations: each one runs module operations and fills a RunReport."""

import json
import logging
import math
import time
from multiprocessing.pool import ThreadPool
from pathlib import Path
from typing import Any, Callable

import numpy as np

from src.analytic import (
    box_eigenfunction,
    cpt_norm,
    energy_level,
    fig1_rows,
    momentum_eigenfunction,
    momentum_norm,
    normalization_constant,
    position_eigenfunction,
    z_closed_form,
    z_components,
)
from src.config import COMMANDS, RunConfig
from src.errors import ConfigError
from src.model import Contour, QuasiFreeParams, make_quasi_free_mu
from src.operators import (
    PotentialSpec,
    StencilScheme,
    WavefunctionTable,
    commutator_residual,
    momentum_ode_residual,
    momentum_pt_residual,
    pt_symmetry_residual,
    write_wavefunction_csv,
)
from src.pct import (
    closed_form_gauge,
    decompose_wavefunction,
    energy_invariance_check,
    numeric_z_map,
    recompose_wavefunction,
    write_pct_map_csv,
    zspace_residual,
)
from src.quadrature import QuadratureRule
from src.report import RunReport, write_rows_csv
from src.spectral import DEFAULT_REALITY_TOL, assemble_momentum_matrix, hermiticity_defect, solve_bound_states
from src.utils import config_digest, ensure_output_dir, to_jsonable

logger = logging.getLogger(__name__)

# Operator-identity grid on the real axis
CHECK_HALF_LENGTH = 8.0
CHECK_POINTS = 1601
OPERATOR_TOL = 1e-9

# Shifted-contour grid for closed-form checks, in units of 1/alpha
CLOSED_FORM_HALF_LENGTH = 20.0
CLOSED_FORM_POINTS = 4001
ODE_TOL = 1e-8

MOMENTUM_NORM_TOL = 1e-10
P_INDEPENDENCE_TOL = 1e-12
HERMITIAN_TOL = 1e-14

Z_MAP_TOL = 1e-10
Z_LIMIT_X = 1e6
Z_LIMIT_TOL = 1e-5
DECOMPOSE_TOL = 1e-10
ROUND_TRIP_TOL = 1e-12
# Three-point stencil on the non-uniform z nodes is second order
ZSPACE_TOL = 1e-3

CPT_NORM_TOL = 1e-8
CPT_CONDITION_TOL = 1e-12
CPT_LEVELS = (1, 2, 3, 4)

EXTRAPOLATED_TOL = 1e-5
FIG1_PEAK_TOL = 1e-6

FIG1_COLUMNS = ["alpha_xi", "density_over_alpha", "beta_over_alpha", "n"]
SWEEP_COLUMNS = ["alpha", "beta", "broken", "n_real", "max_abs_imag"]


def _rule(cfg: RunConfig) -> QuadratureRule:
    return QuadratureRule(adaptive_tol=cfg.tolerances.quadrature)


def _require_quasi_free(cfg: RunConfig, command: str) -> QuasiFreeParams:
    if cfg.quasi_free is None:
        raise ConfigError(f"the {command} command needs mu = alpha^2 x^2 + 2i beta x", field="model.mu")
    return cfg.quasi_free


def _closed_form_contour(params: QuasiFreeParams) -> Contour:
    return Contour.shifted(params, CLOSED_FORM_HALF_LENGTH / params.alpha, CLOSED_FORM_POINTS)


def _test_functions(contour: Contour) -> list[WavefunctionTable]:
    x = contour.points
    gauss = np.exp(-0.5 * x * x)
    return [
        WavefunctionTable(contour, gauss, "gaussian"),
        WavefunctionTable(contour, (1.0 + 0.5j * x - 0.25 * x * x) * gauss, "gaussian_poly"),
    ]


def run_check(cfg: RunConfig, report: RunReport, out_dir: Path) -> None:
    """Operator identities: EUP commutator, [PT, H], [PT, p], momentum ODE, hermiticity of p."""
    c = cfg.constants
    s = StencilScheme(order=4, richardson=True)
    contour = Contour.real_axis(CHECK_HALF_LENGTH, CHECK_POINTS)
    residuals: dict[str, dict[str, float]] = {}
    for f in _test_functions(contour):
        values = {
            "commutator": commutator_residual(cfg.mu, f, c, s),
            "pt_hamiltonian": pt_symmetry_residual(cfg.mu, cfg.potential, f, c, s),
            "pt_momentum": momentum_pt_residual(cfg.mu, f, c, s),
        }
        residuals[f.label] = values
        for name, value in values.items():
            report.add_check(f"{name}[{f.label}]", value <= OPERATOR_TOL, value, OPERATOR_TOL)

    if cfg.quasi_free is not None:
        params = cfg.quasi_free
        shifted = _closed_form_contour(params)
        for p_eig in cfg.momentum_eigenvalues:
            phi = WavefunctionTable.sample(shifted, lambda x: momentum_eigenfunction(params, p_eig, x, c), f"Phi_{p_eig:g}")
            value = momentum_ode_residual(params, p_eig, phi, s, c)
            residuals.setdefault("momentum_ode", {})[f"{p_eig:g}"] = value
            report.add_check(f"momentum_ode[p={p_eig:g}]", value <= ODE_TOL, value, ODE_TOL)

    defect = hermiticity_defect(assemble_momentum_matrix(cfg.mu, Contour.real_axis(CHECK_HALF_LENGTH, 201), c))
    report.add_info(
        "momentum_hermiticity_defect",
        defect,
        detail="p is Hermitian" if defect <= HERMITIAN_TOL else "p is not Hermitian (PT-symmetric only)",
    )
    report.results["residuals"] = residuals
    report.results["hermiticity_defect"] = defect


def run_spectrum(cfg: RunConfig, report: RunReport, out_dir: Path) -> None:
    """Bound states with convergence estimate; closed-form comparison for the quasi-free particle."""
    sc = cfg.solver
    solution = solve_bound_states(
        cfg.mu,
        cfg.potential,
        cfg.constants,
        sc.contour,
        sc.n_levels,
        cfg.tolerances.accuracy,
        half_length=sc.half_length,
        n_points=sc.n_points,
        order=sc.order,
        boundary=sc.boundary,
        reality_tol=cfg.tolerances.reality,
        strict=sc.strict,
        rule=_rule(cfg),
    )
    spectrum = solution.report
    report.results["spectrum"] = spectrum.to_dict()
    report.results["vector_residuals"] = [pair.residual for pair in solution.pairs]
    report.add_check("pt_unbroken", not spectrum.broken, spectrum.max_abs_imag, spectrum.reality_tol)
    report.add_check("accuracy_reached", spectrum.accuracy_reached, detail=f"target {spectrum.accuracy_target:g}")

    if cfg.quasi_free is not None and cfg.potential.is_zero:
        exact = np.array([energy_level(cfg.quasi_free, n, cfg.constants) for n in range(1, spectrum.eigenvalues.size + 1)])
        relative = np.abs(spectrum.eigenvalues - exact) / exact
        report.results["closed_form"] = exact.tolist()
        report.add_check("closed_form_match", float(np.max(relative)) <= cfg.tolerances.accuracy,
                         float(np.max(relative)), cfg.tolerances.accuracy)
        if sc.contour == "shifted" and spectrum.extrapolated is not None:
            rel_extra = float(np.max(np.abs(spectrum.extrapolated - exact) / exact))
            report.add_check("extrapolated_match", rel_extra <= EXTRAPOLATED_TOL, rel_extra, EXTRAPOLATED_TOL)

    spectrum_path = out_dir / "spectrum.json"
    spectrum_path.write_text(json.dumps(to_jsonable(spectrum.to_dict()), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    report.artifacts.append(str(spectrum_path))
    for level, pair in enumerate(solution.pairs, start=1):
        path = out_dir / f"phi_{level}.csv"
        write_wavefunction_csv(pair.vector, path)
        report.artifacts.append(str(path))


def run_momentum(cfg: RunConfig, report: RunReport, out_dir: Path) -> None:
    """Closed-form momentum eigenfunctions: ODE residual, unit norm, p-independence of |Phi_p|^2."""
    params = _require_quasi_free(cfg, "momentum")
    c = cfg.constants
    rule = _rule(cfg)
    s = StencilScheme(order=4, richardson=True)
    contour = _closed_form_contour(params)
    reference = np.abs(np.atleast_1d(momentum_eigenfunction(params, 0.0, contour.points, c))) ** 2
    rows = []
    for index, p_eig in enumerate(cfg.momentum_eigenvalues, start=1):
        phi = WavefunctionTable.sample(contour, lambda x: momentum_eigenfunction(params, p_eig, x, c), f"Phi_{p_eig:g}")
        ode = momentum_ode_residual(params, p_eig, phi, s, c)
        norm = momentum_norm(params, p_eig, rule, c)
        spread = float(np.max(np.abs(np.abs(phi.values) ** 2 - reference))) / float(np.max(reference))
        rows.append({"p": p_eig, "ode_residual": ode, "norm": norm, "density_spread": spread})
        report.add_check(f"momentum_ode[p={p_eig:g}]", ode <= ODE_TOL, ode, ODE_TOL)
        report.add_check(f"momentum_norm[p={p_eig:g}]", abs(norm - 1.0) <= MOMENTUM_NORM_TOL, abs(norm - 1.0),
                         MOMENTUM_NORM_TOL)
        report.add_check(f"p_independence[p={p_eig:g}]", spread <= P_INDEPENDENCE_TOL, spread, P_INDEPENDENCE_TOL)
        path = out_dir / f"momentum_{index}.csv"
        write_wavefunction_csv(phi, path)
        report.artifacts.append(str(path))
    defect = hermiticity_defect(assemble_momentum_matrix(cfg.mu, Contour.real_axis(CHECK_HALF_LENGTH, 201), c))
    report.add_info(
        "momentum_hermiticity_defect",
        defect,
        detail="p is Hermitian" if defect <= HERMITIAN_TOL else "p is not Hermitian (PT-symmetric only)",
    )
    report.results["momentum"] = rows
    report.results["hermiticity_defect"] = defect


def run_pct(cfg: RunConfig, report: RunReport, out_dir: Path) -> None:
    """z-map, its limits, wavefunction (de)composition, z-space equation, energy invariance, CPT norms."""
    params = _require_quasi_free(cfg, "pct")
    c = cfg.constants
    rule = _rule(cfg)
    mu = make_quasi_free_mu(params)
    contour = _closed_form_contour(params)
    pct_map = numeric_z_map(mu, contour, closed_form_gauge(params, contour), rule)
    z_exact = np.asarray(z_closed_form(params, contour.points))
    z_error = float(np.max(np.abs(pct_map.z_values - z_exact)))
    report.add_check("z_map_vs_closed_form", z_error <= Z_MAP_TOL, z_error, Z_MAP_TOL)

    limits = {}
    for sign in (1.0, -1.0):
        comp = z_components(params, sign * Z_LIMIT_X)
        zeta_gap = abs(params.omega * comp.zeta - sign * 0.5 * math.pi)
        eta_size = abs(params.omega * comp.eta)
        limits[f"{sign * Z_LIMIT_X:g}"] = {"zeta": comp.zeta, "eta": comp.eta}
        worst = max(zeta_gap, eta_size)
        report.add_check(f"z_limit[x={sign * Z_LIMIT_X:g}]", worst <= Z_LIMIT_TOL, worst, Z_LIMIT_TOL)

    consts = normalization_constant(params)
    invariance_levels = min(cfg.solver.n_levels, 3)
    for n in (1, 2):
        phi = WavefunctionTable.sample(contour, lambda x: position_eigenfunction(params, n, x, consts), f"phi_{n}")
        chi = decompose_wavefunction(mu, phi, pct_map)
        chi_exact = np.asarray(box_eigenfunction(params, n, z_exact, consts))
        dec_error = float(np.max(np.abs(chi.values - chi_exact)))
        report.add_check(f"decompose[n={n}]", dec_error <= DECOMPOSE_TOL, dec_error, DECOMPOSE_TOL)
        back = recompose_wavefunction(mu, chi, pct_map)
        trip = float(np.max(np.abs(back.values - phi.values))) / (1.0 + float(np.max(np.abs(phi.values))))
        report.add_check(f"round_trip[n={n}]", trip <= ROUND_TRIP_TOL, trip, ROUND_TRIP_TOL)
        zres = zspace_residual(chi, energy_level(params, n, c), PotentialSpec.zero(), c)
        report.add_check(f"zspace_residual[n={n}]", zres <= ZSPACE_TOL, zres, ZSPACE_TOL)

    solver_options: dict[str, Any] = {"with_vectors": False, "reality_tol": DEFAULT_REALITY_TOL["shifted"]}
    if cfg.solver.contour == "shifted":
        solver_options.update(half_length=cfg.solver.half_length, n_points=cfg.solver.n_points)
    invariance = energy_invariance_check(params, invariance_levels, c, cfg.tolerances.accuracy, rule, **solver_options)
    report.add_check("energy_invariance", invariance.passed,
                     max(level["deviation"] for level in invariance.levels), cfg.tolerances.accuracy)

    norms = []
    for n in CPT_LEVELS:
        result = cpt_norm(params, n, consts, rule)
        norms.append({"n": n, "value": result.value, "cond_i": result.cond_i, "cond_ii": result.cond_ii})
        gap = abs(result.value - 1.0)
        report.add_check(f"cpt_norm[n={n}]", gap <= CPT_NORM_TOL, gap, CPT_NORM_TOL)
        report.add_check(f"cpt_condition_i[n={n}]", result.cond_i <= CPT_CONDITION_TOL, result.cond_i, CPT_CONDITION_TOL)
        report.add_check(f"cpt_condition_ii[n={n}]", result.cond_ii <= CPT_CONDITION_TOL, result.cond_ii,
                         CPT_CONDITION_TOL)

    map_path = out_dir / "pct_map.csv"
    write_pct_map_csv(pct_map, map_path)
    report.artifacts.append(str(map_path))
    report.results.update(
        {"z_map_error": z_error, "z_limits": limits, "invariance": invariance.to_dict(), "cpt_norms": norms}
    )


def run_fig1(cfg: RunConfig, report: RunReport, out_dir: Path) -> None:
    """Confinement curves to fig1.csv; peak height and monotone second moments."""
    params = _require_quasi_free(cfg, "fig1")
    f1 = cfg.fig1
    alpha = params.alpha
    rows, variances = fig1_rows(alpha, f1.beta_over_alpha, f1.levels, f1.alpha_xi_max, f1.n_points, _rule(cfg))
    path = out_dir / "fig1.csv"
    write_rows_csv(FIG1_COLUMNS, rows, path)
    report.artifacts.append(str(path))

    center = f1.n_points // 2
    curve = 0
    peaks = []
    for ratio in f1.beta_over_alpha:
        for n in f1.levels:
            if n == 1:
                value = rows[curve * f1.n_points + center][1]
                exact = 2.0 / (math.pi * math.hypot(1.0, ratio))
                peaks.append({"beta_over_alpha": ratio, "peak": value, "closed_form": exact})
                report.add_check(f"fig1_peak[beta/alpha={ratio:g}]", abs(value - exact) <= FIG1_PEAK_TOL,
                                 abs(value - exact), FIG1_PEAK_TOL)
            curve += 1

    ordered = sorted(f1.beta_over_alpha)
    for n in f1.levels:
        series = [variances[(ratio, n)] for ratio in ordered]
        increasing = all(b > a for a, b in zip(series, series[1:]))
        report.add_check(f"variance_increasing[n={n}]", increasing, detail=", ".join(f"{v:.6g}" for v in series))
    report.results["fig1"] = {
        "curves": curve,
        "peaks": peaks,
        "variances": [{"beta_over_alpha": r, "n": n, "variance": v} for (r, n), v in sorted(variances.items())],
    }


def sweep_grid(cfg: RunConfig, params: QuasiFreeParams) -> tuple[float, int]:
    """(L, N) for one sweep cell: spacing resolves the nearest zero of 1+mu off the real axis."""
    sw = cfg.sweep
    distance = (params.omega - abs(params.beta)) / params.alpha**2
    h = min(0.2 / params.alpha, distance / 4.0)
    L = sw.half_length_scale / params.alpha
    N = math.ceil(2.0 * L / h) + 1
    if N > sw.max_points:
        logger.warning(
            "sweep cell alpha=%.4g beta=%.4g wants %d points, capped at %d", params.alpha, params.beta, N, sw.max_points
        )
        N = sw.max_points
    return L, N


def _sweep_cell(cfg: RunConfig, reality_tol: float) -> Callable[[tuple[float, float]], dict[str, Any]]:
    def solve(cell: tuple[float, float]) -> dict[str, Any]:
        alpha, beta = cell
        params = QuasiFreeParams(alpha=alpha, beta=beta)
        L, N = sweep_grid(cfg, params)
        solution = solve_bound_states(
            make_quasi_free_mu(params),
            PotentialSpec.zero(),
            cfg.constants,
            "real_axis",
            cfg.sweep.n_levels,
            half_length=L,
            n_points=N,
            order=4,
            reality_tol=reality_tol,
            with_vectors=False,
            richardson=False,
        )
        spectrum = solution.report
        logger.debug("cell alpha=%.4g beta=%.4g: N=%d, broken=%s", alpha, beta, N, spectrum.broken)
        return {
            "alpha": alpha,
            "beta": beta,
            "broken": spectrum.broken,
            "n_real": spectrum.n_real,
            "max_abs_imag": spectrum.max_abs_imag,
            "eigenvalues": [complex(v) for v in spectrum.eigenvalues],
            "n_points": N,
        }

    return solve


def run_sweep(cfg: RunConfig, report: RunReport, out_dir: Path) -> None:
    """(alpha, beta) grid of real-axis spectra; cells run concurrently, results kept in cell order."""
    sw = cfg.sweep
    alphas = np.linspace(sw.alpha[0], sw.alpha[1], sw.cells[0])
    betas = np.linspace(sw.beta[0], sw.beta[1], sw.cells[1])
    cells = [(float(a), float(b)) for a in alphas for b in betas]
    reality_tol = cfg.tolerances.reality if cfg.solver.contour == "real_axis" else DEFAULT_REALITY_TOL["real_axis"]
    logger.info("Sweeping %d cells with %d workers", len(cells), sw.workers)
    with ThreadPool(processes=sw.workers) as pool:
        results = pool.map(_sweep_cell(cfg, reality_tol), cells)
    path = out_dir / "sweep.csv"
    write_rows_csv(SWEEP_COLUMNS, ([r["alpha"], r["beta"], str(r["broken"]).lower(), r["n_real"], r["max_abs_imag"]]
                                  for r in results), path)
    report.artifacts.append(str(path))
    n_broken = sum(r["broken"] for r in results)
    report.add_check("sweep_all_unbroken", n_broken == 0, n_broken, 0.0, detail=f"{len(results)} cells")
    report.results["sweep"] = results


_HANDLERS: dict[str, Callable[[RunConfig, RunReport, Path], None]] = {
    "check": run_check,
    "spectrum": run_spectrum,
    "momentum": run_momentum,
    "pct": run_pct,
    "fig1": run_fig1,
    "sweep": run_sweep,
}


def run_command(cmd: str, cfg: RunConfig) -> RunReport:
    """Run one command; artifacts go to cfg.output_dir. Module errors propagate unchanged."""
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}; choose from {', '.join(COMMANDS)}", field="command")
    out_dir = ensure_output_dir(cfg.output_dir)
    report = RunReport(command=cmd, config_echo=cfg.echo, config_digest=config_digest(cfg.echo))
    start = time.perf_counter()
    logger.info("Running %s (config %s)", cmd, report.config_digest)
    _HANDLERS[cmd](cfg, report, out_dir)
    report.wall_time = time.perf_counter() - start
    graded = [ch for ch in report.checks if ch.passed is not None]
    logger.info("%s: %d/%d checks passed in %.2f s", cmd, sum(ch.passed for ch in graded), len(graded), report.wall_time)
    return report
