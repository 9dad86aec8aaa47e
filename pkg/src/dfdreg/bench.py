"""Convergence-rate experiments for the DFD regularizers.

A run builds a problem, synthesizes a truth of prescribed smoothness, sweeps
the noise level, and records mean/max reconstruction errors together with
lower and upper bound columns. Results are written as CSV plus a JSON
summary; identical config and seed give byte-identical CSV.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import stats

from .analysis import delta_star, density_check, lower_bound
from .dfd import DfdSystem, add_noise, diagonal_system, regularize_coeffs, _v_coeffs
from .filters import check_assumption_A2, check_assumption_B, check_assumption_C, parse_filter
from .grid import Grid, GridFunction, sobolev_norm
from .heat import HeatOperator, MeyerWavelet, build_band_dfd, build_wvd
from .param import (MorozovConfig, a_priori_alpha, discrepancy_from_coeffs, morozov_solve,
                    posterior_error_bound, prior_error_bound)
from .source import parse_phi, sobolev_to_source, source_norm

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

CSV_HEADER = ["delta", "alpha", "mean_error", "max_error", "lower_bound", "upper_bound"]


class AssumptionCheckError(RuntimeError):
    def __init__(self, report):
        super().__init__("filter assumption check failed: " + json.dumps(report, default=str))
        self.report = report


@dataclass
class ExperimentConfig:
    problem: str = "fractional"          # fractional | classical | toy
    gamma: float = 0.5
    T: float = 1.0
    phi: str = "poly:p=2"
    filter: str = "tikhonov"
    rule: str = "apriori"                # apriori | morozov
    tau: float = 1.5
    deltas: list = field(default_factory=list)
    delta_max: float = 1e-1
    delta_min: float = 10 ** -3.5
    delta_points: int = 6
    noise_draws: int = 10
    seed: int = 0
    n: int = 4096
    L: float = 32.0
    j_min: int = 0
    j_max: int = 5
    N_max: int = 40
    E: float = 300.0                     # source radius the truth is scaled to
    smoothness_margin: float = 0.51
    slope_tol: float = 0.15
    ratio_limit: float = 4.0
    morozov_tol: float = 1e-12
    out_dir: str = "bench_out"
    name: str = ""

    def __post_init__(self):
        if not self.deltas:
            self.deltas = np.logspace(math.log10(self.delta_max), math.log10(self.delta_min),
                                      int(self.delta_points)).tolist()
        self.deltas = [float(d) for d in self.deltas]
        if any(b >= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ValueError("delta sweep must be strictly decreasing")
        if self.noise_draws < 1:
            raise ValueError("noise_draws must be >= 1")
        if self.problem not in ("fractional", "classical", "toy"):
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.rule not in ("apriori", "morozov"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if not self.name:
            self.name = f"{self.problem}_{self.rule}"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))


@dataclass
class RateTable:
    rows: list
    slope: float
    slope_ci: float
    ratios: list = field(default_factory=list)
    pass_flags: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def _toy_kappa(grid: Grid):
    f = np.abs(np.fft.fftfreq(grid.n, d=1.0 / grid.n))
    return 1.0 / (f + 1.0)


def build_problem(cfg: ExperimentConfig) -> DfdSystem:
    grid = Grid(cfg.n, cfg.L)
    if cfg.problem == "fractional":
        op = HeatOperator(cfg.gamma, cfg.T, grid)
        return build_wvd(op, MeyerWavelet(), (cfg.j_min, cfg.j_max))
    if cfg.problem == "classical":
        op = HeatOperator(1.0, cfg.T, grid)
        return build_band_dfd(op, MeyerWavelet(), (cfg.j_min, cfg.j_max), cfg.N_max)
    return diagonal_system(grid, lambda m: _toy_kappa(grid)[m])


def make_source_truth(cfg: ExperimentConfig, sys: DfdSystem | None = None):
    """Truth with ``|F theta0| ~ (1 + omega^2)^{-(p+s)/2}`` and random phases.

    For the diagonal toy the coefficient profile is ``kappa^{p/2 + s}``.
    The truth is scaled so that its source norm is exactly ``cfg.E**2``.

    Returns
    -------
    theta0 : GridFunction
    E : float
        Radius of the source set the truth lies on.
    info : dict
        Sobolev certificate data.
    """
    sys = sys if sys is not None else build_problem(cfg)
    phi = parse_phi(cfg.phi)
    p = phi.p
    s = cfg.smoothness_margin
    grid = sys.grid
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 7919]))
    w = grid.omega
    if cfg.problem == "toy":
        kap = _toy_kappa(grid)
        amp = kap ** (p / 2 + s)
    else:
        amp = (1.0 + w ** 2) ** (-(p + s) / 2)
    phase = np.exp(2j * np.pi * rng.random(grid.n))
    # Hermitian symmetry gives a real truth
    spec = amp * phase
    spec = 0.5 * (spec + np.conj(np.roll(spec[::-1], 1)))
    spec = np.where(sys.u.support, spec, 0.0)
    theta = GridFunction.from_spectrum(spec, grid)
    sn = source_norm(theta, sys, phi)
    theta = theta * (cfg.E / math.sqrt(sn))
    E = math.sqrt(source_norm(theta, sys, phi))
    info = {"source_norm": E ** 2, "E": E}
    if cfg.problem != "toy":
        hp = sobolev_norm(theta, p)
        kind = "wvd" if cfg.problem == "fractional" else "band"
        E_sob = sobolev_to_source(hp, p, kind, {**sys.params, "T": cfg.T})
        info.update(sobolev_norm=hp, sobolev_E=E_sob, certificate=bool(E ** 2 <= E_sob ** 2 * (1 + 1e-12)))
    else:
        info.update(certificate=True)
    return theta, E, info


def _fit_slope(deltas, errors):
    x = np.log(np.asarray(deltas))
    y = np.log(np.asarray(errors))
    if len(x) < 2:
        return float("nan"), float("nan")
    res = stats.linregress(x, y)
    if len(x) < 3:
        return float(res.slope), float("nan")
    half = stats.t.ppf(0.975, len(x) - 2) * res.stderr
    return float(res.slope), float(half)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BENCH_THREADS", "0")) or (os.cpu_count() or 1))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig) -> RateTable:
    """Sweep the noise level and tabulate errors and bounds."""
    sys = build_problem(cfg)
    phi = parse_phi(cfg.phi)
    f = parse_filter(cfg.filter)
    rep_c = check_assumption_C(f)
    g1, g2, rep_a2 = check_assumption_A2(f, phi)
    reports = {"C": rep_c, "A2": rep_a2}
    ok = rep_c["passed"] and rep_a2["passed"]
    if cfg.rule == "morozov":
        reports["B"] = check_assumption_B(f)
        ok = ok and reports["B"]["passed"]
    if not ok:
        raise AssumptionCheckError(reports)

    theta, E, truth_info = make_source_truth(cfg, sys)
    K = sys.operator
    y = K.apply(theta)
    A_u, B_u = sys.bounds("u")
    A_v, B_v = sys.bounds("v")
    mcfg = MorozovConfig.for_system(sys, f, tau=cfg.tau, tol=cfg.morozov_tol)

    minimal_like = cfg.problem in ("fractional", "toy")
    if cfg.problem == "fractional":
        beta = 2.0 ** (-(2.0 + phi.p))
    elif cfg.problem == "toy":
        beta = 0.5
    else:
        beta = math.exp(-cfg.T)
    dens = density_check(delta_star(sys, phi, E, math.sqrt(A_v)), beta, E / math.sqrt(A_v))

    tasks = [(i, j) for i in range(len(cfg.deltas)) for j in range(cfg.noise_draws)]
    alpha_prior = [a_priori_alpha(phi, d, E, A_v) for d in cfg.deltas]

    def work(task):
        i, j = task
        d = cfg.deltas[i]
        seed = int(np.random.SeedSequence([cfg.seed, i, j]).generate_state(1)[0])
        yd = add_noise(y, d, seed, sys.v.support).y_delta
        yv = _v_coeffs(sys, yd)
        resid = float("nan")
        if cfg.rule == "apriori":
            alpha = alpha_prior[i]
        else:
            alpha, info = morozov_solve(sys, f, mcfg, yd, d, full_output=True, yv=yv)
            resid = abs(discrepancy_from_coeffs(sys.kappa, f, alpha, yv) - info["target"])
        x = regularize_coeffs(sys, f, alpha, yv)
        return i, j, alpha, (x - theta).norm(), resid

    with ThreadPoolExecutor(max_workers=min(_threads(), len(tasks))) as pool:
        results = sorted(pool.map(work, tasks))

    rows, ratios, warnings = [], [], []
    max_resid = 0.0
    sandwich = True
    for i, d in enumerate(cfg.deltas):
        sub = [r for r in results if r[0] == i]
        errs = np.array([r[3] for r in sub])
        alphas = np.array([r[2] for r in sub])
        alpha = float(alphas[0]) if cfg.rule == "apriori" else float(np.exp(np.mean(np.log(alphas))))
        if cfg.rule == "morozov":
            max_resid = max(max_resid, max(r[4] for r in sub))
        lb = float("nan")
        if minimal_like and dens.covers(d):
            lb = lower_bound(phi, E, d, math.sqrt(B_u), math.sqrt(A_v), beta)
        if cfg.rule == "apriori":
            ub = prior_error_bound(phi, E, d, A_u, A_v, B_v, g1, g2)
        elif phi.concave_flag:
            ub = posterior_error_bound(phi, E, d, A_v, A_u, B_u, cfg.tau, v_ratio=B_v / A_v)
        else:
            ub = float("nan")
        mx = float(errs.max())
        if not np.isnan(lb) and lb > mx:
            # the lower bound is a worst case over the source set, not for this truth
            warnings.append(f"delta={d:.3g}: max error {mx:.4g} below the worst-case lower bound {lb:.4g}")
        if not np.isnan(ub) and mx > ub:
            sandwich = False
        rows.append((d, alpha, float(errs.mean()), mx, lb, ub))
        if phi.kind == "log":
            ratios.append(mx / (E * (-math.log(d / E)) ** (-phi.p)))

    slope, ci = _fit_slope(cfg.deltas, [r[3] for r in rows])
    flags = {"certificate": bool(truth_info["certificate"]), "sandwich": bool(sandwich)}
    if phi.kind == "poly":
        target = phi.p / (phi.p + 2.0)
        flags["slope"] = bool(abs(slope - target) <= cfg.slope_tol)
    else:
        target = float("nan")
        flags["ratio"] = bool(max(ratios) / min(ratios) <= cfg.ratio_limit)
    if cfg.rule == "morozov":
        flags["morozov_residual"] = bool(max_resid <= 1e-10)
    means = [r[2] for r in rows]
    inversions = sum(1 for a, b in zip(means, means[1:]) if b > a)
    if inversions > 1:
        warnings.append(f"mean error increased {inversions} times as delta decreased")
    meta = {
        "config": asdict(cfg), "E": E, "truth": truth_info, "slope_target": target,
        "frame_bounds": {"A_u": A_u, "B_u": B_u, "A_v": A_v, "B_v": B_v},
        "gamma1": g1, "gamma2": g2, "beta": beta, "density": dens.to_dict(),
        "max_morozov_residual": max_resid if cfg.rule == "morozov" else None,
        "tau": cfg.tau, "labels": len(sys.kappa), "truncation": sys.u.truncation,
    }
    return RateTable(rows, slope, ci, ratios, flags, warnings, meta)


def _fmt(v) -> str:
    return repr(float(v))


def table_csv(table: RateTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_HEADER)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def summary_dict(table: RateTable) -> dict:
    return {
        "slope": table.slope,
        "slope_ci": table.slope_ci,
        "pass_flags": table.pass_flags,
        "ratios": table.ratios,
        "warnings": table.warnings,
        **table.meta,
    }


SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["slope", "slope_ci", "pass_flags"],
    "properties": {
        "slope": {"type": ["number", "null"]},
        "slope_ci": {"type": ["number", "null"]},
        "pass_flags": {"type": "object", "additionalProperties": {"type": "boolean"}},
    },
}


def _json_safe(o):
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {str(k): _json_safe(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_json_safe(v) for v in o]
    if isinstance(o, np.generic):
        return _json_safe(o.item())
    if isinstance(o, np.ndarray):
        return _json_safe(o.tolist())
    return o


def emit_outputs(table: RateTable, paths: dict) -> dict:
    """Write ``csv``, ``json`` and ``plot`` files named in ``paths``."""
    written = {}
    if "csv" in paths:
        Path(paths["csv"]).parent.mkdir(parents=True, exist_ok=True)
        with open(paths["csv"], "w", newline="") as fh:
            fh.write(table_csv(table))
        written["csv"] = str(paths["csv"])
    if "json" in paths:
        Path(paths["json"]).parent.mkdir(parents=True, exist_ok=True)
        with open(paths["json"], "w") as fh:
            json.dump(_json_safe(summary_dict(table)), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written["json"] = str(paths["json"])
    if "plot" in paths:
        Path(paths["plot"]).parent.mkdir(parents=True, exist_ok=True)
        with open(paths["plot"], "w") as fh:
            fh.write("# log10(delta) log10(max_error)\n")
            for row in table.rows:
                fh.write(f"{math.log10(row[0])!r} {math.log10(row[3])!r}\n")
        written["plot"] = str(paths["plot"])
    return written


def default_paths(cfg: ExperimentConfig) -> dict:
    base = Path(cfg.out_dir) / cfg.name
    return {"csv": f"{base}.csv", "json": f"{base}.json", "plot": f"{base}.dat"}


def toy_config(quick: bool = True, seed: int = 0, out_dir: str = "bench_out") -> ExperimentConfig:
    """Diagonal toy with ``kappa_k = 1/k``, ``phi(mu) = mu`` and Tikhonov."""
    return ExperimentConfig(
        problem="toy", phi="poly:p=2", filter="tikhonov", rule="apriori",
        n=256 if quick else 1024, L=2 * math.pi, E=1.0,
        delta_max=1e-2, delta_min=1e-4, delta_points=5 if quick else 9,
        noise_draws=5 if quick else 20, seed=seed, slope_tol=0.1, out_dir=out_dir,
        name="toy_quick" if quick else "toy")
