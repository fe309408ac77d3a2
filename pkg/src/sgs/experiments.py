"""Experiment definitions shared by the CLI and the acceptance tests.

Each experiment takes a validated :class:`ExperimentConfig` and returns the CSV
column names plus a list of row dicts. Everything is deterministic given the
configuration and seed.
"""

from __future__ import annotations

import ast
import configparser
import hashlib
import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import basis, gensamp, invreg
from .basis import CoeffVec, FunctionSystem, Grid
from .crossgram import assemble_rows, assemble_section, min_singular_value
from .csinf import (
    SparsityLevels,
    draw_scheme,
    flip_coefficients,
    l1_solve,
    local_coherence_matrix,
    random_sparse_in_levels,
    relative_sparsity,
    tail_coherence,
    theorem_conditions,
    uniform_scheme,
)

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


# ---------------------------------------------------------------------------
# test functions


def _piecewise(t):
    t = np.asarray(t, dtype=float)
    return np.exp(-t) * (t < 0.6) + np.sin(10 * t) * (t >= 0.2)


FUNCTIONS: dict[str, Callable] = {
    "t5exp": lambda t: np.asarray(t, dtype=float) ** 5 * np.exp(-np.asarray(t, dtype=float)),
    "runge": lambda t: 1.0 / (1.0 + 25.0 * np.asarray(t, dtype=float) ** 2),
    "exp": lambda t: np.exp(np.asarray(t, dtype=float)),
    "cos2pi": lambda t: np.cos(2 * np.pi * np.asarray(t, dtype=float)),
    "piecewise": _piecewise,
}

# jump locations used to align quadrature panels
BREAKS = {"piecewise": (0.2, 0.6)}


def function_grid(name: str, domain, frequency: float = 0.0, degree: int = 0, panels: int = 64) -> Grid:
    """Composite grid on ``domain`` resolving ``FUNCTIONS[name]`` and the given oscillation."""
    a, b = domain
    pts = {a, b}
    pts.update(np.linspace(a, b, panels + 1).tolist())
    pts.update(x for x in BREAKS.get(name, ()) if a < x < b)
    base = Grid.from_breakpoints(np.array(sorted(pts)), 20)
    fine = basis.adapted_grid(domain, frequency=frequency, degree=degree, order=20)
    merged = np.union1d(base.breakpoints, fine.breakpoints)
    return Grid.from_breakpoints(merged, 20)


def samples_of(name: str, system: FunctionSystem, n: int, support) -> np.ndarray:
    """``<f, psi_i>``, ``i = 1..n``, with ``f`` extended by zero outside ``support``."""
    a, b = max(support[0], system.domain[0]), min(support[1], system.domain[1])
    freq = 2 * np.pi * (n // 2 + 1) / system.length if system.kind == "fourier" else 0.0
    deg = n if system.kind == "legendre" else 0
    grid = function_grid(name, (a, b), freq, deg)
    vals = basis.eval_block(system, np.arange(1, n + 1), grid.nodes)
    return np.conj(vals).T @ (grid.weights * FUNCTIONS[name](grid.nodes))


def l2_distance(name: str, coeffs: CoeffVec, support, domain=None) -> float:
    """``||f chi_support - sum beta_j phi_j||`` over ``domain`` (default: the system domain)."""
    system = coeffs.system
    domain = system.domain if domain is None else domain
    n = coeffs.values.size
    freq = 2 * np.pi * (n // 2 + 1) / system.length if system.kind == "fourier" else 0.0
    deg = n if system.kind == "legendre" else 0
    dy = []
    if system.is_wavelet:
        dy.append((system.domain, int(basis.wavelet_label(max(n, 2))[0]) + 1))
    pts = set(np.asarray(support, dtype=float).tolist()) | set(domain)
    inner = function_grid(name, domain, freq, deg)
    bp = np.union1d(inner.breakpoints, [p for p in pts if domain[0] <= p <= domain[1]])
    if dy:
        bp = np.union1d(bp, basis.adapted_grid(domain, dyadic=dy, order=20).breakpoints)
    grid = Grid.from_breakpoints(bp, 20)
    inside = (grid.nodes >= support[0]) & (grid.nodes <= support[1])
    f = np.where(inside, FUNCTIONS[name](grid.nodes), 0.0)
    approx = basis.synthesize(coeffs, grid, system)
    return grid.norm(approx - f)


def haar_coefficients(name: str, count: int, cells: int = 1 << 14, order: int = 8) -> np.ndarray:
    """First ``count`` Haar coefficients on ``[0, 1]`` from Gauss cell averages."""
    if count > cells:
        raise ValueError("count exceeds the number of cells")
    edges = np.arange(cells + 1) / cells
    jumps = [x for x in BREAKS.get(name, ()) if 0 < x < 1]
    grid = Grid.from_breakpoints(np.union1d(edges, jumps), order)
    # panels inside cell c start at searchsorted position of its left edge
    starts = np.searchsorted(grid.breakpoints[:-1], edges[:-1]) * order
    means = np.add.reduceat(grid.weights * FUNCTIONS[name](grid.nodes), starts) * cells
    v = means / np.sqrt(cells)  # coefficients in the finest box basis
    details = []
    while v.size > 1:
        details.append((v[0::2] - v[1::2]) / np.sqrt(2.0))
        v = (v[0::2] + v[1::2]) / np.sqrt(2.0)
    coeffs = np.concatenate([v] + details[::-1])
    return coeffs[:count]


# ---------------------------------------------------------------------------
# configuration


_SYSTEM_RE = re.compile(r"^\s*(fourier|haar|legendre|daubechies)\s*(?:\((.*)\))?\s*$")


def parse_system(text: str) -> FunctionSystem:
    """``fourier``, ``haar(0, 1)``, ``legendre(-1, 1)``, ``daubechies(2)``, ``daubechies(2, 0, 1)``."""
    m = _SYSTEM_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse system {text!r}")
    kind, args = m.group(1), m.group(2)
    vals = [float(v) for v in args.split(",")] if args and args.strip() else []
    try:
        if kind == "daubechies":
            if not vals:
                raise ConfigError("daubechies needs an order, e.g. daubechies(2)")
            p = int(vals[0])
            return basis.daubechies(p, *vals[1:])
        return getattr(basis, kind)(*vals)
    except (TypeError, basis.BasisError) as exc:
        raise ConfigError(f"invalid system {text!r}: {exc}") from exc


def _ints(text: str) -> list[int]:
    text = text.strip()
    m = re.fullmatch(r"(-?\d+)\s*\.\.\s*(-?\d+)", text)
    if m:
        return list(range(int(m.group(1)), int(m.group(2)) + 1))
    try:
        return [int(v) for v in re.split(r"[,\s]+", text.strip("()[] ")) if v]
    except ValueError as exc:
        raise ConfigError(f"expected integers, got {text!r}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in re.split(r"[,\s]+", text.strip("()[] ")) if v]
    except ValueError as exc:
        raise ConfigError(f"expected numbers, got {text!r}") from exc


def _int(text: str) -> int:
    v = _ints(text)
    if len(v) != 1:
        raise ConfigError(f"expected one integer, got {text!r}")
    return v[0]


def _float(text: str) -> float:
    v = _floats(text)
    if len(v) != 1:
        raise ConfigError(f"expected one number, got {text!r}")
    return v[0]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _function(text: str) -> str:
    if text.strip() not in FUNCTIONS:
        raise ConfigError(f"unknown function {text!r}; choose from {sorted(FUNCTIONS)}")
    return text.strip()


REQUIRED = object()


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    reference: str
    summary: str
    runner: Callable
    params: dict
    sampling: str
    reconstruction: str
    ensemble: bool = False


@dataclass
class ExperimentConfig:
    experiment: str
    sampling: FunctionSystem
    reconstruction: FunctionSystem
    params: dict
    seed: int = 0
    seeds: int = 1
    jobs: int = 1
    source: str = ""
    digest: str = ""
    extra: dict = field(default_factory=dict)


def config_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def load_config(text: str, experiment: str | None = None, seed: int | None = None, jobs: int = 1) -> ExperimentConfig:
    """Parse and validate INI text against the experiment's parameter schema."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    named = cp.get("experiment", "name", fallback=None)
    if experiment is None:
        experiment = named
    elif named is not None and named.strip() != experiment:
        raise ConfigError(f"config is for {named!r}, not {experiment!r}")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; see `sgs list`")
    spec = EXPERIMENTS[experiment]
    known = set(cp.sections()) - {"experiment", "systems", "params", "run"}
    if known:
        raise ConfigError(f"unknown config sections: {sorted(known)}")
    samp = parse_system(cp.get("systems", "sampling", fallback=spec.sampling))
    recon = parse_system(cp.get("systems", "reconstruction", fallback=spec.reconstruction))
    raw = dict(cp.items("params")) if cp.has_section("params") else {}
    unknown = set(raw) - set(spec.params)
    if unknown:
        raise ConfigError(f"unknown parameters for {experiment}: {sorted(unknown)}")
    params = {}
    for key, (parser, default) in spec.params.items():
        if key in raw:
            params[key] = parser(raw[key])
        elif default is REQUIRED:
            raise ConfigError(f"{experiment} requires parameter {key!r}")
        else:
            params[key] = default
    run_seed = _int(cp.get("run", "seed", fallback="0"))
    seeds = _int(cp.get("run", "seeds", fallback="1"))
    if seeds < 1:
        raise ConfigError("seeds must be positive")
    if seed is not None:
        run_seed = int(seed)
    if not 0 <= run_seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if jobs < 1:
        raise ConfigError("jobs must be positive")
    cfg = ExperimentConfig(experiment, samp, recon, params, run_seed, seeds, jobs, text, config_digest(text))
    _validate(cfg)
    return cfg


def _check(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _validate(cfg: ExperimentConfig):
    p = cfg.params
    name = cfg.experiment
    if name in ("gs", "ssr"):
        _check(all(m >= 1 for m in p["M"]), "M values must be positive")
        _check(p["theta"] > 1, "theta must exceed 1")
    if name == "consistent-fail":
        _check(all(n >= 1 for n in p["N"]), "N values must be positive")
    if name == "invreg-volterra":
        _check(min(p["M"], p["N"], p["R"]) >= 1, "M, N, R must be positive")
        _check(p["R"] >= p["N"], "R must be at least N")
        _check(all(a >= 0 for a in p["alpha"]), "alpha must be nonnegative")
        _check(all(e >= 0 for e in p["eps_rel"]), "eps_rel must be nonnegative")
    if name == "coherence":
        _check(all(n >= 1 for n in p["N"]), "N values must be positive")
        _check(p["probe_depth"] >= 1, "probe_depth must be positive")
    if name in ("cs-recover", "cs-flip", "theorem-check"):
        lv, ct = p["levels"], p["counts"]
        _check(len(lv) == len(ct), "levels and counts must have the same length")
        _check(all(b > a for a, b in zip([0] + lv[:-1], lv)), "levels must increase")
        widths = np.diff([0] + lv)
        _check(all(0 <= c <= w for c, w in zip(ct, widths)), "each count must fit its level")
    if name in ("cs-recover", "theorem-check"):
        sl, s = p["sparsity_levels"], p["sparsity"]
        _check(len(sl) == len(s), "sparsity_levels and sparsity must have the same length")
        try:
            SparsityLevels(tuple(sl), tuple(s))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if name == "cs-recover":
        _check(p["K"] >= p["sparsity_levels"][-1], "K must cover the sparsity levels")
        _check(p["delta"] >= 0, "delta must be nonnegative")
    if name == "cs-flip":
        _check(p["bandwidth"] >= 1, "bandwidth must be positive")
    if name == "theorem-check":
        _check(0 < p["epsilon"] < 1, "epsilon must lie in (0, 1)")
        _check(p["relative_sparsity"] in ("exact", "bound"), "relative_sparsity is exact or bound")
        _check(len(p["levels"]) == len(p["sparsity_levels"]), "sampling and sparsity levels must pair up")


# ---------------------------------------------------------------------------
# experiments


def run_gs(cfg: ExperimentConfig):
    samp, recon, p = cfg.sampling, cfg.reconstruction, cfg.params
    support = recon.domain
    rows = []
    for M in p["M"]:
        N = gensamp.stable_sampling_rate(gensamp.SsrQuery(M, p["theta"]), samp, recon)
        A = assemble_section(samp, recon, N, M)
        y = samples_of(p["function"], samp, N, support)
        res = gensamp.gs_reconstruct(A, y)
        err_gs = l2_distance(p["function"], res.coeffs, support)
        err_tr = l2_distance(p["function"], CoeffVec(y, samp), support, domain=samp.domain)
        rows.append({"M": M, "N": N, "d_nm": res.d_nm, "err_gs": err_gs, "err_truncated": err_tr})
    return ["M", "N", "d_nm", "err_gs", "err_truncated"], rows


def run_ssr(cfg: ExperimentConfig):
    p = cfg.params
    rows = []
    for M in p["M"]:
        q = gensamp.SsrQuery(M, p["theta"], n_max=p["n_max"])
        N = gensamp.stable_sampling_rate(q, cfg.sampling, cfg.reconstruction)
        d = gensamp.d_nm(cfg.sampling, cfg.reconstruction, N, M)
        rows.append({"M": M, "theta": p["theta"], "N": N, "d_nm": d})
    return ["M", "theta", "N", "d_nm"], rows


def run_consistent_fail(cfg: ExperimentConfig):
    samp, recon, p = cfg.sampling, cfg.reconstruction, cfg.params
    rows = []
    for N in p["N"]:
        A = assemble_section(samp, recon, N, N)
        smin = min_singular_value(A)
        y = samples_of(p["function"], samp, N, recon.domain)
        try:
            res = gensamp.consistent_reconstruct(A, y)
            err, status = l2_distance(p["function"], res.coeffs, recon.domain), "ok"
        except gensamp.IllPosedSectionError:
            err, status = math.inf, "ill-posed"
        rows.append(
            {
                "N": N,
                "sigma_min": smin,
                "log10_sigma_min": math.log10(smin) if smin > 0 else -math.inf,
                "err_consistent": err,
                "status": status,
            }
        )
    return ["N", "sigma_min", "log10_sigma_min", "err_consistent", "status"], rows


def _cos_grid() -> Grid:
    return Grid.composite(0.0, 1.0, 64, 20)


def volterra_case(M: int, N: int, R: int, alpha: float, eps_rel: float = 0.0, noise_seed: int = 0, system=None) -> dict:
    """Recover ``f(t) = cos(2 pi t)`` from noisy Fourier samples of its primitive.

    Returns both errors and the right-hand sides of the two error bounds.
    """
    system = basis.fourier(0.0, 1.0) if system is None else system
    count = max(N + 1, 2)
    ss = invreg.volterra_singular_system(count)
    grid = _cos_grid()
    f = FUNCTIONS["cos2pi"](grid.nodes)
    g = invreg.volterra_forward(f, grid)
    data = invreg.add_noise(g, eps_rel, noise_seed, grid, sampling_system=system, R=R)
    filt = invreg.FilterSpec("tikhonov", alpha) if alpha > 0 else invreg.FilterSpec("none")
    beta_u = invreg.uneven_recover(ss, system, N, M, R, data)
    beta_f = invreg.filtered_recover(ss, system, filt, N, M, R, data)
    err_u = invreg.l2_error(beta_u, f, grid)
    err_f = invreg.l2_error(beta_f, f, grid)
    ang = invreg.angles(ss, system, system, N, M, R, filt)
    sig = ss.sigma
    v = ss.v_block(N, grid.nodes)
    fv = np.conj(v).T @ (grid.weights * f)
    tail_v = grid.norm(f - v @ fv)
    coeffs_t = np.conj(basis.eval_block(system, np.arange(1, M + 1), grid.nodes)).T @ (grid.weights * f)
    proj_t = grid.norm(f - basis.synthesize(CoeffVec(coeffs_t, system), grid))
    b3 = invreg.uneven_error_bound(ang["sec2"], ang["sec1"], tail_v, data.delta, sig[N - 1], proj_err_t=proj_t)
    gamma_exact = invreg.volterra_gamma(np.arange(ss.first_index, ss.first_index + N))
    beta_exact = invreg.filtered_recover(ss, system, filt, N, M, R, None, gamma=gamma_exact)
    err_exact = invreg.l2_error(beta_exact, f, grid)
    b2 = invreg.filtered_error_bound(err_exact, ang["sec2a"], ang["sec1"], sig[N], filt, sig[:N], tail_v, data.delta)
    return {
        "eps_rel": eps_rel,
        "delta": data.delta,
        "N": N,
        "M": M,
        "R": R,
        "alpha": alpha,
        "err_unfiltered": err_u,
        "err_filtered": err_f,
        "bound_unfiltered": b3,
        "bound_filtered": b2,
    }


INVREG_COLUMNS = [
    "eps_rel", "delta", "N", "M", "R", "alpha", "err_unfiltered", "err_filtered", "bound_unfiltered", "bound_filtered",
]


def run_invreg(cfg: ExperimentConfig):
    p = cfg.params
    rows = [
        volterra_case(p["M"], p["N"], p["R"], a, e, p["noise_seed"], cfg.sampling)
        for e in p["eps_rel"]
        for a in p["alpha"]
    ]
    return INVREG_COLUMNS, rows


def run_coherence(cfg: ExperimentConfig):
    p = cfg.params
    rows = []
    for N in p["N"]:
        mr, mc = tail_coherence(cfg.sampling, cfg.reconstruction, N, p["probe_depth"])
        rows.append({"N": N, "mu_rows": mr, "mu_cols": mc})
    return ["N", "mu_rows", "mu_cols"], rows


RECOVERY_COLUMNS = ["seed", "scheme_id", "s_total", "err_l2", "err_l1", "feasibility_gap", "iterations"]


def _noisy(y, delta, rng):
    if delta == 0:
        return y
    e = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
    return y + e * (delta / np.linalg.norm(e))


def cs_recover_seed(samp, recon, p, seed: int) -> list[dict]:
    sl = SparsityLevels(tuple(p["sparsity_levels"]), tuple(p["sparsity"]))
    rng = np.random.default_rng([seed, 1])
    beta = random_sparse_in_levels(sl, rng, length=p["K"])
    schemes = [("multilevel", draw_scheme(p["levels"], p["counts"], seed))]
    if p["uniform"]:
        schemes.append(("uniform", uniform_scheme(p["levels"][-1], sum(p["counts"]), seed)))
    out = []
    for sid, sc in schemes:
        A = assemble_rows(samp, recon, sc.omega, p["K"])
        y = _noisy(A @ beta, p["delta"], np.random.default_rng([seed, 2]))
        r = l1_solve(A, y, p["delta"], system=recon)
        d = r.coeffs.values - beta
        out.append(
            {
                "seed": seed,
                "scheme_id": sid,
                "s_total": sl.total,
                "err_l2": float(np.linalg.norm(d)),
                "err_l1": float(np.sum(np.abs(d))),
                "feasibility_gap": r.feasibility_gap,
                "iterations": r.iterations,
            }
        )
    return out


def cs_flip_seed(samp, recon, p, seed: int) -> list[dict]:
    B = p["bandwidth"]
    beta = haar_coefficients(p["signal"], B)
    flipped = flip_coefficients(beta, B)
    sc = draw_scheme(p["levels"], p["counts"], seed)
    A = assemble_rows(samp, recon, sc.omega, B)
    out = []
    for sid, target in (("direct", beta), ("flipped", flipped)):
        r = l1_solve(A, A @ target, 0.0, system=recon)
        xi = r.coeffs.values if sid == "direct" else flip_coefficients(r.coeffs.values, B)
        d = xi - beta
        out.append(
            {
                "seed": seed,
                "scheme_id": sid,
                "s_total": int(np.count_nonzero(np.abs(beta) > 1e-12)),
                "err_l2": float(np.linalg.norm(d)),
                "err_l1": float(np.sum(np.abs(d))),
                "feasibility_gap": r.feasibility_gap,
                "iterations": r.iterations,
            }
        )
    return out


def _seed_job(args):
    fn, samp, recon, params, seed = args
    return fn(samp, recon, params, seed)


def _ensemble(cfg: ExperimentConfig, fn) -> list[dict]:
    seeds = [cfg.seed + i for i in range(cfg.seeds)]
    jobs = [(fn, cfg.sampling, cfg.reconstruction, cfg.params, s) for s in seeds]
    if cfg.jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            parts = list(ex.map(_seed_job, jobs))
    else:
        parts = [_seed_job(j) for j in jobs]
    return [row for part in parts for row in part]


def run_cs_recover(cfg: ExperimentConfig):
    return RECOVERY_COLUMNS, _ensemble(cfg, cs_recover_seed)


def run_cs_flip(cfg: ExperimentConfig):
    return RECOVERY_COLUMNS, _ensemble(cfg, cs_flip_seed)


def run_theorem_check(cfg: ExperimentConfig):
    p = cfg.params
    N, m = p["levels"], p["counts"]
    sl = SparsityLevels(tuple(p["sparsity_levels"]), tuple(p["sparsity"]))
    A = assemble_section(cfg.sampling, cfg.reconstruction, N[-1], sl.levels[-1])
    mu = local_coherence_matrix(A, N, sl.levels)
    S = [relative_sparsity(A, N, sl, k, mode=p["relative_sparsity"]) for k in range(1, len(N) + 1)]
    rep = theorem_conditions(N, m, sl.levels, sl.s, mu, S, p["epsilon"], p["constant"])
    rows = []
    for lv in rep.levels:
        k = lv.k - 1
        rows.append(
            {
                "k": lv.k,
                "N_k": N[k],
                "m_k": m[k],
                "M_k": sl.levels[k],
                "s_k": sl.s[k],
                "S_k": S[k],
                "family1": lv.family1,
                "family2": lv.family2,
                "passes": int(lv.passes),
                "implied_m": lv.implied_m,
            }
        )
    cols = ["k", "N_k", "m_k", "M_k", "s_k", "S_k", "family1", "family2", "passes", "implied_m"]
    return cols, rows


_CS_LEVELS = {
    "levels": (_ints, [100, 1024]),
    "counts": (_ints, [100, 100]),
}

EXPERIMENTS: dict[str, ExperimentSpec] = {
    spec.name: spec
    for spec in [
        ExperimentSpec(
            "gs", "§2.14", "generalized sampling vs truncated series at the stable sampling rate",
            run_gs, {"M": (_ints, REQUIRED), "theta": (_float, 2.0), "function": (_function, "t5exp")},
            "fourier(-1, 1)", "legendre(-1, 1)",
        ),
        ExperimentSpec(
            "ssr", "§2.12", "stable sampling rate N(M; theta)",
            run_ssr, {"M": (_ints, REQUIRED), "theta": (_float, 2.0), "n_max": (_int, 1 << 16)},
            "fourier(-1, 1)", "haar(0, 1)",
        ),
        ExperimentSpec(
            "consistent-fail", "§2.7", "square-section (consistent) reconstruction and its singular values",
            run_consistent_fail, {"N": (_ints, REQUIRED), "function": (_function, "runge")},
            "fourier(-1, 1)", "legendre(-1, 1)",
        ),
        ExperimentSpec(
            "invreg-volterra", "§3.4 Example 1", "Volterra inversion by uneven sections and filtering",
            run_invreg,
            {
                "M": (_int, REQUIRED),
                "N": (_int, REQUIRED),
                "R": (_int, REQUIRED),
                "alpha": (_floats, [0.0]),
                "eps_rel": (_floats, [0.0]),
                "noise_seed": (_int, 0),
            },
            "fourier(0, 1)", "fourier(0, 1)",
        ),
        ExperimentSpec(
            "coherence", "§4.4", "tail coherences mu(P_N^perp A), mu(A P_N^perp)",
            run_coherence, {"N": (_ints, REQUIRED), "probe_depth": (_int, 4)},
            "fourier(0, 1)", "haar(0, 1)",
        ),
        ExperimentSpec(
            "cs-recover", "§4.2.5", "l1 recovery of sparse-in-levels Haar vectors",
            run_cs_recover,
            {
                **_CS_LEVELS,
                "K": (_int, 1024),
                "sparsity_levels": (_ints, [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024]),
                "sparsity": (_ints, [2, 2, 4, 6, 8, 6, 4, 3, 2, 1]),
                "delta": (_float, 0.0),
                "uniform": (_bool, True),
            },
            "fourier(0, 1)", "haar(0, 1)", ensemble=True,
        ),
        ExperimentSpec(
            "cs-flip", "§4.9", "direct vs flipped coefficient recovery",
            run_cs_flip,
            {
                "levels": (_ints, [32, 64, 128, 256, 512]),
                "counts": (_ints, [32, 32, 48, 48, 48]),
                "bandwidth": (_int, 1024),
                "signal": (_function, "piecewise"),
            },
            "fourier(0, 1)", "haar(0, 1)", ensemble=True,
        ),
        ExperimentSpec(
            "theorem-check", "§4.7", "per-level sufficient conditions for multilevel recovery",
            run_theorem_check,
            {
                "levels": (_ints, REQUIRED),
                "counts": (_ints, REQUIRED),
                "sparsity_levels": (_ints, REQUIRED),
                "sparsity": (_ints, REQUIRED),
                "epsilon": (_float, 0.5),
                "constant": (_float, 1.0),
                "relative_sparsity": (lambda t: t.strip(), "bound"),
            },
            "fourier(0, 1)", "haar(0, 1)",
        ),
    ]
}


def list_experiments() -> str:
    """Text catalogue: name, reference, summary and parameters, in a fixed order."""
    lines = []
    for spec in EXPERIMENTS.values():
        lines.append(f"{spec.name} → {spec.reference}: {spec.summary}")
        req = [k for k, (_, d) in spec.params.items() if d is REQUIRED]
        opt = [f"{k}={_fmt_default(d)}" for k, (_, d) in spec.params.items() if d is not REQUIRED]
        lines.append(f"    required: {', '.join(req) or '-'}")
        lines.append(f"    optional: {', '.join(opt) or '-'}")
        lines.append(f"    systems: sampling={spec.sampling}, reconstruction={spec.reconstruction}")
    return "\n".join(lines)


def _fmt_default(d) -> str:
    if isinstance(d, list):
        return ",".join(str(v) for v in d)
    return str(d)


def run_experiment(cfg: ExperimentConfig):
    spec = EXPERIMENTS[cfg.experiment]
    log.info("running %s (seed %d, %d seeds)", cfg.experiment, cfg.seed, cfg.seeds)
    return spec.runner(cfg)


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def literal(text: str):
    """Parse a CSV cell written by :func:`format_value`."""
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        if text in ("inf", "-inf", "nan"):
            return float(text)
        return text
