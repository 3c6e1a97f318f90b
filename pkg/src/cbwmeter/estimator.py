"""Fisher information, Cramer-Rao bounds and fringe-frequency estimation.

The Fisher information and CRLB are for the *base* frequency ``f`` with the
offset ``a``, visibility ``b`` and phase offset known.  Fits return the
record frequency ``f_M = M f``; Monte Carlo statistics are reported for
``f_hat = f_M_hat / M`` so they sit on the same scale as the bound.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .fringes import Interferogram, InterferogramParams, model, sample_positions, synthesize

TWO_PI = 2.0 * np.pi
GRID_OVERSAMPLE = 8
MAX_ITER = 100
STEP_RTOL = 1e-12
GRAD_TOL = 1e-6
MAX_NONCONVERGED = 0.01


# --------------------------------------------------------------------------
# Fisher information and bounds

@dataclass(frozen=True)
class FisherReport:
    info_exact: float
    info_closed: float
    crlb_var_f: float
    std_k: float
    frac_std_wavelength: float
    k_m: float

    def to_dict(self) -> dict:
        return asdict(self)


def frequency_derivative(params: InterferogramParams, x) -> np.ndarray:
    """``d y_k / d f`` for the base frequency (chain rule through ``f_M = M f``)."""
    x = np.asarray(x, dtype=float)
    theta = TWO_PI * params.f_M * x + params.phase_offset
    return -params.b * params.mu * TWO_PI * params.M * x * np.sin(theta)


def _info(numerator: float, sigma: float) -> float:
    if numerator == 0.0:
        return 0.0
    if sigma == 0.0:
        return math.inf
    return numerator / sigma**2


def exact_information(params: InterferogramParams, x) -> float:
    d = frequency_derivative(params, x)
    return _info(float(np.dot(d, d)), params.sigma)


def closed_information(params: InterferogramParams, x) -> float:
    """Closed form with ``sin^2`` replaced by its mean 1/2."""
    x = np.asarray(x, dtype=float)
    num = (params.b * params.mu * params.M * TWO_PI) ** 2 / 2.0 * float(np.dot(x, x))
    return _info(num, params.sigma)


def _reciprocal(info: float) -> float:
    if info == 0.0:
        return math.inf
    return 1.0 / info


def fisher_information(params: InterferogramParams, x=None) -> FisherReport:
    """Both information forms plus the derived bounds for one configuration."""
    x = sample_positions(params.m, params.L) if x is None else np.asarray(x, dtype=float)
    info_closed = closed_information(params, x)
    return FisherReport(
        info_exact=exact_information(params, x),
        info_closed=info_closed,
        crlb_var_f=_reciprocal(info_closed),
        std_k=fringe_count_std(params),
        frac_std_wavelength=fractional_wavelength_uncertainty(params),
        k_m=params.k_m,
    )


def phase_averaged_information(params: InterferogramParams, x=None, n_phases: int = 32) -> float:
    """Exact information averaged over ``n_phases`` evenly spaced phase offsets."""
    x = sample_positions(params.m, params.L) if x is None else np.asarray(x, dtype=float)
    offsets = TWO_PI * np.arange(n_phases) / n_phases
    return float(np.mean([exact_information(params.replace(phase_offset=float(p)), x) for p in offsets]))


def crlb(params: InterferogramParams) -> float:
    """``var(f_hat) >= 6 sigma^2 / (b^2 M^2 mu^2 (2 pi)^2 m L^2)``."""
    denom = (params.b * params.M * params.mu * TWO_PI) ** 2 * params.m * params.L**2
    if denom == 0.0:
        return math.inf
    return 6.0 * params.sigma**2 / denom


def fringe_count_std(params: InterferogramParams) -> float:
    """``sqrt(6) sigma / (2 pi b M mu sqrt(m))`` as printed for ``std(K_M)``."""
    denom = TWO_PI * params.b * params.M * params.mu * math.sqrt(params.m)
    if denom == 0.0:
        return math.inf
    return math.sqrt(6.0) * params.sigma / denom


def fractional_wavelength_uncertainty(params: InterferogramParams) -> float:
    """Bound on ``std(Lambda_M_hat / Lambda_M)``: fringe-count std over ``K_M``."""
    if params.k_m <= 0:
        raise ValueError("fringe count K_M must be positive")
    return fringe_count_std(params) / params.k_m


def enhancement_factor(params: InterferogramParams) -> float:
    """SNR-product diagnostic ``M K_M``."""
    return params.M * params.k_m


def fractional_std_from_crlb(params: InterferogramParams) -> float:
    """``sqrt(CRLB) / f``; equals ``std(Lambda_hat / Lambda)`` for an efficient estimator."""
    return math.sqrt(crlb(params)) / params.f


def nuisance_crlb(params: InterferogramParams, x=None) -> float:
    """CRLB on ``f`` when offset, amplitude and phase are estimated too."""
    x = sample_positions(params.m, params.L) if x is None else np.asarray(x, dtype=float)
    theta = TWO_PI * params.f_M * x + params.phase_offset
    amp = params.mu * params.b
    jac = np.column_stack([
        np.ones_like(x),
        np.cos(theta),
        -amp * np.sin(theta),
        -amp * np.sin(theta) * TWO_PI * params.M * x,
    ])
    fim = jac.T @ jac / params.sigma**2
    return float(np.linalg.inv(fim)[3, 3])


# --------------------------------------------------------------------------
# fitting

@dataclass(frozen=True)
class FitResult:
    f_hat: float
    amplitude_hat: float
    offset_hat: float
    phase_hat: float
    residual_rss: float
    converged: bool
    iterations: int
    identifiable: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class WavelengthEstimate:
    k_m_hat: float
    lambda_hat: float
    frac_uncertainty: float

    def to_dict(self) -> dict:
        return asdict(self)


def frequency_grid(window: tuple[float, float], L: float) -> np.ndarray:
    lo, hi = window
    step = 1.0 / (GRID_OVERSAMPLE * L)
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def default_window(record: Interferogram) -> tuple[float, float]:
    """Whole band from one cycle across the record to Nyquist."""
    L = record.params.L
    return (1.0 / L, 0.5 * len(record.x) / L)


def _check_window(window, L: float) -> tuple[float, float]:
    lo, hi = (float(w) for w in window)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo < 0 or hi <= lo:
        raise ValueError(f"degenerate search window {window!r}")
    if hi * L < 1.0:
        raise ValueError("search window must reach at least one cycle over the record")
    return lo, hi


def _coarse_full(x, y, freqs) -> float:
    """Frequency whose offset+quadrature least-squares fit leaves the smallest RSS."""
    theta = TWO_PI * freqs[:, None] * x[None, :]
    c, s = np.cos(theta), np.sin(theta)
    ones = np.ones_like(c)
    basis = np.stack([ones, c, s], axis=1)  # (nf, 3, m)
    gram = np.einsum("fim,fjm->fij", basis, basis)
    gram += 1e-12 * np.trace(gram, axis1=1, axis2=2)[:, None, None] * np.eye(3)
    rhs = np.einsum("fim,m->fi", basis, y)
    coef = np.linalg.solve(gram, rhs[..., None])[..., 0]
    rss = float(y @ y) - np.einsum("fi,fi->f", coef, rhs)
    return float(freqs[int(np.argmin(rss))])


def _linear_start(x, y, f) -> np.ndarray:
    theta = TWO_PI * f * x
    basis = np.column_stack([np.ones_like(x), np.cos(theta), np.sin(theta)])
    (o, cc, ss), *_ = np.linalg.lstsq(basis, y, rcond=None)
    # cc cos + ss sin = A cos(theta + p) with A cos p = cc, -A sin p = ss
    return np.array([o, math.hypot(cc, ss), math.atan2(-ss, cc), f])


def _wrap(p: float) -> float:
    return (p + math.pi) % (2 * math.pi) - math.pi


def _gauss_newton(residual_jac, theta0: np.ndarray, scale: float):
    """Damped Gauss-Newton. Returns (theta, rss, iterations, converged)."""
    theta = theta0.copy()
    r, jac = residual_jac(theta)
    rss = float(r @ r)
    it = 0
    step_small = False
    for it in range(1, MAX_ITER + 1):
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        t = 1.0
        while True:
            cand = theta + t * step
            r_new, jac_new = residual_jac(cand)
            rss_new = float(r_new @ r_new)
            if rss_new <= rss or t < 1e-6:
                break
            t *= 0.5
        accepted = rss_new <= rss
        if accepted:
            theta, r, jac, rss = cand, r_new, jac_new, rss_new
        rel = abs(t * step[-1]) / max(abs(theta[-1]), 1e-300)
        if rel < STEP_RTOL or not accepted:
            step_small = True
            break
    grad = jac.T @ r
    tiny = math.sqrt(rss) <= 1e-12 * scale
    cosine = float(np.linalg.norm(grad) / (np.linalg.norm(jac) * math.sqrt(rss))) if rss > 0 else 0.0
    converged = bool(step_small and (tiny or cosine < GRAD_TOL))
    return theta, rss, it, converged


def fit_frequency(record: Interferogram, window: tuple[float, float] | None = None,
                  known_nuisance: bool = False) -> FitResult:
    """Estimate the record frequency ``f_M`` by least squares.

    A dense scan (8x oversampled relative to ``1/L``) picks the global basin,
    then Gauss-Newton refines.  By default offset, amplitude, phase and
    frequency are all free.  With ``known_nuisance=True`` only the frequency
    is fitted and ``mu, a, b, phase_offset`` are taken from ``record.params``,
    which is the estimator the known-parameter CRLB describes.
    """
    x = np.asarray(record.x, dtype=float)
    y = np.asarray(record.y, dtype=float)
    if len(x) < 8:
        raise ValueError("need at least 8 samples")
    p = record.params
    lo, hi = _check_window(window if window is not None else default_window(record), p.L)
    freqs = frequency_grid((lo, hi), p.L)
    scale = float(np.linalg.norm(y)) or 1.0

    if known_nuisance:
        return _fit_known(x, y, p, freqs, scale)

    f0 = _coarse_full(x, y, freqs)
    start = _linear_start(x, y, f0)
    if start[1] <= 1e-12 * max(scale / math.sqrt(len(y)), 1e-300):
        return FitResult(f0, float(start[1]), float(start[0]), 0.0,
                         float(np.sum((y - start[0]) ** 2)), False, 0, identifiable=False)

    def residual_jac(th):
        o, amp, ph, f = th
        arg = TWO_PI * f * x + ph
        c, s = np.cos(arg), np.sin(arg)
        r = o + amp * c - y
        jac = np.column_stack([np.ones_like(x), c, -amp * s, -amp * s * TWO_PI * x])
        return r, jac

    theta, rss, it, converged = _gauss_newton(residual_jac, start, scale)
    o, amp, ph, f = theta
    if amp < 0:
        amp, ph = -amp, ph + math.pi
    return FitResult(float(f), float(amp), float(o), _wrap(float(ph)), rss, converged, it)


def _fit_known(x, y, p: InterferogramParams, freqs, scale) -> FitResult:
    amp, off = p.mu * p.b, p.mu * p.a
    if amp == 0.0:
        return FitResult(float(freqs[0]), 0.0, off, p.phase_offset,
                         float(np.sum((y - off) ** 2)), False, 0, identifiable=False)
    resid0 = y - off
    # RSS = const - 2 amp <resid0, cos> + amp^2 |cos|^2
    cos_grid = np.cos(TWO_PI * freqs[:, None] * x[None, :] + p.phase_offset)
    score = 2.0 * amp * (cos_grid @ resid0) - amp**2 * np.einsum("fm,fm->f", cos_grid, cos_grid)
    f0 = float(freqs[int(np.argmax(score))])

    def residual_jac(th):
        arg = TWO_PI * th[0] * x + p.phase_offset
        r = off + amp * np.cos(arg) - y
        return r, (-amp * np.sin(arg) * TWO_PI * x)[:, None]

    theta, rss, it, converged = _gauss_newton(residual_jac, np.array([f0]), scale)
    return FitResult(float(theta[0]), amp, off, p.phase_offset, rss, converged, it)


def wavelength_from_fit(fit: FitResult, L: float, frac_uncertainty: float = math.nan) -> WavelengthEstimate:
    """``K_M = f_M L`` and ``Lambda_M = L / K_M``."""
    if not fit.f_hat > 0:
        raise ValueError("f_hat must be positive")
    if L <= 0:
        raise ValueError("L must be positive")
    k = fit.f_hat * L
    return WavelengthEstimate(k_m_hat=k, lambda_hat=L / k, frac_uncertainty=frac_uncertainty)


# --------------------------------------------------------------------------
# Monte Carlo

def trial_seed(master_seed: int, index: int) -> int:
    """64-bit seed for one trial, a fixed function of ``(master_seed, index)``."""
    state = np.random.SeedSequence([int(master_seed), int(index)]).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


@dataclass(frozen=True)
class McReport:
    trials: int
    empirical_var_f: float
    crlb_var_f: float
    efficiency: float
    mean_bias: float
    per_M_results: dict = field(default_factory=dict)
    M: int = 1
    estimator: str = "known"
    snr_amp: float = math.nan
    empirical_std_f: float = math.nan
    frac_std_lambda: float = math.nan
    nonconverged: int = 0
    flagged: bool = False
    nuisance_crlb_var_f: float = math.nan

    def to_dict(self) -> dict:
        return asdict(self)


def _nuisance_bound_or_nan(params):
    if params.sigma == 0 or params.b == 0:
        return math.nan  # singular Fisher matrix, nothing to report
    return nuisance_crlb(params)


def default_mc_window(params: InterferogramParams) -> tuple[float, float]:
    """Half to one-and-a-half times the nominal record frequency."""
    return (0.5 * params.f_M, 1.5 * params.f_M)


def _run_trial(params, seed, window, known):
    fit = fit_frequency(synthesize(params, seed), window, known_nuisance=known)
    return fit.f_hat, fit.converged


def monte_carlo(params: InterferogramParams, trials: int, master_seed: int, *,
                known_nuisance: bool = True, window=None, workers: int = 1) -> McReport:
    """Repeat synthesize-and-fit ``trials`` times and compare the spread to the CRLB.

    Trial ``t`` uses seed ``trial_seed(master_seed, t)``; statistics are
    aggregated in trial order so the report does not depend on ``workers``.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    window = default_mc_window(params) if window is None else window
    seeds = [trial_seed(master_seed, t) for t in range(trials)]
    job = lambda s: _run_trial(params, s, window, known_nuisance)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, seeds))
    else:
        results = [job(s) for s in seeds]

    f_M_hat = np.array([r[0] for r in results])
    nonconv = int(sum(not r[1] for r in results))
    f_hat = f_M_hat / params.M
    var_f = float(np.var(f_hat, ddof=1))
    bound = fisher_information(params).crlb_var_f
    efficiency = var_f / bound if bound > 0 else math.inf
    frac = float(np.std(params.f_M / f_M_hat, ddof=1))
    summary = {
        "empirical_var_f": var_f,
        "crlb_var_f": bound,
        "efficiency": efficiency,
        "frac_std_lambda": frac,
        "enhancement_factor": enhancement_factor(params),
        "k_m": params.k_m,
    }
    return McReport(
        trials=trials,
        empirical_var_f=var_f,
        crlb_var_f=bound,
        efficiency=efficiency,
        mean_bias=float(np.mean(f_hat) - params.f),
        per_M_results={params.M: summary},
        M=params.M,
        estimator="known" if known_nuisance else "full",
        snr_amp=params.snr_amp,
        empirical_std_f=math.sqrt(var_f),
        frac_std_lambda=frac,
        nonconverged=nonconv,
        flagged=nonconv > MAX_NONCONVERGED * trials,
        nuisance_crlb_var_f=_nuisance_bound_or_nan(params),
    )


@dataclass(frozen=True)
class ScalingReport:
    Ms: tuple
    fixed: str
    per_M_results: dict
    slope: float | None
    bound_slope: float | None
    crlb_slope: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def _loglog_slope(Ms, values) -> float | None:
    if len(Ms) < 2:
        return None
    slope, _ = np.polyfit(np.log(np.asarray(Ms, float)), np.log(np.asarray(values, float)), 1)
    return float(slope)


def scaling_sweep(base: InterferogramParams, Ms, trials: int, master_seed: int, *,
                  fixed: str = "f", known_nuisance: bool = True, workers: int = 1) -> ScalingReport:
    """Monte Carlo per M and log-log slopes of the fractional wavelength std.

    ``fixed="f"`` keeps the base frequency (so ``K_M`` grows with M);
    ``fixed="k_m"`` uses ``f = base.f / M`` so the fringe count stays put.
    ``slope`` is empirical; ``bound_slope`` follows the printed
    fractional-uncertainty formula and ``crlb_slope`` follows ``sqrt(CRLB)/f``.
    """
    Ms = tuple(int(M) for M in Ms)
    if not Ms or any(M < 1 for M in Ms):
        raise ValueError("Ms must be a nonempty list of positive integers")
    if fixed not in ("f", "k_m"):
        raise ValueError("fixed must be 'f' or 'k_m'")
    rows, emp, bound, crlb_frac = {}, [], [], []
    for M in Ms:
        f = base.f if fixed == "f" else base.f / M
        params = base.replace(M=M, f=f)
        rep = monte_carlo(params, trials, trial_seed(master_seed, 1_000_000 + M),
                          known_nuisance=known_nuisance, workers=workers)
        row = dict(rep.per_M_results[M])
        row["eq8_frac_std"] = fractional_wavelength_uncertainty(params)
        row["crlb_frac_std"] = fractional_std_from_crlb(params)
        row["nonconverged"] = rep.nonconverged
        rows[M] = row
        emp.append(rep.frac_std_lambda)
        bound.append(row["eq8_frac_std"])
        crlb_frac.append(row["crlb_frac_std"])
    return ScalingReport(Ms, fixed, rows, _loglog_slope(Ms, emp),
                         _loglog_slope(Ms, bound), _loglog_slope(Ms, crlb_frac))
