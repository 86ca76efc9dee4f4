"""Independent numerical checks of the closed-form scattering results.

* contour-integral identities by direct quadrature with an analytic tail;
* a dense Nyström solve of the single-site two-photon integral equation,
  which never touches the closed-form kernel;
* algebraic reduction identities between the closed forms at random points.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels as _k
from .kernels import OnShellPoint
from .params import FrequencyGrid, SiteParams, gamma_fn
from .wavepacket import JointAmplitude, PulseShape

RESIDUAL_TOL = 1e-8


class TailOrder(str, enum.Enum):
    NONE = "none"
    LORENTZIAN = "lorentzian"


@dataclass(frozen=True)
class QuadratureSpec:
    """Trapezoid on [−half_width, half_width] (units of γ) with optional analytic tails.

    ``LORENTZIAN`` adds ∫_{|p|>W} of the integrand's large-|p| expansion,
    whose leading term is the Lorentzian-like power tail.
    """

    half_width: float = 200.0
    points: int = 20001
    tail_order: TailOrder = TailOrder.LORENTZIAN

    def __post_init__(self):
        object.__setattr__(self, "tail_order", TailOrder(self.tail_order))
        if self.points < 101 or self.points % 2 == 0:
            raise ValueError(f"points must be odd and >= 101, got {self.points}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be > 0, got {self.half_width}")


def _inverse_series(factors, order: int) -> np.ndarray:
    """Coefficients c_m of Π_f 1/(α_f p + β_f) = Σ_m c_m p^(−m), m < len(factors) + order.

    Built by multiplying the geometric series of each factor in u = 1/p.
    """
    n = len(factors)
    size = n + order
    acc = np.zeros(size, dtype=complex)
    acc[0] = 1.0
    for alpha, beta in factors:
        r = -beta / alpha
        term = np.zeros(size, dtype=complex)
        term[1:] = [r**k / alpha for k in range(size - 1)]  # u/α · Σ r^k u^k
        acc = np.convolve(acc, term)[:size]
    return acc


def _tail(factors, w: float, order: int = 8) -> complex:
    """∫_{|p|>W} Π 1/(α p + β) dp from the large-|p| expansion."""
    c = _inverse_series(factors, order)
    m = np.arange(c.size)
    keep = m >= 2
    m, c = m[keep], c[keep]
    return complex(np.sum(c * (1 + (-1.0) ** m) * w ** (1.0 - m) / (m - 1)))


def _trapezoid(f, w: float, points: int):
    p = np.linspace(-w, w, points)
    y = f(p)
    h = p[1] - p[0]
    return h * (np.sum(y) - 0.5 * (y[0] + y[-1])), h * (np.sum(np.abs(y)) - 0.5 * (abs(y[0]) + abs(y[-1])))


# Γ(x) = −i x + (γ/2 + iΔ);  Γ̄(x) = i x + (γ/2 − iΔ);  Γ(c − x) = i x + (γ/2 + i(Δ − c))
def _g(site):
    return (-1j, site.gamma / 2 + 1j * site.delta)


def _gbar(site):
    return (1j, site.gamma / 2 - 1j * site.delta)


def _g_shift(site, c):
    return (1j, site.gamma / 2 + 1j * (site.delta - c))


def _integrate(factors, q: QuadratureSpec):
    def f(p):
        out = np.ones_like(p, dtype=complex)
        for a, b in factors:
            out = out / (a * p + b)
        return out

    val, absval = _trapezoid(f, q.half_width, q.points)
    if q.tail_order is TailOrder.LORENTZIAN:
        val += _tail(factors, q.half_width)
    return complex(val), float(absval)


def residue_closed_form(omega_b: float, site: SiteParams) -> complex:
    return 2 * np.pi / (site.gamma * (site.gamma + 2j * site.delta - 1j * omega_b))


def residue_integral_check(omega_b: float, site: SiteParams, q: QuadratureSpec = QuadratureSpec()) -> dict:
    """∫dp 1/(Γ(ω_b − p)|Γ(p)|²) against 2π/(γ(γ + 2iΔ − iω_b))."""
    factors = [_g_shift(site, omega_b), _g(site), _gbar(site)]
    numeric, _ = _integrate(factors, q)
    closed = residue_closed_form(omega_b, site)
    return {"numeric": numeric, "closed": closed, "rel_err": abs(numeric - closed) / abs(closed)}


def causality_integral_check(omega_b: float, s1: SiteParams, s2: SiteParams,
                             q: QuadratureSpec = QuadratureSpec(), conjugate: bool = False) -> dict:
    """∫dp 1/(Γ₁(ω_b−p)Γ₂(ω_b−p)Γ̄₁(p)Γ̄₂(p)), which vanishes: every pole is in Im p > 0.

    ``conjugate=True`` swaps Γ̄ → Γ, putting two poles below the axis, as a
    contrast case that must not vanish.  ``bound`` is ∫|integrand| over the
    window, used to normalise.
    """
    lower = (_g(s1), _g(s2)) if conjugate else (_gbar(s1), _gbar(s2))
    factors = [_g_shift(s1, omega_b), _g_shift(s2, omega_b), *lower]
    numeric, bound = _integrate(factors, q)
    return {"numeric": numeric, "bound": bound, "normalized": abs(numeric) / bound}


# ---------------------------------------------------------------- Fredholm


class ConditioningWarning(UserWarning):
    """Nyström linear solve left a residual above tolerance."""


@dataclass(frozen=True)
class FredholmResult:
    jsa: JointAmplitude
    max_residual: float
    nodes: int


def _tan_nodes(center: float, scale: float, n: int):
    """Nodes/weights for ∫_ℝ dp via p = center + scale·tan θ (periodic midpoint rule in θ)."""
    theta = -np.pi / 2 + (np.arange(n) + 0.5) * np.pi / n
    p = center + scale * np.tan(theta)
    w = (np.pi / n) * scale / np.cos(theta) ** 2
    return p, w


def fredholm_solve(pulse_a: PulseShape, pulse_b: PulseShape, site: SiteParams, grid: FrequencyGrid,
                   nodes: int = 384, scale: float | None = None, chunk: int = 48,
                   residual_tol: float = RESIDUAL_TOL) -> FredholmResult:
    """Single-site two-photon scattering from the integral equation.

    With F(ω_b, ω_a) the Fourier-domain matrix element of B₋ smeared by ψ_in,

        Γ(ω_b)F(ω_b, ω_a) = −(iχγ/π)(1/Γ̄(ω_a)) ∫dp F(E−p, p)/Γ(p) − √γ ψ_in(ω_a, ω_b),

    each total energy E = ω_a + ω_b gives an independent equation for
    u(q) = F(E−q, q).  It is discretised on tan-mapped nodes over the whole
    line and solved densely; grid values follow from the Nyström
    interpolant.  Finally ψ_out = S₁(ω_a)(ψ_in + √γ F).
    """
    if site.chi_is_infinite:
        raise ValueError("the integral-equation oracle needs finite chi")
    m = grid.count
    w_grid = grid.points
    scale = scale or site.gamma
    g, chi = site.gamma, site.chi
    n_e = 2 * m - 1
    energies = 2 * grid.center + (np.arange(n_e) - (m - 1)) * grid.spacing
    big_i = np.empty(n_e, dtype=complex)
    worst = 0.0
    for lo in range(0, n_e, chunk):
        e = energies[lo : lo + chunk]
        centers = (e + pulse_a.center - pulse_b.center) / 2
        cols = []
        for c in centers:
            cols.append(_tan_nodes(c, scale, nodes))
        q = np.array([c[0] for c in cols])
        wq = np.array([c[1] for c in cols])
        gq = gamma_fn(q, site)
        ge = gamma_fn(e[:, None] - q, site)
        coef = -(1j * chi * g / np.pi) / (ge * np.conj(gq))
        src = -np.sqrt(g) * pulse_a.evaluate(q) * pulse_b.evaluate(e[:, None] - q) / ge
        mat = np.eye(nodes)[None] - coef[:, :, None] * (wq / gq)[:, None, :]
        u = np.linalg.solve(mat, src[..., None])[..., 0]
        res = np.abs(np.einsum("bij,bj->bi", mat, u) - src).max(axis=1)
        scale_src = np.maximum(np.abs(src).max(axis=1), 1e-300)
        worst = max(worst, float((res / scale_src).max()))
        big_i[lo : lo + chunk] = np.sum(wq * u / gq, axis=1)
    if worst > residual_tol:
        warnings.warn(f"Nyström residual {worst:.2e} exceeds {residual_tol:.0e}", ConditioningWarning, stacklevel=2)
    ia, ib = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    wa, wb = w_grid[ia], w_grid[ib]
    e_idx = ia + ib
    e = energies[e_idx]
    ga, gb_ = gamma_fn(wa, site), gamma_fn(e - wa, site)
    psi_in = pulse_a.evaluate(wa) * pulse_b.evaluate(wb)
    f_val = -(1j * chi * g / np.pi) / (gb_ * np.conj(ga)) * big_i[e_idx] - np.sqrt(g) * psi_in / gb_
    s1 = -np.conj(ga) / ga
    out = s1 * (psi_in + np.sqrt(g) * f_val)
    return FredholmResult(JointAmplitude(grid, grid, out), worst, nodes)


def fredholm_scatter_single_site(pulse_a: PulseShape, pulse_b: PulseShape, site: SiteParams,
                                 grid: FrequencyGrid, **kwargs) -> JointAmplitude:
    return fredholm_solve(pulse_a, pulse_b, site, grid, **kwargs).jsa


# ---------------------------------------------------------------- reductions


@dataclass
class IdentityResult:
    name: str
    passed: bool
    max_error: float
    tolerance: float
    worst_point: dict = field(default_factory=dict)


@dataclass
class ReductionReport:
    seed: int
    results: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def table(self) -> str:
        width = max(len(r.name) for r in self.results)
        lines = [f"{'identity':<{width}}  {'status':<6}  {'max_err':>10}  {'tol':>8}"]
        for r in self.results:
            lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.max_error:10.3e}  {r.tolerance:8.0e}")
            if not r.passed and r.worst_point:
                lines.append(f"{'':<{width}}  worst at {r.worst_point}")
        return "\n".join(lines)


_KERNEL_NAMES = (
    "kernel_single_site", "kernel_vatom", "kernel_two_site_co", "kernel_two_site_counter",
    "kernel_nsite_counter", "geometric_phase_sum", "single_photon_phase",
)


def _random_sites(rng, n, chi_range=(0.0, 5.0)):
    return [SiteParams(rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0), rng.uniform(*chi_range)) for _ in range(n)]


def _rel(a, b):
    return np.abs(a - b) / np.maximum(np.abs(b), 1e-300)


def reduction_suite(seed: int = 0, points: int = 1000, exact_tol: float = 1e-10,
                    limit_tol: float = 1e-3, kernels: dict | None = None) -> ReductionReport:
    """Check the algebraic identities linking the closed forms at random on-shell points.

    ``kernels`` overrides entries of the kernel namespace by name, which is
    how the mutation test injects a corrupted formula.
    """
    ns = {name: getattr(_k, name) for name in _KERNEL_NAMES}
    ns.update(kernels or {})
    rng = np.random.default_rng(seed)
    results = []

    def record(name, err, tol, pts, params):
        err = np.asarray(err, dtype=float)
        bad = ~np.isfinite(err)
        err = np.where(bad, np.inf, err)
        k = int(np.argmax(err))
        worst = {
            "omega_a": float(pts.omega_a.flat[k]), "nu_a": float(pts.nu_a.flat[k]),
            "nu_b": float(pts.nu_b.flat[k]), **params,
        }
        m = float(err.max())
        results.append(IdentityResult(name, bool(m <= tol), m, tol, worst if m > tol else {}))

    def shell(scale=3.0):
        return OnShellPoint(*rng.uniform(-scale, scale, size=(3, points)))

    s, t = _random_sites(rng, 2)
    p = shell()
    single = ns["kernel_single_site"](p, s)
    record("nsite(N=1) == single_site", _rel(ns["kernel_nsite_counter"](p, s, 1), single), exact_tol,
           p, {"site": s.to_dict()})

    record("nsite(N=2) == two_site_counter(s, s)",
           _rel(ns["kernel_nsite_counter"](p, s, 2), ns["kernel_two_site_counter"](p, s, s)), exact_tol,
           p, {"site": s.to_dict()})

    s0 = SiteParams(t.gamma, t.delta, 0.0)
    g2a, g2b = gamma_fn(p.omega_a, s0), gamma_fn(p.omega_b, s0)
    g2nb = gamma_fn(p.nu_b, s0)
    dress_co = np.conj(g2a) * np.conj(g2b) / (g2a * g2b)
    record("two_site_co(chi2=0) == single(s1) x site-2 phases",
           _rel(ns["kernel_two_site_co"](p, s, s0), single * dress_co), exact_tol, p,
           {"s1": s.to_dict(), "s2": s0.to_dict()})

    s1z = SiteParams(s.gamma, s.delta, 0.0)
    t2 = t
    tsingle = ns["kernel_single_site"](p, t2)
    h1na, h1nb = gamma_fn(p.nu_a, s1z), gamma_fn(p.nu_b, s1z)
    record("two_site_co(chi1=0) == single(s2) x site-1 phases",
           _rel(ns["kernel_two_site_co"](p, s1z, t2), tsingle * np.conj(h1na) * np.conj(h1nb) / (h1na * h1nb)),
           exact_tol, p, {"s1": s1z.to_dict(), "s2": t2.to_dict()})

    record("two_site_counter(chi2=0) == single(s1) x site-2 phases",
           _rel(ns["kernel_two_site_counter"](p, s, s0),
                single * np.conj(g2a) * np.conj(g2nb) / (g2a * g2nb)), exact_tol, p,
           {"s1": s.to_dict(), "s2": s0.to_dict()})

    h1b = gamma_fn(p.omega_b, s1z)
    record("two_site_counter(chi1=0) == single(s2) x site-1 phases",
           _rel(ns["kernel_two_site_counter"](p, s1z, t2),
                tsingle * np.conj(h1na) * np.conj(h1b) / (h1na * h1b)), exact_tol, p,
           {"s1": s1z.to_dict(), "s2": t2.to_dict()})

    zero = SiteParams(s.gamma, s.delta, 0.0)
    both = np.abs(ns["kernel_two_site_co"](p, zero, s0)) + np.abs(ns["kernel_two_site_counter"](p, zero, s0))
    record("two-site kernels vanish at chi1=chi2=0", both, exact_tol, p, {})

    big = SiteParams(s.gamma, s.delta, 1e4 * s.gamma)
    record("single_site(chi=1e4 gamma) -> vatom",
           _rel(ns["kernel_single_site"](p, big), ns["kernel_vatom"](p, big)), limit_tol, p,
           {"site": big.to_dict()})

    ga, gb = gamma_fn(p.omega_a, s), gamma_fn(p.omega_b, s)
    gna, gnb = gamma_fn(p.nu_a, s), gamma_fn(p.nu_b, s)
    pre_out = 1 / (1 + 2j * s.chi / (ga + gb))
    pre_in = 1 / (1 + 2j * s.chi / (gna + gnb))
    record("on-shell prefactor identity", _rel(pre_in, pre_out), exact_tol, p, {"site": s.to_dict()})

    n = int(rng.integers(3, 40))
    record(f"nsite exchange symmetry (N={n})",
           _rel(ns["kernel_nsite_counter"](p.swapped(), s, n), ns["kernel_nsite_counter"](p, s, n)),
           exact_tol, p, {"site": s.to_dict(), "n": n})

    phi = rng.uniform(-np.pi, np.pi, size=(2, points))
    dphi = phi[0] - phi[1]
    gs = ns["geometric_phase_sum"](np.exp(2j * phi[0]), np.exp(2j * phi[1]), n)
    sinc = np.abs(np.sin(n * dphi) / np.sin(dphi))
    err = np.abs(np.abs(gs) - sinc) / np.maximum(sinc, 1.0)
    record(f"|geometric sum| == |sin(N x)/sin x| (N={n})", err, exact_tol, p, {"n": n})

    return ReductionReport(seed, results)
