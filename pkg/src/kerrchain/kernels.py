"""Closed-form one- and two-photon scattering amplitudes.

Two-photon S-matrices split into a disconnected part S₁(ω_a)S₁(ω_b)δδ and a
connected part K(ω_a, ω_b; ν_a, ν_b)·δ(ω_a + ω_b − ν_a − ν_b).  Everything
here returns K without the energy delta; callers pass an :class:`OnShellPoint`
so the delta is built into the argument.

All kernels broadcast over numpy arrays.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .params import ChainSpec, Propagation, SiteParams, gamma_fn

DIRECT_SUM_MAX = 4096
_SERIES_THRESHOLD = 1e-8


@dataclass(frozen=True)
class OnShellPoint:
    """(ω_a, ν_a, ν_b) with ω_b := ν_a + ν_b − ω_a.  Fields may be arrays."""

    omega_a: np.ndarray
    nu_a: np.ndarray
    nu_b: np.ndarray

    def __post_init__(self):
        for name in ("omega_a", "nu_a", "nu_b"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def omega_b(self) -> np.ndarray:
        return self.nu_a + self.nu_b - self.omega_a

    @classmethod
    def from_output(cls, omega_a, omega_b, nu_a) -> "OnShellPoint":
        """Shell point with ν_b = ω_a + ω_b − ν_a.

        ``omega_b`` is recomputed from the other three, so it may differ from
        the argument by one rounding error.
        """
        omega_a = np.asarray(omega_a, dtype=float)
        nu_a = np.asarray(nu_a, dtype=float)
        return cls(omega_a, nu_a, omega_a + np.asarray(omega_b, dtype=float) - nu_a)

    def swapped(self) -> "OnShellPoint":
        """Exchange (ω_a, ν_a) ↔ (ω_b, ν_b)."""
        return OnShellPoint(self.omega_b, self.nu_b, self.nu_a)


def single_photon_phase(omega, site: SiteParams):
    """−Γ̄(ω)/Γ(ω) for one site."""
    g = gamma_fn(omega, site)
    return -np.conj(g) / g


def _dressing(site: SiteParams, u, v):
    """Product of the two single-photon factors Γ̄(u)Γ̄(v)/(Γ(u)Γ(v)).

    The two minus signs of the full single-photon phase cancel.
    """
    gu, gv = gamma_fn(u, site), gamma_fn(v, site)
    return np.conj(gu) * np.conj(gv) / (gu * gv)


def single_photon_amplitude(omega, chain: ChainSpec):
    """Π_i −Γ̄_i(ω)/Γ_i(ω) over the chain."""
    out = np.ones(np.shape(omega), dtype=complex)
    for site in chain.sites:
        out = out * single_photon_phase(omega, site)
    return out if np.ndim(omega) else complex(out)


def _kerr_factor(chi: float, gsum):
    """iχ·(1 + 2iχ/gsum)⁻¹, with the χ→∞ limit gsum/2."""
    if math.isinf(chi):
        return gsum / 2
    return 1j * chi * gsum / (gsum + 2j * chi)


def _prefactor(site: SiteParams, gsum, g_out_a, g_out_b, g_in_a, g_in_b):
    return -(site.gamma**2 / np.pi) * _kerr_factor(site.chi, gsum) / (g_in_b * g_in_a * g_out_b * g_out_a)


def _gammas(p: OnShellPoint, site: SiteParams):
    return (
        gamma_fn(p.omega_a, site),
        gamma_fn(p.omega_b, site),
        gamma_fn(p.nu_a, site),
        gamma_fn(p.nu_b, site),
    )


def kernel_single_site(p: OnShellPoint, site: SiteParams):
    ga, gb, gna, gnb = _gammas(p, site)
    return _prefactor(site, ga + gb, ga, gb, gna, gnb)


def kernel_vatom(p: OnShellPoint, site: SiteParams):
    """χ→∞ limit: the three-level V-atom connected part."""
    ga, gb, gna, gnb = _gammas(p, site)
    return -(site.gamma**2 / (2 * np.pi)) * (1 / ga + 1 / gb) / (gnb * gna)


def kernel_two_site_co(p: OnShellPoint, s1: SiteParams, s2: SiteParams):
    """Co-propagating two-site kernel: site-1, site-2 and double-interaction channels."""
    wa, wb, na, nb = p.omega_a, p.omega_b, p.nu_a, p.nu_b
    g1a, g1b, g1na, g1nb = _gammas(p, s1)
    g2a, g2b, g2na, g2nb = _gammas(p, s2)
    k1 = _kerr_factor(s1.chi, g1a + g1b)
    k2 = _kerr_factor(s2.chi, g2a + g2b)
    only_1 = _dressing(s2, wa, wb) * k1 * s1.gamma**2 / (g1nb * g1na * g1b * g1a)
    only_2 = _dressing(s1, na, nb) * k2 * s2.gamma**2 / (g2nb * g2na * g2b * g2a)
    both = (
        -4 * k1 * k2 * s1.gamma**2 * s2.gamma**2 / (g1nb * g1na * g2b * g2a)
        / ((g1a + g1b) * (g1a + g2b) * (g2a + g2b))
    )
    return -(only_1 + only_2 + both) / np.pi


def kernel_two_site_counter(p: OnShellPoint, s1: SiteParams, s2: SiteParams):
    """Counter-propagating two-site kernel; the double-interaction channel is absent."""
    wa, wb, na, nb = p.omega_a, p.omega_b, p.nu_a, p.nu_b
    g1a, g1b, g1na, g1nb = _gammas(p, s1)
    g2a, g2b, g2na, g2nb = _gammas(p, s2)
    only_1 = _dressing(s2, wa, nb) * _kerr_factor(s1.chi, g1a + g1b) * s1.gamma**2 / (g1nb * g1na * g1b * g1a)
    only_2 = _dressing(s1, na, wb) * _kerr_factor(s2.chi, g2a + g2b) * s2.gamma**2 / (g2nb * g2na * g2b * g2a)
    return -(only_1 + only_2) / np.pi


def geometric_phase_sum(x, y, n: int):
    """Σ_{j=1..n} x^(n−j) y^(j−1).

    Direct summation up to ``DIRECT_SUM_MAX`` terms; beyond that the closed
    form (xⁿ − yⁿ)/(x − y), switching to a binomial series in (y − x) where
    the two nearly coincide.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    scalar = x.ndim == 0 and y.ndim == 0
    x, y = np.broadcast_arrays(x, y)
    if n <= DIRECT_SUM_MAX:
        # Horner-style: S_{k+1} = x·S_k + y^k
        total = np.ones(x.shape, dtype=complex)
        ypow = np.ones(x.shape, dtype=complex)
        for _ in range(n - 1):
            ypow = ypow * y
            total = total * x + ypow
    else:
        d = y - x
        near = np.abs(d) < _SERIES_THRESHOLD
        with np.errstate(divide="ignore", invalid="ignore"):
            total = (x**n - y**n) / (x - y)
        if np.any(near):
            xn, dn = x[near], d[near]
            # Σ_{k≥0} C(n, k+1) x^(n−1−k) d^k, truncated at d³
            series = np.zeros(xn.shape, dtype=complex)
            for k in range(4):
                series = series + math.comb(n, k + 1) * xn ** (n - 1 - k) * dn**k
            total = np.array(total)
            total[near] = series
    return complex(total) if scalar else total


def kernel_nsite_counter(p: OnShellPoint, site: SiteParams, n: int):
    """Uniform N-site counter-propagating kernel: one channel per interaction site."""
    ga, gb, gna, gnb = _gammas(p, site)
    x = np.conj(ga) * np.conj(gnb) / (ga * gnb)
    y = np.conj(gb) * np.conj(gna) / (gb * gna)
    return _prefactor(site, gna + gnb, ga, gb, gna, gnb) * geometric_phase_sum(x, y, n)


def kernel_infinite_diagonal(omega_a, omega_b, site: SiteParams):
    """Pointwise factor multiplying S₁(ω_a)S₁(ω_b) in the N→∞ counter-propagating limit."""
    ga, gb = gamma_fn(omega_a, site), gamma_fn(omega_b, site)
    return 1 - (site.gamma**3 / 4) * _kerr_factor(site.chi, ga + gb) / np.abs(ga * gb) ** 2


def onres_phase(chi: float, gamma: float) -> complex:
    """(γ − 2iχ)/(γ + 2iχ) = exp(−2i·atan(2χ/γ))."""
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    if math.isinf(chi):
        return -1 + 0j
    return (gamma - 2j * chi) / (gamma + 2j * chi)


class KernelVariant(str, enum.Enum):
    SINGLE_SITE = "single_site"
    VATOM_LIMIT = "vatom_limit"
    TWO_SITE_CO = "two_site_co"
    TWO_SITE_COUNTER = "two_site_counter"
    NSITE_COUNTER = "nsite_counter"
    INFINITE_DIAGONAL = "infinite_diagonal"


@dataclass(frozen=True)
class KernelSpec:
    variant: KernelVariant
    chain: ChainSpec

    def __post_init__(self):
        object.__setattr__(self, "variant", KernelVariant(self.variant))
        v, c = self.variant, self.chain
        if v in (KernelVariant.SINGLE_SITE, KernelVariant.VATOM_LIMIT) and c.n_sites != 1:
            raise ValueError(f"{v.value} needs exactly one site, chain has {c.n_sites}")
        if v is KernelVariant.TWO_SITE_CO:
            if c.n_sites != 2 or c.propagation is not Propagation.CO:
                raise ValueError("two_site_co needs a 2-site co-propagating chain")
        if v is KernelVariant.TWO_SITE_COUNTER:
            if c.n_sites != 2 or c.propagation is not Propagation.COUNTER:
                raise ValueError("two_site_counter needs a 2-site counter-propagating chain")
        if v is KernelVariant.NSITE_COUNTER:
            if not c.uniform_sites or c.propagation is not Propagation.COUNTER:
                raise ValueError("nsite_counter needs a uniform counter-propagating chain")
        if v is KernelVariant.INFINITE_DIAGONAL and not c.uniform_sites:
            raise ValueError("infinite_diagonal needs a uniform chain")

    @classmethod
    def for_chain(cls, chain: ChainSpec) -> "KernelSpec":
        """Pick the closed form that covers ``chain`` (finite N)."""
        n = chain.n_sites
        if n == 1:
            return cls(KernelVariant.SINGLE_SITE, chain)
        if n == 2:
            if chain.propagation is Propagation.CO:
                return cls(KernelVariant.TWO_SITE_CO, chain)
            return cls(KernelVariant.TWO_SITE_COUNTER, chain)
        if chain.propagation is Propagation.CO:
            raise ValueError("no closed form for co-propagating chains with more than 2 sites")
        return cls(KernelVariant.NSITE_COUNTER, chain)

    @property
    def diagonal(self) -> bool:
        return self.variant is KernelVariant.INFINITE_DIAGONAL

    def __call__(self, p: OnShellPoint):
        v, sites = self.variant, self.chain.sites
        if v is KernelVariant.SINGLE_SITE:
            return kernel_single_site(p, sites[0])
        if v is KernelVariant.VATOM_LIMIT:
            return kernel_vatom(p, sites[0])
        if v is KernelVariant.TWO_SITE_CO:
            return kernel_two_site_co(p, sites[0], sites[1])
        if v is KernelVariant.TWO_SITE_COUNTER:
            return kernel_two_site_counter(p, sites[0], sites[1])
        if v is KernelVariant.NSITE_COUNTER:
            return kernel_nsite_counter(p, sites[0], self.chain.n_sites)
        raise ValueError("infinite_diagonal has no connected kernel; use diagonal_factor")

    def diagonal_factor(self, omega_a, omega_b):
        if not self.diagonal:
            raise ValueError(f"{self.variant.value} is not diagonal")
        return kernel_infinite_diagonal(omega_a, omega_b, self.chain.sites[0])
