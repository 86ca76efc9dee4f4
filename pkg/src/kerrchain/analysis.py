"""Entanglement and gate-quality measures for scattered two-photon states."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .kernels import KernelSpec, KernelVariant, single_photon_amplitude
from .params import ChainSpec, FrequencyGrid, Propagation, SiteParams, pulse_window_grid
from .wavepacket import JointAmplitude, PulseShape, make_separable_jsa, scatter_two_photon

SVD_RTOL = 1e-12
PHASE_THRESHOLD = 1e-3


@dataclass(frozen=True)
class SchmidtReport:
    singular_values: np.ndarray
    entropy: float
    schmidt_number: float


def schmidt_decompose(jsa: JointAmplitude, rtol: float = SVD_RTOL) -> SchmidtReport:
    """Singular values of ψ·sqrt(Δω_a Δω_b); Σλ² equals ‖ψ‖².

    Entropy and Schmidt number use p_k = λ_k²/Σλ², ignoring λ below
    ``rtol``·λ_max.
    """
    lam = np.linalg.svd(jsa.values * math.sqrt(jsa.cell), compute_uv=False)
    if lam.size == 0 or lam[0] == 0:
        return SchmidtReport(lam, 0.0, 1.0)
    kept = lam[lam > rtol * lam[0]]
    p = kept**2 / np.sum(kept**2)
    entropy = float(-np.sum(p * np.log2(p)))
    return SchmidtReport(lam, max(entropy, 0.0), float(1.0 / np.sum(p**2)))


def _same_grids(j1: JointAmplitude, j2: JointAmplitude):
    if j1.grid_a != j2.grid_a or j1.grid_b != j2.grid_b:
        raise ValueError("joint amplitudes live on different grids")


def overlap(jsa1: JointAmplitude, jsa2: JointAmplitude) -> complex:
    """⟨ψ₁|ψ₂⟩ with cell weights."""
    _same_grids(jsa1, jsa2)
    return complex(np.vdot(jsa1.values, jsa2.values) * jsa1.cell)


def fidelity_from_overlap(o: complex) -> float:
    """|3 − O|²/16: 1 for O = −1, 1/4 for O = 1."""
    return abs(3 - o) ** 2 / 16


def linear_reference(jsa_in: JointAmplitude, chain: ChainSpec) -> JointAmplitude:
    """(S₁⊗S₁)ψ_in: what the pair would become with no interaction."""
    s_a = single_photon_amplitude(jsa_in.grid_a.points, chain)
    s_b = single_photon_amplitude(jsa_in.grid_b.points, chain)
    return jsa_in.with_values(np.outer(s_a, s_b) * jsa_in.values)


def gate_overlap(jsa_out: JointAmplitude, jsa_in: JointAmplitude, chain: ChainSpec) -> complex:
    return overlap(linear_reference(jsa_in, chain), jsa_out)


def cphase_fidelity(jsa_out: JointAmplitude, jsa_in: JointAmplitude, chain: ChainSpec) -> float:
    return fidelity_from_overlap(gate_overlap(jsa_out, jsa_in, chain))


def conditional_phase_map(jsa_out: JointAmplitude, jsa_ref: JointAmplitude,
                          threshold: float = PHASE_THRESHOLD) -> np.ndarray:
    """arg(ψ_out/ψ_ref) where |ψ_ref| > threshold·max|ψ_ref|, NaN elsewhere."""
    _same_grids(jsa_out, jsa_ref)
    ref = jsa_ref.values
    mask = np.abs(ref) > threshold * np.abs(ref).max()
    out = np.full(ref.shape, np.nan)
    out[mask] = np.angle(jsa_out.values[mask] * np.conj(ref[mask]))
    return out


@dataclass(frozen=True)
class SweepRow:
    n_sites: int
    sigma_over_gamma: float
    chi_over_gamma: float
    fidelity: float
    overlap: complex
    schmidt_number: float
    entropy: float
    error: str = ""

    def as_dict(self) -> dict:
        d = asdict(self)
        d["overlap_re"], d["overlap_im"] = self.overlap.real, self.overlap.imag
        del d["overlap"]
        return d


SWEEP_COLUMNS = (
    "n_sites", "sigma_over_gamma", "chi_over_gamma", "fidelity",
    "overlap_re", "overlap_im", "schmidt_number", "entropy", "error",
)


def scatter_gaussian_pair(chain: ChainSpec, sigma: float, grid: FrequencyGrid | None = None,
                          kspec: KernelSpec | None = None, threads: int = 1, backend: str | None = None):
    """Scatter two identical Gaussians centred on the first site's Δ; returns (ψ_in, ψ_out)."""
    site = chain.sites[0]
    grid = grid or pulse_window_grid(site.delta, sigma)
    pulse = PulseShape.gaussian(site.delta, sigma)
    jin = make_separable_jsa(pulse, pulse, grid, grid)
    kspec = kspec or KernelSpec.for_chain(chain)
    return jin, scatter_two_photon(jin, kspec, threads=threads, backend=backend)


def evaluate_point(chain: ChainSpec, sigma: float, grid: FrequencyGrid | None = None,
                   kspec: KernelSpec | None = None, threads: int = 1, backend: str | None = None) -> SweepRow:
    jin, jout = scatter_gaussian_pair(chain, sigma, grid, kspec, threads, backend)
    o = gate_overlap(jout, jin, chain)
    rep = schmidt_decompose(jout)
    g = chain.sites[0].gamma
    return SweepRow(chain.n_sites, sigma / g, chain.sites[0].chi / g, fidelity_from_overlap(o), o,
                    rep.schmidt_number, rep.entropy)


def fidelity_sweep(n_values, sigma_values, chi_values, template: SiteParams | None = None,
                   propagation: Propagation | str = Propagation.COUNTER, grid_count: int = 129,
                   infinite: bool = False, threads: int = 1, backend: str | None = None) -> list[SweepRow]:
    """One row per (N, σ, χ) in that nesting order.

    ``template`` supplies γ and Δ; σ and χ are in units of its γ.  Each row
    uses a grid covering the pulse (±8σ, ``grid_count`` points).  A row that
    raises is recorded with NaNs and the message, and the sweep carries on.
    """
    n_values, sigma_values, chi_values = list(n_values), list(sigma_values), list(chi_values)
    if not (n_values and sigma_values and chi_values):
        raise ValueError("sweep ranges must be nonempty")
    template = template or SiteParams()
    g = template.gamma
    rows = []
    for n, sig, chi in itertools.product(n_values, sigma_values, chi_values):
        try:
            site = SiteParams(g, template.delta, chi * g)
            chain = ChainSpec.uniform(site, int(n), propagation)
            kspec = KernelSpec(KernelVariant.INFINITE_DIAGONAL, chain) if infinite else None
            grid = pulse_window_grid(site.delta, sig * g, grid_count)
            rows.append(evaluate_point(chain, sig * g, grid, kspec, threads, backend))
        except Exception as exc:  # recorded, sweep continues
            nan = float("nan")
            rows.append(SweepRow(int(n), float(sig), float(chi), nan, complex(nan, nan), nan, nan,
                                 f"{type(exc).__name__}: {exc}"))
    return rows
