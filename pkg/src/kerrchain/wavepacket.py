"""Wave packets and the action of the S-matrix on them.

The two-photon output is

    ψ_out(ω_a, ω_b) = S₁(ω_a)S₁(ω_b)ψ_in(ω_a, ω_b)
                      + ∫dν K(ω_a, ω_b; ν, E−ν) ψ_in(ν, E−ν),    E = ω_a + ω_b,

with the integral done by the trapezoid rule over the grid_a nodes.  The
heavy part lives in a compiled core (see ``_backend``); this module prepares
the inputs.
"""
from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import _backend
from .kernels import KernelSpec, single_photon_amplitude
from .params import ChainSpec, FrequencyGrid

MASS_TOLERANCE = 1e-4
NODE_CUTOFF = 1e-14


class QuadratureResolutionWarning(UserWarning):
    """Grid spacing too coarse to resolve the Lorentzian kernel structure."""


class PulseKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class PulseShape:
    """Single-photon spectral amplitude ξ(ν).

    Gaussian: ξ(ν) = (2πσ²)^(−1/4) exp(−(ν−center)²/(4σ²)), so |ξ|² has
    standard deviation σ.  Tabulated: samples on ``grid``, linearly
    interpolated and zero outside.
    """

    kind: PulseKind
    center: float = 0.0
    sigma: float = 1.0
    table: np.ndarray | None = field(default=None, compare=False)
    grid: FrequencyGrid | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PulseKind(self.kind))
        if self.kind is PulseKind.GAUSSIAN:
            if not (self.sigma > 0 and math.isfinite(self.sigma)):
                raise ValueError(f"sigma must be > 0, got {self.sigma!r}")
        else:
            if self.table is None or self.grid is None:
                raise ValueError("tabulated pulse needs table and grid")
            t = np.asarray(self.table, dtype=complex)
            if t.shape != (self.grid.count,):
                raise ValueError(f"table shape {t.shape} does not match grid count {self.grid.count}")
            t.setflags(write=False)
            object.__setattr__(self, "table", t)

    @classmethod
    def gaussian(cls, center: float, sigma: float) -> "PulseShape":
        return cls(PulseKind.GAUSSIAN, float(center), float(sigma))

    @classmethod
    def tabulated(cls, grid: FrequencyGrid, values) -> "PulseShape":
        return cls(PulseKind.TABULATED, grid.center, grid.spacing, np.asarray(values, dtype=complex), grid)

    def evaluate(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if self.kind is PulseKind.GAUSSIAN:
            s = self.sigma
            return (2 * np.pi * s * s) ** -0.25 * np.exp(-((omega - self.center) ** 2) / (4 * s * s)) + 0j
        pts = self.grid.points
        re = np.interp(omega, pts, self.table.real, left=0.0, right=0.0)
        im = np.interp(omega, pts, self.table.imag, left=0.0, right=0.0)
        return re + 1j * im

    def norm(self) -> float:
        """∫|ξ|²: exact for Gaussian, cell-weighted sum for tabulated."""
        if self.kind is PulseKind.GAUSSIAN:
            return 1.0
        return float(np.sum(np.abs(self.table) ** 2) * self.grid.spacing)

    def mass_outside(self, grid: FrequencyGrid) -> float:
        """Fraction of ∫|ξ|² falling outside [grid.lo − h/2, grid.hi + h/2]."""
        if self.kind is PulseKind.GAUSSIAN:
            z = np.array([grid.lo - grid.spacing / 2, grid.hi + grid.spacing / 2]) - self.center
            z = z / (math.sqrt(2) * self.sigma)
            return float(0.5 * math.erfc(-z[0]) + 0.5 * math.erfc(z[1]))
        inside = self.evaluate(grid.points)
        total = self.norm()
        return max(0.0, 1.0 - float(np.sum(np.abs(inside) ** 2) * grid.spacing) / total) if total else 0.0

    def to_dict(self) -> dict:
        if self.kind is PulseKind.GAUSSIAN:
            return {"kind": "gaussian", "center": self.center, "sigma": self.sigma}
        return {"kind": "tabulated", "grid": self.grid.to_dict()}


@dataclass(frozen=True)
class JointAmplitude:
    grid_a: FrequencyGrid
    grid_b: FrequencyGrid
    values: np.ndarray = field(compare=False)
    analytic_input: tuple[PulseShape, PulseShape] | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid_a.count, self.grid_b.count):
            raise ValueError(f"values shape {v.shape} != ({self.grid_a.count}, {self.grid_b.count})")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def cell(self) -> float:
        return self.grid_a.spacing * self.grid_b.spacing

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.cell)

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def with_values(self, values, analytic_input=None) -> "JointAmplitude":
        return JointAmplitude(self.grid_a, self.grid_b, values, analytic_input)

    def transposed(self) -> "JointAmplitude":
        ai = None if self.analytic_input is None else self.analytic_input[::-1]
        return JointAmplitude(self.grid_b, self.grid_a, self.values.T, ai)

    def sampler(self):
        """Callable ψ(ω_a, ω_b) at arbitrary points.

        Closed form when the input is a known separable product, otherwise
        bilinear interpolation with zero extension.
        """
        if self.analytic_input is not None:
            pa, pb = self.analytic_input
            return lambda wa, wb: pa.evaluate(wa) * pb.evaluate(wb)
        interp = RegularGridInterpolator(
            (self.grid_a.points, self.grid_b.points), self.values,
            method="linear", bounds_error=False, fill_value=0.0,
        )

        def f(wa, wb):
            wa, wb = np.broadcast_arrays(np.asarray(wa, float), np.asarray(wb, float))
            return interp(np.stack([wa.ravel(), wb.ravel()], axis=-1)).reshape(wa.shape)

        return f

    def evaluate(self, wa, wb) -> np.ndarray:
        return self.sampler()(wa, wb)


def make_separable_jsa(pa: PulseShape, pb: PulseShape, ga: FrequencyGrid, gb: FrequencyGrid) -> JointAmplitude:
    for name, p, g in (("a", pa, ga), ("b", pb, gb)):
        lost = p.mass_outside(g)
        if lost > MASS_TOLERANCE:
            raise ValueError(f"pulse {name} has {lost:.3g} of its mass outside the grid (limit {MASS_TOLERANCE:g})")
    values = np.outer(pa.evaluate(ga.points), pb.evaluate(gb.points))
    return JointAmplitude(ga, gb, values, (pa, pb))


def scatter_single(pulse: PulseShape, grid: FrequencyGrid, chain: ChainSpec) -> PulseShape:
    w = grid.points
    return PulseShape.tabulated(grid, single_photon_amplitude(w, chain) * pulse.evaluate(w))


def _check_resolution(grid_a: FrequencyGrid, grid_b: FrequencyGrid, chain: ChainSpec):
    gmin = min(s.gamma for s in chain.sites)
    h = max(grid_a.spacing, grid_b.spacing)
    if h > gmin / 10:
        warnings.warn(
            f"grid spacing {h:.3g} exceeds gamma/10 = {gmin / 10:.3g}; the shell quadrature is under-resolved",
            QuadratureResolutionWarning, stacklevel=3,
        )


def _same_spacing(ga: FrequencyGrid, gb: FrequencyGrid) -> bool:
    return abs(ga.spacing - gb.spacing) <= 1e-12 * ga.spacing


def shell_lattice(jsa: JointAmplitude) -> np.ndarray:
    """ψ_in(ν_k, ·) on the b-lattice extended by count_a−1 points each side.

    With equal spacings every on-shell partner E − ν_k falls on this lattice:
    ω_a[i] + ω_b[j] − ν_k = b_ext[j + i − k + count_a − 1].
    """
    ga, gb = jsa.grid_a, jsa.grid_b
    ma, mb = ga.count, gb.count
    if jsa.analytic_input is not None:
        pa, pb = jsa.analytic_input
        b_ext = gb.center + (np.arange(mb + 2 * (ma - 1)) - (ma - 1) - (mb - 1) / 2) * gb.spacing
        return np.ascontiguousarray(np.outer(pa.evaluate(ga.points), pb.evaluate(b_ext)))
    out = np.zeros((ma, mb + 2 * (ma - 1)), dtype=complex)
    out[:, ma - 1 : ma - 1 + mb] = jsa.values
    return out


def trapezoid_weights(grid: FrequencyGrid) -> np.ndarray:
    w = np.full(grid.count, grid.spacing)
    w[0] = w[-1] = grid.spacing / 2
    return w


def active_nodes(jsa: JointAmplitude, cutoff: float = NODE_CUTOFF) -> np.ndarray:
    """ν nodes whose input row is not numerically empty."""
    rowmax = np.abs(jsa.values).max(axis=1)
    top = rowmax.max()
    if top == 0:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(rowmax > cutoff * top).astype(np.int64)


def connected_part(jsa: JointAmplitude, kspec: KernelSpec, threads: int = 1,
                   backend: str | None = None, cutoff: float = NODE_CUTOFF) -> np.ndarray:
    """∫dν K(ω_a, ω_b; ν, E−ν) ψ_in(ν, E−ν) on the output grid."""
    impl = _backend.get(backend)
    return impl.connected(jsa, kspec, threads=threads, cutoff=cutoff)


def scatter_two_photon(jsa: JointAmplitude, kspec: KernelSpec, threads: int = 1,
                       backend: str | None = None, cutoff: float = NODE_CUTOFF) -> JointAmplitude:
    chain = kspec.chain
    wa, wb = jsa.grid_a.points, jsa.grid_b.points
    s1 = np.outer(single_photon_amplitude(wa, chain), single_photon_amplitude(wb, chain))
    if kspec.diagonal:
        return jsa.with_values(s1 * kspec.diagonal_factor(wa[:, None], wb[None, :]) * jsa.values)
    _check_resolution(jsa.grid_a, jsa.grid_b, chain)
    return jsa.with_values(s1 * jsa.values + connected_part(jsa, kspec, threads, backend, cutoff))


def write_jsa(path, jsa: JointAmplitude, extra: dict | None = None) -> tuple[Path, Path]:
    """CSV (omega_a, omega_b, re, im) plus a JSON sidecar with grids and norm."""
    path = Path(path)
    wa, wb = np.meshgrid(jsa.grid_a.points, jsa.grid_b.points, indexing="ij")
    table = np.column_stack([wa.ravel(), wb.ravel(), jsa.values.real.ravel(), jsa.values.imag.ravel()])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header="omega_a,omega_b,re,im", comments="")
    side = path.with_suffix(".json")
    meta = {"grid_a": jsa.grid_a.to_dict(), "grid_b": jsa.grid_b.to_dict(), "norm": jsa.norm()}
    if extra:
        meta.update(extra)
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, side


def read_jsa(path) -> JointAmplitude:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    ga = FrequencyGrid.from_dict(meta["grid_a"])
    gb = FrequencyGrid.from_dict(meta["grid_b"])
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    values = (data[:, 2] + 1j * data[:, 3]).reshape(ga.count, gb.count)
    return JointAmplitude(ga, gb, values)
