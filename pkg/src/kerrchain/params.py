"""Physical parameters, frequency grids and the Γ(ω) primitive.

Frequencies are plain floats in units of the first site's decay rate;
nothing here enforces a unit system, but the defaults assume γ₁ = 1.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np


class Propagation(str, enum.Enum):
    CO = "co"
    COUNTER = "counter"


@dataclass(frozen=True)
class SiteParams:
    """One interaction site: decay rate, detuning and cross-Kerr strength.

    ``chi`` may be ``math.inf`` to request the symbolic χ→∞ limit; only
    kernels that know how to take that limit accept it.
    """

    gamma: float = 1.0
    delta: float = 0.0
    chi: float = 0.0

    def __post_init__(self):
        for name in ("gamma", "delta", "chi"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be finite and > 0, got {self.gamma!r}")
        if not math.isfinite(self.delta):
            raise ValueError(f"delta must be finite, got {self.delta!r}")
        if math.isnan(self.chi) or self.chi < 0:
            raise ValueError(f"chi must be >= 0 (or inf), got {self.chi!r}")

    @property
    def chi_is_infinite(self) -> bool:
        return math.isinf(self.chi)

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "delta": self.delta, "chi": self.chi}

    @classmethod
    def from_dict(cls, d: dict) -> "SiteParams":
        return cls(float(d["gamma"]), float(d.get("delta", 0.0)), float(d.get("chi", 0.0)))


@dataclass(frozen=True)
class ChainSpec:
    sites: tuple[SiteParams, ...]
    propagation: Propagation = Propagation.COUNTER

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "propagation", Propagation(self.propagation))
        if len(self.sites) < 1:
            raise ValueError("a chain needs at least one site")

    @classmethod
    def uniform(
        cls, site: SiteParams, n: int, propagation: Propagation | str = Propagation.COUNTER
    ) -> "ChainSpec":
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return cls((site,) * n, Propagation(propagation))

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def uniform_sites(self) -> bool:
        return all(s == self.sites[0] for s in self.sites)

    def to_dict(self) -> dict:
        return {
            "propagation": self.propagation.value,
            "sites": [s.to_dict() for s in self.sites],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "ChainSpec":
        sites = d.get("sites")
        if not isinstance(sites, list) or not sites:
            raise ValueError("'sites' must be a non-empty list")
        return cls(tuple(SiteParams.from_dict(s) for s in sites), Propagation(d.get("propagation", "counter")))

    @classmethod
    def from_json(cls, text: str) -> "ChainSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid ω_k = center + (k − (count−1)/2)·spacing."""

    center: float
    spacing: float
    count: int

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError(f"spacing must be > 0, got {self.spacing!r}")
        if self.count < 2:
            raise ValueError(f"count must be >= 2, got {self.count!r}")

    @property
    def points(self) -> np.ndarray:
        k = np.arange(self.count, dtype=float)
        return self.center + (k - (self.count - 1) / 2) * self.spacing

    @property
    def half_width(self) -> float:
        return (self.count - 1) / 2 * self.spacing

    @property
    def lo(self) -> float:
        return self.center - self.half_width

    @property
    def hi(self) -> float:
        return self.center + self.half_width

    def to_dict(self) -> dict:
        return {"center": self.center, "half_width": self.half_width, "count": self.count}

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyGrid":
        return grid_build(float(d.get("center", 0.0)), float(d["half_width"]), int(d["count"]))


def gamma_fn(omega, site: SiteParams):
    """Γ(ω) = γ/2 + i(Δ − ω); vectorised over ``omega``."""
    return site.gamma / 2 + 1j * (site.delta - np.asarray(omega, dtype=float))


def grid_build(center: float, half_width: float, count: int) -> FrequencyGrid:
    if not half_width > 0:
        raise ValueError(f"half_width must be > 0, got {half_width!r}")
    if count < 3 or count % 2 == 0:
        raise ValueError(f"count must be odd and >= 3, got {count!r}")
    return FrequencyGrid(float(center), 2 * half_width / (count - 1), int(count))


DEFAULT_COUNT = 257


def default_grid(site: SiteParams, sigma: float, count: int = DEFAULT_COUNT) -> FrequencyGrid:
    """Grid centred on Δ, half-width max(8σ, 8γ).

    8γ rather than 4γ: the connected output has Lorentzian tails and a
    4γ window drops ~1e-3 of the norm at σ = 0.2γ.
    """
    return grid_build(site.delta, max(8 * sigma, 8 * site.gamma), count)


def pulse_window_grid(center: float, sigma: float, count: int = DEFAULT_COUNT) -> FrequencyGrid:
    """Grid covering a Gaussian pulse only (±8σ)."""
    return grid_build(center, 8 * sigma, count)

