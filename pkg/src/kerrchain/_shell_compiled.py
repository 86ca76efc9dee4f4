"""Wrapper feeding the compiled shell quadrature."""
from __future__ import annotations

import numpy as np

from . import _shell_py
from ._shellcore import connected_lattice
from .kernels import KernelVariant
from .params import gamma_fn

name = "compiled"

_CODES = {
    KernelVariant.SINGLE_SITE: 0,
    KernelVariant.VATOM_LIMIT: 1,
    KernelVariant.TWO_SITE_CO: 2,
    KernelVariant.TWO_SITE_COUNTER: 3,
    KernelVariant.NSITE_COUNTER: 4,
}


def connected(jsa, kspec, threads: int = 1, cutoff: float = 1e-14) -> np.ndarray:
    from .wavepacket import _same_spacing, active_nodes, shell_lattice, trapezoid_weights

    ga, gb = jsa.grid_a, jsa.grid_b
    if not _same_spacing(ga, gb) or kspec.variant not in _CODES:
        return _shell_py.connected(jsa, kspec, threads=threads, cutoff=cutoff)
    sites = kspec.chain.sites
    pair = (sites[0], sites[1 if len(sites) > 1 else 0])
    ma, mb = ga.count, gb.count
    wa = np.ascontiguousarray(ga.points)
    b_ext = gb.center + (np.arange(mb + 2 * (ma - 1)) - (ma - 1) - (mb - 1) / 2) * gb.spacing
    gam_a = np.array([gamma_fn(wa, s) for s in pair])
    gam_e = np.array([gamma_fn(b_ext, s) for s in pair])
    return connected_lattice(
        _CODES[kspec.variant],
        wa, np.ascontiguousarray(gb.points),
        trapezoid_weights(ga), np.ascontiguousarray(active_nodes(jsa, cutoff), dtype=np.int_),
        shell_lattice(jsa),
        1 / gam_a, np.conj(gam_a) / gam_a, 1 / gam_e, np.conj(gam_e) / gam_e,
        np.array([s.gamma for s in pair]), np.array([s.delta for s in pair]), np.array([s.chi for s in pair]),
        kspec.chain.n_sites, int(threads),
    )
