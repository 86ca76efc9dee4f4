"""Pure-numpy shell quadrature (the fallback backend).

Rows of the output (fixed ω_a) are independent; each is one vectorised
evaluation over (ω_b, ν) followed by a weighted sum.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .kernels import OnShellPoint

name = "python"


def connected(jsa, kspec, threads: int = 1, cutoff: float = 1e-14) -> np.ndarray:
    from .wavepacket import _same_spacing, active_nodes, shell_lattice, trapezoid_weights

    ga, gb = jsa.grid_a, jsa.grid_b
    ma, mb = ga.count, gb.count
    wa, wb = ga.points, gb.points
    out = np.zeros((ma, mb), dtype=complex)
    act = active_nodes(jsa, cutoff)
    if act.size == 0:
        return out
    nu = wa[act]
    wk = trapezoid_weights(ga)[act]
    on_lattice = _same_spacing(ga, gb)
    if on_lattice:
        lat = shell_lattice(jsa)
        cols = np.arange(mb)[:, None] - act[None, :] + (ma - 1)
    else:
        psi_at = jsa.sampler()

    def row(i):
        nb = wa[i] + wb[:, None] - nu[None, :]
        if on_lattice:
            psi = lat[act[None, :], cols + i]
        else:
            psi = psi_at(np.broadcast_to(nu[None, :], nb.shape), nb)
        k = kspec(OnShellPoint(wa[i], nu[None, :], nb))
        out[i] = (k * psi) @ wk

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(row, range(ma)))
    else:
        for i in range(ma):
            row(i)
    return out
