# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled shell quadrature on an equal-spacing lattice.

Every connected kernel factorises into a piece depending on the output pair
(ω_a, ω_b) only (Kerr factor, output Γ's, dressing phases of outgoing
frequencies) times per-node factors 1/Γ(ν_a), 1/Γ(ν_b) and dressing phases
of the incoming frequencies.  The output-only piece is hoisted out of the
ν loop, so the inner loop is a handful of complex multiply-adds.  The numpy
backend evaluates the kernels directly and serves as the reference.

All four frequencies sit on one lattice: ω_a = ν = a-grid, ω_b = b-grid,
ν_b = ω_a + ω_b − ν = b_ext[j + i − k + ma − 1].  Per-site tables of 1/Γ and
Γ̄/Γ are passed in for the a-grid and the extended b-lattice.
"""
import numpy as np
from cython.parallel import prange
from libc.math cimport isinf, M_PI

ctypedef double complex cplx

cdef enum:
    SINGLE = 0
    VATOM = 1
    CO2 = 2
    COUNTER2 = 3
    NSITE = 4


cdef inline cplx gam(double g, double d, double w) noexcept nogil:
    return 0.5 * g + (d - w) * 1j


cdef inline cplx kerr(double chi, cplx s) noexcept nogil:
    if isinf(chi):
        return 0.5 * s
    return (chi * 1j) * s / (s + (2.0 * chi) * 1j)


cdef inline cplx ipow(cplx x, long n) noexcept nogil:
    cdef cplx r = 1.0
    while n > 0:
        if n & 1:
            r = r * x
        x = x * x
        n >>= 1
    return r


cdef inline cplx geom(cplx x, cplx y, long n) noexcept nogil:
    cdef cplx tot = 1.0, yp = 1.0, d
    cdef long j, k
    cdef double binom
    if n <= 4096:
        for j in range(n - 1):
            yp = yp * y
            tot = tot * x + yp
        return tot
    d = y - x
    if abs(d) >= 1e-8:
        return (ipow(x, n) - ipow(y, n)) / (x - y)
    tot = 0.0
    binom = n
    for k in range(4):
        tot = tot + binom * ipow(x, n - 1 - k) * ipow(d, k)
        binom = binom * (n - 1 - k) / (k + 2)
    return tot


def connected_lattice(int variant, const double[::1] wa, const double[::1] wb,
                      const double[::1] weights, const long[::1] active,
                      const cplx[:, ::1] lattice,
                      const cplx[:, ::1] inv_a, const cplx[:, ::1] ph_a,
                      const cplx[:, ::1] inv_e, const cplx[:, ::1] ph_e,
                      const double[::1] g, const double[::1] dl, const double[::1] chi,
                      long n, int threads):
    """out[i, j] = Σ_k w_k K(wa_i, wb_j; wa_k, wa_i + wb_j − wa_k) lattice[k, j + i − k + ma − 1].

    inv_*[s, ·] = 1/Γ_s and ph_*[s, ·] = Γ̄_s/Γ_s for site s on the a-grid
    (``_a``) and on the extended b-lattice (``_e``).
    """
    cdef Py_ssize_t ma = wa.shape[0], mb = wb.shape[0], nact = active.shape[0]
    cdef Py_ssize_t i, j, q, k, m, jb
    cdef cplx f, s1, s2, k1, k2, pre, g1a, g1b, g2a, g2b
    cdef double g0 = g[0], gg1 = g[1]
    out_arr = np.zeros((ma, mb), dtype=np.complex128)
    cdef cplx[:, ::1] out = out_arr
    for i in prange(ma, nogil=True, num_threads=max(threads, 1), schedule="static"):
        for j in range(mb):
            jb = j + ma - 1
            s1 = 0.0
            s2 = 0.0
            # one loop per variant keeps the branch out of the hot path
            if variant == NSITE:
                for q in range(nact):
                    k = active[q]
                    m = jb + i - k
                    s1 = s1 + weights[k] * lattice[k, m] * inv_a[0, k] * inv_e[0, m] * geom(
                        ph_a[0, i] * ph_e[0, m], ph_e[0, jb] * ph_a[0, k], n)
            elif variant == COUNTER2:
                for q in range(nact):
                    k = active[q]
                    m = jb + i - k
                    f = weights[k] * lattice[k, m]
                    s1 = s1 + f * inv_a[0, k] * inv_e[0, m] * ph_e[1, m]
                    s2 = s2 + f * inv_a[1, k] * inv_e[1, m] * ph_a[0, k]
            elif variant == CO2:
                for q in range(nact):
                    k = active[q]
                    m = jb + i - k
                    f = weights[k] * lattice[k, m]
                    s1 = s1 + f * inv_a[0, k] * inv_e[0, m]
                    s2 = s2 + f * inv_a[1, k] * inv_e[1, m] * ph_a[0, k] * ph_e[0, m]
            else:
                for q in range(nact):
                    k = active[q]
                    m = jb + i - k
                    s1 = s1 + weights[k] * lattice[k, m] * inv_a[0, k] * inv_e[0, m]
            g1a = gam(g0, dl[0], wa[i])
            g1b = gam(g0, dl[0], wb[j])
            if variant == SINGLE or variant == NSITE:
                pre = -(g0 * g0 / M_PI) * kerr(chi[0], g1a + g1b) * inv_a[0, i] * inv_e[0, jb]
                out[i, j] = pre * s1
            elif variant == VATOM:
                out[i, j] = -(g0 * g0 / (2 * M_PI)) * (inv_a[0, i] + inv_e[0, jb]) * s1
            else:
                g2a = gam(gg1, dl[1], wa[i])
                g2b = gam(gg1, dl[1], wb[j])
                k1 = kerr(chi[0], g1a + g1b)
                k2 = kerr(chi[1], g2a + g2b)
                if variant == COUNTER2:
                    out[i, j] = -(
                        ph_a[1, i] * k1 * g0 * g0 * inv_a[0, i] * inv_e[0, jb] * s1
                        + ph_e[0, jb] * k2 * gg1 * gg1 * inv_a[1, i] * inv_e[1, jb] * s2
                    ) / M_PI
                else:
                    pre = inv_a[1, i] * inv_e[1, jb]
                    out[i, j] = -(
                        ph_a[1, i] * ph_e[1, jb] * k1 * g0 * g0 * inv_a[0, i] * inv_e[0, jb] * s1
                        + k2 * gg1 * gg1 * pre * s2
                        - 4.0 * k1 * k2 * g0 * g0 * gg1 * gg1 * pre * s1
                        / ((g1a + g1b) * (g1a + g2b) * (g2a + g2b))
                    ) / M_PI
    return out_arr
