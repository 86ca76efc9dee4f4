import math
import warnings

import numpy as np
import pytest

from kerrchain.kernels import KernelSpec, KernelVariant, single_photon_amplitude, single_photon_phase
from kerrchain.params import ChainSpec, SiteParams, default_grid, grid_build, pulse_window_grid
from kerrchain.wavepacket import (
    JointAmplitude, PulseShape, QuadratureResolutionWarning, connected_part, make_separable_jsa, read_jsa,
    scatter_single, scatter_two_photon, write_jsa,
)

SITE = SiteParams(1.0, 0.0, 1.0)
SINGLE = KernelSpec(KernelVariant.SINGLE_SITE, ChainSpec((SITE,)))


def small_grid(count=121, hw=4.0):
    return grid_build(0.0, hw, count)


def gauss_jsa(grid, ca=0.0, cb=0.0, sa=0.3, sb=0.3):
    return make_separable_jsa(PulseShape.gaussian(ca, sa), PulseShape.gaussian(cb, sb), grid, grid)


# ---------------------------------------------------------------- pulses


def test_gaussian_normalised():
    p = PulseShape.gaussian(0.3, 0.2)
    w = np.linspace(-3, 3, 20001)
    assert np.trapezoid(np.abs(p.evaluate(w)) ** 2, w) == pytest.approx(1, abs=1e-10)
    assert p.norm() == 1.0


def test_tabulated_pulse():
    g = grid_build(0, 2, 401)
    vals = PulseShape.gaussian(0, 0.2).evaluate(g.points)
    t = PulseShape.tabulated(g, vals)
    assert t.norm() == pytest.approx(1, abs=1e-10)
    assert t.evaluate(5.0) == 0
    assert t.evaluate(g.points[7]) == pytest.approx(vals[7])
    with pytest.raises(ValueError):
        PulseShape.tabulated(g, vals[:-1])


def test_bad_pulses():
    with pytest.raises(ValueError):
        PulseShape.gaussian(0, 0)
    with pytest.raises(ValueError):
        PulseShape("tabulated")


def test_separable_norm_on_default_grid():
    g = default_grid(SITE, 0.2)
    j = gauss_jsa(g, sa=0.2, sb=0.2)
    assert j.norm() == pytest.approx(1, abs=1e-6)


def test_pulse_off_grid_rejected():
    g = grid_build(0, 2, 101)
    with pytest.raises(ValueError, match="mass outside"):
        make_separable_jsa(PulseShape.gaussian(20 * 0.2, 0.2), PulseShape.gaussian(0, 0.2), g, g)


def test_jsa_shape_checked_and_immutable():
    g = small_grid(5, 1.0)
    with pytest.raises(ValueError):
        JointAmplitude(g, g, np.zeros((5, 4)))
    j = JointAmplitude(g, g, np.zeros((5, 5)))
    with pytest.raises(ValueError):
        j.values[0, 0] = 1


# ---------------------------------------------------------------- single photon


def test_scatter_single_resonance_flips_sign():
    g = grid_build(0.0, 1.0, 101)
    p = PulseShape.gaussian(0.0, 0.1)
    out = scatter_single(p, g, ChainSpec((SITE,)))
    assert out.table[50] == pytest.approx(-p.evaluate(0.0))


def test_scatter_single_preserves_norm_and_stacks_phases():
    g = grid_build(0.0, 3.0, 301)
    p = PulseShape.gaussian(0.2, 0.3)
    s = SiteParams(1.0, 0.1, 0.0)
    one = scatter_single(p, g, ChainSpec((s,)))
    five = scatter_single(p, g, ChainSpec.uniform(s, 5))
    base = PulseShape.tabulated(g, p.evaluate(g.points))
    assert five.norm() == pytest.approx(base.norm(), rel=1e-12)
    ratio1 = one.table / p.evaluate(g.points)
    ratio5 = five.table / p.evaluate(g.points)
    assert np.allclose(ratio5, ratio1**5, atol=1e-12)
    assert np.allclose(ratio1, single_photon_phase(g.points, s))


# ---------------------------------------------------------------- two photon


def test_no_interaction_is_pointwise():
    g = small_grid()
    j = gauss_jsa(g)
    chain = ChainSpec((SiteParams(1.0, 0.0, 0.0),))
    out = scatter_two_photon(j, KernelSpec(KernelVariant.SINGLE_SITE, chain))
    s = single_photon_amplitude(g.points, chain)
    assert np.allclose(out.values, np.outer(s, s) * j.values, atol=1e-15)
    assert out.norm() == pytest.approx(j.norm(), rel=1e-12)


def test_single_site_unitarity_default_grid():
    g = default_grid(SITE, 0.2)
    out = scatter_two_photon(gauss_jsa(g, sa=0.2, sb=0.2), SINGLE)
    assert out.norm() == pytest.approx(1, abs=1e-3)


def test_unitarity_improves_under_refinement():
    errs = []
    p = PulseShape.gaussian(0.0, 0.2)
    for m, w in ((129, 4.0), (257, 8.0), (513, 16.0)):
        g = grid_build(0.0, w, m)
        errs.append(abs(scatter_two_photon(make_separable_jsa(p, p, g, g), SINGLE).norm() - 1))
    assert errs[0] > errs[1] > errs[2]


def test_linearity():
    g = small_grid()
    rng = np.random.default_rng(0)
    j1 = gauss_jsa(g, 0.2, -0.1, 0.3, 0.4)
    bump = np.exp(-((g.points[:, None] + 0.5) ** 2 + (g.points[None, :] - 0.3) ** 2) / 0.3)
    j2 = j1.with_values(bump * (1 + 0.2j))
    a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
    k = KernelSpec(KernelVariant.NSITE_COUNTER, ChainSpec.uniform(SITE, 3))
    s1 = scatter_two_photon(j1.with_values(j1.values), k).values
    s2 = scatter_two_photon(j2, k).values
    mix = scatter_two_photon(j1.with_values(a * j1.values + b * j2.values), k).values
    assert np.abs(mix - (a * s1 + b * s2)).max() <= 1e-12 * np.abs(mix).max()


def test_exchange_covariance_uniform_counter():
    g = small_grid()
    j = gauss_jsa(g, 0.3, -0.2, 0.25, 0.4)
    k = KernelSpec(KernelVariant.NSITE_COUNTER, ChainSpec.uniform(SiteParams(1.0, 0.1, 2.0), 4))
    direct = scatter_two_photon(j, k).values
    swapped = scatter_two_photon(j.transposed(), k).values
    assert np.abs(swapped - direct.T).max() <= 1e-10 * np.abs(direct).max()


def test_anti_diagonal_locality():
    g = small_grid(61, 3.0)
    base = gauss_jsa(g).values
    k = KernelSpec(KernelVariant.TWO_SITE_CO, ChainSpec((SITE, SiteParams(1.5, 0.2, 0.5)), "co"))
    i, jj = 30, 33
    off = base.copy()
    off[28, 31] += 0.05  # 28 + 31 != 30 + 33: off the output point's shell
    on = base.copy()
    on[29, 34] += 0.05  # same anti-diagonal
    ref = connected_part(JointAmplitude(g, g, base), k)[i, jj]
    assert connected_part(JointAmplitude(g, g, off), k)[i, jj] == ref
    assert abs(connected_part(JointAmplitude(g, g, on), k)[i, jj] - ref) > 1e-6


def test_unequal_spacing_analytic_matches_lattice():
    ga = grid_build(0.0, 4.0, 129)  # h = 1/16
    gb = grid_build(0.0, 4.0, 161)  # h = 1/20
    pa, pb = PulseShape.gaussian(0.1, 0.3), PulseShape.gaussian(-0.1, 0.3)
    mixed = scatter_two_photon(make_separable_jsa(pa, pb, ga, gb), SINGLE).values
    lattice = scatter_two_photon(make_separable_jsa(pa, pb, ga, ga), SINGLE).values
    # common points: multiples of 1/4 on both grids
    ia = np.arange(0, 129, 4)
    ib = np.arange(0, 161, 5)
    assert np.allclose(mixed[:, ib], lattice[:, ia], rtol=0, atol=1e-13)


def test_tabulated_input_interpolates():
    ga = grid_build(0.0, 4.0, 161)
    gb = grid_build(0.0, 4.0, 201)
    jin = gauss_jsa(ga, sa=0.3, sb=0.3)
    exact = scatter_two_photon(make_separable_jsa(*jin.analytic_input, ga, gb), SINGLE).values
    tab = make_separable_jsa(*jin.analytic_input, ga, gb)
    interp = scatter_two_photon(tab.with_values(tab.values), SINGLE).values
    assert np.abs(interp - exact).max() <= 5e-3 * np.abs(exact).max()


def test_resolution_warning():
    g = grid_build(0.0, 4.0, 33)
    with pytest.warns(QuadratureResolutionWarning):
        scatter_two_photon(gauss_jsa(g, sa=0.5, sb=0.5), SINGLE)


@pytest.mark.parametrize("backend", ["python", "compiled"])
def test_threads_deterministic(backend):
    from kerrchain import _backend

    if backend not in _backend.available():
        pytest.skip("compiled core not built")
    g = small_grid()
    j = gauss_jsa(g)
    k = KernelSpec(KernelVariant.TWO_SITE_COUNTER, ChainSpec((SITE, SiteParams(0.8, 0.2, 3.0))))
    one = scatter_two_photon(j, k, threads=1, backend=backend).values
    many = scatter_two_photon(j, k, threads=3, backend=backend).values
    assert np.array_equal(one, many)


def test_infinite_diagonal_is_pointwise():
    g = pulse_window_grid(0.0, 0.01, 65)
    j = gauss_jsa(g, sa=0.01, sb=0.01)
    k = KernelSpec(KernelVariant.INFINITE_DIAGONAL, ChainSpec.uniform(SiteParams(1.0, 0.0, math.inf), 3))
    out = scatter_two_photon(j, k)
    s = single_photon_amplitude(g.points, k.chain)
    ratio = out.values / (np.outer(s, s) * j.values)
    w = g.points
    assert np.allclose(ratio, k.diagonal_factor(w[:, None], w[None, :]), rtol=1e-13)
    assert ratio[32, 32] == pytest.approx(-1, abs=1e-14)


def test_jsa_roundtrip(tmp_path):
    g = small_grid(33, 2.0)
    j = gauss_jsa(g)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureResolutionWarning)
        out = scatter_two_photon(j, SINGLE)
    path, side = write_jsa(tmp_path / "psi.csv", out, {"tag": "x"})
    assert path.read_text().splitlines()[0] == "omega_a,omega_b,re,im"
    back = read_jsa(path)
    assert np.array_equal(back.values, out.values)
    assert back.grid_a.count == 33
    import json

    meta = json.loads(side.read_text())
    assert meta["tag"] == "x" and meta["norm"] == pytest.approx(out.norm())
