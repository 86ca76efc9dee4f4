"""SLH composition on dense two-level-atom operator matrices.

Basis conventions: site-major tensor order with site 1 slowest, and within a
site atom A before atom B; each atom has basis {|0⟩, |1⟩} (ground, excited),
A_z = |0⟩⟨0| − |1⟩⟨1| and A₋ = |0⟩⟨1|, so [A₋, A₊] = A_z.

The scattering matrix is trivial everywhere, so S is carried as a tag.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ChainSpec, Propagation, SiteParams

MAX_SITES = 6
HERMITIAN_TOL = 1e-12

_SINGLE = {
    "1": np.eye(2, dtype=complex),
    "m": np.array([[0, 1], [0, 0]], dtype=complex),  # |0⟩⟨1|
    "p": np.array([[0, 0], [1, 0]], dtype=complex),  # |1⟩⟨0|
    "n": np.array([[0, 0], [0, 1]], dtype=complex),  # |1⟩⟨1|
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def atom_op(kind: str, atom: int, n_atoms: int) -> np.ndarray:
    """Single-atom operator ``kind`` ∈ {1, m, p, n, z} on atom ``atom`` (0-based)."""
    if not 0 <= atom < n_atoms:
        raise ValueError(f"atom {atom} out of range for {n_atoms} atoms")
    left = np.eye(2**atom, dtype=complex)
    right = np.eye(2 ** (n_atoms - atom - 1), dtype=complex)
    return np.kron(np.kron(left, _SINGLE[kind]), right)


def op_a(kind: str, site: int, n_sites: int) -> np.ndarray:
    """A-atom operator of 1-based ``site``."""
    return atom_op(kind, 2 * (site - 1), 2 * n_sites)


def op_b(kind: str, site: int, n_sites: int) -> np.ndarray:
    return atom_op(kind, 2 * (site - 1) + 1, 2 * n_sites)


def dag(x: np.ndarray) -> np.ndarray:
    return x.conj().T


def comm(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


@dataclass(frozen=True)
class SlhTriple:
    L: tuple
    H: np.ndarray = field(compare=False)
    S: str = "identity"

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"H must be square, got shape {H.shape}")
        L = tuple(np.asarray(x, dtype=complex) for x in self.L)
        for x in L:
            if x.shape != H.shape:
                raise ValueError(f"coupling operator shape {x.shape} != H shape {H.shape}")
        scale = max(1.0, float(np.abs(H).max()) if H.size else 1.0)
        if np.abs(H - dag(H)).max(initial=0.0) > HERMITIAN_TOL * scale:
            raise ValueError("H is not Hermitian")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "L", L)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def n_modes(self) -> int:
        return len(self.L)


def vacuum(dim: int) -> SlhTriple:
    """Identity element for concatenation."""
    return SlhTriple((), np.zeros((dim, dim), dtype=complex))


def concatenate(g1: SlhTriple, g2: SlhTriple) -> SlhTriple:
    if g1.dim != g2.dim:
        raise ValueError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    return SlhTriple(g1.L + g2.L, g1.H + g2.H)


def series(g_downstream: SlhTriple, g_upstream: SlhTriple) -> SlhTriple:
    """g_downstream ◁ g_upstream: the output of upstream feeds downstream."""
    if g_downstream.dim != g_upstream.dim:
        raise ValueError(f"dimension mismatch: {g_downstream.dim} vs {g_upstream.dim}")
    if g_downstream.n_modes != 1 or g_upstream.n_modes != 1:
        raise ValueError("series product is defined here for single-mode triples")
    (ld,), (lu,) = g_downstream.L, g_upstream.L
    h = g_downstream.H + g_upstream.H + (dag(ld) @ lu - dag(lu) @ ld) / 2j
    return SlhTriple((lu + ld,), h)


def kerr_term(site: SiteParams, index: int, n_total: int) -> np.ndarray:
    """Cross-Kerr coupling of a site's two atoms, 2χ·n_A·n_B = (χ/2)(1−A_z)(1−B_z).

    This normalisation is the one under which ∂_t A₋ carries −iχA₋(1−B_z)
    and the two-photon S-matrix pole sits at E = 2Δ + 2χ − iγ.
    """
    return 2 * site.chi * op_a("n", index, n_total) @ op_b("n", index, n_total)


def site_parts(site: SiteParams, n_total: int, index: int) -> tuple[SlhTriple, SlhTriple]:
    """(G_A, G_B) for one site; the Kerr term is booked with G_A."""
    if not 1 <= index <= n_total:
        raise ValueError(f"index must be in 1..{n_total}, got {index}")
    if site.chi_is_infinite:
        raise ValueError("the SLH model needs finite chi")
    rg = np.sqrt(site.gamma)
    ga = SlhTriple((rg * op_a("m", index, n_total),),
                   site.delta * op_a("n", index, n_total) + kerr_term(site, index, n_total))
    gb = SlhTriple((rg * op_b("m", index, n_total),), site.delta * op_b("n", index, n_total))
    return ga, gb


def site_triple(site: SiteParams, n_total: int, index: int) -> SlhTriple:
    """L = (√γ A₋, √γ B₋), H = (Δ/2)(1−A_z) + (Δ/2)(1−B_z) + Kerr term."""
    ga, gb = site_parts(site, n_total, index)
    return concatenate(ga, gb)


def build_chain(chain: ChainSpec) -> SlhTriple:
    """Mode a: G_A^(N) ◁ … ◁ G_A^(1).  Mode b: G_B^(1) ◁ … ◁ G_B^(N) (counter) or like a (co)."""
    n = chain.n_sites
    if n > MAX_SITES:
        raise ValueError(f"dense SLH model limited to {MAX_SITES} sites, got {n}")
    parts = [site_parts(s, n, i + 1) for i, s in enumerate(chain.sites)]
    ga = parts[0][0]
    for k in range(1, n):
        ga = series(parts[k][0], ga)
    order = range(n) if chain.propagation is Propagation.CO else range(n - 1, -1, -1)
    order = list(order)
    gb = parts[order[0]][1]
    for k in order[1:]:
        gb = series(parts[k][1], gb)
    return concatenate(ga, gb)


@dataclass(frozen=True)
class LangevinCoefficients:
    """∂_t X = drift + Σ_m (in_coupling[m][0]·b_in,m + b_in,m†·in_coupling[m][1])."""

    drift: np.ndarray
    in_coupling: tuple
    output_L: tuple


def langevin(triple: SlhTriple, x: np.ndarray) -> LangevinCoefficients:
    x = np.asarray(x, dtype=complex)
    if x.shape != triple.H.shape:
        raise ValueError(f"operator shape {x.shape} != system shape {triple.H.shape}")
    drift = 1j * comm(triple.H, x)
    couplings = []
    for L in triple.L:
        ld = dag(L)
        ldl = ld @ L
        drift = drift + ld @ x @ L - 0.5 * (ldl @ x + x @ ldl)
        couplings.append((comm(ld, x), comm(x, L)))
    return LangevinCoefficients(drift, tuple(couplings), triple.L)


def effective_hamiltonian(triple: SlhTriple) -> np.ndarray:
    """H − (i/2)Σ L†L, whose spectrum gives the complex resonance energies."""
    return triple.H - 0.5j * sum((dag(L) @ L for L in triple.L), np.zeros_like(triple.H))


# per-atom basis {1, n, p, m}: M = a·1 + b·n + c·p + d·m with
# a = M00, b = M11 − M00, c = M10, d = M01
_TO_TERMS = np.array(
    [
        # M00 M01 M10 M11
        [1, 0, 0, 0],   # 1
        [-1, 0, 0, 1],  # n
        [0, 0, 1, 0],   # p
        [0, 1, 0, 0],   # m
    ],
    dtype=complex,
)
_TERM_KINDS = ("1", "n", "p", "m")


def term_list(op: np.ndarray, n_sites: int, tol: float = 1e-14) -> list[tuple[str, complex]]:
    """Expand ``op`` in products of {1, n, p, m} on each atom.

    Returns (operator string, coefficient) pairs sorted by string; strings
    look like ``"Bp1 Bm2"`` and the identity is ``"1"``.
    """
    n_atoms = 2 * n_sites
    op = np.asarray(op, dtype=complex)
    if op.shape != (2**n_atoms, 2**n_atoms):
        raise ValueError(f"operator shape {op.shape} does not match {n_sites} sites")
    t = op.reshape((2,) * (2 * n_atoms))
    # interleave (row_q, col_q) pairs so each atom's 2×2 block is contiguous
    perm = [ax for q in range(n_atoms) for ax in (q, n_atoms + q)]
    t = t.transpose(perm).reshape((4,) * n_atoms)
    for q in range(n_atoms):
        t = np.moveaxis(np.tensordot(_TO_TERMS, t, axes=([1], [q])), 0, q)
    out = []
    for idx in zip(*np.nonzero(np.abs(t) > tol)):
        names = []
        for q, k in enumerate(idx):
            if k:
                names.append(f"{'AB'[q % 2]}{_TERM_KINDS[k]}{q // 2 + 1}")
        out.append((" ".join(names) or "1", complex(t[idx])))
    return sorted(out)


def _fmt(c: complex) -> str:
    c = complex(round(c.real, 12) + 0.0, round(c.imag, 12) + 0.0)
    return f"({c.real:+.12g}{c.imag:+.12g}j)"


def dump_terms(triple: SlhTriple, n_sites: int, mode_names=("a", "b")) -> str:
    """Stable text form: one ``coefficient * operator-string`` per line."""
    lines = []
    for m, L in enumerate(triple.L):
        name = mode_names[m] if m < len(mode_names) else str(m)
        lines.append(f"L[{name}]:")
        lines += [f"  {_fmt(c)} * {s}" for s, c in term_list(L, n_sites)]
    lines.append("H:")
    lines += [f"  {_fmt(c)} * {s}" for s, c in term_list(triple.H, n_sites)]
    return "\n".join(lines) + "\n"
