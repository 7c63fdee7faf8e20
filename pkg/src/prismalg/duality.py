"""Poincare duality for Higgs de Rham complexes at the complex level.

The pairing <f (x) w_A, x (x) e_B> = f(x) w_A ^ e_B (zero unless |A| + |B| = n
and B is the complement of A) induces

    Phi : DR(M_dual{n}, theta_dual) -> Hom(DR(M, theta), Omega^n)[-n],

a degreewise signed-permutation matrix.  Both the shift and the Hom signs come
from the complexes module; verifying that Phi is a chain map is therefore the
sharpest sign audit in the package, and a deliberately mis-signed dual field
must fail it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import FreeModuleMap
from .complexes import ChainMap, Complex, hom_complex, shift
from .higgs import HiggsModule, dr_complex, dual, subsets_of, twist
from .scalars import ElementaryDivisors, is_invertible


def shuffle_sign(A: tuple[int, ...], B: tuple[int, ...]) -> int:
    """Sign of sorting the concatenation (A, B) of disjoint sorted tuples."""
    inversions = sum(1 for a in A for b in B if a > b)
    return -1 if inversions % 2 else 1


@dataclass
class PairingWitness:
    higgs: HiggsModule
    n: int
    source: Complex
    target: Complex
    phi_maps: dict[int, FreeModuleMap]
    pairing: dict[int, np.ndarray] = field(default_factory=dict)


@dataclass
class DualityReport:
    ok: bool
    chain_map_ok: bool
    bijective_ok: bool
    failures: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok


def _omega_top(algebra, n: int) -> Complex:
    """Omega^n as a rank-one complex in degree zero (untwisted target)."""
    return Complex(algebra, {0: 1}, {})


def _assemble_phi(H: HiggsModule, Hdual: HiggsModule) -> PairingWitness:
    """Build source, target and the candidate Phi for a given dual datum."""
    alg = H.algebra
    n = H.n
    source = dr_complex(Hdual, check=False)
    target = shift(hom_complex(dr_complex(H, check=False), _omega_top(alg, n)), -n)
    r = H.rank
    phi_maps: dict[int, FreeModuleMap] = {}
    pairing: dict[int, np.ndarray] = {}
    for i in range(n + 1):
        subs_i = subsets_of(n, i)
        subs_j = subsets_of(n, n - i)
        idx_j = {S: a for a, S in enumerate(subs_j)}
        # source basis: (dual component u, subset A); target basis (after the
        # shift) is Hom(DR^(n-i)(M), Omega^n) flattened target-major, i.e.
        # plain (component c, subset B) of DR^(n-i)(M)
        data = np.zeros((r * len(subs_j), r * len(subs_i), alg.dim), dtype=np.int64)
        pair = np.zeros((r * len(subs_i), r * len(subs_j)), dtype=np.int64)
        one = alg.one().vec
        for a, A in enumerate(subs_i):
            B = tuple(sorted(set(range(n)) - set(A)))
            sign = shuffle_sign(A, B)
            for u in range(r):
                src = u * len(subs_i) + a
                tgt = u * len(subs_j) + idx_j[B]
                data[tgt, src] = sign * one
                pair[src, tgt] = sign
        phi_maps[i] = FreeModuleMap(alg, data % alg.mod)
        pairing[i] = pair
    return PairingWitness(H, n, source, target, phi_maps, pairing)


def build_pairing(H: HiggsModule) -> PairingWitness:
    """The duality witness for H, with the dual field theta -> -theta^T and
    the twist bumped by n so the pairing lands in the untwisted Omega^n."""
    Hdual = twist(dual(H), H.n)
    w = _assemble_phi(H, Hdual)
    for i in range(H.n + 1):
        ts = w.source.twist(i)
        tk = dr_complex(H, check=False).twist(H.n - i)
        if ts is None or tk is None or ts + tk != 0:
            raise ValueError(f"twist mismatch in the pairing at degree {i}: "
                             f"{ts} + {tk} != 0")
    return w


def verify_duality_iso(w: PairingWitness) -> DualityReport:
    """Chain-map property (with the module's shift and Hom signs) and
    degreewise bijectivity after restriction of scalars, both exact."""
    failures = []
    chain_ok = True
    try:
        ChainMap(w.source, w.target, w.phi_maps, check=True)
    except ValueError as exc:
        chain_ok = False
        failures.append(f"chain-map check failed: {exc}")
    bij_ok = True
    for d in w.source.degrees():
        if w.source.rank(d) != w.target.rank(d):
            bij_ok = False
            failures.append(f"rank mismatch at degree {d}")
            continue
        if w.source.rank(d) and not is_invertible(w.phi_maps[d].restrict_scalars()):
            bij_ok = False
            failures.append(f"Phi not bijective at degree {d}")
    return DualityReport(chain_ok and bij_ok, chain_ok, bij_ok, failures)


@dataclass
class DualityTable:
    rows: list[tuple[int, ElementaryDivisors, ElementaryDivisors]]
    symmetric: bool


def cohomology_duality_table(w: PairingWitness) -> DualityTable:
    """H^i of the dual-side complex against H^(n-i) of DR(M).

    Over the self-injective base Z/p^N the divisor multisets coincide
    degreewise; this is the affine, complex-level shadow of duality (the
    proper-space statement needs a trace map and is out of reach here).
    """
    n = w.n
    left = w.source.cohomology(range(n + 1))
    right = dr_complex(w.higgs, check=False).cohomology(range(n + 1))
    rows = []
    symmetric = True
    for i in range(n + 1):
        a, b = left[i], right[n - i]
        rows.append((i, a, b))
        if a.exponents != b.exponents:
            symmetric = False
    return DualityTable(rows, symmetric)
