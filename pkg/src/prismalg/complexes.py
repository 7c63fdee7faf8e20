"""Cochain complexes of finite free modules over a truncated algebra.

Sign discipline (single site for the whole package):

- a "naive" double complex has commuting differentials; its total complex has
  degree-n differential sum(d1 + (-1)^i d2) over cells i+j = n;
- the shift K[n] multiplies every differential by (-1)^n;
- tensor products totalize the naive double complex K^i (x) L^j;
- Hom^n(K, L) = prod Hom(K^-j, L^i) over i+j = n with d(f) = dL o f - (-1)^n f o dK.

Every other construction (mapping cones, de Rham and Cech-Alexander
differentials, duality) routes through these four rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraHom, FreeModuleMap, TruncatedAlgebra, block_map
from .scalars import ElementaryDivisors, ScalarMatrix, homology_at, snf_diagonal


class Complex:
    """Graded free modules with differentials d^i: C^i -> C^(i+1), d^2 = 0."""

    def __init__(self, algebra: TruncatedAlgebra, ranks: dict[int, int],
                 diffs: dict[int, FreeModuleMap], twists: dict[int, int] | None = None,
                 check: bool = True):
        self.algebra = algebra
        self.ranks = {d: r for d, r in ranks.items() if r > 0}
        self.twists = dict(twists) if twists else None
        self.diffs = {}
        for d, f in diffs.items():
            if f is None or self.rank(d) == 0 or self.rank(d + 1) == 0:
                continue
            if (f.rows, f.cols) != (self.rank(d + 1), self.rank(d)):
                raise ValueError(f"differential at degree {d} has shape "
                                 f"{f.rows}x{f.cols}, expected "
                                 f"{self.rank(d + 1)}x{self.rank(d)}")
            if not f.is_zero():
                self.diffs[d] = f
        self._divisor_cache: dict[int, list[int]] = {}
        if check:
            self.check_d_squared()

    # -- shape -------------------------------------------------------------
    @property
    def lo(self) -> int:
        return min(self.ranks, default=0)

    @property
    def hi(self) -> int:
        return max(self.ranks, default=0)

    def degrees(self):
        return range(self.lo, self.hi + 1) if self.ranks else range(0)

    def rank(self, d: int) -> int:
        return self.ranks.get(d, 0)

    def twist(self, d: int) -> int | None:
        return self.twists.get(d) if self.twists else None

    def diff(self, d: int) -> FreeModuleMap:
        f = self.diffs.get(d)
        if f is None:
            return FreeModuleMap.zero(self.algebra, self.rank(d + 1), self.rank(d))
        return f

    def scalar_diff(self, d: int) -> ScalarMatrix:
        B = self.algebra.dim
        f = self.diffs.get(d)
        if f is None:
            return ScalarMatrix.zeros(self.rank(d + 1) * B, self.rank(d) * B,
                                      self.algebra.p, self.algebra.N)
        return f.restrict_scalars()

    def check_d_squared(self):
        for d in list(self.diffs):
            if d + 1 in self.diffs:
                comp = self.scalar_diff(d + 1) @ self.scalar_diff(d)
                if not comp.is_zero():
                    raise ValueError(f"d^2 != 0 between degrees {d} and {d + 2}")

    def __eq__(self, other):
        if not isinstance(other, Complex):
            return NotImplemented
        return self.algebra.compatible(other.algebra) and self.ranks == other.ranks \
            and set(self.diffs) == set(other.diffs) \
            and all(self.diffs[d] == other.diffs[d] for d in self.diffs)

    def __hash__(self):
        return hash((self.algebra._fingerprint, tuple(sorted(self.ranks.items()))))

    def __repr__(self):
        body = ", ".join(f"{d}:{r}" for d, r in sorted(self.ranks.items()))
        return f"Complex({{{body}}} over {self.algebra!r})"

    # -- invariants ----------------------------------------------------------
    def _diff_divisors(self, d: int) -> list[int]:
        if d not in self._divisor_cache:
            self._divisor_cache[d] = snf_diagonal(self.scalar_diff(d))
        return self._divisor_cache[d]

    def cohomology(self, degrees=None) -> dict[int, ElementaryDivisors]:
        out = {}
        for d in (degrees if degrees is not None else self.degrees()):
            out[d] = homology_at(self.scalar_diff(d - 1), self.scalar_diff(d))
        return out

    def acyclicity_defect(self, d: int) -> int:
        """log_p |H^d|, computed from kernel/image orders only."""
        N = self.algebra.N
        B = self.algebra.dim
        out_exps = self._diff_divisors(d)
        cols = self.rank(d) * B
        ker = sum(out_exps) + N * (cols - len(out_exps))
        in_exps = self._diff_divisors(d - 1)
        in_cols = self.rank(d - 1) * B
        im = N * in_cols - (sum(in_exps) + N * (in_cols - len(in_exps)))
        return ker - im

    def is_acyclic(self, degrees) -> bool:
        return all(self.acyclicity_defect(d) == 0 for d in degrees)

    # -- functorial pieces ----------------------------------------------------
    def apply_hom(self, f: AlgebraHom, check: bool = True) -> "Complex":
        return Complex(f.target, dict(self.ranks),
                       {d: m.apply_hom(f) for d, m in self.diffs.items()},
                       twists=self.twists, check=check)

    def restrict_basis(self, masks: dict[int, np.ndarray]) -> "Complex":
        """Quotient complex keeping the masked scalar-basis columns.

        Only valid when the dropped basis elements span a subcomplex (the
        differentials never map kept columns into dropped rows is *not*
        required; dropped rows are projected away).  Used for weight windows,
        where high weight spans a subcomplex and the quotient keeps low weight.
        Returns a scalar-level complex over the base ring Z/p^N (rank counts
        scalar coordinates, algebra = trivial extension).
        """
        from .algebra import make_poly_algebra
        base = make_poly_algebra(self.algebra.p, self.algebra.N, [])
        ranks, diffs = {}, {}
        for d, r in self.ranks.items():
            m = masks.get(d)
            ranks[d] = int(m.sum()) if m is not None else r * self.algebra.dim
        for d in self.degrees():
            if self.rank(d) == 0 or self.rank(d + 1) == 0:
                continue
            mat = self.scalar_diff(d).array
            rows = masks.get(d + 1)
            cols = masks.get(d)
            if rows is not None:
                mat = mat[rows, :]
            if cols is not None:
                mat = mat[:, cols]
            if ranks.get(d, 0) and ranks.get(d + 1, 0):
                diffs[d] = FreeModuleMap(base, mat[:, :, None].astype(np.int64))
        return Complex(base, ranks, diffs, check=True)


def shift(K: Complex, n: int) -> Complex:
    ranks = {d - n: K.rank(d) for d in K.ranks}
    sgn = -1 if n % 2 else 1
    diffs = {d - n: K.diff(d).scale_int(sgn) for d in K.diffs}
    twists = {d - n: t for d, t in (K.twists or {}).items()} if K.twists else None
    return Complex(K.algebra, ranks, diffs, twists=twists, check=False)


# ---------------------------------------------------------------------------
# chain maps and cones


class ChainMap:
    def __init__(self, source: Complex, target: Complex, maps: dict[int, FreeModuleMap],
                 check: bool = True):
        self.source = source
        self.target = target
        self.maps = {d: f for d, f in maps.items()
                     if f is not None and source.rank(d) and target.rank(d)}
        for d, f in self.maps.items():
            if (f.rows, f.cols) != (target.rank(d), source.rank(d)):
                raise ValueError(f"chain map component at degree {d} has wrong shape")
        if check:
            self.check_commutes()

    def map(self, d: int) -> FreeModuleMap:
        f = self.maps.get(d)
        if f is None:
            return FreeModuleMap.zero(self.source.algebra, self.target.rank(d),
                                      self.source.rank(d))
        return f

    def scalar_map(self, d: int) -> ScalarMatrix:
        B = self.source.algebra.dim
        f = self.maps.get(d)
        if f is None:
            return ScalarMatrix.zeros(self.target.rank(d) * B, self.source.rank(d) * B,
                                      self.source.algebra.p, self.source.algebra.N)
        return f.restrict_scalars()

    def check_commutes(self):
        degs = set(self.source.ranks) | set(self.target.ranks)
        for d in degs:
            lhs = self.target.scalar_diff(d) @ self.scalar_map(d)
            rhs = self.scalar_map(d + 1) @ self.source.scalar_diff(d)
            if lhs != rhs:
                raise ValueError(f"does not commute with differentials at degree {d}")


def cone(phi: ChainMap) -> Complex:
    """Mapping cone via the two-column naive double complex, then shift."""
    K, L = phi.source, phi.target
    cells = {}
    d1 = {}
    d2 = {}
    for d in K.ranks:
        cells[(0, d)] = K.rank(d)
    for d in L.ranks:
        cells[(1, d)] = L.rank(d)
    for d in K.degrees():
        if K.rank(d) and L.rank(d) and not phi.map(d).is_zero():
            d1[(0, d)] = phi.map(d)
        if d in K.diffs:
            d2[(0, d)] = K.diffs[d]
    for d in L.diffs:
        d2[(1, d)] = L.diffs[d]
    dc = DoubleComplex(K.algebra, cells, d1, d2, check=False)
    return shift(total_complex(dc, check=False), 1)


def is_quasi_isomorphism(phi: ChainMap, degrees) -> bool:
    return cone(phi).is_acyclic(degrees)


# ---------------------------------------------------------------------------
# double complexes


class DoubleComplex:
    """Commuting-differential double complex: d1 moves i, d2 moves j."""

    def __init__(self, algebra: TruncatedAlgebra, cells: dict[tuple[int, int], int],
                 d1: dict[tuple[int, int], FreeModuleMap],
                 d2: dict[tuple[int, int], FreeModuleMap], check: bool = True):
        self.algebra = algebra
        self.cells = {c: r for c, r in cells.items() if r > 0}
        self.d1 = {c: f for c, f in d1.items() if f is not None and not f.is_zero()}
        self.d2 = {c: f for c, f in d2.items() if f is not None and not f.is_zero()}
        if check:
            self.verify()

    def rank(self, i: int, j: int) -> int:
        return self.cells.get((i, j), 0)

    def _get(self, table, cell, rows_cell):
        f = table.get(cell)
        if f is None:
            return None
        return f

    def _scalar(self, table, cell, target) -> ScalarMatrix:
        B = self.algebra.dim
        f = table.get(cell)
        if f is None:
            return ScalarMatrix.zeros(self.rank(*target) * B, self.rank(*cell) * B,
                                      self.algebra.p, self.algebra.N)
        return f.restrict_scalars()

    def verify(self):
        """d1^2 = 0, d2^2 = 0 and d1 d2 = d2 d1 on every composable pair."""
        for (i, j) in self.cells:
            if self.rank(i + 2, j) and self.rank(i, j):
                a = self._scalar(self.d1, (i + 1, j), (i + 2, j)) @ \
                    self._scalar(self.d1, (i, j), (i + 1, j))
                if not a.is_zero():
                    raise ValueError(f"d1^2 != 0 at cell {(i, j)}")
            if self.rank(i, j + 2) and self.rank(i, j):
                a = self._scalar(self.d2, (i, j + 1), (i, j + 2)) @ \
                    self._scalar(self.d2, (i, j), (i, j + 1))
                if not a.is_zero():
                    raise ValueError(f"d2^2 != 0 at cell {(i, j)}")
            if self.rank(i + 1, j + 1) and self.rank(i, j):
                a = self._scalar(self.d2, (i + 1, j), (i + 1, j + 1)) @ \
                    self._scalar(self.d1, (i, j), (i + 1, j))
                b = self._scalar(self.d1, (i, j + 1), (i + 1, j + 1)) @ \
                    self._scalar(self.d2, (i, j), (i, j + 1))
                if a != b:
                    raise ValueError(f"d1 d2 != d2 d1 at cell {(i, j)}")


def total_complex(D: DoubleComplex, check: bool = True) -> Complex:
    """Simple complex with differential d1 + (-1)^i d2, cells ordered by i."""
    degrees = sorted({i + j for (i, j) in D.cells})
    layout = {n: sorted([c for c in D.cells if sum(c) == n]) for n in degrees}
    ranks = {n: sum(D.cells[c] for c in layout[n]) for n in degrees}
    diffs = {}
    for n in degrees:
        if n + 1 not in layout:
            continue
        rows = layout[n + 1]
        cols = layout[n]
        blocks = {}
        for bj, (i, j) in enumerate(cols):
            if (i + 1, j) in D.cells and (i, j) in D.d1:
                blocks[(rows.index((i + 1, j)), bj)] = D.d1[(i, j)]
            if (i, j + 1) in D.cells and (i, j) in D.d2:
                f = D.d2[(i, j)].scale_int(-1 if i % 2 else 1)
                key = (rows.index((i, j + 1)), bj)
                blocks[key] = blocks[key] + f if key in blocks else f
        diffs[n] = block_map(D.algebra, [D.cells[c] for c in rows],
                             [D.cells[c] for c in cols], blocks)
    return Complex(D.algebra, ranks, diffs, check=check)


# ---------------------------------------------------------------------------
# tensor and Hom


def tensor(K: Complex, L: Complex) -> Complex:
    """Totalization of the naive double complex K^i (x) L^j."""
    if not K.algebra.compatible(L.algebra):
        raise ValueError("tensor needs a common parent algebra")
    cells = {}
    d1 = {}
    d2 = {}
    for i, ri in K.ranks.items():
        for j, rj in L.ranks.items():
            cells[(i, j)] = ri * rj
            if i in K.diffs:
                d1[(i, j)] = K.diffs[i].kron_int(np.eye(rj, dtype=np.int64))
            if j in L.diffs:
                d2[(i, j)] = L.diffs[j].kron_int_pre(np.eye(ri, dtype=np.int64))
    dc = DoubleComplex(K.algebra, cells, d1, d2, check=False)
    return total_complex(dc, check=False)


def hom_complex(K: Complex, L: Complex) -> Complex:
    """Hom^n = sum over s of Hom(K^s, L^(n+s)), flattened target-major."""
    if not K.algebra.compatible(L.algebra):
        raise ValueError("hom needs a common parent algebra")
    alg = K.algebra
    comps = {}  # degree -> sorted list of source degrees s
    for s in K.ranks:
        for t in L.ranks:
            comps.setdefault(t - s, []).append(s)
    for n in comps:
        comps[n] = sorted(comps[n])
    ranks = {n: sum(K.rank(s) * L.rank(n + s) for s in ss) for n, ss in comps.items()}
    diffs = {}
    for n, ss in sorted(comps.items()):
        if n + 1 not in comps:
            continue
        tt = comps[n + 1]
        blocks = {}
        sign = -1 if n % 2 else 1
        for bj, s in enumerate(ss):
            # d_L o f : component s -> component s of degree n+1
            if (n + s) in L.diffs and s in tt:
                blk = L.diffs[n + s].kron_int(np.eye(K.rank(s), dtype=np.int64))
                blocks[(tt.index(s), bj)] = blk
            # -(-1)^n f o d_K : component s -> component s-1
            if (s - 1) in K.diffs and (s - 1) in tt:
                dk_t = K.diffs[s - 1].transpose()
                blk = dk_t.kron_int_pre(np.eye(L.rank(n + s), dtype=np.int64))
                key = (tt.index(s - 1), bj)
                blk = blk.scale_int(-sign)
                blocks[key] = blocks[key] + blk if key in blocks else blk
        diffs[n] = block_map(alg, [K.rank(t) * L.rank(n + 1 + t) for t in tt],
                             [K.rank(s) * L.rank(n + s) for s in ss], blocks)
    return Complex(alg, ranks, diffs, check=True)


# ---------------------------------------------------------------------------
# Koszul complexes


def _subsets(r: int, m: int) -> list[tuple[int, ...]]:
    out = []

    def rec(start, acc):
        if len(acc) == m:
            out.append(tuple(acc))
            return
        for k in range(start, r):
            rec(k + 1, acc + [k])

    rec(0, [])
    return out


def koszul(algebra: TruncatedAlgebra, elements) -> Complex:
    """Koszul complex on f_1..f_r in degrees [-r, 0]: contraction differential
    e_{i1..im} -> sum_k (-1)^(k+1) f_{ik} e_{..hat ik..}."""
    f = list(elements)
    r = len(f)
    ranks = {}
    diffs = {}
    subsets = {m: _subsets(r, m) for m in range(r + 1)}
    index = {m: {S: a for a, S in enumerate(subsets[m])} for m in subsets}
    for m in range(r + 1):
        ranks[-m] = len(subsets[m])
    for m in range(1, r + 1):
        data = np.zeros((len(subsets[m - 1]), len(subsets[m]), algebra.dim), dtype=np.int64)
        for col, S in enumerate(subsets[m]):
            for k, gen in enumerate(S):
                T = S[:k] + S[k + 1:]
                data[index[m - 1][T], col] = ((-1) ** k * f[gen]).vec
        diffs[-m] = FreeModuleMap(algebra, data)
    return Complex(algebra, ranks, diffs, check=True)


def koszul_transition(algebra: TruncatedAlgebra, elements, n: int) -> ChainMap:
    """Multiplication transition Kos(A; f^(n+1)) -> Kos(A; f^n) on basis
    e_S -> (prod_{i in S} f_i) e_S; verified to be a chain map."""
    if n < 1:
        raise ValueError("transition needs n >= 1")
    f = list(elements)
    r = len(f)
    source = koszul(algebra, [x ** (n + 1) for x in f])
    target = koszul(algebra, [x**n for x in f])
    maps = {}
    for m in range(r + 1):
        subs = _subsets(r, m)
        data = np.zeros((len(subs), len(subs), algebra.dim), dtype=np.int64)
        for a, S in enumerate(subs):
            prod = algebra.one()
            for i in S:
                prod = prod * f[i]
            data[a, a] = prod.vec
        maps[-m] = FreeModuleMap(algebra, data)
    return ChainMap(source, target, maps, check=True)


# ---------------------------------------------------------------------------
# homotopies


@dataclass
class HomotopyReport:
    ok: bool
    checked: int
    failures: list[tuple[int, int]] = field(default_factory=list)

    def __bool__(self):
        return self.ok


def check_homotopy(h: dict[int, FreeModuleMap], f: ChainMap, g: ChainMap,
                   window: dict[int, np.ndarray] | None = None) -> HomotopyReport:
    """Verify dh + hd = f - g on the windowed scalar basis columns.

    h maps degree d to degree d-1 of the target; window[d] is a boolean mask
    over the scalar basis of the source in degree d (absent = all columns).
    """
    K, L = f.source, f.target
    B = K.algebra.dim
    checked = 0
    failures = []

    def h_scalar(d):
        m = h.get(d)
        if m is None:
            return ScalarMatrix.zeros(L.rank(d - 1) * B, K.rank(d) * B,
                                      K.algebra.p, K.algebra.N)
        return m.restrict_scalars()

    for d in K.degrees():
        if K.rank(d) == 0:
            continue
        lhs = (L.scalar_diff(d - 1) @ h_scalar(d)) + (h_scalar(d + 1) @ K.scalar_diff(d))
        rhs = f.scalar_map(d) - g.scalar_map(d)
        mask = window.get(d) if window else None
        cols = np.nonzero(mask)[0] if mask is not None else range(K.rank(d) * B)
        for c in cols:
            checked += 1
            if not np.array_equal(lhs.array[:, c], rhs.array[:, c]):
                failures.append((d, int(c)))
    return HomotopyReport(not failures, checked, failures)
