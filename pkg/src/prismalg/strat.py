"""Stratifications over the truncated divided-power cosimplicial rings.

The tower R^PD(m) adjoins n*m divided-power generators xi_{i,j} (coordinate i,
copy j) of total weight < W to the coordinate ring R.  Monotone simplex maps
[m] -> [m'] push forward by xi_{i,j} -> sum of xi_{i,s} over s in
(f(j-1), f(j)], the reduction of T_{i,j} -> T_{i,f(j)}.

A stratification is an endomorphism matrix over R^PD(1) with unit weight-0
part and the cocycle identity over R^PD(2).  The dictionary with Higgs fields:

    eps  = sum_m theta^m (x) (xi/d)^[m]        (finite: theta is nilpotent)
    eps' = sum_m (-1)^|m| theta^m (x) (xi/d)^[m]   is its inverse
    theta_i = coefficient of (xi_i/d)^[1] in eps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    PD,
    POLY,
    AlgebraHom,
    FreeModuleMap,
    GeneratorSpec,
    TruncatedAlgebra,
    algebra_hom,
)
from .higgs import HiggsModule, check_higgs, compositions


@dataclass(frozen=True, slots=True)
class SimplexMap:
    """A monotone map [m] -> [m'], stored as the value tuple (f(0)..f(m))."""

    values: tuple[int, ...]
    target: int

    def __post_init__(self):
        if not self.values:
            raise ValueError("simplex maps need a nonempty source")
        if any(b < a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("simplex map must be monotone")
        if self.values[0] < 0 or self.values[-1] > self.target:
            raise ValueError("simplex map values out of range")

    @property
    def source(self) -> int:
        return len(self.values) - 1

    def __call__(self, k: int) -> int:
        return self.values[k]

    def compose(self, inner: "SimplexMap") -> "SimplexMap":
        """self o inner."""
        if inner.target != self.source:
            raise ValueError("simplex maps are not composable")
        return SimplexMap(tuple(self(v) for v in inner.values), self.target)


def coface(m: int, k: int) -> SimplexMap:
    """The injection [m-1] -> [m] skipping k."""
    if not 0 <= k <= m:
        raise ValueError("coface index out of range")
    return SimplexMap(tuple(v if v < k else v + 1 for v in range(m)), m)


def degeneracy(m: int, k: int) -> SimplexMap:
    """The surjection [m+1] -> [m] hitting k twice."""
    if not 0 <= k <= m:
        raise ValueError("degeneracy index out of range")
    return SimplexMap(tuple(v if v <= k else v - 1 for v in range(m + 2)), m)


class PDTower:
    """Cached levels R^PD(m) over a polynomial coordinate ring."""

    def __init__(self, R: TruncatedAlgebra, n: int, W: int):
        if any(g.kind != POLY for g in R.gens):
            raise ValueError("the coordinate ring must be polynomial")
        if W < 1:
            raise ValueError("weight cap must be >= 1")
        self.R = R
        self.n = n
        self.W = W
        self._levels: dict[int, TruncatedAlgebra] = {0: R}
        self._homs: dict[tuple, AlgebraHom] = {}

    def level(self, m: int) -> TruncatedAlgebra:
        if m not in self._levels:
            pd = [GeneratorSpec(f"xi{i+1}_{j+1}", PD, self.W)
                  for j in range(m) for i in range(self.n)]
            self._levels[m] = TruncatedAlgebra(
                self.R.p, self.R.N, tuple(self.R.gens) + tuple(pd),
                weight_cap=self.W, rewrites=dict(self.R.rewrites))
        return self._levels[m]

    def pd_exponent_tuple(self, m: int, multi: dict[tuple[int, int], int]) -> tuple[int, ...]:
        """Exponent tuple of the level-m algebra for R-exponents zero and the
        given divided-power exponents {(i, j): e} (1-based coordinates/copies)."""
        npoly = len(self.R.gens)
        e = [0] * (npoly + self.n * m)
        for (i, j), v in multi.items():
            e[npoly + (j - 1) * self.n + (i - 1)] = v
        return tuple(e)

    def pushforward(self, f: SimplexMap) -> AlgebraHom:
        """Ring map level(source) -> level(target) for a monotone simplex map."""
        key = (f.values, f.target)
        if key in self._homs:
            return self._homs[key]
        src = self.level(f.source)
        dst = self.level(f.target)
        images = {g.name: dst.gen(g.name) for g in self.R.gens}
        for j in range(1, f.source + 1):
            lo, hi = f(j - 1), f(j)
            for i in range(1, self.n + 1):
                acc = dst.zero()
                for s in range(lo + 1, hi + 1):
                    acc = acc + dst.gen(f"xi{i}_{s}")
                images[f"xi{i}_{j}"] = acc
        hom = algebra_hom(src, dst, images, check=True)
        self._homs[key] = hom
        return hom


def simplex_pushforward(tower: PDTower, f: SimplexMap) -> AlgebraHom:
    return tower.pushforward(f)


# ---------------------------------------------------------------------------
# stratification data


@dataclass
class CocycleReport:
    ok: bool
    unit_part_ok: bool
    failures: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok


class Stratification:
    """An endomorphism matrix over R^PD(1) with descent bookkeeping."""

    def __init__(self, tower: PDTower, rank: int, eps: FreeModuleMap):
        if not eps.algebra.compatible(tower.level(1)):
            raise ValueError("stratification matrix must live over level 1")
        if (eps.rows, eps.cols) != (rank, rank):
            raise ValueError("stratification matrix has the wrong shape")
        self.tower = tower
        self.rank = rank
        self.eps = eps
        self.cocycle_checked = False
        self.cocycle_ok: bool | None = None

    def weight0_part(self) -> np.ndarray:
        """The R-matrix of the weight-0 part, as a (rank, rank, dim R) array."""
        A1 = self.tower.level(1)
        R = self.tower.R
        npoly = len(R.gens)
        out = np.zeros((self.rank, self.rank, R.dim), dtype=np.int64)
        for b, exps in enumerate(A1.basis):
            if sum(exps[npoly:]) == 0:
                out[:, :, R._index[exps[:npoly]]] = self.eps.data[:, :, b]
        return out


def epsilon_from_theta(H: HiggsModule, W: int, tower: PDTower | None = None,
                       nil_bound: int = 32) -> Stratification:
    """eps = sum over multi-indices m of theta^m (x) (xi/d)^[m].

    Refused (not silently truncated) when the weight cap would drop nonzero
    terms, i.e. unless W exceeds the certified nilpotency length of theta.
    """
    tower = tower or PDTower(H.algebra, H.n, W)
    if tower.W != W or tower.n != H.n or not tower.R.compatible(H.algebra):
        raise ValueError("tower does not match the Higgs module")
    Wt = H.certify_nilpotency(nil_bound)
    if Wt is None:
        raise ValueError(f"no nilpotency certificate within bound {nil_bound}")
    if W <= Wt:
        raise ValueError(f"weight cap {W} would truncate the series "
                         f"(nilpotency length {Wt}); refusing")
    A1 = tower.level(1)
    npoly = len(tower.R.gens)
    data = np.zeros((H.rank, H.rank, A1.dim), dtype=np.int64)
    for weight in range(0, min(W, Wt + 1)):
        for m in compositions(weight, H.n):
            word = H.theta_word(m)
            if word.is_zero():
                continue
            pd = tower.pd_exponent_tuple(1, {(i + 1, 1): v for i, v in enumerate(m)})
            for rb in range(tower.R.dim):
                col = word.data[:, :, rb]
                if not col.any():
                    continue
                exps = tower.R.basis[rb] + pd[npoly:]
                data[:, :, A1._index[exps]] += col
    return Stratification(tower, H.rank, FreeModuleMap(A1, data))


def epsilon_inverse(S: Stratification, H: HiggsModule | None = None) -> FreeModuleMap:
    """The alternating-sign series; verified to invert eps on both sides."""
    tower = S.tower
    if H is None:
        H = theta_from_epsilon(S)
    A1 = tower.level(1)
    npoly = len(tower.R.gens)
    Wt = H.certify_nilpotency()
    data = np.zeros((H.rank, H.rank, A1.dim), dtype=np.int64)
    for weight in range(0, min(tower.W, (Wt or 0) + 1)):
        sign = (-1) ** weight
        for m in compositions(weight, H.n):
            word = H.theta_word(m)
            if word.is_zero():
                continue
            pd = tower.pd_exponent_tuple(1, {(i + 1, 1): v for i, v in enumerate(m)})
            for rb in range(tower.R.dim):
                col = word.data[:, :, rb]
                if not col.any():
                    continue
                exps = tower.R.basis[rb] + pd[npoly:]
                data[:, :, A1._index[exps]] += sign * col
    eps_inv = FreeModuleMap(A1, data)
    ident = FreeModuleMap.identity(A1, S.rank)
    if eps_inv @ S.eps != ident or S.eps @ eps_inv != ident:
        raise ValueError("inverse verification failed (weight cap or sign bug)")
    return eps_inv


def theta_from_epsilon(S: Stratification, nil_bound: int = 32) -> HiggsModule:
    """Extract theta_i as the coefficient of (xi_i/d)^[1]; validity checked."""
    tower = S.tower
    R = tower.R
    npoly = len(R.gens)
    w0 = S.weight0_part()
    ident = FreeModuleMap.identity(R, S.rank)
    if FreeModuleMap(R, w0) != ident:
        raise ValueError("weight-0 part of the stratification is not the identity")
    A1 = tower.level(1)
    thetas = []
    for i in range(1, tower.n + 1):
        data = np.zeros((S.rank, S.rank, R.dim), dtype=np.int64)
        for b, exps in enumerate(A1.basis):
            pdpart = exps[npoly:]
            if sum(pdpart) == 1 and pdpart[i - 1] == 1:
                data[:, :, R._index[exps[:npoly]]] = S.eps.data[:, :, b]
        thetas.append(FreeModuleMap(R, data))
    H = HiggsModule(R, S.rank, thetas, check=True)
    rep = check_higgs(H, bound=nil_bound)
    if not rep.ok:
        raise ValueError("extracted field fails validity: " + "; ".join(rep.failures))
    return H


def check_cocycle(S: Stratification) -> CocycleReport:
    """mu^*(eps) = id and the coface cocycle over level 2, entrywise."""
    tower = S.tower
    failures = []
    # unit part (redundant given the cocycle, but cheap and catches bugs early)
    mu = tower.pushforward(degeneracy(0, 0))
    ident0 = FreeModuleMap.identity(tower.R, S.rank)
    unit_ok = S.eps.apply_hom(mu) == ident0
    if not unit_ok:
        failures.append("mu^*(eps) != id")
    d0 = tower.pushforward(coface(2, 0))
    d1 = tower.pushforward(coface(2, 1))
    d2 = tower.pushforward(coface(2, 2))
    lhs = S.eps.apply_hom(d1)
    rhs = S.eps.apply_hom(d2) @ S.eps.apply_hom(d0)
    if lhs != rhs:
        diff = (lhs - rhs).data
        ent = np.argwhere(diff.any(axis=2))
        r, c = (int(x) for x in ent[0])
        b = int(np.nonzero(diff[r, c])[0][0])
        mono = tower.level(2).basis[b]
        failures.append(f"cocycle fails at entry ({r},{c}), monomial {mono}")
    S.cocycle_checked = True
    S.cocycle_ok = not failures
    return CocycleReport(not failures, unit_ok, failures)
