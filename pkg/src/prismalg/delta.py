"""Delta-ring structures on truncated algebras.

A delta structure is stored as two exact tables over the monomial basis:
phi(m) and delta(m) with phi(m) = m^p + p*delta(m) on the nose.  phi is a ring
map (identity on Z/p^N scalars); delta extends to arbitrary elements through
the usual rules

    delta(x+y) = delta(x) + delta(y) - sum_{0<i<p} (1/p) C(p,i) x^i y^(p-i)
    delta(xy)  = x^p delta(y) + y^p delta(x) + p delta(x) delta(y)

folded over the monomial terms in basis order.  Scalars use the canonical
integer lift: delta(c) = (c - c^p)/p computed in Z, then reduced.  On Z/p^N
delta is only canonical mod p^(N-1); every delta-dependent assertion in the
test suite compares at that precision, while the phi/delta tables themselves
satisfy their defining relation exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    POLY,
    PD,
    AlgebraElement,
    AlgebraHom,
    TruncatedAlgebra,
    algebra_hom,
    make_poly_algebra,
    pd_divided_power,
)
from .scalars import factorial_split


def _scalar_delta(c: int, p: int, N: int) -> int:
    """delta on a base scalar via the canonical lift in [0, p^N)."""
    mod = p**N
    c = c % mod
    return ((c - c**p) // p) % mod


class DeltaStructure:
    """phi/delta tables over the monomial basis of a truncated algebra."""

    def __init__(self, algebra: TruncatedAlgebra, delta_gens: dict[str, AlgebraElement],
                 _tables: tuple[list, list] | None = None):
        self.algebra = algebra
        self.p, self.N, self.mod = algebra.p, algebra.N, algebra.mod
        self.delta_gens = dict(delta_gens)
        if _tables is not None:
            self.phi_mono, self.delta_mono = _tables
        else:
            if any(g.kind == PD for g in algebra.gens):
                raise ValueError("divided-power generators need the crystalline "
                                 "construction, not the generic one")
            missing = [g.name for g in algebra.gens if g.name not in delta_gens]
            if missing:
                raise ValueError(f"missing delta values for generators: {missing}")
            self.phi_mono, self.delta_mono = self._build_poly_tables()
        self._phi_matrix = None
        self._pow_p = {}

    # -- construction ---------------------------------------------------------
    def _build_poly_tables(self):
        alg = self.algebra
        # phi as a ring map; the hom constructor rejects generator images that
        # violate truncation, which is exactly the delta-compatibility needed
        images = {}
        for g in alg.gens:
            gen = alg.gen(g.name)
            images[g.name] = gen**self.p + self.p * self.delta_gens[g.name]
        self._phi_hom = algebra_hom(alg, alg, images, check=True)

        one = alg.one()
        phi_tab = [None] * alg.dim
        delta_tab = [None] * alg.dim
        unit_idx = alg._index[tuple([0] * len(alg.gens))]
        phi_tab[unit_idx] = one
        delta_tab[unit_idx] = alg.zero()

        gens = [alg.gen(g.name) for g in alg.gens]
        for i, exps in enumerate(alg.basis):
            if phi_tab[i] is not None:
                continue
            g = next(k for k, e in enumerate(exps) if e)
            prev = list(exps)
            prev[g] -= 1
            j = alg._index[tuple(prev)]
            val_prev = alg.element({tuple(prev): 1})
            phi_tab[i] = phi_tab[j] * self._phi_hom.images[alg.gens[g].name]
            # delta(g * m') = g^p delta(m') + m'^p delta(g) + p delta(g) delta(m')
            dg = self.delta_gens[alg.gens[g].name]
            delta_tab[i] = (gens[g] ** self.p) * delta_tab[j] \
                + (val_prev ** self.p) * dg + self.p * dg * delta_tab[j]
        return phi_tab, delta_tab

    # -- phi -------------------------------------------------------------------
    @property
    def phi_matrix(self) -> np.ndarray:
        if self._phi_matrix is None:
            mat = np.zeros((self.algebra.dim, self.algebra.dim), dtype=np.int64)
            for j, el in enumerate(self.phi_mono):
                mat[:, j] = el.vec
            self._phi_matrix = mat
        return self._phi_matrix

    def frobenius(self, x: AlgebraElement) -> AlgebraElement:
        self.algebra._require_compatible(x.algebra)
        return AlgebraElement(self.algebra, self.phi_matrix @ x.vec % self.mod)

    def _basis_pow_p(self, i: int) -> AlgebraElement:
        hit = self._pow_p.get(i)
        if hit is None:
            hit = self.algebra.element({self.algebra.basis[i]: 1}) ** self.p
            self._pow_p[i] = hit
        return hit

    # -- delta -----------------------------------------------------------------
    def delta(self, x: AlgebraElement) -> AlgebraElement:
        """Fold the addition rule over the monomial terms of x (basis order)."""
        self.algebra._require_compatible(x.algebra)
        alg, p = self.algebra, self.p
        nz = np.nonzero(x.vec)[0]
        if nz.size == 0:
            return alg.zero()
        acc_val = None
        acc_delta = None
        for i in nz:
            c = int(x.vec[i])
            mono = alg.element({alg.basis[int(i)]: 1})
            term = c * mono
            dc = _scalar_delta(c, p, self.N)
            dterm = pow(c, p, self.mod) * self.delta_mono[int(i)] \
                + dc * self._basis_pow_p(int(i)) \
                + (p * dc) * self.delta_mono[int(i)]
            if acc_val is None:
                acc_val, acc_delta = term, dterm
                continue
            cross = alg.zero()
            xpow = acc_val
            for k in range(1, p):
                ypow = term ** (p - k)
                cross = cross + (math.comb(p, k) // p) * (xpow * ypow)
                xpow = xpow * acc_val if k < p - 1 else xpow
            acc_delta = acc_delta + dterm - cross
            acc_val = acc_val + term
        return acc_delta

    def delta_of_basis(self, i: int) -> AlgebraElement:
        return self.delta_mono[i]

    def phi_of_basis(self, i: int) -> AlgebraElement:
        return self.phi_mono[i]


def delta(x: AlgebraElement, D: DeltaStructure) -> AlgebraElement:
    return D.delta(x)


def frobenius(x: AlgebraElement, D: DeltaStructure) -> AlgebraElement:
    return D.frobenius(x)


# ---------------------------------------------------------------------------
# axiom checking


@dataclass
class DeltaAxiomReport:
    ok: bool
    trials: int
    failures: list[str]

    def __bool__(self):
        return self.ok


def _congruent(a: AlgebraElement, b: AlgebraElement, mod: int) -> bool:
    return bool(np.all((a.vec - b.vec) % mod == 0))


def check_delta_axioms(D: DeltaStructure, trials: int = 200, seed: int = 0) -> DeltaAxiomReport:
    """Randomized check of the delta-ring laws at precision N-1 and of
    phi(x) = x^p mod p exactly."""
    alg, p, N = D.algebra, D.p, D.N
    weak = p ** (N - 1)
    rng = np.random.default_rng(seed)
    failures = []
    for t in range(trials):
        x = alg.random_element(rng)
        y = alg.random_element(rng)
        cross = alg.zero()
        for k in range(1, p):
            cross = cross + (math.comb(p, k) // p) * (x**k * y ** (p - k))
        if not _congruent(D.delta(x + y), D.delta(x) + D.delta(y) - cross, weak):
            failures.append(f"trial {t}: delta(x+y) law fails")
        lhs = D.delta(x * y)
        rhs = (x**p) * D.delta(y) + (y**p) * D.delta(x) + p * D.delta(x) * D.delta(y)
        if not _congruent(lhs, rhs, weak):
            failures.append(f"trial {t}: delta(xy) law fails")
        if not _congruent(D.frobenius(x * y), D.frobenius(x) * D.frobenius(y), weak):
            failures.append(f"trial {t}: phi multiplicativity fails")
        if not _congruent(D.frobenius(x), x**p, p):
            failures.append(f"trial {t}: phi(x) != x^p mod p")
        if failures:
            break
    return DeltaAxiomReport(not failures, trials, failures)


# ---------------------------------------------------------------------------
# the diagonal delta and the crystalline divided-power Frobenius


def delta_xi(R: TruncatedAlgebra, f_list: list[AlgebraElement], i: int,
             xi_cap: int | None = None) -> tuple[TruncatedAlgebra, AlgebraElement]:
    """delta of xi_i in the xi-extended polynomial algebra.

    With delta(T_k) = f_k(T) on the coordinate algebra, the diagonal variables
    xi_k pick up

        delta(xi_i) = sum_{0<j<p} (1/p) C(p,j) xi_i^j T_i^(p-j)
                      + f_i(T + xi) - f_i(T),

    an element of the ideal (xi_1, ..., xi_n).  Substitution T -> T + xi is
    formal (coefficientwise), matching the truncated model where overflowing
    T-powers vanish on both sides.  Returns (extended algebra, element).
    """
    p = R.p
    n = len(R.gens)
    if not 0 <= i < n:
        raise ValueError(f"coordinate index {i} out of range")
    if len(f_list) != n:
        raise ValueError("need one delta-image per coordinate")
    if any(g.kind != POLY for g in R.gens):
        raise ValueError("delta_xi expects a polynomial coordinate algebra")
    cap = xi_cap if xi_cap is not None else max(p, *(g.cap for g in R.gens))
    names = [g.name for g in R.gens]
    theta = make_poly_algebra(R.p, R.N, [(g.name, g.cap) for g in R.gens]
                              + [(f"xi{k+1}", cap) for k in range(n)],
                              rewrites=dict(R.rewrites) or None)

    def lift(x: AlgebraElement, shifted: bool) -> AlgebraElement:
        out = theta.zero()
        for idx in np.nonzero(x.vec)[0]:
            exps = R.basis[int(idx)]
            term = theta.scalar(int(x.vec[idx]))
            for k, e in enumerate(exps):
                if not e:
                    continue
                base = theta.gen(names[k])
                if shifted:
                    base = base + theta.gen(f"xi{k+1}")
                term = term * base**e
            out = out + term
        return out

    Ti = theta.gen(names[i])
    xi = theta.gen(f"xi{i+1}")
    out = theta.zero()
    for j in range(1, p):
        out = out + (math.comb(p, j) // p) * (xi**j * Ti ** (p - j))
    out = out + lift(f_list[i], shifted=True) - lift(f_list[i], shifted=False)
    return theta, out


def _transport_xi_poly(x: AlgebraElement, theta: TruncatedAlgebra,
                       RPD: TruncatedAlgebra, drop_one_p: bool) -> AlgebraElement:
    """Send T^a xi^b in the xi-extended algebra to p^(|b|) b! T^a (xi/p)^[b]
    in the divided-power model (one factor of p dropped when requested, which
    needs |b| >= 1 on every term)."""
    p = RPD.p
    npoly = sum(1 for g in RPD.gens if g.kind == POLY)
    out = RPD.zero()
    for idx in np.nonzero(x.vec)[0]:
        exps = theta.basis[int(idx)]
        a, b = exps[:npoly], exps[npoly:]
        wb = sum(b)
        if wb == 0:
            raise ValueError("element does not lie in the diagonal ideal")
        c = int(x.vec[idx])
        power = wb - 1 if drop_one_p else wb
        for e in b:
            c *= math.factorial(e)
        c = c * pow(p, power, RPD.mod) % RPD.mod
        target = a + b
        if tuple(target) in RPD._index:
            out = out + RPD.element({tuple(target): c})
        # else: truncated by the weight cap
    return out


def crystalline_pd_frobenius(RPD: TruncatedAlgebra, D_R: DeltaStructure,
                             mode: str = "crystalline") -> DeltaStructure:
    """Frobenius lift on the truncated divided-power ring R{xi/p}^PD, d = p.

    phi extends phi_R by phi(xi_i/p) = p^(p-1) (xi_i/p)^p + delta(xi_i) and
    phi((xi_i/p)^[m]) = (p^m / m!) y_i^m where phi(xi_i/p) = p y_i.  The
    delta table is assembled per monomial with the product rule, keeping
    phi(m) = m^p + p delta(m) exact.
    """
    if mode != "crystalline":
        raise ValueError("the divided-power Frobenius needs the crystalline prism (d = p)")
    R = D_R.algebra
    p, N, mod = RPD.p, RPD.N, RPD.mod
    poly_gens = [g for g in RPD.gens if g.kind == POLY]
    pd_gens = [g for g in RPD.gens if g.kind == PD]
    if [g.name for g in poly_gens] != [g.name for g in R.gens]:
        raise ValueError("RPD must extend the coordinate algebra of D_R")
    n = len(pd_gens)
    W = RPD.weight_cap
    include = algebra_hom(R, RPD, {g.name: RPD.gen(g.name) for g in R.gens}, check=False)

    # y_i = phi(xi_i/p) / p, assembled with the factor of p divided off exactly
    f_list = [D_R.delta_gens[g.name] for g in R.gens]
    ys = []
    for i in range(n):
        theta, dxi = delta_xi(R, f_list, i)
        y = _transport_xi_poly(dxi, theta, RPD, drop_one_p=True)
        xi_p = pd_divided_power(RPD.gen(pd_gens[i].name), p)  # (xi/p)^[p], 0 if p >= W
        y = y + (pow(p, p - 2, mod) * math.factorial(p) % mod) * xi_p
        ys.append(y)

    # per-generator factor tables: (value, phi, delta) for (xi_i/p)^[m]
    factor = []
    for i, g in enumerate(pd_gens):
        rows = {}
        ypow = RPD.one()
        for m in range(1, W):
            ypow = ypow * ys[i]
            v, u = factorial_split(m, p)
            uinv = pow(u % mod, -1, mod)
            phi_m = pow(p, m - v, mod) * uinv % mod * ypow
            div_phi = pow(p, m - v - 1, mod) * uinv % mod * ypow
            Cm = math.factorial(m * p) // math.factorial(m) ** p
            xstr = [0] * len(RPD.gens)
            xstr[len(poly_gens) + i] = m * p
            x_mp = RPD.element({tuple(xstr): 1}) if tuple(xstr) in RPD._index else RPD.zero()
            delta_m = div_phi - (Cm // p % mod) * x_mp
            value = RPD.element({tuple(0 if k != len(poly_gens) + i else m
                                       for k in range(len(RPD.gens))): 1})
            rows[m] = (value, phi_m, delta_m)
        factor.append(rows)

    phi_tab = [None] * RPD.dim
    delta_tab = [None] * RPD.dim
    for idx, exps in enumerate(RPD.basis):
        a = exps[: len(poly_gens)]
        r_idx = R._index[tuple(a)]
        val = include(R.element({tuple(a): 1}))
        ph = include(D_R.phi_of_basis(r_idx))
        dl = include(D_R.delta_of_basis(r_idx))
        for i in range(n):
            m = exps[len(poly_gens) + i]
            if not m:
                continue
            fv, fphi, fdelta = factor[i][m]
            # product rule: delta(uv) = u^p delta(v) + v^p delta(u) + p du dv
            dl = (val**p) * fdelta + (fv**p) * dl + p * dl * fdelta
            ph = ph * fphi
            val = val * fv
        phi_tab[idx] = ph
        delta_tab[idx] = dl
    gens_delta = dict(D_R.delta_gens)
    for i, g in enumerate(pd_gens):
        e = [0] * len(RPD.gens)
        e[len(poly_gens) + i] = 1
        key = tuple(e)
        gens_delta[g.name] = delta_tab[RPD._index[key]] if key in RPD._index else RPD.zero()
    return DeltaStructure(RPD, gens_delta, _tables=(phi_tab, delta_tab))


def gamma_p(x: AlgebraElement, D: DeltaStructure) -> AlgebraElement:
    """gamma_p(x) = -delta(x) / (p-1)! on the divided-power ideal."""
    alg = D.algebra
    alg._require_compatible(x.algebra)
    if not x.is_zero():
        weights = x.pd_weight_support()
        if 0 in weights:
            raise ValueError("gamma_p needs an element of the divided-power ideal")
    _, u = factorial_split(D.p - 1, D.p)
    uinv = pow(u % D.mod, -1, D.mod)
    return (-uinv) * D.delta(x)
