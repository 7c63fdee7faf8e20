"""Finite-basis commutative algebras over Z/p^N.

An algebra here is a quotient of a polynomial / divided-power ring by a
monomial truncation ideal: each generator carries an exponent cap, divided
power generators multiply through binomials (x^[a] x^[b] = C(a+b,a) x^[a+b]),
and an optional total-weight cap truncates all divided-power monomials at once.
Truncation ideals are monomial ideals, so multiplication is exact and closed.

One controlled extension: a generator may carry a rewrite rule
g^cap = sum_j c_j g^j with integer coefficients, used for the q-de Rham base
ring Z/p^N[q]/((q-1)^K, 1+q+...+q^(p-1)).  Rewrites must terminate into the
monomial basis, which the constructor verifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .scalars import ScalarMatrix, Scalar, _check_base, _dtype_for, matmul_mod

POLY = "polynomial"
PD = "divided-power"


@dataclass(frozen=True, slots=True)
class GeneratorSpec:
    """A named generator with a kind and an exclusive exponent cap."""

    name: str
    kind: str
    cap: int

    def __post_init__(self):
        if self.kind not in (POLY, PD):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.cap < 1:
            raise ValueError(f"cap must be >= 1, got {self.cap}")
        if not self.name or any(ch.isspace() for ch in self.name):
            raise ValueError(f"bad generator name {self.name!r}")


@dataclass(frozen=True, slots=True)
class TwistTag:
    """Integer twist bookkeeping.  The underlying module is identified via a
    power of the distinguished generator, so tags never change matrices; they
    are asserted equal at composition and pairing boundaries."""

    i: int

    def __add__(self, other: "TwistTag") -> "TwistTag":
        return TwistTag(self.i + other.i)

    def __neg__(self) -> "TwistTag":
        return TwistTag(-self.i)


class TruncatedAlgebra:
    """Commutative Z/p^N-algebra with a finite graded-lex monomial basis."""

    def __init__(self, p: int, N: int, gens: Sequence[GeneratorSpec],
                 weight_cap: int | None = None,
                 rewrites: dict[str, Sequence[int]] | None = None):
        _check_base(p, N)
        if weight_cap is not None and weight_cap < 1:
            raise ValueError("weight_cap must be >= 1")
        names = [g.name for g in gens]
        if len(set(names)) != len(names):
            raise ValueError("duplicate generator names")
        self.p = p
        self.N = N
        self.mod = p**N
        self.gens = tuple(gens)
        self.weight_cap = weight_cap
        self.rewrites = {k: tuple(int(c) for c in v) for k, v in (rewrites or {}).items()}
        for name, coeffs in self.rewrites.items():
            idx = names.index(name)
            if self.gens[idx].kind != POLY:
                raise ValueError("rewrite rules only apply to polynomial generators")
            if len(coeffs) > self.gens[idx].cap:
                raise ValueError("rewrite polynomial must have degree below the cap")

        self._name_to_idx = {g.name: i for i, g in enumerate(self.gens)}
        self._pd_idx = np.array([i for i, g in enumerate(self.gens) if g.kind == PD], dtype=np.int64)
        self._caps = np.array([g.cap for g in self.gens], dtype=np.int64)

        self.basis = self._enumerate_basis()
        self.dim = len(self.basis)
        self._exps = np.array(self.basis, dtype=np.int64).reshape(self.dim, len(self.gens))
        self._index = {b: i for i, b in enumerate(self.basis)}
        self._mono_cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
        self._op_cache: dict[int, np.ndarray] = {}
        self._table = None
        self._fingerprint = (p, N, self.gens, weight_cap, tuple(sorted(self.rewrites.items())))

    # -- construction helpers ------------------------------------------------
    def _enumerate_basis(self) -> list[tuple[int, ...]]:
        ranges = [range(g.cap) for g in self.gens]
        pd = [i for i, g in enumerate(self.gens) if g.kind == PD]
        out = []
        for exps in _product(ranges):
            if self.weight_cap is not None and sum(exps[i] for i in pd) >= self.weight_cap:
                continue
            out.append(exps)
        out.sort(key=lambda e: (sum(e), e))
        return out

    def _reduce_exponents(self, e: np.ndarray, coeff: int) -> dict[tuple[int, ...], int]:
        """Rewrite an exponent vector with an integer coefficient into the
        basis, returning a sparse {exponent tuple: coeff} dictionary."""
        out: dict[tuple[int, ...], int] = {}
        stack = [(tuple(int(x) for x in e), coeff % self.mod)]
        while stack:
            exps, c = stack.pop()
            if c % self.mod == 0:
                continue
            over = next((i for i, x in enumerate(exps)
                         if x >= self.gens[i].cap and self.gens[i].name in self.rewrites), None)
            if over is None:
                if any(x >= self.gens[i].cap for i, x in enumerate(exps)):
                    continue  # plain monomial truncation
                if self.weight_cap is not None and \
                        sum(exps[i] for i in self._pd_idx) >= self.weight_cap:
                    continue
                out[exps] = (out.get(exps, 0) + c) % self.mod
                continue
            rule = self.rewrites[self.gens[over].name]
            base = list(exps)
            base[over] -= self.gens[over].cap
            for j, cj in enumerate(rule):
                if cj % self.mod == 0:
                    continue
                nxt = list(base)
                nxt[over] += j
                stack.append((tuple(nxt), (c * cj) % self.mod))
        return {k: v for k, v in out.items() if v % self.mod}

    # -- identity / comparison ----------------------------------------------
    def compatible(self, other: "TruncatedAlgebra") -> bool:
        return self._fingerprint == other._fingerprint

    def _require_compatible(self, other: "TruncatedAlgebra") -> None:
        if not self.compatible(other):
            raise ValueError("elements belong to different algebras")

    def __repr__(self):
        gens = ", ".join(f"{g.name}[{g.cap}]" if g.kind == PD else f"{g.name}^{g.cap}"
                         for g in self.gens)
        w = f", W={self.weight_cap}" if self.weight_cap is not None else ""
        return f"TruncatedAlgebra(Z/{self.p}^{self.N}; {gens}{w})"

    # -- basic elements -------------------------------------------------------
    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, np.zeros(self.dim, dtype=np.int64))

    def one(self) -> "AlgebraElement":
        v = np.zeros(self.dim, dtype=np.int64)
        v[self._index[tuple([0] * len(self.gens))]] = 1
        return AlgebraElement(self, v)

    def scalar(self, c: int) -> "AlgebraElement":
        return self.one() * (c % self.mod)

    def gen(self, name: str) -> "AlgebraElement":
        i = self._name_to_idx[name]
        e = np.zeros(len(self.gens), dtype=np.int64)
        e[i] = 1
        reduced = self._reduce_exponents(e, 1) if self.rewrites else self._plain_lookup(e, 1)
        return self.element(dict(reduced))

    def element(self, coeffs: dict[tuple[int, ...], int] | np.ndarray) -> "AlgebraElement":
        if isinstance(coeffs, dict):
            v = np.zeros(self.dim, dtype=np.int64)
            for exps, c in coeffs.items():
                v[self._index[tuple(exps)]] = c % self.mod
            return AlgebraElement(self, v)
        return AlgebraElement(self, np.asarray(coeffs, dtype=np.int64) % self.mod)

    def random_element(self, rng: np.random.Generator) -> "AlgebraElement":
        return AlgebraElement(self, rng.integers(0, self.mod, size=self.dim, dtype=np.int64))

    # -- monomial structure ----------------------------------------------------
    def monomial_exponents(self, i: int) -> tuple[int, ...]:
        return self.basis[i]

    def pd_weight_of(self, i: int) -> int:
        e = self._exps[i]
        return int(e[self._pd_idx].sum()) if self._pd_idx.size else 0

    def pd_weights(self) -> np.ndarray:
        if self._pd_idx.size:
            return self._exps[:, self._pd_idx].sum(axis=1)
        return np.zeros(self.dim, dtype=np.int64)

    def mono_mul(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Product of basis monomials i and j as (indices, coefficients)."""
        key = (i, j) if i <= j else (j, i)
        hit = self._mono_cache.get(key)
        if hit is not None:
            return hit
        e = self._exps[key[0]] + self._exps[key[1]]
        coeff = 1
        for g in self._pd_idx:
            a, b = int(self._exps[key[0]][g]), int(self._exps[key[1]][g])
            if a and b:
                coeff = coeff * math.comb(a + b, a) % self.mod
        reduced = self._reduce_exponents(e, coeff) if self.rewrites else \
            self._plain_lookup(e, coeff)
        ks = np.array([self._index[t] for t in reduced], dtype=np.int64)
        cs = np.array(list(reduced.values()), dtype=np.int64)
        self._mono_cache[key] = (ks, cs)
        return ks, cs

    def _plain_lookup(self, e: np.ndarray, coeff: int) -> dict[tuple[int, ...], int]:
        if coeff % self.mod == 0 or np.any(e >= self._caps):
            return {}
        if self.weight_cap is not None and int(e[self._pd_idx].sum()) >= self.weight_cap:
            return {}
        return {tuple(int(x) for x in e): coeff % self.mod}

    def mult_operator_of_basis(self, i: int) -> np.ndarray:
        """Dense B x B matrix of multiplication by basis monomial i."""
        hit = self._op_cache.get(i)
        if hit is not None:
            return hit
        op = np.zeros((self.dim, self.dim), dtype=np.int64)
        for j in range(self.dim):
            ks, cs = self.mono_mul(i, j)
            op[ks, j] = cs
        self._op_cache[i] = op
        return op

    def product_table(self):
        """Sparse structure tensor (i, j, k, c) of the whole basis; intended
        for small parent algebras that coefficient free modules live over."""
        if self._table is None:
            ti, tj, tk, tc = [], [], [], []
            for i in range(self.dim):
                for j in range(self.dim):
                    ks, cs = self.mono_mul(i, j)
                    for k, c in zip(ks.tolist(), cs.tolist()):
                        ti.append(i); tj.append(j); tk.append(k); tc.append(c)
            self._table = (np.array(ti), np.array(tj), np.array(tk), np.array(tc))
        return self._table


def _product(ranges):
    if not ranges:
        yield ()
        return
    for head in ranges[0]:
        for tail in _product(ranges[1:]):
            yield (head,) + tail


class AlgebraElement:
    """Coefficient vector over the monomial basis of its parent algebra."""

    __slots__ = ("algebra", "vec")

    def __init__(self, algebra: TruncatedAlgebra, vec: np.ndarray):
        if vec.shape != (algebra.dim,):
            raise ValueError("coefficient vector length must equal basis size")
        self.algebra = algebra
        self.vec = vec % algebra.mod

    def _match(self, other) -> "AlgebraElement":
        if isinstance(other, int):
            return self.algebra.scalar(other)
        if isinstance(other, Scalar):
            if (other.p, other.N) != (self.algebra.p, self.algebra.N):
                raise ValueError("scalar from a different coefficient ring")
            return self.algebra.scalar(other.value)
        self.algebra._require_compatible(other.algebra)
        return other

    def __add__(self, other):
        other = self._match(other)
        return AlgebraElement(self.algebra, self.vec + other.vec)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._match(other)
        return AlgebraElement(self.algebra, self.vec - other.vec)

    def __neg__(self):
        return AlgebraElement(self.algebra, -self.vec)

    def __mul__(self, other):
        if isinstance(other, int):
            return AlgebraElement(self.algebra, self.vec * (other % self.algebra.mod))
        if isinstance(other, Scalar):
            return self * other.value
        other = self._match(other)
        alg = self.algebra
        out = np.zeros(alg.dim, dtype=np.int64)
        nz_a = np.nonzero(self.vec)[0]
        nz_b = np.nonzero(other.vec)[0]
        for i in nz_a:
            ai = int(self.vec[i])
            for j in nz_b:
                ks, cs = alg.mono_mul(int(i), int(j))
                if ks.size:
                    np.add.at(out, ks, ai * int(other.vec[j]) * cs % alg.mod)
        return AlgebraElement(alg, out)

    __rmul__ = __mul__

    def __pow__(self, m: int):
        if m < 0:
            raise ValueError("negative powers are not defined")
        acc = self.algebra.one()
        base = self
        while m:
            if m & 1:
                acc = acc * base
            base = base * base if m > 1 else base
            m >>= 1
        return acc

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.algebra.compatible(other.algebra) and bool(np.all(self.vec == other.vec))

    def __hash__(self):
        return hash((self.algebra._fingerprint, self.vec.tobytes()))

    def is_zero(self) -> bool:
        return not self.vec.any()

    def constant_term(self) -> int:
        unit_idx = self.algebra._index[tuple([0] * len(self.algebra.gens))]
        return int(self.vec[unit_idx])

    def pd_weight_support(self) -> set[int]:
        return {self.algebra.pd_weight_of(int(i)) for i in np.nonzero(self.vec)[0]}

    def coefficient(self, exps: Iterable[int]) -> int:
        return int(self.vec[self.algebra._index[tuple(exps)]])

    def mult_operator(self) -> np.ndarray:
        """B x B matrix of multiplication by this element over Z/p^N."""
        alg = self.algebra
        out = np.zeros((alg.dim, alg.dim), dtype=np.int64)
        for i in np.nonzero(self.vec)[0]:
            out = (out + int(self.vec[i]) * alg.mult_operator_of_basis(int(i))) % alg.mod
        return out

    def __repr__(self):
        alg = self.algebra
        terms = []
        for i in np.nonzero(self.vec)[0]:
            c = int(self.vec[i])
            mono = []
            for g, e in zip(alg.gens, alg.basis[int(i)]):
                if e == 0:
                    continue
                if g.kind == PD:
                    mono.append(f"{g.name}[{e}]")
                elif e == 1:
                    mono.append(g.name)
                else:
                    mono.append(f"{g.name}^{e}")
            body = "*".join(mono)
            terms.append(f"{c}*{body}" if body and c != 1 else (body or str(c)))
        return " + ".join(terms) if terms else "0"


# ---------------------------------------------------------------------------
# constructors per the public surface


def make_poly_algebra(p: int, N: int, specs: Sequence[GeneratorSpec] | Sequence[tuple[str, int]],
                      rewrites=None) -> TruncatedAlgebra:
    """Monomial-truncated polynomial algebra; plain tuples (name, cap) allowed."""
    gens = [s if isinstance(s, GeneratorSpec) else GeneratorSpec(s[0], POLY, s[1]) for s in specs]
    if any(g.kind != POLY for g in gens):
        raise ValueError("make_poly_algebra takes polynomial generators only")
    return TruncatedAlgebra(p, N, gens, rewrites=rewrites)


def make_pd_extension(R: TruncatedAlgebra, n: int, weight_cap: int,
                      names: Sequence[str] | None = None) -> TruncatedAlgebra:
    """Adjoin n divided-power generators of total weight < weight_cap."""
    if weight_cap < 1:
        raise ValueError("weight cap must be >= 1")
    if any(g.kind == PD for g in R.gens):
        raise ValueError("base of a PD extension must be free of PD generators")
    names = list(names) if names is not None else [f"xi{i+1}" for i in range(n)]
    if len(names) != n:
        raise ValueError("need exactly n names")
    pd_gens = [GeneratorSpec(nm, PD, weight_cap) for nm in names]
    return TruncatedAlgebra(R.p, R.N, tuple(R.gens) + tuple(pd_gens),
                            weight_cap=weight_cap, rewrites=dict(R.rewrites))


def pd_divided_power(x: AlgebraElement, m: int) -> AlgebraElement:
    """m-th divided power of an element of the PD-augmentation ideal.

    Expanded by gamma_m(sum t_i) = sum over compositions of prod gamma_(m_i)(t_i),
    with gamma on a monomial pulled through gamma_j(u*v) = u^j gamma_j(v) for v a
    divided power of a single generator; all coefficients are exact integer
    ratios of factorials, reduced only at the end.
    """
    alg = x.algebra
    if m < 0:
        raise ValueError("divided-power exponent must be >= 0")
    if m == 0:
        return alg.one()
    if x.constant_term() != 0:
        raise ValueError("divided powers need a zero constant term")
    terms = []
    for i in np.nonzero(x.vec)[0]:
        if alg.pd_weight_of(int(i)) == 0:
            raise ValueError("element is not in the PD ideal "
                             "(a monomial has divided-power weight zero)")
        terms.append((int(i), int(x.vec[i])))
    # G[k] = divided powers of the partial sums, degree by degree
    G = [alg.one()] + [alg.zero() for _ in range(m)]
    for idx, coeff in terms:
        gammas = _monomial_gammas(alg, idx, coeff, m)
        newG = [alg.zero() for _ in range(m + 1)]
        for total in range(m + 1):
            acc = alg.zero()
            for j in range(total + 1):
                if gammas[j] is None:
                    continue
                acc = acc + gammas[j] * G[total - j]
            newG[total] = acc
        G = newG
    return G[m]


def _monomial_gammas(alg: TruncatedAlgebra, idx: int, coeff: int, m: int):
    """[gamma_j(coeff * basis_idx) for j = 0..m]; None marks zero."""
    exps = alg._exps[idx]
    out = [alg.one()]
    for j in range(1, m + 1):
        e = exps * j
        num = 1
        den = math.factorial(j)
        for g in alg._pd_idx:
            a = int(exps[g])
            if a:
                num *= math.factorial(a * j)
                den *= math.factorial(a) ** j
        assert num % den == 0
        c = pow(coeff, j, alg.mod) * ((num // den) % alg.mod) % alg.mod
        reduced = alg._reduce_exponents(e, c) if alg.rewrites else alg._plain_lookup(e, c)
        if not reduced:
            out.append(None)
        else:
            out.append(alg.element({k: v for k, v in reduced.items()}))
    return out


def tensor_over_base(left: TruncatedAlgebra, right: TruncatedAlgebra,
                     weight_cap: int | str = "combine") -> TruncatedAlgebra:
    """Tensor over the shared polynomial subalgebra.

    Polynomial generators must match exactly; PD generators are concatenated
    with disjoint renaming (suffix _1 / _2 unless already distinct).  With
    weight_cap="combine", equal caps are reused as a joint total-weight cap.
    """
    if (left.p, left.N) != (right.p, right.N):
        raise ValueError("incompatible coefficient rings")
    lpoly = [g for g in left.gens if g.kind == POLY]
    rpoly = [g for g in right.gens if g.kind == POLY]
    if lpoly != rpoly or left.rewrites != right.rewrites:
        raise ValueError("tensor requires identical shared polynomial subalgebras")
    lpd = [g for g in left.gens if g.kind == PD]
    rpd = [g for g in right.gens if g.kind == PD]
    taken = {g.name for g in lpoly}
    renamed_l, renamed_r = [], []
    for src, dst, suffix in ((lpd, renamed_l, "_1"), (rpd, renamed_r, "_2")):
        for g in src:
            name = g.name
            if name in taken or (suffix == "_2" and any(h.name == name for h in lpd)):
                name = g.name + suffix
            while name in taken:
                name += "'"
            taken.add(name)
            dst.append(GeneratorSpec(name, PD, g.cap))
    if weight_cap == "combine":
        caps = {left.weight_cap, right.weight_cap}
        if len(caps) != 1:
            raise ValueError("factors have different weight caps; pass weight_cap explicitly")
        weight_cap = left.weight_cap
    return TruncatedAlgebra(left.p, left.N, tuple(lpoly) + tuple(renamed_l) + tuple(renamed_r),
                            weight_cap=weight_cap, rewrites=dict(left.rewrites))


# ---------------------------------------------------------------------------
# ring maps


class AlgebraHom:
    """Unital multiplicative Z/p^N-linear map given by generator images.

    The matrix on monomial bases is assembled from ordinary powers of the
    polynomial-generator images and honest divided powers of the PD-generator
    images.  Cap respect is checked on the minimal vanishing monomials; the
    expensive total-weight check is skipped when every PD image visibly raises
    weight (images supported in the PD ideal), which forces truncated
    monomials to map to truncated monomials.
    """

    def __init__(self, source: TruncatedAlgebra, target: TruncatedAlgebra,
                 images: dict[str, AlgebraElement], check: bool = True):
        if (source.p, source.N) != (target.p, target.N):
            raise ValueError("source and target must share (p, N)")
        missing = [g.name for g in source.gens if g.name not in images]
        if missing:
            raise ValueError(f"missing generator images: {missing}")
        for name, img in images.items():
            if not img.algebra.compatible(target):
                raise ValueError(f"image of {name} lies in the wrong algebra")
        self.source = source
        self.target = target
        self.images = dict(images)
        self._matrix: np.ndarray | None = None
        if check:
            self._check_cap_respect()

    def _gen_power(self, cache, gidx: int, e: int) -> AlgebraElement:
        g = self.source.gens[gidx]
        key = (gidx, e)
        if key in cache:
            return cache[key]
        img = self.images[g.name]
        if g.kind == PD:
            val = pd_divided_power(img, e)
        else:
            prev = self._gen_power(cache, gidx, e - 1) if e > 1 else None
            val = img if e == 1 else prev * img
        cache[key] = val
        return val

    def _image_of_exponents(self, cache, exps) -> AlgebraElement:
        acc = self.target.one()
        for gidx, e in enumerate(exps):
            if e:
                acc = acc * self._gen_power(cache, gidx, int(e))
        return acc

    def _check_cap_respect(self):
        cache: dict = {}
        src = self.source
        for gidx, g in enumerate(src.gens):
            if g.name in src.rewrites:
                continue  # the cap relation is a rewrite, not a truncation
            e = [0] * len(src.gens)
            e[gidx] = g.cap
            img = self._image_of_exponents(cache, e) if g.kind == POLY \
                else pd_divided_power(self.images[g.name], g.cap)
            if not img.is_zero():
                raise ValueError(f"image of {g.name}^{g.cap} does not vanish; "
                                 "assignment does not respect truncation")
        if src.weight_cap is None or not len(src._pd_idx):
            return
        if all(self._pd_image_raises_weight(g) for g in src.gens if g.kind == PD):
            return
        for exps in _weight_cap_tuples(src):
            img = self._image_of_exponents(cache, exps)
            if not img.is_zero():
                raise ValueError("a total-weight-capped monomial has nonzero image")

    def _pd_image_raises_weight(self, g: GeneratorSpec) -> bool:
        img = self.images[g.name]
        return img.is_zero() or min(img.pd_weight_support() or {0}) >= 1

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            cache: dict = {}
            mat = np.zeros((self.target.dim, self.source.dim), dtype=np.int64)
            for j, exps in enumerate(self.source.basis):
                mat[:, j] = self._image_of_exponents(cache, exps).vec
            self._matrix = mat
        return self._matrix

    def __call__(self, x: AlgebraElement) -> AlgebraElement:
        self.source._require_compatible(x.algebra)
        return AlgebraElement(self.target, self.matrix @ x.vec % self.target.mod)

    def compose(self, inner: "AlgebraHom") -> "AlgebraHom":
        """self o inner (inner first)."""
        if not inner.target.compatible(self.source):
            raise ValueError("maps are not composable")
        images = {g.name: self(inner.images[g.name]) for g in inner.source.gens}
        out = AlgebraHom(inner.source, self.target, images, check=False)
        out._matrix = matmul_mod(self.matrix, inner.matrix, self.target.mod)
        return out

    @classmethod
    def identity(cls, alg: TruncatedAlgebra) -> "AlgebraHom":
        return cls(alg, alg, {g.name: alg.gen(g.name) for g in alg.gens}, check=False)


def _weight_cap_tuples(alg: TruncatedAlgebra):
    """Minimal PD-monomials hitting the total-weight cap exactly."""
    W = alg.weight_cap
    pd = list(alg._pd_idx)
    out = []

    def rec(pos, remaining, acc):
        if pos == len(pd) - 1:
            if remaining < alg.gens[pd[pos]].cap:
                out.append(acc + [remaining])
            return
        for e in range(min(remaining, alg.gens[pd[pos]].cap - 1) + 1):
            rec(pos + 1, remaining - e, acc + [e])

    if pd:
        rec(0, W, [])
    tuples = []
    for combo in out:
        e = [0] * len(alg.gens)
        for g, v in zip(pd, combo):
            e[g] = v
        tuples.append(tuple(e))
    return tuples


def algebra_hom(source: TruncatedAlgebra, target: TruncatedAlgebra,
                images: dict[str, AlgebraElement], check: bool = True) -> AlgebraHom:
    return AlgebraHom(source, target, images, check=check)


# ---------------------------------------------------------------------------
# free modules and their maps


class FreeModuleMap:
    """Matrix of algebra elements: a map of finite free modules.

    Data layout is (rows, cols, basis) over int64.  Composition runs through
    restriction of scalars (block matrices over Z/p^N) and reconstructs the
    algebra entries from the unit-monomial column, which is exact.
    """

    __slots__ = ("algebra", "data", "_scalar")

    def __init__(self, algebra: TruncatedAlgebra, data: np.ndarray):
        if data.ndim != 3 or data.shape[2] != algebra.dim:
            raise ValueError("FreeModuleMap data must have shape (rows, cols, basis)")
        self.algebra = algebra
        self.data = data % algebra.mod
        self._scalar = None

    # -- constructors
    @classmethod
    def from_entries(cls, algebra: TruncatedAlgebra, entries) -> "FreeModuleMap":
        rows = len(entries)
        cols = len(entries[0]) if rows else 0
        data = np.zeros((rows, cols, algebra.dim), dtype=np.int64)
        for i, row in enumerate(entries):
            for j, e in enumerate(row):
                if isinstance(e, AlgebraElement):
                    algebra._require_compatible(e.algebra)
                    data[i, j] = e.vec
                else:
                    data[i, j] = (algebra.one() * int(e)).vec
        return cls(algebra, data)

    @classmethod
    def identity(cls, algebra: TruncatedAlgebra, n: int) -> "FreeModuleMap":
        data = np.zeros((n, n, algebra.dim), dtype=np.int64)
        data[np.arange(n), np.arange(n)] = algebra.one().vec
        return cls(algebra, data)

    @classmethod
    def zero(cls, algebra: TruncatedAlgebra, rows: int, cols: int) -> "FreeModuleMap":
        return cls(algebra, np.zeros((rows, cols, algebra.dim), dtype=np.int64))

    @classmethod
    def from_int_matrix(cls, algebra: TruncatedAlgebra, mat: np.ndarray) -> "FreeModuleMap":
        mat = np.asarray(mat, dtype=np.int64)
        data = np.einsum("rc,B->rcB", mat, algebra.one().vec)
        return cls(algebra, data)

    # -- shape/access
    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def entry(self, i: int, j: int) -> AlgebraElement:
        return AlgebraElement(self.algebra, self.data[i, j].copy())

    def _match(self, other: "FreeModuleMap") -> None:
        if not self.algebra.compatible(other.algebra):
            raise ValueError("maps over different algebras")

    # -- linear structure
    def __add__(self, other):
        self._match(other)
        return FreeModuleMap(self.algebra, self.data + other.data)

    def __sub__(self, other):
        self._match(other)
        return FreeModuleMap(self.algebra, self.data - other.data)

    def __neg__(self):
        return FreeModuleMap(self.algebra, -self.data)

    def scale_int(self, c: int) -> "FreeModuleMap":
        return FreeModuleMap(self.algebra, self.data * (c % self.algebra.mod))

    def scale(self, x: AlgebraElement) -> "FreeModuleMap":
        op = x.mult_operator()
        return FreeModuleMap(self.algebra, np.einsum("Bb,rcb->rcB", op, self.data) % self.algebra.mod)

    def transpose(self) -> "FreeModuleMap":
        return FreeModuleMap(self.algebra, self.data.transpose(1, 0, 2).copy())

    def __eq__(self, other):
        if not isinstance(other, FreeModuleMap):
            return NotImplemented
        return self.algebra.compatible(other.algebra) and self.data.shape == other.data.shape \
            and bool(np.all(self.data == other.data))

    def __hash__(self):
        return hash((self.algebra._fingerprint, self.data.shape, self.data.tobytes()))

    def is_zero(self) -> bool:
        return not self.data.any()

    def __repr__(self):
        return f"FreeModuleMap({self.rows}x{self.cols} over {self.algebra!r})"

    # -- multiplicative structure
    def restrict_scalars(self) -> ScalarMatrix:
        """Block matrix of the Z/p^N-linear action on (component, monomial)."""
        if self._scalar is None:
            alg = self.algebra
            B = alg.dim
            ti, tj, tk, tc = alg.product_table()
            out = np.zeros((self.rows, B, self.cols, B), dtype=np.int64)
            # out[r, k, c, j] = sum_i data[r, c, i] * T[i, j -> k]
            for i, j, k, c in zip(ti.tolist(), tj.tolist(), tk.tolist(), tc.tolist()):
                out[:, k, :, j] += self.data[:, :, i] * c
            out %= alg.mod
            self._scalar = ScalarMatrix(out.reshape(self.rows * B, self.cols * B), alg.p, alg.N)
        return self._scalar

    def __matmul__(self, other: "FreeModuleMap") -> "FreeModuleMap":
        self._match(other)
        if self.cols != other.rows:
            raise ValueError("shape mismatch in composition")
        B = self.algebra.dim
        # small matrices over big algebras compose entrywise (sparse products);
        # big matrices over small coefficient algebras go through block-scalar
        # BLAS, reconstructing entries from the unit-monomial column
        if B > 128 or self.rows * self.cols * max(other.cols, 1) <= 64:
            data = np.zeros((self.rows, other.cols, B), dtype=np.int64)
            for i in range(self.rows):
                for j in range(other.cols):
                    acc = self.algebra.zero()
                    for k in range(self.cols):
                        acc = acc + self.entry(i, k) * other.entry(k, j)
                    data[i, j] = acc.vec
            return FreeModuleMap(self.algebra, data)
        prod = (self.restrict_scalars() @ other.restrict_scalars()).array
        data = prod.reshape(self.rows, B, other.cols, B)[:, :, :, 0].transpose(0, 2, 1)
        out = FreeModuleMap(self.algebra, np.ascontiguousarray(data))
        out._scalar = ScalarMatrix(prod, self.algebra.p, self.algebra.N)
        return out

    def kron_int(self, mat: np.ndarray) -> "FreeModuleMap":
        """self (x) mat with the integer factor minor: index = comp*q + minor."""
        mat = np.asarray(mat, dtype=np.int64)
        data = np.einsum("acB,bd->abcdB", self.data, mat)
        r = self.rows * mat.shape[0]
        c = self.cols * mat.shape[1]
        return FreeModuleMap(self.algebra, data.reshape(r, c, self.algebra.dim))

    def kron_int_pre(self, mat: np.ndarray) -> "FreeModuleMap":
        """mat (x) self with the integer factor major: index = major*rows + comp."""
        mat = np.asarray(mat, dtype=np.int64)
        data = np.einsum("ac,bdB->abcdB", mat, self.data)
        r = mat.shape[0] * self.rows
        c = mat.shape[1] * self.cols
        return FreeModuleMap(self.algebra, data.reshape(r, c, self.algebra.dim))

    def apply_hom(self, f: AlgebraHom) -> "FreeModuleMap":
        """Entrywise pushforward along a ring map (matrices mapped entrywise)."""
        if not f.source.compatible(self.algebra):
            raise ValueError("hom source does not match the map's algebra")
        data = np.einsum("Ks,rcs->rcK", f.matrix, self.data) % f.target.mod
        return FreeModuleMap(f.target, data)

    def direct_sum(self, other: "FreeModuleMap") -> "FreeModuleMap":
        self._match(other)
        data = np.zeros((self.rows + other.rows, self.cols + other.cols, self.algebra.dim),
                        dtype=np.int64)
        data[: self.rows, : self.cols] = self.data
        data[self.rows:, self.cols:] = other.data
        return FreeModuleMap(self.algebra, data)


def block_map(algebra: TruncatedAlgebra, row_ranks: Sequence[int], col_ranks: Sequence[int],
              blocks: dict[tuple[int, int], FreeModuleMap]) -> FreeModuleMap:
    """Assemble a map from blocks indexed by (row_block, col_block)."""
    roff = np.concatenate([[0], np.cumsum(row_ranks)])
    coff = np.concatenate([[0], np.cumsum(col_ranks)])
    data = np.zeros((int(roff[-1]), int(coff[-1]), algebra.dim), dtype=np.int64)
    for (bi, bj), blk in blocks.items():
        if blk.rows != row_ranks[bi] or blk.cols != col_ranks[bj]:
            raise ValueError(f"block {(bi, bj)} has shape {blk.rows}x{blk.cols}, "
                             f"expected {row_ranks[bi]}x{col_ranks[bj]}")
        data[roff[bi]:roff[bi + 1], coff[bj]:coff[bj + 1]] = blk.data
    return FreeModuleMap(algebra, data)


def restrict_scalars(f: FreeModuleMap) -> ScalarMatrix:
    return f.restrict_scalars()
