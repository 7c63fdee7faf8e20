"""Higgs modules over a truncated algebra and their de Rham complexes.

A Higgs module is a finite free module with n commuting endomorphisms
theta_1..theta_n (the coordinates of a Higgs field) and an integer twist tag.
Quasi-nilpotence is realized as strict nilpotency of all theta-words beyond a
certified length W_theta; over an Artinian truncation the two notions agree,
and the certificate bounds the series length of the associated stratification.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraHom, FreeModuleMap, TruncatedAlgebra
from .complexes import ChainMap, Complex


def subsets_of(n: int, j: int) -> list[tuple[int, ...]]:
    out = []

    def rec(start, acc):
        if len(acc) == j:
            out.append(tuple(acc))
            return
        for k in range(start, n):
            rec(k + 1, acc + [k])

    rec(0, [])
    return out


def insertion_sign(i: int, S: tuple[int, ...]) -> int:
    """Koszul sign for inserting symbol i into the sorted subset S."""
    return -1 if sum(1 for s in S if s < i) % 2 else 1


def compositions(weight: int, parts: int) -> list[tuple[int, ...]]:
    if parts == 0:
        return [()] if weight == 0 else []
    out = []

    def rec(pos, remaining, acc):
        if pos == parts - 1:
            out.append(tuple(acc + [remaining]))
            return
        for v in range(remaining + 1):
            rec(pos + 1, remaining - v, acc + [v])

    rec(0, weight, [])
    return out


@dataclass
class HiggsReport:
    ok: bool
    W_theta: int | None
    failures: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok


class HiggsModule:
    """Free module of finite rank with commuting Higgs endomorphisms."""

    def __init__(self, algebra: TruncatedAlgebra, rank: int,
                 thetas: list[FreeModuleMap], twist: int = 0, check: bool = True):
        self.algebra = algebra
        self.rank = rank
        self.n = len(thetas)
        self.thetas = list(thetas)
        self.twist = twist
        for i, th in enumerate(self.thetas):
            if (th.rows, th.cols) != (rank, rank):
                raise ValueError(f"theta_{i+1} must be {rank}x{rank}")
            if not th.algebra.compatible(algebra):
                raise ValueError("theta matrices must live over the module's algebra")
        self._words: dict[tuple[int, ...], FreeModuleMap] = {}
        self.W_theta: int | None = None
        if check and rank and self.n:
            rep = self.check_commutativity()
            if not rep.ok:
                raise ValueError("; ".join(rep.failures))

    # -- basic checks ---------------------------------------------------------
    def check_commutativity(self) -> HiggsReport:
        failures = []
        for i in range(self.n):
            for j in range(i + 1, self.n):
                a = self.thetas[i] @ self.thetas[j]
                b = self.thetas[j] @ self.thetas[i]
                if a != b:
                    failures.append(f"theta_{i+1} theta_{j+1} != theta_{j+1} theta_{i+1}")
        return HiggsReport(not failures, None, failures)

    def theta_word(self, m: tuple[int, ...]) -> FreeModuleMap:
        """theta^m for a multi-index m (commuting product of powers)."""
        m = tuple(m)
        if len(m) != self.n:
            raise ValueError("multi-index length must equal the field dimension")
        hit = self._words.get(m)
        if hit is not None:
            return hit
        if sum(m) == 0:
            out = FreeModuleMap.identity(self.algebra, self.rank)
        else:
            i = next(k for k, v in enumerate(m) if v)
            prev = list(m)
            prev[i] -= 1
            out = self.thetas[i] @ self.theta_word(tuple(prev))
        self._words[m] = out
        return out

    def certify_nilpotency(self, bound: int = 16) -> int | None:
        """Smallest W with every theta-word of length > W equal to zero."""
        if self.W_theta is not None:
            return self.W_theta
        if self.rank == 0 or self.n == 0:
            self.W_theta = 0
            return 0
        for L in range(bound + 1):
            if all(self.theta_word(m).is_zero() for m in compositions(L + 1, self.n)):
                self.W_theta = L
                return L
        return None

    def __repr__(self):
        return (f"HiggsModule(rank {self.rank}, n={self.n}, twist={self.twist} "
                f"over {self.algebra!r})")


def check_higgs(H: HiggsModule, bound: int = 16) -> HiggsReport:
    """Commutativity (exact) plus a word-nilpotency certificate search."""
    rep = H.check_commutativity()
    if not rep.ok:
        return rep
    W = H.certify_nilpotency(bound)
    if W is None:
        return HiggsReport(False, None,
                           [f"no nilpotency certificate within bound {bound}"])
    return HiggsReport(True, W, [])


# ---------------------------------------------------------------------------
# the de Rham complex of a Higgs module


def dr_complex(H: HiggsModule, check: bool = True) -> Complex:
    """DR(M, theta): degree j is M tensored with the j-forms (twist -j),
    differential sum_i (insertion sign) theta_i into the i-th slot."""
    n = H.n
    ranks = {}
    diffs = {}
    twists = {}
    subs = {j: subsets_of(n, j) for j in range(n + 1)}
    index = {j: {S: a for a, S in enumerate(subs[j])} for j in subs}
    for j in range(n + 1):
        ranks[j] = H.rank * len(subs[j])
        twists[j] = H.twist - j
    for j in range(n):
        E = {}
        for i in range(H.n):
            mat = np.zeros((len(subs[j + 1]), len(subs[j])), dtype=np.int64)
            hit = False
            for col, S in enumerate(subs[j]):
                if i in S:
                    continue
                T = tuple(sorted(S + (i,)))
                mat[index[j + 1][T], col] = insertion_sign(i, S)
                hit = True
            if hit:
                E[i] = mat
        if not E or H.rank == 0:
            continue
        total = None
        for i, mat in E.items():
            blk = H.thetas[i].kron_int(mat)
            total = blk if total is None else total + blk
        diffs[j] = total
    return Complex(H.algebra, ranks, diffs, twists=twists, check=check)


# ---------------------------------------------------------------------------
# duals, twists, tensor, hom


def dual(H: HiggsModule) -> HiggsModule:
    """Dual field theta(f) = -(f (x) 1) o theta, i.e. minus transposes."""
    thetas = [(-th).transpose() for th in H.thetas]
    return HiggsModule(H.algebra, H.rank, thetas, twist=-H.twist, check=False)


def twist(H: HiggsModule, i: int) -> HiggsModule:
    out = HiggsModule(H.algebra, H.rank, H.thetas, twist=H.twist + i, check=False)
    out.W_theta = H.W_theta
    return out


def tensor(H1: HiggsModule, H2: HiggsModule) -> HiggsModule:
    if not H1.algebra.compatible(H2.algebra) or H1.n != H2.n:
        raise ValueError("tensor needs a common base and field dimension")
    eye1 = np.eye(H1.rank, dtype=np.int64)
    eye2 = np.eye(H2.rank, dtype=np.int64)
    thetas = [H1.thetas[i].kron_int(eye2) + H2.thetas[i].kron_int_pre(eye1)
              for i in range(H1.n)]
    return HiggsModule(H1.algebra, H1.rank * H2.rank, thetas,
                       twist=H1.twist + H2.twist, check=False)


def hom(H1: HiggsModule, H2: HiggsModule) -> HiggsModule:
    """Internal Hom: theta(f) = theta_2 o f - f o theta_1, flattened with the
    target component major (f[u, v], index u * rank1 + v)."""
    if not H1.algebra.compatible(H2.algebra) or H1.n != H2.n:
        raise ValueError("hom needs a common base and field dimension")
    eye1 = np.eye(H1.rank, dtype=np.int64)
    eye2 = np.eye(H2.rank, dtype=np.int64)
    thetas = [H2.thetas[i].kron_int(eye1) - H1.thetas[i].transpose().kron_int_pre(eye2)
              for i in range(H1.n)]
    return HiggsModule(H1.algebra, H1.rank * H2.rank, thetas,
                       twist=H2.twist - H1.twist, check=False)


def trivial(algebra: TruncatedAlgebra, n: int, rank: int = 1) -> HiggsModule:
    zero = FreeModuleMap.zero(algebra, rank, rank)
    return HiggsModule(algebra, rank, [zero] * n, twist=0, check=False)


# ---------------------------------------------------------------------------
# base change


def base_change(H: HiggsModule, f: AlgebraHom) -> tuple[HiggsModule, ChainMap]:
    """Transport H along a ring map and certify that the canonical comparison
    DR(H) (x) R' -> DR(H') is an isomorphism of complexes.

    Both sides are built over the target ring: the left by pushing the de Rham
    differentials entrywise, the right from the transported Higgs module.  The
    comparison is the degreewise identity; the ChainMap constructor verifies it
    commutes with differentials, which pins the two constructions together.
    """
    if not f.source.compatible(H.algebra):
        raise ValueError("ring map must start at the module's base")
    thetas = [th.apply_hom(f) for th in H.thetas]
    H2 = HiggsModule(f.target, H.rank, thetas, twist=H.twist, check=True)
    left = dr_complex(H, check=False).apply_hom(f, check=True)
    right = dr_complex(H2, check=False)
    maps = {d: FreeModuleMap.identity(f.target, left.rank(d)) for d in left.degrees()}
    comparison = ChainMap(left, right, maps, check=True)
    for d in left.degrees():
        if left.rank(d) != right.rank(d):
            raise ValueError(f"comparison fails to be bijective at degree {d}")
    return H2, comparison
