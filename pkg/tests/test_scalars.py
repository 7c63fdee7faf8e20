"""Tests for Z/p^N arithmetic and chain-ring Smith normal form.

The Smith / homology checks are certified against brute-force enumeration of
kernels and images: for a finite module map the multiset of elementary
divisors is recovered from the sizes of p^k * ker and p^k * H, which an
enumeration computes without any row reduction.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prismalg.scalars import (
    INFINITY,
    ElementaryDivisors,
    Scalar,
    ScalarMatrix,
    binomial,
    diagonal_divisors,
    factorial_split,
    homology_at,
    invert,
    invert_matrix,
    is_invertible,
    p_valuation,
    scalar_arith,
    smith_normal_form,
)

# ---------------------------------------------------------------------------
# oracles


def egcd_inverse(a: int, m: int) -> int:
    """Extended-Euclid inverse oracle over the integers."""
    old_r, r = a % m, m
    old_s, s = 1, 0
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
    assert old_r == 1, "not a unit"
    return old_s % m


def pascal_binomial(a: int, b: int) -> int:
    """Binomial oracle by Pascal recursion, independent of math.comb."""
    if b < 0 or b > a:
        return 0
    row = [1]
    for _ in range(a):
        row = [x + y for x, y in zip([0] + row, row + [0])]
    return row[b]


def divisors_from_subgroup(elements: set, p: int, N: int, ambient_rank: int) -> tuple[int, ...]:
    """Recover the cyclic-factor exponent multiset of a subgroup of (Z/p^N)^r
    from the sizes of its p^k multiples.  log|p^k G| = sum_i max(e_i - k, 0),
    so successive differences count the exponents exceeding each k.
    """
    mod = p**N
    logs = []
    g = elements
    for _ in range(N + 1):
        logs.append(round(math.log(len(g), p)))
        g = {tuple((p * x) % mod for x in v) for v in g}
    counts = [logs[k] - logs[k + 1] for k in range(N)]  # of e_i > k
    exps = []
    for e in range(N, 0, -1):
        exps.extend([e] * (counts[e - 1] - (counts[e] if e < N else 0)))
    return tuple(sorted(exps, reverse=True))


def enumerate_kernel(arr: np.ndarray, p: int, N: int) -> set:
    mod = p**N
    rows, cols = arr.shape
    ker = set()
    for vec in itertools.product(range(mod), repeat=cols):
        v = np.array(vec, dtype=np.int64)
        if rows == 0 or not np.any((arr @ v) % mod):
            ker.add(vec)
    return ker


def span_subgroup(gens: list[tuple], p: int, N: int, rank: int) -> set:
    mod = p**N
    span = {tuple([0] * rank)}
    frontier = list(span)
    while frontier:
        nxt = []
        for base in frontier:
            for g in gens:
                cand = tuple((b + x) % mod for b, x in zip(base, g))
                if cand not in span:
                    span.add(cand)
                    nxt.append(cand)
        frontier = nxt
    return span


def brute_force_kernel_divisors(A: ScalarMatrix) -> tuple[int, ...]:
    ker = enumerate_kernel(A.array, A.p, A.N)
    return divisors_from_subgroup(ker, A.p, A.N, A.cols)


def brute_force_homology(d_in: ScalarMatrix, d_out: ScalarMatrix) -> tuple[int, ...]:
    """Divisors of ker(d_out)/im(d_in) by enumerating cosets."""
    p, N = d_out.p, d_out.N
    mod = p**N
    ker = enumerate_kernel(d_out.array, p, N)
    im = span_subgroup([tuple(int(x) % mod for x in d_in.array[:, j]) for j in range(d_in.cols)],
                       p, N, d_in.rows)
    # quotient subgroup sizes: |p^k H| = |p^k ker + im| / |im|
    logs = []
    g = ker
    for _ in range(N + 1):
        total = span_subgroup(list(g) + list(im), p, N, d_out.cols) if g else im
        logs.append(round(math.log(len(total) / len(im), p)))
        g = {tuple((p * x) % mod for x in v) for v in g}
    counts = [logs[k] - logs[k + 1] for k in range(N)]
    exps = []
    for e in range(N, 0, -1):
        exps.extend([e] * (counts[e - 1] - (counts[e] if e < N else 0)))
    return tuple(sorted(exps, reverse=True))


# ---------------------------------------------------------------------------
# scalars


def test_scalar_arith_trivial_examples():
    assert scalar_arith(Scalar(3, 5, 2), Scalar(4, 5, 2), "mul").value == 12
    assert scalar_arith(Scalar(20, 5, 2), Scalar(10, 5, 2), "add").value == 5
    assert scalar_arith(Scalar(0, 5, 2), Scalar(17, 5, 2), "mul").value == 0


def test_scalar_mismatch_rejected():
    with pytest.raises(ValueError):
        scalar_arith(Scalar(1, 5, 2), Scalar(1, 5, 1), "add")
    with pytest.raises(ValueError):
        scalar_arith(Scalar(1, 5, 2), Scalar(1, 3, 2), "mul")


def test_p_valuation():
    assert p_valuation(Scalar(10, 5, 2)) == 1
    assert p_valuation(Scalar(0, 5, 2)) == INFINITY
    assert p_valuation(Scalar(3, 5, 2)) == 0


def test_invert_examples():
    assert invert(Scalar(1, 5, 2)).value == 1
    assert invert(Scalar(24, 5, 2)).value == 24  # 24 = -1 mod 25
    # independent extended-Euclid oracle for the nontrivial case
    assert egcd_inverse(2, 25) == 13
    assert invert(Scalar(2, 5, 2)).value == 13
    with pytest.raises(ValueError):
        invert(Scalar(10, 5, 2))


@given(st.sampled_from([2, 3, 5]), st.integers(1, 3), st.integers(0, 10**6))
def test_invert_matches_euclid_oracle(p, N, raw):
    a = Scalar(raw, p, N)
    if a.is_unit():
        assert invert(a).value == egcd_inverse(a.value, p**N)
        assert (a * invert(a)).value == 1


@given(st.sampled_from([2, 3, 5]), st.integers(1, 3),
       st.integers(0, 10**4), st.integers(0, 10**4), st.integers(0, 10**4))
@settings(max_examples=60)
def test_scalar_ring_laws(p, N, x, y, z):
    a, b, c = (Scalar(t, p, N) for t in (x, y, z))
    assert (a + b) - b == a
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)


def test_binomial_examples():
    assert binomial(2, 1, 5, 2).value == 2
    assert binomial(5, 2, 5, 2).value == 10
    # derived via exact integer oracle: C(10,5) = 252
    assert pascal_binomial(10, 5) == 252
    assert binomial(10, 5, 5, 2).value == 252 % 25


@given(st.integers(0, 25), st.integers(0, 25))
@settings(max_examples=50)
def test_binomial_matches_pascal(a, b):
    assert binomial(a, b, 3, 3).value == pascal_binomial(a, b) % 27


def test_factorial_split_examples():
    assert factorial_split(4, 5) == (0, 24)
    # derived: 5! = 120 = 5 * 24
    prod = 1
    for k in range(1, 6):
        prod *= k
    assert prod == 120 and prod // 5 == 24
    assert factorial_split(5, 5) == (1, 24)
    assert factorial_split(0, 7) == (0, 1)


@given(st.integers(0, 40), st.sampled_from([2, 3, 5]))
def test_factorial_split_reconstructs(m, p):
    v, u = factorial_split(m, p)
    assert u % p != 0
    assert p**v * u == math.factorial(m)


# ---------------------------------------------------------------------------
# Smith normal form


def assert_valid_snf(A: ScalarMatrix):
    U, D, V = smith_normal_form(A)
    assert is_invertible(U) and is_invertible(V)
    assert (U @ A) @ V == D
    d = [int(D.array[i, i]) for i in range(min(D.rows, D.cols))]
    off = D.array.copy()
    for i in range(min(D.rows, D.cols)):
        off[i, i] = 0
    assert not off.any(), "D must be diagonal"
    # exact p-powers in divisibility order
    p, N = A.p, A.N
    exps = []
    for x in d:
        e = N if x == 0 else round(math.log(x, p))
        assert x == (p**e) % (p**N) or x == 0
        exps.append(e)
    assert exps == sorted(exps)
    return exps


def test_snf_identity():
    A = ScalarMatrix.identity(2, 5, 2)
    _, D, _ = smith_normal_form(A)
    assert D == A


def test_snf_permutation_case():
    A = ScalarMatrix.from_rows([[5, 0], [0, 1]], 5, 2)
    _, D, _ = smith_normal_form(A)
    assert [int(D.array[0, 0]), int(D.array[1, 1])] == [1, 5]


def test_snf_derived_2x2():
    # oracle: brute-force kernel enumeration of [[5,10],[10,20]] over Z/25
    A = ScalarMatrix.from_rows([[5, 10], [10, 20]], 5, 2)
    exps = assert_valid_snf(A)
    assert exps == [1, 2]  # D = diag(5, 0)
    ker = brute_force_kernel_divisors(A)
    _, D, _ = smith_normal_form(A)
    assert tuple(sorted(exps, reverse=True)) == ker


def test_snf_zero_and_empty():
    A = ScalarMatrix.zeros(2, 3, 3, 2)
    exps = assert_valid_snf(A)
    assert exps == [2, 2]  # both diagonal slots stay zero = p^N
    B = ScalarMatrix.zeros(0, 3, 3, 2)
    U, D, V = smith_normal_form(B)
    assert D.rows == 0 and D.cols == 3


@given(st.sampled_from([(2, 2), (3, 2), (2, 3), (5, 1)]),
       st.integers(1, 3), st.integers(1, 3), st.data())
@settings(max_examples=80, deadline=None)
def test_snf_random_certified(base, m, n, data):
    p, N = base
    mod = p**N
    arr = [[data.draw(st.integers(0, mod - 1)) for _ in range(n)] for _ in range(m)]
    A = ScalarMatrix.from_rows(arr, p, N)
    exps = assert_valid_snf(A)
    full = tuple(sorted([e for e in exps if e > 0] + [N] * (n - len(exps)), reverse=True))
    assert full == brute_force_kernel_divisors(A)


def test_invert_matrix_roundtrip():
    A = ScalarMatrix.from_rows([[1, 3], [2, 2]], 5, 2)
    Ainv = invert_matrix(A)
    assert A @ Ainv == ScalarMatrix.identity(2, 5, 2)
    with pytest.raises(ValueError):
        invert_matrix(ScalarMatrix.from_rows([[5, 0], [0, 1]], 5, 2))


# ---------------------------------------------------------------------------
# homology


def test_homology_zero_differentials():
    z = ScalarMatrix.zeros(3, 3, 5, 1)
    h = homology_at(z, z)
    assert h.exponents == (1, 1, 1)


def test_homology_acyclic():
    d_in = ScalarMatrix.zeros(3, 0, 5, 1)
    d_out = ScalarMatrix.identity(3, 5, 1)
    assert homology_at(d_in, d_out).is_trivial()


def test_homology_mult5_on_z25():
    # derived: enumerate all 25 elements of ker(0)/im(5)
    d_in = ScalarMatrix.from_rows([[5]], 5, 2)
    d_out = ScalarMatrix.zeros(0, 1, 5, 2)
    got = homology_at(d_in, d_out)
    oracle = brute_force_homology(d_in, d_out)
    assert got.exponents == oracle == (1,)


def test_homology_rejects_non_complex():
    d_in = ScalarMatrix.identity(2, 5, 1)
    d_out = ScalarMatrix.identity(2, 5, 1)
    with pytest.raises(ValueError):
        homology_at(d_in, d_out)


@given(st.sampled_from([(2, 2), (3, 1), (2, 1)]), st.data())
@settings(max_examples=40, deadline=None)
def test_homology_random_certified(base, data):
    # random complex C^-1 -> C^0 -> C^1 with d_out * d_in = 0, built by
    # taking d_in into the kernel of a random d_out
    p, N = base
    mod = p**N
    k, r = 2, 2
    arr = [[data.draw(st.integers(0, mod - 1)) for _ in range(k)] for _ in range(r)]
    d_out = ScalarMatrix.from_rows(arr, p, N)
    kernel = sorted(enumerate_kernel(d_out.array, p, N))
    pick = [kernel[data.draw(st.integers(0, len(kernel) - 1))] for _ in range(2)]
    d_in = ScalarMatrix.from_rows([list(col) for col in zip(*pick)], p, N)
    got = homology_at(d_in, d_out)
    assert got.exponents == brute_force_homology(d_in, d_out)


def test_divisor_formatting():
    d = ElementaryDivisors((1, 2, 0, 1), 5, 2)
    assert d.exponents == (2, 1, 1)
    assert d.length == 4
    assert str(d) == "(Z/5^2) ⊕ (Z/5^1) ⊕ (Z/5^1)"
    assert str(ElementaryDivisors((), 5, 2)) == "0"


def test_diagonal_divisors_counts_free_columns():
    A = ScalarMatrix.from_rows([[5, 0], [0, 1]], 5, 2)
    assert diagonal_divisors(A).exponents == (1,)
