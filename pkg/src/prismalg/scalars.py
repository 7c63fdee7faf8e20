"""Exact arithmetic over Z/p^N and matrix normal forms over this chain ring.

Everything downstream (truncated algebras, complexes, cohomology) bottoms out
in the primitives here: residues carrying (p, N) metadata, dense matrices,
Smith reduction with unit-normalized p-power pivots, and elementary-divisor
extraction for kernels and cokernels.

Z/p^N is a chain ring: every element is unit * p^e, so Smith reduction needs a
single sweep per pivot (pick a globally minimal-valuation entry, scale it to an
exact p-power, clear its row and column).  No gcd steps are required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INFINITY = math.inf

# Largest integer exactly representable in a float64; products a*b with
# a, b < mod and sums of up to K of them stay exact below this bound, which
# lets matrix products run through BLAS.
_FLOAT_EXACT = 2**53


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, math.isqrt(p) + 1))


def _check_base(p: int, N: int) -> None:
    if not is_prime(p):
        raise ValueError(f"p must be prime, got {p}")
    if N < 1:
        raise ValueError(f"precision exponent N must be >= 1, got {N}")


@dataclass(frozen=True, slots=True)
class Scalar:
    """A residue in Z/p^N; `value` is always kept reduced into [0, p^N)."""

    value: int
    p: int
    N: int

    def __post_init__(self):
        _check_base(self.p, self.N)
        object.__setattr__(self, "value", self.value % self.p**self.N)

    @property
    def modulus(self) -> int:
        return self.p**self.N

    def _match(self, other: "Scalar") -> None:
        if not isinstance(other, Scalar):
            raise TypeError(f"expected Scalar, got {type(other).__name__}")
        if (self.p, self.N) != (other.p, other.N):
            raise ValueError(
                f"mismatched coefficient rings: Z/{self.p}^{self.N} vs Z/{other.p}^{other.N}"
            )

    def __add__(self, other):
        self._match(other)
        return Scalar(self.value + other.value, self.p, self.N)

    def __sub__(self, other):
        self._match(other)
        return Scalar(self.value - other.value, self.p, self.N)

    def __mul__(self, other):
        self._match(other)
        return Scalar(self.value * other.value, self.p, self.N)

    def __neg__(self):
        return Scalar(-self.value, self.p, self.N)

    def __pow__(self, k: int):
        return Scalar(pow(self.value, k, self.modulus), self.p, self.N)

    def is_zero(self) -> bool:
        return self.value == 0

    def is_unit(self) -> bool:
        return self.value % self.p != 0


def scalar_arith(a: Scalar, b: Scalar, op: str) -> Scalar:
    """Dispatch {add, sub, mul} on scalars sharing (p, N)."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def p_valuation(a: Scalar) -> int | float:
    """Largest e <= N with p^e | value; INFINITY for the zero residue."""
    return val_int(a.value, a.p, a.N)


def val_int(v: int, p: int, N: int) -> int | float:
    if v % p**N == 0:
        return INFINITY
    e = 0
    while v % p == 0:
        v //= p
        e += 1
    return e


def invert(a: Scalar) -> Scalar:
    """Inverse of a unit mod p^N (extended Euclid via pow)."""
    try:
        return Scalar(pow(a.value, -1, a.modulus), a.p, a.N)
    except ValueError:
        raise ValueError(f"{a.value} is not a unit mod {a.p}^{a.N}") from None


def binomial(a: int, b: int, p: int, N: int) -> Scalar:
    """Exact integer binomial C(a, b), then reduced mod p^N."""
    if a < 0 or b < 0:
        raise ValueError("binomial arguments must be >= 0")
    return Scalar(math.comb(a, b), p, N)


def factorial_split(m: int, p: int) -> tuple[int, int]:
    """Write m! = p^valuation * unit with the unit prime to p.

    The valuation is Legendre's sum(floor(m/p^k)); the unit is returned as an
    exact (unbounded) integer so callers reduce at whatever precision they use.
    """
    if m < 0:
        raise ValueError("factorial argument must be >= 0")
    val = 0
    q = p
    while q <= m:
        val += m // q
        q *= p
    return val, math.factorial(m) // p**val


# ---------------------------------------------------------------------------
# matrices


def _dtype_for(mod: int):
    # int64 is safe while products q*a with q, a < mod fit; beyond that fall
    # back to Python-int object arrays (slow, but the CLI permits huge p^N).
    return np.int64 if (mod - 1) ** 2 < 2**62 else object


def matmul_mod(a: np.ndarray, b: np.ndarray, mod: int) -> np.ndarray:
    """Exact (a @ b) % mod, routed through float64 BLAS when provably exact."""
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
    if a.shape[0] == 0 or b.shape[1] == 0 or a.shape[1] == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=_dtype_for(mod))
    if a.shape[1] * (mod - 1) ** 2 < _FLOAT_EXACT:
        c = np.rint(a.astype(np.float64) @ b.astype(np.float64)).astype(np.int64)
        return c % mod
    c = a.astype(object) @ b.astype(object)
    return c % mod


class ScalarMatrix:
    """Dense matrix over Z/p^N; entries stored reduced, array frozen."""

    __slots__ = ("p", "N", "mod", "array")

    def __init__(self, array, p: int, N: int):
        _check_base(p, N)
        self.p = p
        self.N = N
        self.mod = p**N
        arr = np.asarray(array)
        if arr.ndim != 2:
            raise ValueError("ScalarMatrix needs a 2-d array")
        arr = np.remainder(arr, self.mod).astype(_dtype_for(self.mod))
        arr.setflags(write=False)
        self.array = arr

    # -- constructors
    @classmethod
    def from_rows(cls, rows, p: int, N: int) -> "ScalarMatrix":
        data = [[e.value if isinstance(e, Scalar) else int(e) for e in row] for row in rows]
        ncols = len(data[0]) if data else 0
        arr = np.array(data, dtype=np.int64).reshape(len(data), ncols)
        return cls(arr, p, N)

    @classmethod
    def zeros(cls, rows: int, cols: int, p: int, N: int) -> "ScalarMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), p, N)

    @classmethod
    def identity(cls, n: int, p: int, N: int) -> "ScalarMatrix":
        return cls(np.eye(n, dtype=np.int64), p, N)

    # -- shape / access
    @property
    def rows(self) -> int:
        return self.array.shape[0]

    @property
    def cols(self) -> int:
        return self.array.shape[1]

    def entry(self, i: int, j: int) -> Scalar:
        return Scalar(int(self.array[i, j]), self.p, self.N)

    def _match(self, other: "ScalarMatrix") -> None:
        if (self.p, self.N) != (other.p, other.N):
            raise ValueError("mismatched coefficient rings")

    # -- arithmetic
    def __matmul__(self, other: "ScalarMatrix") -> "ScalarMatrix":
        self._match(other)
        return ScalarMatrix(matmul_mod(self.array, other.array, self.mod), self.p, self.N)

    def __add__(self, other: "ScalarMatrix") -> "ScalarMatrix":
        self._match(other)
        return ScalarMatrix(self.array + other.array, self.p, self.N)

    def __sub__(self, other: "ScalarMatrix") -> "ScalarMatrix":
        self._match(other)
        return ScalarMatrix(self.array - other.array, self.p, self.N)

    def __neg__(self) -> "ScalarMatrix":
        return ScalarMatrix(-self.array, self.p, self.N)

    def scale(self, c: int) -> "ScalarMatrix":
        return ScalarMatrix(self.array * (c % self.mod), self.p, self.N)

    def transpose(self) -> "ScalarMatrix":
        return ScalarMatrix(self.array.T.copy(), self.p, self.N)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScalarMatrix):
            return NotImplemented
        return (self.p, self.N) == (other.p, other.N) and self.array.shape == other.array.shape \
            and bool(np.all(self.array == other.array))

    def __hash__(self):
        return hash((self.p, self.N, self.array.shape, self.array.tobytes()))

    def is_zero(self) -> bool:
        return bool(np.all(self.array == 0))

    def __repr__(self):
        return f"ScalarMatrix(Z/{self.p}^{self.N}, {self.rows}x{self.cols})"


@dataclass(frozen=True, slots=True)
class ElementaryDivisors:
    """Multiset of exponents e presenting a module as sum of Z/p^e factors.

    Exponent-0 factors are omitted; e = N means a full cyclic summand Z/p^N.
    Stored sorted descending for stable reporting.
    """

    exponents: tuple[int, ...]
    p: int
    N: int

    def __post_init__(self):
        exps = tuple(sorted((e for e in self.exponents if e > 0), reverse=True))
        if any(e > self.N for e in exps):
            raise ValueError("divisor exponent exceeds precision N")
        object.__setattr__(self, "exponents", exps)

    @property
    def length(self) -> int:
        """Z/p-length: sum of exponents (log_p of the group order)."""
        return sum(self.exponents)

    def is_trivial(self) -> bool:
        return not self.exponents

    def __str__(self):
        if not self.exponents:
            return "0"
        return " ⊕ ".join(f"(Z/{self.p}^{e})" for e in self.exponents)


# ---------------------------------------------------------------------------
# Smith normal form


def _valuations(arr: np.ndarray, p: int, N: int) -> np.ndarray:
    """Elementwise p-valuation capped at N (zero residues get N)."""
    vals = np.full(arr.shape, N, dtype=np.int64)
    t = arr.copy()
    live = t != 0
    vals[live] = 0
    for _ in range(N):
        m = live & (t % p == 0)
        if not m.any():
            break
        vals[m] += 1
        t[m] //= p
        live = m & (t != 0)
        # entries that became zero after dividing were exact p-powers times
        # mod; cannot happen since t started reduced, but keep the guard
    return np.minimum(vals, N)


def _snf_inplace(a: np.ndarray, p: int, N: int, u=None, v=None, vinv=None) -> list[int]:
    """Reduce `a` to diagonal p-power form in place; return pivot exponents.

    Transform accumulators are updated when given: u @ A_orig @ v == diag,
    and vinv is maintained as the inverse of v.  Pivot rule: first entry (in
    row-major order) of globally minimal valuation, scaled by a unit inverse
    to an exact p-power.  One clearing sweep per pivot suffices because every
    remaining entry has valuation >= the pivot's.
    """
    mod = p**N
    m, n = a.shape
    exps: list[int] = []
    for k in range(min(m, n)):
        sub = a[k:, k:]
        vals = _valuations(sub, p, N)
        e = int(vals.min())
        if e >= N:
            break
        i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
        i, j = i + k, j + k
        if i != k:
            a[[k, i], :] = a[[i, k], :]
            if u is not None:
                u[[k, i], :] = u[[i, k], :]
        if j != k:
            a[:, [k, j]] = a[:, [j, k]]
            if v is not None:
                v[:, [k, j]] = v[:, [j, k]]
            if vinv is not None:
                vinv[[k, j], :] = vinv[[j, k], :]
        pe = p**e
        unit = int(a[k, k]) // pe
        uinv = pow(unit, -1, mod)
        a[k, :] = (a[k, :] * uinv) % mod
        if u is not None:
            u[k, :] = (u[k, :] * uinv) % mod
        # clear below the pivot
        if k + 1 < m:
            q = a[k + 1:, k] // pe
            nz = q != 0
            if nz.any():
                a[k + 1:, :][nz] = (a[k + 1:, :][nz] - q[nz, None] * a[k, :]) % mod
                if u is not None:
                    u[k + 1:, :][nz] = (u[k + 1:, :][nz] - q[nz, None] * u[k, :]) % mod
        # clear to the right of the pivot (only row k is affected now)
        if k + 1 < n:
            q = a[k, k + 1:] // pe
            nz = q != 0
            if nz.any():
                a[:, k + 1:][:, nz] = (a[:, k + 1:][:, nz] - np.outer(a[:, k], q[nz])) % mod
                if v is not None:
                    v[:, k + 1:][:, nz] = (v[:, k + 1:][:, nz] - np.outer(v[:, k], q[nz])) % mod
                if vinv is not None:
                    vinv[k, :] = (vinv[k, :] + q[nz] @ vinv[k + 1:, :][nz]) % mod
        exps.append(e)
    return exps


def smith_normal_form(A: ScalarMatrix) -> tuple[ScalarMatrix, ScalarMatrix, ScalarMatrix]:
    """Return (U, D, V) with U, V invertible and U @ A @ V == D diagonal.

    Diagonal entries are exact p-powers p^e1 | p^e2 | ... (zeros last); the
    diagonal is unique.
    """
    p, N, mod = A.p, A.N, A.mod
    a = A.array.astype(_dtype_for(mod)).copy()
    m, n = a.shape
    u = np.eye(m, dtype=a.dtype)
    v = np.eye(n, dtype=a.dtype)
    _snf_inplace(a, p, N, u=u, v=v)
    return (ScalarMatrix(u, p, N), ScalarMatrix(a, p, N), ScalarMatrix(v, p, N))


def snf_diagonal(A: ScalarMatrix) -> list[int]:
    """Pivot exponents only (no transforms); exponent N entries are omitted."""
    a = A.array.astype(_dtype_for(A.mod)).copy()
    return _snf_inplace(a, A.p, A.N)


def diagonal_divisors(A: ScalarMatrix) -> ElementaryDivisors:
    """Elementary divisors of the Smith diagonal of A (pivot exponents, with
    exponent-N entries for the diagonal positions that stay zero)."""
    exps = snf_diagonal(A)
    full = exps + [A.N] * (min(A.rows, A.cols) - len(exps))
    return ElementaryDivisors(tuple(full), A.p, A.N)


def kernel_cokernel_sizes(A: ScalarMatrix) -> tuple[int, int]:
    """(log_p |ker A|, log_p |coker A|) for A acting (Z/p^N)^cols -> (Z/p^N)^rows.

    A pivot p^e contributes e to the kernel (cyclic factor Z/p^e) and e to the
    cokernel (Z/p^N / p^e Z/p^N has order p^e); pivotless coordinates give N.
    """
    exps = snf_diagonal(A)
    N = A.N
    ker = sum(exps) + N * (A.cols - len(exps))
    coker = sum(exps) + N * (A.rows - len(exps))
    return ker, coker


def invert_matrix(A: ScalarMatrix) -> ScalarMatrix:
    """Inverse of a matrix invertible over Z/p^N (unit-pivot Gauss-Jordan)."""
    if A.rows != A.cols:
        raise ValueError("only square matrices can be inverted")
    p, N, mod = A.p, A.N, A.mod
    n = A.rows
    a = A.array.copy().astype(_dtype_for(mod))
    inv = np.eye(n, dtype=a.dtype)
    for k in range(n):
        col = a[k:, k] % p
        pivots = np.nonzero(col != 0)[0]
        if pivots.size == 0:
            raise ValueError("matrix is not invertible over Z/p^N")
        i = k + int(pivots[0])
        if i != k:
            a[[k, i], :] = a[[i, k], :]
            inv[[k, i], :] = inv[[i, k], :]
        s = pow(int(a[k, k]), -1, mod)
        a[k, :] = (a[k, :] * s) % mod
        inv[k, :] = (inv[k, :] * s) % mod
        others = [r for r in range(n) if r != k and a[r, k] % mod != 0]
        for r in others:
            q = int(a[r, k])
            a[r, :] = (a[r, :] - q * a[k, :]) % mod
            inv[r, :] = (inv[r, :] - q * inv[k, :]) % mod
    return ScalarMatrix(inv, p, N)


def is_invertible(A: ScalarMatrix) -> bool:
    try:
        invert_matrix(A)
        return True
    except ValueError:
        return False


def homology_at(d_in: ScalarMatrix, d_out: ScalarMatrix) -> ElementaryDivisors:
    """Elementary divisors of ker(d_out)/im(d_in) on the middle module.

    The middle module is (Z/p^N)^k with k = cols(d_out) = rows(d_in).
    Smith-reduce d_out to expose the kernel in V-coordinates, rewrite the
    columns of d_in against the kernel generators, then read the quotient
    off the Smith diagonal of the relation matrix.
    """
    p, N, mod = d_out.p, d_out.N, d_out.mod
    d_out._match(d_in)
    k = d_out.cols
    if d_in.rows != k:
        raise ValueError(f"middle-rank mismatch: d_out has {k} columns, d_in has {d_in.rows} rows")
    if k == 0:
        return ElementaryDivisors((), p, N)

    a = d_out.array.astype(_dtype_for(mod)).copy()
    v = np.eye(k, dtype=a.dtype)
    vinv = np.eye(k, dtype=a.dtype)
    exps = _snf_inplace(a, p, N, v=v, vinv=vinv)
    # exponent of the kernel cyclic factor on each middle coordinate
    b = np.full(k, N, dtype=np.int64)
    b[: len(exps)] = exps

    if d_in.cols:
        y = matmul_mod(vinv, d_in.array, mod)
        # columns of d_in must land in ker(d_out): p^(N-b_i) | y[i, :]
        shift = (p ** (N - b))[:, None]
        if np.any(y % np.minimum(shift, mod) != 0):
            raise ValueError("d_out o d_in != 0: not a complex at this degree")
        c = y // shift
        rel = np.concatenate([c % mod, np.diag(p**b % mod)], axis=1)
    else:
        rel = np.diag(p**b % mod).astype(_dtype_for(mod))
    hexps = _snf_inplace(rel.copy(), p, N)
    full = hexps + [N] * (k - len(hexps))
    return ElementaryDivisors(tuple(full), p, N)
