"""Shared test helpers: the Hom-tensor adjunction chain map (the sign audit)
and a deterministic full-period index walk for stratified sampling."""

import numpy as np

from prismalg.algebra import FreeModuleMap
from prismalg.complexes import ChainMap, hom_complex, tensor


def adjunction_chain_map(K, L, M) -> ChainMap:
    """The canonical reindexing Hom(K (x) L, M) -> Hom(K, Hom(L, M)).

    Built as a permutation of basis elements with no correction signs; the
    ChainMap constructor verifies it commutes with both differentials, which
    pins down the shift/tensor/Hom sign conventions simultaneously.
    """
    lhs = hom_complex(tensor(K, L), M)
    HLM = hom_complex(L, M)
    rhs = hom_complex(K, HLM)
    alg = K.algebra
    maps = {}
    for n in lhs.degrees():
        if lhs.rank(n) == 0:
            continue
        lhs_idx = {}
        pos = 0
        tensor_degrees = sorted({i + j for i in K.ranks for j in L.ranks})
        for s in tensor_degrees:
            if M.rank(n + s) == 0:
                continue
            cells = [(i, s - i) for i in sorted(K.ranks) if L.rank(s - i)]
            if sum(K.rank(i) * L.rank(j) for i, j in cells) == 0:
                continue
            for u in range(M.rank(n + s)):
                for (i, j) in cells:
                    for a in range(K.rank(i)):
                        for b in range(L.rank(j)):
                            lhs_idx[(i, j, a, b, u)] = pos
                            pos += 1
        assert pos == lhs.rank(n)
        rhs_idx = {}
        offset_i = 0
        for i in sorted(K.ranks):
            if HLM.rank(n + i) == 0 or K.rank(i) == 0:
                continue
            uprime = 0
            for j in sorted(L.ranks):
                if M.rank(n + i + j) == 0 or L.rank(j) == 0:
                    continue
                for u in range(M.rank(n + i + j)):
                    for b in range(L.rank(j)):
                        for a in range(K.rank(i)):
                            rhs_idx[(i, j, a, b, u)] = offset_i + uprime * K.rank(i) + a
                        uprime += 1
            offset_i += uprime * K.rank(i)
        assert offset_i == rhs.rank(n)
        data = np.zeros((rhs.rank(n), lhs.rank(n), alg.dim), dtype=np.int64)
        for key, li in lhs_idx.items():
            data[rhs_idx[key], li] = alg.one().vec
        maps[n] = FreeModuleMap(alg, data)
    return ChainMap(lhs, rhs, maps, check=True)


def lcg_indices(count: int, total: int, seed: int = 1):
    """Deterministic pseudo-uniform walk over [0, total): a fixed 63-bit
    linear-congruential sequence reduced mod total (repeats possible)."""
    x = seed
    mult = 6364136223846793005
    inc = 1442695040888963407
    for _ in range(count):
        yield x % total
        x = (x * mult + inc) % (2**63)
