"""prismalg: exact computations with truncated prismatic-crystal data.

Layers, bottom up:

- ``scalars``:    Z/p^N arithmetic, Smith normal form, elementary divisors
- ``algebra``:    finite-basis truncated polynomial / divided-power algebras
- ``delta``:      delta-ring structures and Frobenius lifts on those algebras
- ``complexes``:  cochain complexes, Koszul, tensor/Hom/cone, cohomology
- ``higgs``:      Higgs modules and their de Rham complexes
- ``strat``:      stratifications over truncated PD cosimplicial rings
- ``cech``:       Cech-Alexander complex and the comparison double complex
- ``duality``:    the de Rham duality pairing at the complex level
- ``cli``:        batch front end over a line-oriented problem grammar
"""

from .scalars import (
    ElementaryDivisors,
    Scalar,
    ScalarMatrix,
    binomial,
    factorial_split,
    homology_at,
    invert,
    p_valuation,
    scalar_arith,
    smith_normal_form,
)
from .algebra import (
    AlgebraElement,
    AlgebraHom,
    FreeModuleMap,
    GeneratorSpec,
    TruncatedAlgebra,
    TwistTag,
    algebra_hom,
    make_pd_extension,
    make_poly_algebra,
    pd_divided_power,
    restrict_scalars,
    tensor_over_base,
)
from .delta import (
    DeltaStructure,
    check_delta_axioms,
    crystalline_pd_frobenius,
    delta,
    delta_xi,
    frobenius,
    gamma_p,
)
from .complexes import (
    ChainMap,
    Complex,
    DoubleComplex,
    check_homotopy,
    cone,
    hom_complex,
    koszul,
    koszul_transition,
    shift,
    tensor,
    total_complex,
)
from .higgs import HiggsModule, base_change, check_higgs, dr_complex, dual, hom, twist
from .strat import (
    PDTower,
    SimplexMap,
    Stratification,
    check_cocycle,
    coface,
    degeneracy,
    epsilon_from_theta,
    epsilon_inverse,
    simplex_pushforward,
    theta_from_epsilon,
)
from .cech import (
    CechDouble,
    OmegaLevel,
    build_cech_double,
    build_omega,
    ca_complex,
    compare_with_dr,
    cosimplicial_contractibility_check,
    d_R_matrix,
    omega_pushforward,
    pd_poincare_homotopy,
)
from .duality import (
    PairingWitness,
    build_pairing,
    cohomology_duality_table,
    verify_duality_iso,
)

__all__ = [name for name in dir() if not name.startswith("_")]
