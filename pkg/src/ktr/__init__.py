"""Rank and order bookkeeping for the relative K-groups of Z[x,y]/(xy).

The relative groups K_q(A, I) with A = Z[x,y]/(xy) and I = (x,y) split,
prime by prime, into RO(S^1)-graded TR-groups of the integers.  This package
evaluates the rank/order formulas for those TR-groups, assembles them into
K-group reports, discriminates small abelian p-groups, and audits the Tate
spectral-sequence charts behind the low-degree group structures.
"""

from ktr.arith import (
    factorial_p_valuation,
    fixed_dim,
    is_prime,
    p_part,
    p_valuation,
    primes_upto,
)
from ktr.tr import (
    KGroupReport,
    TRSummand,
    k_group,
    k_odd_order_p,
    lim_even_rank,
    tr_even_rank,
    tr_odd_order,
    unique_level,
    verify_theorem_a,
)
from ktr.abelian import (
    AbelianPGroup,
    KnownGroupEntry,
    discriminate,
    enumerate_candidates,
    known_structures,
    mod_coeff_order,
    quotient_order,
    torsion_order,
)
from ktr.charts import (
    Chart,
    assemble,
    audit_against_tr,
    degree_order,
    load_chart,
    run_to_final,
    truncate,
)

__version__ = "0.1.0"
