"""Index bookkeeping: reports, six-node exactness, chains, power stabilization."""

import numpy as np
import pytest

from modop.algebra import AlgebraElement, AlgebraShape
from modop.errors import StructureError, UnmetHypothesisError
from modop.fredholm import (
    b_fredholm_commuting_check,
    b_fredholm_report,
    exact_sequence,
    fredholm_report,
    generalized_weyl_check,
    product_chain,
    weyl_defect_witness,
    weyl_perturbation_chain,
)
from modop.linmap import AdjointableMap
from modop.modules import K0Class
from modop.randgen import random_commuting_pair, random_low_rank, random_map


def embed_first(shape):
    """A^1 -> A^2, x |-> (x, 0)."""
    one = AlgebraElement.identity(shape)
    zero = AlgebraElement.zero(shape)
    return AdjointableMap.from_entries([[one], [zero]])


def project_second(shape):
    """A^2 -> A^1, (x, y) |-> y."""
    one = AlgebraElement.identity(shape)
    zero = AlgebraElement.zero(shape)
    return AdjointableMap.from_entries([[zero, one]])


def test_report_of_identity(shape23):
    rep = fredholm_report(AdjointableMap.identity(shape23, 2))
    assert rep.kernel_class.is_zero() and rep.coker_class.is_zero()
    assert rep.index.is_zero()
    assert rep.is_weyl_zero_index and rep.is_generalized_weyl


def test_report_counts_planted_deficits(shape23, rng):
    f = random_map(shape23, 3, 2, rng, rank_deficit=1)
    rep = fredholm_report(f)
    assert rep.kernel_class.entries == (3, 4)  # n_b + 1 per block
    assert rep.coker_class.entries == (1, 1)
    assert rep.index.entries == (2, 3)  # free(3) - free(2)
    assert not rep.is_generalized_weyl
    assert rep.margin > 0.01


def test_defect_witness_balances(shape23, rng):
    f = random_map(shape23, 3, 2, rng, rank_deficit=1)
    w = weyl_defect_witness(f)
    rep = fredholm_report(f)
    lhs = rep.kernel_class + w.pad_kernel
    rhs = rep.coker_class + w.pad_cokernel
    assert lhs.entries == rhs.entries
    assert w.pad_kernel.is_nonnegative() and w.pad_cokernel.is_nonnegative()
    # minimality: per block at least one pad entry vanishes
    for pk, pc in zip(w.pad_kernel.entries, w.pad_cokernel.entries):
        assert min(pk, pc) == 0


def test_generalized_weyl_for_selfadjoint(shape23, rng):
    g = random_map(shape23, 2, 2, rng, rank_deficit=1)
    f = g.adjoint() @ g  # self-adjoint: kernel class == cokernel class
    ok, margin = generalized_weyl_check(f)
    assert ok and margin > 0
    ok2, _ = generalized_weyl_check(random_map(shape23, 3, 2, rng))
    assert not ok2  # full-rank 3 -> 2 has kernel but no cokernel


def test_exact_sequence_zero_composite(shape23):
    # g f = 0 with f injective, g surjective: every space is forced
    f, g = embed_first(shape23), project_second(shape23)
    rep = exact_sequence(f, g)
    a = shape23.dim  # 4 + 9
    assert rep.dims == (0, a, a, a, a, 0)
    assert rep.alternating_dim_sum == 0
    assert rep.alternating_k0_sum.is_zero()
    assert rep.worst_residual < 1e-12
    assert rep.index_additive
    assert rep.index_f.entries == tuple(-n for n in shape23.block_sizes)
    assert rep.index_g.entries == tuple(n for n in shape23.block_sizes)


def test_exact_sequence_generic(shape23, rng):
    f = random_map(shape23, 3, 2, rng, rank_deficit=1)
    g = random_map(shape23, 2, 2, rng, rank_deficit=1)
    rep = exact_sequence(f, g)
    assert rep.worst_residual < 1e-8
    assert rep.alternating_dim_sum == 0
    assert rep.alternating_k0_sum.is_zero()
    assert rep.index_additive
    # sanity on the endpoint spaces
    assert rep.spaces[0].equals(f.kernel())
    assert rep.spaces[5].equals(g.image().complement())


def test_exact_sequence_requires_composability(shape23, rng):
    f = random_map(shape23, 3, 2, rng)
    with pytest.raises(StructureError):
        exact_sequence(f, f)


def test_perturbation_chain_balances(shape23, rng):
    t = random_map(shape23, 3, 2, rng, rank_deficit=1)
    f = random_low_rank(shape23, 3, 2, rng, rank=1, scale=0.5)
    rep = weyl_perturbation_chain(t, f)
    assert rep.identity_holds
    assert rep.lhs.entries == rep.rhs.entries
    assert rep.perturbation_class.is_nonnegative()
    assert rep.margin > 0
    assert max(rep.residuals.values()) < 1e-8
    # the splitting image really sits inside both images
    assert (t + f).image().contains(rep.splitting_image)[0]
    assert t.image().contains(rep.splitting_image)[0]


def test_perturbation_chain_zero_perturbation(shape23, rng):
    t = random_map(shape23, 2, 2, rng, rank_deficit=1)
    f = 1e-0 * random_low_rank(shape23, 2, 2, rng, rank=1, scale=0.0)
    rep = weyl_perturbation_chain(t, 0.0 * f)
    assert rep.identity_holds
    assert rep.perturbation_class.is_zero()
    assert rep.kernel_perturbed.equals(t.kernel())


def test_product_chain_balances(shape23, rng):
    f = random_map(shape23, 3, 2, rng, rank_deficit=1)
    d = random_map(shape23, 2, 2, rng, rank_deficit=1)
    rep = product_chain(d, f)
    assert rep.identity_holds
    assert rep.margin > 0
    assert rep.kernel_product.equals((d @ f).kernel())


def test_power_stabilization_frozen_example():
    # diag(J_2, 2) on C^3: ranks 3, 2, 1, then constant
    mat = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 2.0]])
    rep = b_fredholm_report(AdjointableMap.from_matrix(mat))
    assert rep.stabilization_exponent == 2
    assert rep.rank_chain == (3, 2, 1)
    assert rep.stable_image.dim == 1
    assert abs(rep.restricted_gamma - 2.0) < 1e-12  # F acts as *2 on the stable line
    assert rep.b_index.is_zero()
    assert rep.kernel_meet_stable_image.k0().is_zero()


def test_power_stabilization_nilpotent():
    j3 = np.diag(np.ones(2), 1)
    rep = b_fredholm_report(AdjointableMap.from_matrix(j3))
    assert rep.stabilization_exponent == 3
    assert rep.rank_chain == (3, 2, 1, 0)
    assert rep.stable_image.dim == 0
    assert rep.b_index.is_zero()  # empty restriction is vacuously invertible


def test_power_stabilization_invertible(shape23, rng):
    f = random_map(shape23, 2, 2, rng)
    rep = b_fredholm_report(f)
    assert rep.stabilization_exponent == 0
    assert rep.stable_image.dim == f.kernel().ambient_dim


def test_commuting_stabilization_additivity(rng):
    shape = AlgebraShape((1,))
    f, d = random_commuting_pair(shape, 7, rng, nilpotent=(2,))
    rep = b_fredholm_commuting_check(f, d)
    assert rep.commutator_residual < 1e-12
    assert rep.b_index_additive
    assert rep.report_f.b_index.is_zero()
    assert rep.report_product.b_index.is_zero()


def test_commuting_check_rejects_noncommuting(rng):
    shape = AlgebraShape((1,))
    f = random_map(shape, 5, 5, rng)
    d = random_map(shape, 5, 5, rng)
    with pytest.raises(UnmetHypothesisError):
        b_fredholm_commuting_check(f, d)
