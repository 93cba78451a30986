"""Adjointable maps checked against their dense flat realizations."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modop.algebra import AlgebraElement, AlgebraShape
from modop.errors import StructureError, UnmetHypothesisError
from modop.linmap import (
    AdjointableMap,
    RestrictedEndomorphism,
    orthogonal_projection,
    penrose_residuals,
)
from modop.modules import ModuleVector, flat_dim
from modop.randgen import (
    random_element,
    random_endomorphism,
    random_map,
    random_submodule,
    random_vector_flat,
)


def test_from_entries_roundtrip(shape23, rng):
    rows = [[random_element(shape23, rng) for _ in range(2)] for _ in range(3)]
    f = AdjointableMap.from_entries(rows)
    assert (f.m, f.n) == (2, 3)
    for i in range(3):
        for j in range(2):
            assert f.entry(i, j).allclose(rows[i][j])


def test_left_multiplication_map(shape23, rng):
    a = random_element(shape23, rng)
    f = AdjointableMap.from_element(a)
    x = ModuleVector.from_flat(shape23, 1, random_vector_flat(shape23, 1, rng))
    assert f.apply(x).entries[0].allclose(a * x.entries[0])
    # realization is the Kronecker lift of the element blocks
    expected = np.zeros_like(f.realization)
    off = 0
    for nb, blk in zip(shape23.block_sizes, a.blocks):
        expected[off : off + nb * nb, off : off + nb * nb] = np.kron(blk, np.eye(nb))
        off += nb * nb
    assert np.allclose(f.realization, expected)


def test_apply_matches_realization(shape23, rng):
    f = random_map(shape23, 3, 2, rng)
    x = random_vector_flat(shape23, 3, rng)
    v = ModuleVector.from_flat(shape23, 3, x)
    assert np.allclose(f.apply(v).flatten(), f.realization @ x)


def test_composition_and_adjoint_realizations(shape23, rng):
    f = random_map(shape23, 3, 2, rng)
    g = random_map(shape23, 2, 3, rng)
    assert np.allclose((g @ f).realization, g.realization @ f.realization)
    assert np.allclose(f.adjoint().realization, f.realization.conj().T)
    assert np.allclose((f + f).realization, 2 * f.realization)
    assert np.allclose((-f).realization, -f.realization)
    assert np.allclose((2j * f).realization, 2j * f.realization)


def test_power_is_iterated_matmul(shape23, rng):
    f = random_endomorphism(shape23, 2, rng)
    assert f.power(0).allclose(AdjointableMap.identity(shape23, 2))
    assert np.allclose(f.power(3).realization, np.linalg.matrix_power(f.realization, 3))


def test_norm_equals_realization_norm(shape23, rng):
    f = random_map(shape23, 3, 2, rng)
    assert abs(f.norm() - np.linalg.norm(f.realization, 2)) < 1e-12


def test_singular_values_lift_with_multiplicity(shape23, rng):
    f = random_map(shape23, 2, 2, rng)
    lifted = []
    for nb, c in zip(shape23.block_sizes, f.blocks):
        lifted.extend(np.repeat(np.linalg.svd(c, compute_uv=False), nb))
    real = np.linalg.svd(f.realization, compute_uv=False)
    assert np.allclose(np.sort(lifted), np.sort(real))
    # so the merged minimum modulus is the flat one
    data = f.singular_data()
    positive = real[real > 1e-10]
    assert abs(data.gamma - positive.min()) < 1e-12


def test_kernel_image_rank_nullity(shape23, rng):
    f = random_map(shape23, 3, 2, rng, rank_deficit=1)
    ker, img = f.kernel(), f.image()
    assert (ker.k0() + img.k0()).entries == tuple(3 * nb for nb in shape23.block_sizes)
    assert ker.dim + img.dim == flat_dim(shape23, 3)
    assert np.linalg.norm(f.realization @ ker.flat_basis) < 1e-9
    # rank deficit planted per block
    assert img.k0().entries == tuple(2 * nb - 1 for nb in shape23.block_sizes)


def test_image_contains_applied_vectors(shape23, rng):
    f = random_map(shape23, 3, 2, rng)
    img = f.image()
    for _ in range(3):
        y = f.realization @ random_vector_flat(shape23, 3, rng)
        resid = y - img.flat_basis @ (img.flat_basis.conj().T @ y)
        assert np.linalg.norm(resid) < 1e-9 * np.linalg.norm(y)


def test_apply_to_submodule_of_full_is_image(shape23, rng):
    from modop.modules import Submodule

    f = random_map(shape23, 2, 3, rng, rank_deficit=1)
    moved = f.apply_to_submodule(Submodule.full(shape23, 2))
    assert moved.equals(f.image())


def test_pseudoinverse_matches_numpy(shape23, rng):
    f = random_map(shape23, 3, 2, rng, rank_deficit=1)
    x = f.mp_pseudoinverse()
    assert np.allclose(x.realization, np.linalg.pinv(f.realization), atol=1e-10)
    resid = penrose_residuals(f, x)
    assert max(resid.values()) < 1e-12


def test_orthogonal_projection_map(shape23, rng):
    sub = random_submodule(shape23, 3, rng)
    p = orthogonal_projection(sub)
    assert (p @ p).allclose(p)
    assert p.adjoint().allclose(p)
    assert p.image().equals(sub)


def test_restriction_to_invariant_submodule(shape23, rng):
    sub = random_submodule(shape23, 3, rng, ranks=(2, 3))
    p = orthogonal_projection(sub)
    g = random_endomorphism(shape23, 3, rng)
    f = p @ g @ p  # leaves sub invariant by construction
    r = RestrictedEndomorphism.of(f, sub)
    assert r.dim == sub.dim
    assert r.invariance_defect < 1e-12
    assert r.norm() <= f.norm() + 1e-12
    ker, img = r.kernel(), r.image()
    assert sub.contains(ker)[0] and sub.contains(img)[0]
    assert ker.dim + img.dim == sub.dim


def test_restriction_rejects_non_invariant(shape23, rng):
    sub = random_submodule(shape23, 3, rng, ranks=(1, 1))
    g = random_endomorphism(shape23, 3, rng)
    with pytest.raises(UnmetHypothesisError):
        RestrictedEndomorphism.of(g, sub)


def test_from_matrix_trivial_algebra(rng):
    mat = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    f = AdjointableMap.from_matrix(mat)
    assert f.shape == AlgebraShape((1,))
    assert np.allclose(f.realization, mat)


def test_shape_validation(shape23):
    with pytest.raises(StructureError):
        AdjointableMap(shape23, 2, 2, (np.eye(4),))  # missing second block
    with pytest.raises(StructureError):
        AdjointableMap(shape23, 2, 2, (np.eye(3), np.eye(6)))  # wrong block shape
    with pytest.raises(StructureError):
        AdjointableMap.from_matrix(np.zeros((0, 2)))


@given(st.integers(0, 2**32 - 1))
def test_adjoint_flips_inner_products(seed):
    # <f x, y> = <x, f* y> block by block
    rng = np.random.default_rng(seed)
    shape = AlgebraShape((2,))
    f = random_map(shape, 2, 3, rng)
    from modop.modules import inner_product

    x = ModuleVector.from_flat(shape, 2, random_vector_flat(shape, 2, rng))
    y = ModuleVector.from_flat(shape, 3, random_vector_flat(shape, 3, rng))
    lhs = inner_product(f.apply(x), y)
    rhs = inner_product(x, f.adjoint().apply(y))
    assert lhs.allclose(rhs)


@given(st.integers(0, 2**32 - 1))
def test_kernel_is_adjoint_image_complement(seed):
    rng = np.random.default_rng(seed)
    shape = AlgebraShape((2, 1))
    f = random_map(shape, 2, 2, rng, rank_deficit=1)
    ker = f.kernel()
    im_star = f.adjoint().image()
    assert ker.equals(im_star.complement())
