"""Free modules over a block algebra, their submodules, and K0 classes.

A vector in the free module of rank ``m`` is an m-tuple of algebra
elements with the algebra-valued inner product ``<x, y> = sum_i x_i* y_i``.
Everything is flattened to plain complex coordinates for numerics; the
flattening is chosen so the standard inner product equals the trace of
the algebra-valued one.

The key structural fact the code leans on: a subspace closed under the
right algebra action decomposes per block as (column space) x (column
positions).  A submodule is therefore stored as one orthonormal column
basis per block — its K0 class is just the tuple of those basis sizes,
so every K-theory statement downstream reduces to integer arithmetic on
ranks decided per block.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .algebra import AlgebraElement, AlgebraShape
from .errors import IdentityViolation, InvarianceError, StructureError, UnmetHypothesisError
from .subspace import (
    as_complex,
    complement as _complement_raw,
    empty_basis,
    intersect as _intersect_raw,
    op_norm,
    orthonormal_image,
    principal_angles,
    subspace_equal,
    subspace_sum,
)
from .tolerances import DEFAULT_TOL, ToleranceConfig

Array = np.ndarray

__all__ = [
    "K0Class",
    "ModuleVector",
    "Submodule",
    "inner_product",
    "module_norm",
    "submodule_span",
    "k0_class",
    "orth_complement",
    "sum_and_intersection",
    "DecompositionWitness",
    "nested_decomposition_witness",
    "flat_dim",
    "block_layout",
]


# ---------------------------------------------------------------------------
# flat coordinate layout


def flat_dim(shape: AlgebraShape, m: int) -> int:
    """Complex dimension of the rank-m free module."""
    return m * shape.dim


def block_layout(shape: AlgebraShape, m: int) -> list[tuple[int, int]]:
    """(offset, length) of each block's segment in flat coordinates."""
    out, off = [], 0
    for n in shape.block_sizes:
        seg = m * n * n
        out.append((off, seg))
        off += seg
    return out


def _tall_from_flat(shape: AlgebraShape, m: int, mat: Array) -> list[Array]:
    """Per block: stack of reshaped basis columns, shape (m*n_b, n_b * ncols)."""
    mat = as_complex(mat)
    talls = []
    for (off, seg), n in zip(block_layout(shape, m), shape.block_sizes):
        rows = mat[off : off + seg]
        cols = [rows[:, j].reshape(m * n, n) for j in range(rows.shape[1])]
        talls.append(np.hstack(cols) if cols else empty_basis(m * n))
    return talls


def _flat_from_column_bases(shape: AlgebraShape, m: int, bases: list[Array]) -> Array:
    """Assemble the canonical flat orthonormal basis from per-block column bases."""
    total = flat_dim(shape, m)
    cols = []
    for (off, seg), n, w in zip(block_layout(shape, m), shape.block_sizes, bases):
        for j in range(w.shape[1]):
            for t in range(n):
                v = np.zeros(total, dtype=np.complex128)
                x = np.outer(w[:, j], np.eye(n)[t])
                v[off : off + seg] = x.ravel()
                cols.append(v)
    return np.column_stack(cols) if cols else empty_basis(total)


@lru_cache(maxsize=64)
def _right_action_generators(block_sizes: tuple[int, ...], m: int) -> tuple[Array, ...]:
    """Flat matrices of right multiplication by every matrix unit of the algebra."""
    shape = AlgebraShape(block_sizes)
    total = flat_dim(shape, m)
    layout = block_layout(shape, m)
    gens = []
    for b, n in enumerate(shape.block_sizes):
        off, seg = layout[b]
        for r in range(n):
            for s in range(n):
                unit = np.zeros((n, n))
                unit[r, s] = 1.0
                local = np.kron(np.eye(m * n), unit.T)
                g = np.zeros((total, total))
                g[off : off + seg, off : off + seg] = local
                g.setflags(write=False)
                gens.append(g)
    return tuple(gens)


# ---------------------------------------------------------------------------
# K0 classes


@dataclass(frozen=True)
class K0Class:
    """Integer vector, one entry per block; the K0 datum of a submodule.

    Entries may be negative when the class represents a formal
    difference (e.g. a Fredholm index).
    """

    entries: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(e) for e in self.entries))

    @classmethod
    def zero(cls, k: int) -> "K0Class":
        return cls((0,) * k)

    @classmethod
    def free(cls, shape: AlgebraShape, m: int) -> "K0Class":
        """Class of the rank-m free module: m * n_b in block b."""
        return cls(tuple(m * n for n in shape.block_sizes))

    def __add__(self, other: "K0Class") -> "K0Class":
        return K0Class(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "K0Class") -> "K0Class":
        return K0Class(tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __neg__(self) -> "K0Class":
        return K0Class(tuple(-a for a in self.entries))

    def __le__(self, other: "K0Class") -> bool:
        return all(a <= b for a, b in zip(self.entries, other.entries))

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.entries)

    def is_nonnegative(self) -> bool:
        return all(a >= 0 for a in self.entries)

    def positive_part(self) -> "K0Class":
        return K0Class(tuple(max(0, a) for a in self.entries))

    def __str__(self) -> str:
        return "[" + ",".join(str(e) for e in self.entries) + "]"


# ---------------------------------------------------------------------------
# module vectors


@dataclass(frozen=True, eq=False)
class ModuleVector:
    """An m-tuple of algebra elements."""

    shape: AlgebraShape
    m: int
    entries: tuple[AlgebraElement, ...]

    def __post_init__(self):
        if self.m < 1:
            raise StructureError("module rank must be positive")
        if len(self.entries) != self.m:
            raise StructureError(f"expected {self.m} entries, got {len(self.entries)}")
        for e in self.entries:
            if e.shape != self.shape:
                raise StructureError("entry algebra mismatch")

    @classmethod
    def zero(cls, shape: AlgebraShape, m: int) -> "ModuleVector":
        return cls(shape, m, tuple(AlgebraElement.zero(shape) for _ in range(m)))

    @classmethod
    def generator(cls, shape: AlgebraShape, m: int, i: int) -> "ModuleVector":
        """i-th standard generator: identity in slot i, zero elsewhere."""
        ents = [AlgebraElement.zero(shape) for _ in range(m)]
        ents[i] = AlgebraElement.identity(shape)
        return cls(shape, m, tuple(ents))

    @classmethod
    def from_flat(cls, shape: AlgebraShape, m: int, vec: Array) -> "ModuleVector":
        vec = as_complex(vec).ravel()
        if vec.shape[0] != flat_dim(shape, m):
            raise StructureError("flat vector length mismatch")
        per_entry: list[list[Array]] = [[] for _ in range(m)]
        for (off, _), n in zip(block_layout(shape, m), shape.block_sizes):
            for i in range(m):
                seg = vec[off + i * n * n : off + (i + 1) * n * n]
                per_entry[i].append(seg.reshape(n, n))
        return cls(shape, m, tuple(AlgebraElement(shape, tuple(bs)) for bs in per_entry))

    def flatten(self) -> Array:
        out = np.zeros(flat_dim(self.shape, self.m), dtype=np.complex128)
        for (off, _), b in zip(block_layout(self.shape, self.m), range(self.shape.num_blocks)):
            n = self.shape.block_sizes[b]
            for i in range(self.m):
                out[off + i * n * n : off + (i + 1) * n * n] = self.entries[i].blocks[b].ravel()
        return out

    def tall(self, b: int) -> Array:
        """Block-b tall form: the m entry matrices stacked vertically."""
        return np.vstack([e.blocks[b] for e in self.entries])

    def __add__(self, other: "ModuleVector") -> "ModuleVector":
        return ModuleVector(
            self.shape, self.m, tuple(a + b for a, b in zip(self.entries, other.entries))
        )

    def __sub__(self, other: "ModuleVector") -> "ModuleVector":
        return ModuleVector(
            self.shape, self.m, tuple(a - b for a, b in zip(self.entries, other.entries))
        )

    def __rmul__(self, scalar) -> "ModuleVector":
        return ModuleVector(self.shape, self.m, tuple(scalar * a for a in self.entries))

    def right_mul(self, a: AlgebraElement) -> "ModuleVector":
        """Right action: every entry multiplied by ``a`` on the right."""
        return ModuleVector(self.shape, self.m, tuple(e * a for e in self.entries))

    def norm(self) -> float:
        """Module norm: sqrt of the C*-norm of <x, x>."""
        return float(np.sqrt(inner_product(self, self).norm()))


def inner_product(x: ModuleVector, y: ModuleVector) -> AlgebraElement:
    """Algebra-valued inner product sum_i x_i* y_i (linear in y)."""
    if x.shape != y.shape or x.m != y.m:
        raise StructureError("inner product needs vectors from the same module")
    blocks = []
    for b in range(x.shape.num_blocks):
        xb, yb = x.tall(b), y.tall(b)
        blocks.append(xb.conj().T @ yb)
    return AlgebraElement(x.shape, tuple(blocks))


def module_norm(x: ModuleVector) -> float:
    return x.norm()


# ---------------------------------------------------------------------------
# submodules


@dataclass(frozen=True, eq=False)
class Submodule:
    """A subspace of the free module closed under the right algebra action.

    ``column_bases[b]`` is an orthonormal basis of the block-b column
    space; the block-b component of the submodule is exactly (that
    space) x (all column positions), so the complex dimension of the
    component is ``n_b * column_bases[b].shape[1]``.
    """

    shape: AlgebraShape
    m: int
    column_bases: tuple[Array, ...]
    invariance_residual_bound: float = 0.0

    def __post_init__(self):
        if len(self.column_bases) != self.shape.num_blocks:
            raise StructureError("one column basis per block required")
        frozen = []
        for n, w in zip(self.shape.block_sizes, self.column_bases):
            w = as_complex(w)
            if w.shape[0] != self.m * n:
                raise StructureError(
                    f"column basis rows {w.shape[0]} != {self.m}*{n}"
                )
            w = np.array(w)
            w.setflags(write=False)
            frozen.append(w)
        object.__setattr__(self, "column_bases", tuple(frozen))

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, shape: AlgebraShape, m: int) -> "Submodule":
        return cls(shape, m, tuple(empty_basis(m * n) for n in shape.block_sizes))

    @classmethod
    def full(cls, shape: AlgebraShape, m: int) -> "Submodule":
        return cls(shape, m, tuple(np.eye(m * n, dtype=np.complex128) for n in shape.block_sizes))

    @classmethod
    def span_flat(
        cls,
        shape: AlgebraShape,
        m: int,
        flat_matrix: Array,
        tol: ToleranceConfig = DEFAULT_TOL,
        *,
        require_invariant: bool = False,
    ) -> "Submodule":
        """Smallest submodule containing the given flat column vectors.

        With ``require_invariant=True`` the input span must already be
        closed under the right action; a strictly larger closure raises
        :class:`InvarianceError`.
        """
        flat_matrix = as_complex(flat_matrix)
        if flat_matrix.shape[0] != flat_dim(shape, m):
            raise StructureError("flat matrix row count mismatch")
        q, _ = orthonormal_image(flat_matrix, tol, scale=1.0)
        bases = []
        for tall, n in zip(_tall_from_flat(shape, m, q), shape.block_sizes):
            w, _ = orthonormal_image(tall, tol, scale=1.0)
            bases.append(w)
        sub = cls(shape, m, tuple(bases))
        if require_invariant and sub.dim != q.shape[1]:
            raise InvarianceError(
                f"span has dimension {q.shape[1]} but its invariant closure has "
                f"dimension {sub.dim}; input is not a submodule",
                residual=_generator_residual(shape, m, q),
            )
        return sub

    @classmethod
    def span_vectors(
        cls,
        vectors: list[ModuleVector],
        tol: ToleranceConfig = DEFAULT_TOL,
    ) -> "Submodule":
        if not vectors:
            raise StructureError("need at least one vector to span")
        shape, m = vectors[0].shape, vectors[0].m
        mat = np.column_stack([v.flatten() for v in vectors])
        return cls.span_flat(shape, m, mat, tol)

    # -- basic data -------------------------------------------------------

    @property
    def dim(self) -> int:
        """Complex dimension."""
        return sum(
            n * w.shape[1] for n, w in zip(self.shape.block_sizes, self.column_bases)
        )

    @property
    def ambient_dim(self) -> int:
        return flat_dim(self.shape, self.m)

    def k0(self) -> K0Class:
        return K0Class(tuple(w.shape[1] for w in self.column_bases))

    @cached_property
    def flat_basis(self) -> Array:
        """Canonical orthonormal basis in flat coordinates."""
        return _flat_from_column_bases(self.shape, self.m, list(self.column_bases))

    def basis_vectors(self) -> list[ModuleVector]:
        q = self.flat_basis
        return [ModuleVector.from_flat(self.shape, self.m, q[:, j]) for j in range(q.shape[1])]

    def invariance_residual(self) -> float:
        """Certificate: worst defect of basis * generator staying in the span."""
        return _generator_residual(self.shape, self.m, self.flat_basis)

    # -- lattice operations -------------------------------------------------

    def _check_ambient(self, other: "Submodule"):
        if self.shape != other.shape or self.m != other.m:
            raise StructureError("submodules live in different modules")

    def equals(self, other: "Submodule", tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        self._check_ambient(other)
        return all(
            subspace_equal(a, b, tol)[0]
            for a, b in zip(self.column_bases, other.column_bases)
        )

    def equality_defect(self, other: "Submodule") -> float:
        """Worst sine between corresponding blocks (+inf on dimension mismatch)."""
        self._check_ambient(other)
        worst = 0.0
        for a, b in zip(self.column_bases, other.column_bases):
            worst = max(worst, subspace_equal(a, b)[1])
        return worst

    def contains(self, other: "Submodule", tol: ToleranceConfig = DEFAULT_TOL) -> tuple[bool, float]:
        self._check_ambient(other)
        worst = 0.0
        ok = True
        for big, small in zip(self.column_bases, other.column_bases):
            if small.shape[1] == 0:
                continue
            if big.shape[1] == 0:
                return False, 1.0
            resid = op_norm(small - big @ (big.conj().T @ small))
            worst = max(worst, resid)
            ok = ok and resid <= tol.angle_tol
        return ok, worst

    def complement(self) -> "Submodule":
        """Orthogonal complement (a submodule, since the action is *-closed)."""
        bases = [
            _complement_raw(w, self.m * n)
            for n, w in zip(self.shape.block_sizes, self.column_bases)
        ]
        return Submodule(self.shape, self.m, tuple(bases))

    def intersection(self, other: "Submodule", tol: ToleranceConfig = DEFAULT_TOL) -> tuple["Submodule", float]:
        """Intersection plus the worst cosine gap behind the decisions."""
        self._check_ambient(other)
        bases, gap = [], np.inf
        for a, b in zip(self.column_bases, other.column_bases):
            w, g = _intersect_raw(a, b, tol)
            bases.append(w)
            gap = min(gap, g)
        return Submodule(self.shape, self.m, tuple(bases)), float(gap)

    def add(self, other: "Submodule", tol: ToleranceConfig = DEFAULT_TOL) -> "Submodule":
        self._check_ambient(other)
        bases = [subspace_sum(a, b, tol)[0] for a, b in zip(self.column_bases, other.column_bases)]
        return Submodule(self.shape, self.m, tuple(bases))

    def sample_flat(self, rng: np.random.Generator, count: int = 1) -> Array:
        """Random flat coordinates inside the submodule (gaussian coefficients)."""
        q = self.flat_basis
        coeff = rng.normal(size=(q.shape[1], count)) + 1j * rng.normal(size=(q.shape[1], count))
        return q @ coeff

    def __repr__(self) -> str:
        return f"Submodule(shape={self.shape}, m={self.m}, k0={self.k0()})"


def _generator_residual(shape: AlgebraShape, m: int, q: Array) -> float:
    if q.shape[1] == 0:
        return 0.0
    worst = 0.0
    p = q @ q.conj().T
    for g in _right_action_generators(shape.block_sizes, m):
        moved = g @ q
        worst = max(worst, op_norm(moved - p @ moved))
    return float(worst)


# ---------------------------------------------------------------------------
# module-level operations


def submodule_span(vectors: list[ModuleVector], tol: ToleranceConfig = DEFAULT_TOL) -> Submodule:
    """Smallest submodule containing the given vectors."""
    return Submodule.span_vectors(vectors, tol)


def k0_class(sub: Submodule) -> K0Class:
    return sub.k0()


def orth_complement(sub: Submodule) -> Submodule:
    return sub.complement()


def sum_and_intersection(
    a: Submodule, b: Submodule, tol: ToleranceConfig = DEFAULT_TOL
) -> tuple[Submodule, Submodule]:
    """Sum and intersection, with the per-block dimension identity enforced.

    The two are computed along independent numerical routes (stacked-rank
    versus principal-cosine counting), so the identity
    ``k0(M+N) + k0(M∩N) == k0(M) + k0(N)`` is a real cross-check; its
    failure means an ill-margined rank decision and raises.
    """
    total = a.add(b, tol)
    inter, gap = a.intersection(b, tol)
    lhs = total.k0() + inter.k0()
    rhs = a.k0() + b.k0()
    if lhs.entries != rhs.entries:
        raise IdentityViolation(
            f"dimension identity failed: (sum + intersection) {lhs} != {rhs} "
            f"(worst cosine gap {gap:.3e}); instance too close to tolerance"
        )
    return total, inter


@dataclass(frozen=True, eq=False)
class DecompositionWitness:
    """Two submodules certified to decompose a parent: parent = P1 (+) P2.

    ``orthogonal`` records whether the parts happen to be mutually
    orthogonal; the decomposition itself is allowed to be oblique.
    """

    parent: Submodule
    parts: tuple[Submodule, Submodule]
    orthogonal: bool
    intersection_gap: float
    sum_angle: float


def _certify_decomposition(
    parent: Submodule, p1: Submodule, p2: Submodule, tol: ToleranceConfig
) -> DecompositionWitness:
    inter, gap = p1.intersection(p2, tol)
    if not inter.k0().is_zero():
        raise UnmetHypothesisError(f"claimed parts intersect in class {inter.k0()}")
    if p1.dim + p2.dim != parent.dim:
        raise UnmetHypothesisError(
            f"part dimensions {p1.dim}+{p2.dim} != parent dimension {parent.dim}"
        )
    total = p1.add(p2, tol)
    if not total.equals(parent, tol):
        raise UnmetHypothesisError("parts do not span the parent")
    worst_angle = 0.0
    for qa, qb in zip(total.column_bases, parent.column_bases):
        if qa.shape[1]:
            worst_angle = max(worst_angle, float(np.max(principal_angles(qa, qb))))
    ortho = True
    for wa, wb in zip(p1.column_bases, p2.column_bases):
        if wa.shape[1] and wb.shape[1]:
            ortho = ortho and op_norm(wa.conj().T @ wb) <= tol.angle_tol
    return DecompositionWitness(parent, (p1, p2), ortho, float(gap), worst_angle)


def nested_decomposition_witness(
    m1: Submodule,
    m2: Submodule,
    m1_complement: Submodule,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> DecompositionWitness:
    """Split M2 = M1 (+) (M1c ∩ M2) given M1 ⊆ M2 and ambient = M1 (+) M1c.

    A complement of the smaller submodule in the ambient module induces,
    by intersection, a complement inside any intermediate submodule.
    Violated preconditions raise :class:`UnmetHypothesisError` — they
    indict the instance, not the statement.
    """
    ok, resid = m2.contains(m1, tol)
    if not ok:
        raise UnmetHypothesisError(f"M1 not contained in M2 (residual {resid:.3e})")
    ambient = Submodule.full(m1.shape, m1.m)
    _certify_decomposition(ambient, m1, m1_complement, tol)  # raises if not a complement
    part2, _ = m1_complement.intersection(m2, tol)
    return _certify_decomposition(m2, m1, part2, tol)
