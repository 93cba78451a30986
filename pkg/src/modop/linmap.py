"""Adjointable maps between free modules, stored per block.

A module map is an (n x m) matrix over the algebra acting by left
multiplication.  Per algebra block it compresses to one complex matrix
acting column-wise on tall coordinate matrices, and that compressed
form is the computational workhorse: adjoints are conjugate transposes,
composition is matrix product, and singular values of the full flat
realization are exactly the per-block singular values with multiplicity
n_b.  The dense flat realization is kept available (lazily) as an
independent oracle.

Rank decisions for a map share one absolute cutoff across blocks,
derived from the global largest singular value, so blockwise and dense
computations agree decision-for-decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import AlgebraElement, AlgebraShape
from .errors import StructureError, UnmetHypothesisError
from .modules import ModuleVector, Submodule, flat_dim
from .subspace import SingularData, as_complex, empty_basis, op_norm
from .tolerances import DEFAULT_TOL, ToleranceConfig

Array = np.ndarray

__all__ = [
    "AdjointableMap",
    "RestrictedEndomorphism",
    "adjoint",
    "compose",
    "kernel",
    "image",
    "orthogonal_projection",
    "mp_pseudoinverse",
    "singular_data",
    "penrose_residuals",
]


def _merge_decision(
    block_values: list[np.ndarray],
    multiplicities: tuple[int, ...],
    tol: ToleranceConfig,
    dim_ctx: int,
    scale: float | None,
) -> tuple[SingularData, float]:
    """Shared-threshold rank decision across blocks; returns data + threshold."""
    reps = [np.repeat(v, mult) for v, mult in zip(block_values, multiplicities)]
    merged = np.sort(np.concatenate(reps))[::-1] if reps else np.zeros(0)
    smax = float(merged[0]) if merged.size else 0.0
    ref = max(smax, scale if scale is not None else 0.0)
    threshold = tol.rank_threshold(ref, dim_ctx)
    vals = tuple(float(v) for v in merged)
    rank = int(np.sum(merged > threshold))
    gamma = float(merged[rank - 1]) if rank > 0 else math.inf
    refm = max(ref, 1e-300)
    if len(vals) == 0:
        margin = math.inf
    elif rank == 0:
        margin = math.inf if vals[0] == 0.0 else (threshold - vals[0]) / max(threshold, 1e-300)
    elif rank == len(vals):
        margin = vals[-1] / refm
    else:
        margin = (vals[rank - 1] - vals[rank]) / refm
    return SingularData(vals, rank, gamma, threshold, ref, margin), threshold


@dataclass(frozen=True, eq=False)
class AdjointableMap:
    """Module map A^m -> A^n over a block algebra.

    ``blocks[b]`` is the compressed complex matrix of shape
    ``(n * n_b, m * n_b)`` acting on block-b column coordinates.
    """

    shape: AlgebraShape
    m: int
    n: int
    blocks: tuple[Array, ...]

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise StructureError("module ranks must be positive")
        if len(self.blocks) != self.shape.num_blocks:
            raise StructureError("one compressed block per algebra block required")
        frozen = []
        for nb, blk in zip(self.shape.block_sizes, self.blocks):
            blk = as_complex(blk)
            if blk.shape != (self.n * nb, self.m * nb):
                raise StructureError(
                    f"compressed block shape {blk.shape}, expected ({self.n * nb},{self.m * nb})"
                )
            blk = np.array(blk)
            blk.setflags(write=False)
            frozen.append(blk)
        object.__setattr__(self, "blocks", tuple(frozen))

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, shape: AlgebraShape, m: int, n: int) -> "AdjointableMap":
        return cls(shape, m, n, tuple(np.zeros((n * nb, m * nb)) for nb in shape.block_sizes))

    @classmethod
    def identity(cls, shape: AlgebraShape, m: int) -> "AdjointableMap":
        return cls(shape, m, m, tuple(np.eye(m * nb) for nb in shape.block_sizes))

    @classmethod
    def from_entries(cls, rows: list[list[AlgebraElement]]) -> "AdjointableMap":
        """Build from an (n x m) nested list of algebra elements."""
        n = len(rows)
        if n == 0 or len(rows[0]) == 0:
            raise StructureError("entry matrix must be nonempty")
        m = len(rows[0])
        shape = rows[0][0].shape
        blocks = []
        for b, nb in enumerate(shape.block_sizes):
            c = np.zeros((n * nb, m * nb), dtype=np.complex128)
            for i in range(n):
                for j in range(m):
                    if rows[i][j].shape != shape:
                        raise StructureError("mixed algebra shapes in entries")
                    c[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] = rows[i][j].blocks[b]
            blocks.append(c)
        return cls(shape, m, n, tuple(blocks))

    @classmethod
    def from_element(cls, a: AlgebraElement) -> "AdjointableMap":
        """Left multiplication by a single element, as a map A^1 -> A^1."""
        return cls.from_entries([[a]])

    @classmethod
    def from_matrix(cls, mat: Array) -> "AdjointableMap":
        """A plain complex matrix as a map over the trivial one-block algebra."""
        mat = as_complex(mat)
        if mat.ndim != 2 or 0 in mat.shape:
            raise StructureError("need a nonempty 2-d matrix")
        return cls(AlgebraShape((1,)), mat.shape[1], mat.shape[0], (mat,))

    # -- structure access -------------------------------------------------

    def entry(self, i: int, j: int) -> AlgebraElement:
        blks = []
        for nb, c in zip(self.shape.block_sizes, self.blocks):
            blks.append(c[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb])
        return AlgebraElement(self.shape, tuple(blks))

    @property
    def is_endomorphism(self) -> bool:
        return self.m == self.n

    @property
    def dim_ctx(self) -> int:
        return max(flat_dim(self.shape, self.m), flat_dim(self.shape, self.n))

    @cached_property
    def realization(self) -> Array:
        """Dense flat realization (block-diagonal Kronecker lift); oracle path."""
        d_dom, d_cod = flat_dim(self.shape, self.m), flat_dim(self.shape, self.n)
        out = np.zeros((d_cod, d_dom), dtype=np.complex128)
        dom_off = cod_off = 0
        for nb, c in zip(self.shape.block_sizes, self.blocks):
            seg_d, seg_c = self.m * nb * nb, self.n * nb * nb
            out[cod_off : cod_off + seg_c, dom_off : dom_off + seg_d] = np.kron(c, np.eye(nb))
            dom_off += seg_d
            cod_off += seg_c
        return out

    # -- algebra of maps -------------------------------------------------

    def _same_spaces(self, other: "AdjointableMap"):
        if self.shape != other.shape or self.m != other.m or self.n != other.n:
            raise StructureError("maps act between different modules")

    def __add__(self, other: "AdjointableMap") -> "AdjointableMap":
        self._same_spaces(other)
        return AdjointableMap(
            self.shape, self.m, self.n, tuple(a + b for a, b in zip(self.blocks, other.blocks))
        )

    def __sub__(self, other: "AdjointableMap") -> "AdjointableMap":
        self._same_spaces(other)
        return AdjointableMap(
            self.shape, self.m, self.n, tuple(a - b for a, b in zip(self.blocks, other.blocks))
        )

    def __rmul__(self, scalar) -> "AdjointableMap":
        return AdjointableMap(self.shape, self.m, self.n, tuple(scalar * b for b in self.blocks))

    def __neg__(self) -> "AdjointableMap":
        return AdjointableMap(self.shape, self.m, self.n, tuple(-b for b in self.blocks))

    def __matmul__(self, other: "AdjointableMap") -> "AdjointableMap":
        """Composition self after other."""
        if self.shape != other.shape or self.m != other.n:
            raise StructureError(
                f"cannot compose: domain rank {self.m} != codomain rank {other.n}"
            )
        return AdjointableMap(
            self.shape,
            other.m,
            self.n,
            tuple(a @ b for a, b in zip(self.blocks, other.blocks)),
        )

    def adjoint(self) -> "AdjointableMap":
        return AdjointableMap(
            self.shape, self.n, self.m, tuple(b.conj().T for b in self.blocks)
        )

    def power(self, k: int) -> "AdjointableMap":
        if not self.is_endomorphism:
            raise StructureError("powers need an endomorphism")
        if k < 0:
            raise StructureError("negative powers undefined")
        out = AdjointableMap.identity(self.shape, self.m)
        base = self
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def apply(self, x: ModuleVector) -> ModuleVector:
        if x.shape != self.shape or x.m != self.m:
            raise StructureError("vector not in the domain module")
        talls = [c @ x.tall(b) for b, c in enumerate(self.blocks)]
        return _vector_from_talls(self.shape, self.n, talls)

    def apply_to_submodule(
        self, sub: Submodule, tol: ToleranceConfig = DEFAULT_TOL
    ) -> Submodule:
        """Image of a submodule (computed exactly per block on column bases)."""
        if sub.shape != self.shape or sub.m != self.m:
            raise StructureError("submodule not inside the domain module")
        scale = self.norm()
        bases = []
        for nb, c, w in zip(self.shape.block_sizes, self.blocks, sub.column_bases):
            moved = c @ w
            from .subspace import orthonormal_image

            basis, _ = orthonormal_image(moved, tol, dim_ctx=self.dim_ctx, scale=scale)
            bases.append(basis)
        return Submodule(self.shape, self.n, tuple(bases))

    # -- metrics -----------------------------------------------------------

    def norm(self) -> float:
        """Operator norm in the module sense (= largest block singular value)."""
        return max((op_norm(c) for c in self.blocks), default=0.0)

    def allclose(self, other: "AdjointableMap", atol: float = 1e-12) -> bool:
        self._same_spaces(other)
        return all(np.allclose(a, b, atol=atol) for a, b in zip(self.blocks, other.blocks))

    def singular_data(
        self, tol: ToleranceConfig = DEFAULT_TOL, *, scale: float | None = None
    ) -> SingularData:
        vals = [
            np.linalg.svd(c, compute_uv=False) if c.size else np.zeros(0) for c in self.blocks
        ]
        data, _ = _merge_decision(vals, self.shape.block_sizes, tol, self.dim_ctx, scale)
        return data

    # -- kernels, images, inverses ------------------------------------------

    def kernel(
        self, tol: ToleranceConfig = DEFAULT_TOL, *, scale: float | None = None
    ) -> Submodule:
        bases = []
        svds = [np.linalg.svd(c) for c in self.blocks]
        _, threshold = _merge_decision(
            [s for _, s, _ in svds], self.shape.block_sizes, tol, self.dim_ctx, scale
        )
        for (_, s, vh), nb in zip(svds, self.shape.block_sizes):
            rank = int(np.sum(s > threshold))
            bases.append(np.ascontiguousarray(vh[rank:].conj().T))
        return Submodule(self.shape, self.m, tuple(bases))

    def image(
        self, tol: ToleranceConfig = DEFAULT_TOL, *, scale: float | None = None
    ) -> Submodule:
        bases = []
        svds = [np.linalg.svd(c) for c in self.blocks]
        _, threshold = _merge_decision(
            [s for _, s, _ in svds], self.shape.block_sizes, tol, self.dim_ctx, scale
        )
        for (u, s, _), nb in zip(svds, self.shape.block_sizes):
            rank = int(np.sum(s > threshold))
            bases.append(np.ascontiguousarray(u[:, :rank]))
        return Submodule(self.shape, self.n, tuple(bases))

    def mp_pseudoinverse(
        self, tol: ToleranceConfig = DEFAULT_TOL, *, scale: float | None = None
    ) -> "AdjointableMap":
        """Moore-Penrose pseudoinverse, blockwise under the shared cutoff."""
        svds = [np.linalg.svd(c) for c in self.blocks]
        _, threshold = _merge_decision(
            [s for _, s, _ in svds], self.shape.block_sizes, tol, self.dim_ctx, scale
        )
        blocks = []
        for u, s, vh in svds:
            rank = int(np.sum(s > threshold))
            inv = np.zeros((vh.shape[0], u.shape[0]), dtype=np.complex128)
            if rank:
                inv = vh[:rank].conj().T @ np.diag(1.0 / s[:rank]) @ u[:, :rank].conj().T
            blocks.append(inv)
        return AdjointableMap(self.shape, self.n, self.m, tuple(blocks))

    def __repr__(self) -> str:
        return (
            f"AdjointableMap(shape={self.shape}, A^{self.m} -> A^{self.n}, "
            f"norm={self.norm():.3g})"
        )


def _vector_from_talls(shape: AlgebraShape, m: int, talls: list[Array]) -> ModuleVector:
    entries = []
    for i in range(m):
        blks = []
        for b, nb in enumerate(shape.block_sizes):
            blks.append(talls[b][i * nb : (i + 1) * nb])
        entries.append(AlgebraElement(shape, tuple(blks)))
    return ModuleVector(shape, m, tuple(entries))


# ---------------------------------------------------------------------------
# restrictions to submodules


@dataclass(frozen=True, eq=False)
class RestrictedEndomorphism:
    """An endomorphism compressed to an invariant submodule.

    The underlying submodule is projective but generally not free, so
    the restriction is stored as per-block matrices in the submodule's
    column-basis coordinates rather than as an algebra matrix.
    ``invariance_defect`` certifies how far the parent map moved the
    submodule out of itself (relative to the parent norm).
    """

    domain: Submodule
    blocks: tuple[Array, ...]
    invariance_defect: float

    @classmethod
    def of(
        cls, f: AdjointableMap, sub: Submodule, tol: ToleranceConfig = DEFAULT_TOL
    ) -> "RestrictedEndomorphism":
        if not f.is_endomorphism or f.shape != sub.shape or f.m != sub.m:
            raise StructureError("restriction needs an endomorphism of the ambient module")
        scale = max(f.norm(), 1e-300)
        defect = 0.0
        blocks = []
        for c, w in zip(f.blocks, sub.column_bases):
            moved = c @ w
            inside = w.conj().T @ moved
            defect = max(defect, op_norm(moved - w @ inside) / scale)
            blocks.append(inside)
        if defect > tol.angle_tol * 10:
            raise UnmetHypothesisError(
                f"submodule is not invariant under the map (defect {defect:.3e})"
            )
        return cls(sub, tuple(blocks), float(defect))

    @property
    def dim(self) -> int:
        return self.domain.dim

    def norm(self) -> float:
        return max((op_norm(c) for c in self.blocks), default=0.0)

    def singular_data(
        self, tol: ToleranceConfig = DEFAULT_TOL, *, scale: float | None = None
    ) -> SingularData:
        vals = [
            np.linalg.svd(c, compute_uv=False) if c.size else np.zeros(0) for c in self.blocks
        ]
        data, _ = _merge_decision(
            vals, self.domain.shape.block_sizes, tol, self.domain.ambient_dim, scale
        )
        return data

    def kernel(
        self, tol: ToleranceConfig = DEFAULT_TOL, *, scale: float | None = None
    ) -> Submodule:
        """Kernel of the restriction, as a submodule of the ambient module."""
        svds = [np.linalg.svd(c) if c.size else None for c in self.blocks]
        values = [s[1] if s is not None else np.zeros(0) for s in svds]
        _, threshold = _merge_decision(
            values, self.domain.shape.block_sizes, tol, self.domain.ambient_dim, scale
        )
        bases = []
        for sv, w in zip(svds, self.domain.column_bases):
            if sv is None:
                bases.append(w[:, :0])
                continue
            _, s, vh = sv
            rank = int(np.sum(s > threshold))
            bases.append(w @ vh[rank:].conj().T)
        return Submodule(self.domain.shape, self.domain.m, tuple(bases))

    def image(
        self, tol: ToleranceConfig = DEFAULT_TOL, *, scale: float | None = None
    ) -> Submodule:
        svds = [np.linalg.svd(c) if c.size else None for c in self.blocks]
        values = [s[1] if s is not None else np.zeros(0) for s in svds]
        _, threshold = _merge_decision(
            values, self.domain.shape.block_sizes, tol, self.domain.ambient_dim, scale
        )
        bases = []
        for sv, w in zip(svds, self.domain.column_bases):
            if sv is None:
                bases.append(w[:, :0])
                continue
            u, s, _ = sv
            rank = int(np.sum(s > threshold))
            bases.append(w @ u[:, :rank])
        return Submodule(self.domain.shape, self.domain.m, tuple(bases))


# ---------------------------------------------------------------------------
# functional aliases for the core operations


def adjoint(f: AdjointableMap) -> AdjointableMap:
    return f.adjoint()


def compose(f: AdjointableMap, g: AdjointableMap) -> AdjointableMap:
    """f after g."""
    return f @ g


def kernel(f: AdjointableMap, tol: ToleranceConfig = DEFAULT_TOL) -> Submodule:
    return f.kernel(tol)


def image(f: AdjointableMap, tol: ToleranceConfig = DEFAULT_TOL) -> Submodule:
    return f.image(tol)


def orthogonal_projection(sub: Submodule) -> AdjointableMap:
    """Orthogonal projection onto a submodule, as an adjointable map."""
    blocks = tuple(w @ w.conj().T for w in sub.column_bases)
    return AdjointableMap(sub.shape, sub.m, sub.m, blocks)


def mp_pseudoinverse(f: AdjointableMap, tol: ToleranceConfig = DEFAULT_TOL) -> AdjointableMap:
    return f.mp_pseudoinverse(tol)


def singular_data(f: AdjointableMap, tol: ToleranceConfig = DEFAULT_TOL) -> SingularData:
    return f.singular_data(tol)


def penrose_residuals(f: AdjointableMap, x: AdjointableMap) -> dict[str, float]:
    """Relative residuals of the four Moore-Penrose equations."""
    fn = max(f.norm(), 1e-300)
    xn = max(x.norm(), 1e-300)
    fxf = f @ x @ f
    xfx = x @ f @ x
    fx = f @ x
    xf = x @ f
    return {
        "fxf": (fxf - f).norm() / fn,
        "xfx": (xfx - x).norm() / xn,
        "fx_selfadjoint": (fx - fx.adjoint()).norm() / max(fx.norm(), 1e-300),
        "xf_selfadjoint": (xf - xf.adjoint()).norm() / max(xf.norm(), 1e-300),
    }
