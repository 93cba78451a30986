"""Quantitative subspace geometry: angles, minimum moduli, closed sums.

Two numbers carry everything here.  For a pair of submodules with
trivial intersection, ``c0`` is the cosine of the smallest principal
angle (the Dixmier angle cosine) and ``delta`` is the minimum modulus of
the orthocomplement projection restricted to the second space.  They
are tied by the exact identity c0^2 + delta^2 = 1, and delta alone
yields the constant (delta+1)/delta that bounds the summand norms of a
closed sum.

The composition criterion reduces to the same geometry: after removing
the intersection K = ker D ∩ Im F, the two restricted-projection
margins are both equal to the sine of the smallest angle between the
leftover pieces, so they are positive together — that equivalence is
asserted, not assumed.

All SVD work happens on the per-block compressed column bases: the
flat cross-Gram of two submodules is the direct sum of the per-block
cross-Grams, each tensored with an identity, so angle cosines and
restricted minimum moduli computed blockwise are *equal* to their flat
(and module-norm) counterparts — the extremising vectors can be taken
of rank one.  That is also why the sampled norm-bound check below uses
genuine module norms while the spectral work stays at block size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IdentityViolation, StructureError
from .linmap import AdjointableMap
from .modules import K0Class, Submodule, block_layout
from .subspace import min_modulus_restricted_raw, op_norm, projector
from .tolerances import DEFAULT_TOL, ToleranceConfig

Array = np.ndarray

__all__ = [
    "GeometryReport",
    "dixmier_angle",
    "min_modulus_restricted",
    "closed_sum_report",
    "bouldin_criterion",
]


@dataclass(frozen=True, eq=False)
class GeometryReport:
    """Angle/minimum-modulus data for a pair of spaces or a composition.

    ``c0`` and ``delta`` describe the reduced pair (intersection removed
    when ``reduced``); ``bound_C = (delta+1)/delta`` is the norm bound
    for summands of the closed sum (1.0 in the degenerate empty case).
    ``margin_p``/``margin_q`` are the two restricted-projection minimum
    moduli of the composition criterion (None when not applicable,
    +inf and ``degenerate`` when their domain is the zero space).
    """

    c0: float
    delta: float
    bound_C: float
    verdict: bool
    degenerate: bool = False
    reduced: bool = False
    intersection_class: K0Class | None = None
    pythagoras_residual: float | None = None
    cross_check_residual: float | None = None
    sampled_max_norm: float | None = None
    sample_count: int = 0
    margin_p: float | None = None
    margin_q: float | None = None
    bounded_below_p: bool | None = None
    bounded_below_q: bool | None = None
    gamma_composition: float | None = None
    duality_residual: float | None = None
    closed_sum_agrees: bool | None = None


# ---------------------------------------------------------------------------
# the two scalar quantities


def dixmier_angle(m: Submodule, n: Submodule, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Cosine of the smallest principal angle between two submodules.

    Computed blockwise, both as the largest singular value of W^H V and
    as the operator norm of P_W P_V; the two must agree to tolerance.
    """
    if m.shape != n.shape or m.m != n.m:
        raise StructureError("submodules live in different modules")
    c_svd = 0.0
    c_proj = 0.0
    for qm, qn in zip(m.column_bases, n.column_bases):
        if qm.shape[1] == 0 or qn.shape[1] == 0:
            continue
        c_svd = max(c_svd, float(np.linalg.svd(qm.conj().T @ qn, compute_uv=False)[0]))
        c_proj = max(c_proj, op_norm(projector(qm) @ projector(qn)))
    if abs(c_svd - c_proj) > tol.angle_tol:
        raise IdentityViolation(
            f"angle cross-check failed: {c_svd:.12e} vs {c_proj:.12e}"
        )
    return min(c_svd, 1.0)


def min_modulus_restricted(m: Submodule, n: Submodule, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Minimum modulus of (projection onto M^perp) restricted to N.

    +inf when N is the zero space (bounded below vacuously).  Positivity
    is checked for consistency against the computed intersection.
    """
    if m.shape != n.shape or m.m != n.m:
        raise StructureError("submodules live in different modules")
    delta = min(
        (
            min_modulus_restricted_raw(qm, qn)
            for qm, qn in zip(m.column_bases, n.column_bases)
            if qn.shape[1] > 0
        ),
        default=math.inf,
    )
    meet, _ = m.intersection(n, tol)
    if meet.dim > 0 and delta > 10.0 * tol.coincide_tol:
        raise IdentityViolation(
            f"nonzero intersection (class {meet.k0()}) but delta = {delta:.3e}"
        )
    if meet.dim == 0 and math.isfinite(delta) and delta <= tol.rank_tol:
        raise IdentityViolation(
            f"trivial intersection but delta = {delta:.3e} is numerically zero"
        )
    return delta


def _bound_from_delta(delta: float) -> float:
    if math.isinf(delta):
        return 1.0
    if delta <= 0.0:
        return math.inf
    return (delta + 1.0) / delta


def _module_norms_flat(sub_shape, m: int, flats: Array) -> Array:
    """Module norms of a batch of flat vectors (columns)."""
    count = flats.shape[1]
    norms = np.zeros(count)
    for (off, seg), nb in zip(block_layout(sub_shape, m), sub_shape.block_sizes):
        talls = flats[off : off + seg].T.reshape(count, m * nb, nb)
        svs = np.linalg.svd(talls, compute_uv=False)
        norms = np.maximum(norms, svs[:, 0] if svs.size else np.zeros(count))
    return norms


# ---------------------------------------------------------------------------
# closed-sum report


def closed_sum_report(
    m: Submodule,
    n: Submodule,
    tol: ToleranceConfig = DEFAULT_TOL,
    rng: np.random.Generator | None = None,
    samples: int = 10_000,
) -> GeometryReport:
    """delta, c0, and the (delta+1)/delta summand bound for M + N.

    A nonzero intersection is removed first (both spaces are cut down to
    their parts transverse to it) and flagged ``reduced``; the bound is
    then verified by sampling: random x in M, y in N with module norm
    of x + y at most 1 must satisfy ||x|| <= (delta+1)/delta.
    """
    if m.shape != n.shape or m.m != n.m:
        raise StructureError("submodules live in different modules")
    meet, _ = m.intersection(n, tol)
    reduced = meet.dim > 0
    m_red, n_red = m, n
    if reduced:
        perp = meet.complement()
        m_red, _ = m.intersection(perp, tol)
        n_red, _ = n.intersection(perp, tol)

    delta = min_modulus_restricted(m_red, n_red, tol)
    c0 = dixmier_angle(m_red, n_red, tol)
    degenerate = math.isinf(delta)
    pyth = None
    if not degenerate:
        pyth = abs(c0 * c0 + delta * delta - 1.0)
        if pyth > 1e-8:
            raise IdentityViolation(f"c0^2 + delta^2 = 1 violated by {pyth:.3e}")
    bound = _bound_from_delta(delta)

    worst = None
    if samples > 0 and m_red.dim > 0 and n_red.dim > 0:
        gen = rng if rng is not None else np.random.default_rng(0)
        xs = m_red.sample_flat(gen, samples)
        ys = n_red.sample_flat(gen, samples)
        sums = _module_norms_flat(m.shape, m.m, xs + ys)
        scale = np.maximum(sums, 1e-300)
        x_norms = _module_norms_flat(m.shape, m.m, xs) / scale
        worst = float(np.max(x_norms)) if x_norms.size else 0.0
        if worst > bound + tol.angle_tol:
            raise IdentityViolation(
                f"sampled summand norm {worst:.6e} exceeds the bound {bound:.6e}"
            )
    return GeometryReport(
        c0=c0,
        delta=delta,
        bound_C=bound,
        verdict=delta > tol.positivity_tau,
        degenerate=degenerate,
        reduced=reduced,
        intersection_class=meet.k0(),
        pythagoras_residual=pyth,
        sampled_max_norm=worst,
        sample_count=samples if worst is not None else 0,
    )


# ---------------------------------------------------------------------------
# composition closed-range criterion


def _criterion_margins(
    f: AdjointableMap, d: AdjointableMap, tol: ToleranceConfig
) -> tuple[float, float, Submodule, Submodule, Submodule]:
    """(margin_p, margin_q, K, S1, S2) for the pair Im F / ker D."""
    im_f = f.image(tol, scale=f.norm())
    ker_d = d.kernel(tol, scale=d.norm())
    meet, _ = ker_d.intersection(im_f, tol)
    perp = meet.complement()
    s1, _ = im_f.intersection(perp, tol)
    s2, _ = ker_d.intersection(perp, tol)
    margin_p = min_modulus_restricted(ker_d, s1, tol) if s1.dim else math.inf
    margin_q = min_modulus_restricted(im_f, s2, tol) if s2.dim else math.inf
    return margin_p, margin_q, meet, s1, s2


def bouldin_criterion(
    f: AdjointableMap, d: AdjointableMap, tol: ToleranceConfig = DEFAULT_TOL
) -> GeometryReport:
    """Margins of the two restricted projections governing Im DF.

    K = ker D ∩ Im F is split off; margin_p is the minimum modulus of
    the projection onto (ker D)^perp restricted to Im F ∩ K^perp,
    margin_q the mirror quantity.  Both equal the sine of the smallest
    angle between the leftover pieces, hence are positive together;
    that equivalence, the (F, D) -> (D*, F*) symmetry, and agreement
    with the closed-sum verdict for ker D + Im F are all checked.
    """
    if f.shape != d.shape or d.m != f.n:
        raise StructureError("maps are not composable (d after f)")
    margin_p, margin_q, meet, s1, s2 = _criterion_margins(f, d, tol)

    pos_p = margin_p > tol.positivity_tau
    pos_q = margin_q > tol.positivity_tau
    if pos_p != pos_q:
        raise IdentityViolation(
            f"restricted-projection margins disagree: {margin_p:.3e} vs {margin_q:.3e}"
        )
    if math.isfinite(margin_p) and math.isfinite(margin_q):
        if abs(margin_p - margin_q) > 1e-8:
            raise IdentityViolation(
                f"the two margins should coincide: {margin_p:.12e} vs {margin_q:.12e}"
            )

    degenerate = s1.dim == 0 or s2.dim == 0
    c0 = dixmier_angle(s1, s2, tol)
    delta = margin_p if s1.dim else (margin_q if s2.dim else math.inf)

    # Duality: the same margins must come out of the adjoint-side pair.
    dual_p, dual_q, _, _, _ = _criterion_margins(d.adjoint(), f.adjoint(), tol)
    finite_pairs = [
        (a, b)
        for a, b in ((margin_p, dual_p), (margin_q, dual_q))
        if math.isfinite(a) and math.isfinite(b)
    ]
    duality_resid = max((abs(a - b) for a, b in finite_pairs), default=0.0)
    if duality_resid > 1e-8:
        raise IdentityViolation(
            f"margins not symmetric under the adjoint swap (residual {duality_resid:.3e})"
        )

    df = d @ f
    gamma = df.singular_data(tol, scale=d.norm() * f.norm()).gamma

    cs = closed_sum_report(
        f.image(tol, scale=f.norm()), d.kernel(tol, scale=d.norm()), tol, samples=0
    )
    verdict = pos_p
    return GeometryReport(
        c0=c0,
        delta=delta,
        bound_C=_bound_from_delta(delta),
        verdict=verdict,
        degenerate=degenerate,
        reduced=meet.dim > 0,
        intersection_class=meet.k0(),
        margin_p=margin_p,
        margin_q=margin_q,
        bounded_below_p=pos_p,
        bounded_below_q=pos_q,
        gamma_composition=gamma,
        duality_residual=duality_resid,
        closed_sum_agrees=cs.verdict == verdict,
    )
