"""Single tolerance policy shared by every numerical decision.

All spectral computations route through one SVD wrapper (see
:mod:`modop.subspace`) parameterized by a :class:`ToleranceConfig`.
Rank cutoffs scale with the largest singular value and the ambient
dimension, in line with standard numerical-rank practice; angle and
residual tolerances are absolute.  Every classification decision made
under these knobs records the margin by which it was made.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class ToleranceConfig:
    """Knobs for rank, angle, and residual decisions.

    rank_tol
        Relative rank cutoff: singular values below
        ``rank_tol * smax * ambient_dim`` are treated as zero.
    angle_tol
        Largest principal angle (radians) at which two subspaces are
        declared equal.
    coincide_tol
        Angle below which directions of two subspaces are counted as
        common when *intersecting* them.  Laxer than ``angle_tol`` on
        purpose: intersection detection separates structural zeros
        (~1e-13) from genuine angles (>1e-3 on filtered instances).
    residual_tol
        Relative residual accepted when certifying operator identities
        (generalized-inverse axioms, exactness, adjoint symmetry).
    comm_tol
        Relative residual accepted for commutativity preconditions.
    positivity_tau
        Threshold for "bounded below" verdicts on restricted
        projections and reduced minimum moduli.
    ill_posed_projector_norm
        An oblique projector with norm beyond this is flagged ill-posed.
    """

    rank_tol: float = 1e-10
    angle_tol: float = 1e-8
    coincide_tol: float = 1e-7
    residual_tol: float = 1e-9
    comm_tol: float = 1e-10
    positivity_tau: float = 1e-6
    ill_posed_projector_norm: float = 1e6

    def with_(self, **kw) -> "ToleranceConfig":
        """Return a copy with some knobs replaced."""
        return replace(self, **kw)

    def rank_threshold(self, smax: float, ambient_dim: int) -> float:
        """Absolute cutoff below which singular values count as zero."""
        if smax == 0.0:
            return 0.0
        return self.rank_tol * smax * max(ambient_dim, 1)


DEFAULT_TOL = ToleranceConfig()
