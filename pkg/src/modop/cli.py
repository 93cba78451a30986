"""Command-line front end.

Subcommands
-----------
analyze    classification bundle (index, Drazin, power stabilization,
           kernel/image geometry) for one operator file.
verify     seeded randomized property suites; exit 0 iff every instance
           passes.
probe      decay tables for the deterministic operator families.
drazin     core-nilpotent report for one operator file.
geometry   angle/closed-sum report for two submodule or operator files
           (an operator contributes its image on the left slot, its
           kernel on the right slot).
banach     regular-operator certificate for a flattened operator, with
           an optional finite-rank perturbation.

Determinism contract: identical command line (seed, counts, tolerances)
produces byte-identical output.  Suite instances draw from per-index
generators, so the thread pool that runs them cannot reorder anything
observable; results are emitted sorted by instance index.

Exit codes: 0 all checks pass, 1 a property check failed, 2 usage or
data errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Callable, Sequence

import numpy as np

from . import banach, drazin, fredholm, geometry, probes, randgen, serialize
from .errors import DataError, IdentityViolation, ModopError, UnmetHypothesisError
from .linmap import AdjointableMap
from .tolerances import DEFAULT_TOL, ToleranceConfig

__all__ = ["RunConfig", "run_suite", "SUITE_NAMES", "main"]

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a verify run (and hence its bytes)."""

    seed: int = 0
    n: int = 20
    shape: str = "2,3"
    tol: ToleranceConfig = DEFAULT_TOL
    out: str | None = None
    format: str = "text"

    def echo(self) -> dict:
        return {
            "seed": self.seed,
            "instances": self.n,
            "shape": self.shape,
            "rank_tol": self.tol.rank_tol,
            "angle_tol": self.tol.angle_tol,
        }


def _rng_for(seed: int, index: int) -> np.random.Generator:
    # Index-keyed streams: instance i sees the same draws no matter how
    # many workers run or in which order they finish.
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


# ---------------------------------------------------------------------------
# verify suites: one function per suite, runs a single seeded instance,
# returns metrics, raises a ModopError subtype on any violated property.


def _suite_exact_sequence(rng: np.random.Generator, cfg: RunConfig) -> dict[str, float]:
    shape = randgen.parse_shape(cfg.shape)
    m1, m2, m3 = 2 + int(rng.integers(0, 2)), 3, 2
    f = randgen.random_map(shape, m1, m2, rng, rank_deficit=int(rng.integers(0, 2)))
    g = randgen.random_map(shape, m2, m3, rng, rank_deficit=int(rng.integers(0, 2)))
    rep = fredholm.exact_sequence(f, g, cfg.tol)
    if rep.worst_residual > 1e-8:
        raise IdentityViolation(f"node residual {rep.worst_residual:.3e} above 1e-8")
    if rep.alternating_dim_sum != 0 or not rep.alternating_k0_sum.is_zero():
        raise IdentityViolation("alternating sums are not zero")
    if not rep.index_additive:
        raise IdentityViolation("index additivity failed")
    return {"worst_node_residual": rep.worst_residual}


def _suite_perturbation_chain(rng: np.random.Generator, cfg: RunConfig) -> dict[str, float]:
    shape = randgen.parse_shape(cfg.shape)
    m, n = 2, 3
    t = randgen.random_map(shape, m, n, rng, rank_deficit=int(rng.integers(0, 2)))
    f = randgen.random_low_rank(shape, m, n, rng, rank=1 + int(rng.integers(0, 2)), scale=0.8)
    rep = fredholm.weyl_perturbation_chain(t, f, cfg.tol)
    if not rep.identity_holds:
        raise IdentityViolation(f"chain identity {rep.lhs} != {rep.rhs}")
    return {"margin": rep.margin}


def _suite_product_chain(rng: np.random.Generator, cfg: RunConfig) -> dict[str, float]:
    shape = randgen.parse_shape(cfg.shape)
    m1, m2, m3 = 3, 2, 3
    f = randgen.random_map(shape, m1, m2, rng, rank_deficit=int(rng.integers(0, 2)))
    d = randgen.random_map(shape, m2, m3, rng, rank_deficit=int(rng.integers(0, 2)))
    rep = fredholm.product_chain(d, f, cfg.tol)
    if rep.lhs.entries != rep.rhs.entries:
        raise IdentityViolation(f"witness balance {rep.lhs} != {rep.rhs}")
    return {"margin": rep.margin}


_DRAZIN_SHAPES = ("1^6", "2", "2,3")


def _planted_endo(rng: np.random.Generator, shape_text: str):
    shape = randgen.parse_shape(shape_text)
    m = 2 if shape.block_sizes == (2, 3) else (3 if shape.block_sizes == (2,) else 1)
    dim_min = m * min(shape.block_sizes)
    sizes = []
    budget = dim_min
    for _ in range(int(rng.integers(0, 3))):
        k = int(rng.integers(1, 4))
        if k <= budget - len(sizes):
            sizes.append(k)
            budget -= k
    return randgen.random_endomorphism(shape, m, rng, nilpotent=sizes)


def _suite_drazin_axioms(rng: np.random.Generator, cfg: RunConfig) -> dict[str, float]:
    shape_text = _DRAZIN_SHAPES[int(rng.integers(0, len(_DRAZIN_SHAPES)))]
    f = _planted_endo(rng, shape_text)
    rep = drazin.drazin_inverse(f, cfg.tol)
    worst = max(rep.residuals.values())
    if worst > 1e-9:
        raise IdentityViolation(f"axiom residual {worst:.3e} above 1e-9")
    p_brute = drazin.ascent(f, cfg.tol)
    if rep.p != p_brute:
        raise IdentityViolation(f"p = {rep.p} but kernel-chain ascent = {p_brute}")
    return {"worst_axiom_residual": worst, "splitting_cond": rep.splitting_cond}


def _suite_commuting_drazin(rng: np.random.Generator, cfg: RunConfig) -> dict[str, float]:
    m = 6 + int(rng.integers(0, 7))  # complex dimensions 6..12
    shape = randgen.parse_shape("1")
    nil = [int(rng.integers(1, 4))]
    if rng.integers(0, 2):
        nil.append(int(rng.integers(1, 3)))
    f, d = randgen.random_commuting_pair(shape, m, rng, nilpotent=nil)
    rep = drazin.commuting_drazin_criterion(f, d, cfg.tol)
    if rep.verdict != rep.direct_verdict:
        raise IdentityViolation("criterion disagrees with the direct test")
    if rep.found is None:
        raise IdentityViolation("no stabilization pair found")
    s, t, k, kp = rep.found
    return {
        "commutator_residual": rep.commutator_residual,
        "found_s": float(s),
        "found_k": float(k),
        "found_k_prime": float(kp),
    }


def _suite_dual(rng: np.random.Generator, cfg: RunConfig) -> dict[str, float]:
    shape_text = _DRAZIN_SHAPES[int(rng.integers(0, len(_DRAZIN_SHAPES)))]
    f = _planted_endo(rng, shape_text)
    rep = drazin.drazin_dual_check(f, cfg.tol)
    if rep.p != rep.p_adjoint:
        raise IdentityViolation(f"index changed under adjoint: {rep.p} vs {rep.p_adjoint}")
    return {
        "inverse_residual": rep.inverse_residual,
        "worst_orthogonality": max(rep.orthogonality_residuals, default=0.0),
    }


def _suite_browder(rng: np.random.Generator, cfg: RunConfig) -> dict[str, float]:
    m = 6 + int(rng.integers(0, 5))
    f, d = randgen.random_commuting_pair(
        randgen.parse_shape("1"), m, rng, nilpotent=[int(rng.integers(1, 4))]
    )
    rep = drazin.commuting_browder_check(f, d, cfg.tol)
    worst_off = max(rep.witness_f.off_diagonal_residual, rep.witness_d.off_diagonal_residual)
    if worst_off > 1e-8:
        raise IdentityViolation(f"off-diagonal block norm {worst_off:.3e} above 1e-8")
    if not (rep.witness_f.gamma_f1 > 0 and rep.witness_d.gamma_f1 > 0):
        raise IdentityViolation("restricted block is not invertible")
    return {
        "worst_off_diagonal": worst_off,
        "kernel_identity_defect": rep.kernel_identity_defect,
    }


def _suite_bouldin(rng: np.random.Generator, cfg: RunConfig) -> dict[str, float]:
    shape = randgen.parse_shape("2")
    m1, m2, m3 = 3, 3, 3
    f = randgen.random_map(shape, m1, m2, rng, rank_deficit=int(rng.integers(0, 3)))
    d = randgen.random_map(shape, m2, m3, rng, rank_deficit=int(rng.integers(0, 3)))
    rep = geometry.bouldin_criterion(f, d, cfg.tol)
    gap = (
        abs(rep.margin_p - rep.margin_q)
        if math.isfinite(rep.margin_p) and math.isfinite(rep.margin_q)
        else 0.0
    )
    return {
        "margin_gap": gap,
        "duality_residual": rep.duality_residual or 0.0,
        "margin": rep.margin_p if math.isfinite(rep.margin_p) else rep.margin_q,
    }


def _suite_closed_sum(rng: np.random.Generator, cfg: RunConfig) -> dict[str, float]:
    m = 10 + int(rng.integers(0, 31))  # ambient complex dimension 10..40
    shape = randgen.parse_shape("1")
    r1 = 1 + int(rng.integers(0, m // 3))
    r2 = 1 + int(rng.integers(0, m - r1 - 1)) if m - r1 - 1 >= 1 else 1
    msub = randgen.random_submodule(shape, m, rng, ranks=(r1,))
    nsub = randgen.random_submodule(shape, m, rng, ranks=(r2,))
    rep = geometry.closed_sum_report(msub, nsub, cfg.tol, rng=rng, samples=10_000)
    if rep.pythagoras_residual is not None and rep.pythagoras_residual > 1e-8:
        raise IdentityViolation(f"c0^2 + delta^2 - 1 = {rep.pythagoras_residual:.3e}")
    return {
        "pythagoras_residual": rep.pythagoras_residual or 0.0,
        "bound_utilization": (rep.sampled_max_norm or 0.0) / rep.bound_C
        if math.isfinite(rep.bound_C)
        else 0.0,
    }


def _suite_banach_perturbation(rng: np.random.Generator, cfg: RunConfig) -> dict[str, float]:
    rows, cols = 6 + int(rng.integers(0, 4)), 6 + int(rng.integers(0, 3))
    t, kc, ic = randgen.random_regular_data(
        rows, cols, rng, rank_deficit=1 + int(rng.integers(0, 2)), shear=0.3, tol=cfg.tol
    )
    reg = banach.make_regular(t, kc, ic, cfg.tol)
    worst_proj = max(reg.ker_decomposition.norm, reg.im_decomposition.norm)
    if worst_proj > 1e4:
        raise UnmetHypothesisError(f"projector norm {worst_proj:.3e} above the 1e4 gate")
    u = rng.normal(size=rows) + 1j * rng.normal(size=rows)
    v = rng.normal(size=cols) + 1j * rng.normal(size=cols)
    f = 0.4 * np.outer(u, v) / max(np.linalg.norm(u) * np.linalg.norm(v), 1e-300)
    rec = banach.banach_perturbation(reg, f, cfg.tol)
    if not rec.identity_holds:
        raise IdentityViolation(f"dimension identity {rec.lhs} != {rec.rhs}")
    return {
        "worst_projector_norm": max(worst_proj, max(rec.projector_norms.values())),
        "rank_f": float(rec.rank_f),
    }


def _suite_banach_product(rng: np.random.Generator, cfg: RunConfig) -> dict[str, float]:
    x, y, z = 6 + int(rng.integers(0, 3)), 7, 6
    t, t_kc, t_ic = randgen.random_regular_data(y, x, rng, rank_deficit=1, shear=0.25, tol=cfg.tol)
    s, s_kc, s_ic = randgen.random_regular_data(z, y, rng, rank_deficit=1, shear=0.25, tol=cfg.tol)
    t_reg = banach.make_regular(t, t_kc, t_ic, cfg.tol)
    s_reg = banach.make_regular(s, s_kc, s_ic, cfg.tol)
    rec = banach.banach_product(s_reg, t_reg, cfg.tol)
    if rec.witness_lhs != rec.witness_rhs:
        raise IdentityViolation(f"witness balance {rec.witness_lhs} != {rec.witness_rhs}")
    if rec.alternating_sum != 0:
        raise IdentityViolation(f"alternating sum {rec.alternating_sum} != 0")
    return {
        "worst_node_residual": max(rec.node_residuals) if rec.node_residuals else 0.0,
        "tu_residual": max(rec.tu_residuals.values()),
    }


SUITES: dict[str, Callable[[np.random.Generator, RunConfig], dict[str, float]]] = {
    "exact-sequence": _suite_exact_sequence,
    "perturbation-chain": _suite_perturbation_chain,
    "product-chain": _suite_product_chain,
    "drazin-axioms": _suite_drazin_axioms,
    "commuting-drazin": _suite_commuting_drazin,
    "dual": _suite_dual,
    "browder": _suite_browder,
    "bouldin": _suite_bouldin,
    "closed-sum": _suite_closed_sum,
    "banach-perturbation": _suite_banach_perturbation,
    "banach-product": _suite_banach_product,
}
SUITE_NAMES = tuple(SUITES)


def run_suite(name: str, cfg: RunConfig) -> dict[str, Any]:
    """All instances of one suite; per-metric worst values and failures."""
    if name not in SUITES:
        raise DataError(f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)}")
    runner = SUITES[name]

    def one(idx: int):
        try:
            return idx, runner(_rng_for(cfg.seed, idx), cfg), None
        except ModopError as exc:
            return idx, None, f"{type(exc).__name__}: {exc}"

    if cfg.n > 0:
        with ThreadPoolExecutor(max_workers=4) as pool:
            results = sorted(pool.map(one, range(cfg.n)), key=lambda r: r[0])
    else:
        results = []

    worst: dict[str, float] = {}
    failures = []
    for idx, metrics, err in results:
        if err is not None:
            failures.append({"instance": idx, "error": err})
            continue
        for key, val in metrics.items():
            if not math.isfinite(val):
                continue
            if key not in worst or abs(val) > abs(worst[key]):
                worst[key] = float(val)
    payload = {
        "suite": name,
        "config": cfg.echo(),
        "passes": cfg.n - len(failures),
        "failures": failures,
        "worst": worst,
    }
    if cfg.n == 0:
        payload["warning"] = "no instances requested; vacuous pass"
    return payload


# ---------------------------------------------------------------------------
# one-operator and two-operand commands


def _analyze_bundle(f: AdjointableMap, tol: ToleranceConfig) -> dict[str, Any]:
    scale = max(f.norm(), 1e-300)
    bundle: dict[str, Any] = {
        "operator": serialize.report_to_jsonable(f),
        "fredholm": serialize.report_to_jsonable(fredholm.fredholm_report(f, tol)),
    }
    if f.is_endomorphism:
        bundle["drazin"] = serialize.report_to_jsonable(drazin.drazin_inverse(f, tol))
        bundle["power_stabilization"] = serialize.report_to_jsonable(
            fredholm.b_fredholm_report(f, tol)
        )
    else:
        bundle["drazin"] = None
        bundle["power_stabilization"] = None
        bundle["note"] = "Drazin/power-chain analysis requires an endomorphism"
    bundle["kernel_image_geometry"] = serialize.report_to_jsonable(
        geometry.closed_sum_report(
            f.image(tol, scale=scale), f.kernel(tol, scale=scale), tol, samples=0
        )
        if f.is_endomorphism
        else None
    )
    return bundle


def cmd_analyze(args: argparse.Namespace, tol: ToleranceConfig) -> tuple[Any, int]:
    f = serialize.load_operator(args.operator)
    return _analyze_bundle(f, tol), EXIT_OK


def cmd_drazin(args: argparse.Namespace, tol: ToleranceConfig) -> tuple[Any, int]:
    f = serialize.load_operator(args.operator)
    rep = drazin.drazin_inverse(f, tol)
    payload = serialize.report_to_jsonable(rep)
    payload["ascent"] = drazin.ascent(f, tol)
    payload["block_structure"] = {
        "range_k0": list(rep.range_space.k0().entries),
        "null_k0": list(rep.null_space.k0().entries),
    }
    return payload, EXIT_OK


def cmd_geometry(args: argparse.Namespace, tol: ToleranceConfig) -> tuple[Any, int]:
    left = serialize.load_geometry_operand(args.left, tol)
    right = serialize.load_geometry_operand(args.right, tol)
    if isinstance(left, AdjointableMap):
        left = left.image(tol, scale=max(left.norm(), 1e-300))
    if isinstance(right, AdjointableMap):
        right = right.kernel(tol, scale=max(right.norm(), 1e-300))
    rep = geometry.closed_sum_report(left, right, tol, rng=np.random.default_rng(args.seed))
    payload = serialize.report_to_jsonable(rep)
    payload["left"] = serialize.report_to_jsonable(left)
    payload["right"] = serialize.report_to_jsonable(right)
    return payload, EXIT_OK


def cmd_banach(args: argparse.Namespace, tol: ToleranceConfig) -> tuple[Any, int]:
    t_map = serialize.load_operator(args.operator)
    t = t_map.realization
    reg = banach.make_regular_orthogonal(t, tol)
    payload: dict[str, Any] = {
        "regular": serialize.report_to_jsonable(reg),
        "generalized_weyl": banach.generalized_weyl_banach(reg),
        "witness": serialize.report_to_jsonable(banach.defect_witness(reg)),
    }
    if args.perturbation:
        f_map = serialize.load_operator(args.perturbation)
        rec = banach.banach_perturbation(reg, f_map.realization, tol)
        payload["perturbation"] = serialize.report_to_jsonable(rec)
    return payload, EXIT_OK


def cmd_probe(args: argparse.Namespace, tol: ToleranceConfig) -> tuple[Any, int]:
    sizes = [int(s) for s in str(args.sizes).split(",") if s.strip()]
    if not sizes:
        raise DataError("at least one size is required (e.g. --sizes 4,8,16)")
    diag = probes.family_table(args.family, sizes, tol)
    return serialize.report_to_jsonable(diag), EXIT_OK


def cmd_verify(args: argparse.Namespace, tol: ToleranceConfig) -> tuple[Any, int]:
    cfg = RunConfig(
        seed=args.seed, n=args.n, shape=args.shape, tol=tol, out=args.out, format=args.format
    )
    payload = run_suite(args.suite, cfg)
    code = EXIT_OK if not payload["failures"] else EXIT_VIOLATION
    return payload, code


# ---------------------------------------------------------------------------
# rendering


def _render_text(payload: Any, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines: list[str] = []
    if isinstance(payload, dict):
        for key in sorted(payload, key=str):
            val = payload[key]
            if isinstance(val, (dict, list)) and val and not _is_scalar_list(val):
                lines.append(f"{pad}{key}:")
                lines.extend(_render_text(val, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_scalar_text(val)}")
    elif isinstance(payload, list):
        for item in payload:
            if isinstance(item, (dict, list)):
                lines.append(f"{pad}-")
                lines.extend(_render_text(item, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar_text(item)}")
    else:
        lines.append(f"{pad}{_scalar_text(payload)}")
    return lines


def _is_scalar_list(val: Any) -> bool:
    return isinstance(val, list) and all(not isinstance(v, (dict, list)) for v in val)


def _scalar_text(val: Any) -> str:
    if isinstance(val, float):
        return f"{val:.16e}"
    if isinstance(val, list):
        return "[" + ", ".join(_scalar_text(v) for v in val) + "]"
    return str(val)


def _probe_csv(payload: dict) -> str:
    cols = ["n", "gamma_f", "gamma_f2", "c0", "delta", "bouldin_margin"]
    field_of = {
        "n": "sizes",
        "gamma_f": "gamma_f",
        "gamma_f2": "gamma_f2",
        "c0": "c0",
        "delta": "delta",
        "bouldin_margin": "bouldin_margins",
    }
    lines = [",".join(cols)]
    for i in range(len(payload["sizes"])):
        row = []
        for c in cols:
            v = payload[field_of[c]][i]
            row.append(str(v) if c == "n" else f"{v:.16e}")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _emit(payload: Any, fmt: str, out: str | None, is_probe: bool = False) -> None:
    if fmt == "json":
        text = serialize.dumps_canonical(payload) + "\n"
    elif fmt == "csv":
        if not is_probe:
            raise DataError("csv format is only available for probe tables")
        text = _probe_csv(payload)
    else:
        text = "\n".join(_render_text(payload)) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    common.add_argument("--tol-rank", type=float, default=None, help="override rank cutoff")
    common.add_argument("--tol-angle", type=float, default=None, help="override angle tolerance")
    common.add_argument("--out", default=None, help="write output to this path")
    common.add_argument(
        "--format", choices=("text", "json", "csv"), default="text", help="output format"
    )

    parser = argparse.ArgumentParser(
        prog="modop",
        description="Classification reports and property suites for block-algebra operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="full report bundle for an operator file")
    p.add_argument("operator", help="operator JSON file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", parents=[common], help="run a seeded property suite")
    p.add_argument("suite", choices=SUITE_NAMES)
    p.add_argument("--n", type=int, default=20, help="instance count (default 20)")
    p.add_argument("--shape", default="2,3", help='algebra shape, e.g. "2,3" or "1^8"')
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("probe", parents=[common], help="decay table for an operator family")
    p.add_argument("family", choices=probes.FAMILY_NAMES)
    p.add_argument("--sizes", default="4,8,16,32", help="comma-separated sizes")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("drazin", parents=[common], help="core-nilpotent report for an operator file")
    p.add_argument("operator", help="operator JSON file")
    p.set_defaults(func=cmd_drazin)

    p = sub.add_parser(
        "geometry", parents=[common], help="pair geometry from submodule or operator files"
    )
    p.add_argument("left", help="submodule file, or operator file (its image is used)")
    p.add_argument("right", help="submodule file, or operator file (its kernel is used)")
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("banach", parents=[common], help="regular-operator certificate")
    p.add_argument("operator", help="operator JSON file (flattened to a plain matrix)")
    p.add_argument("perturbation", nargs="?", default=None, help="optional perturbation file")
    p.set_defaults(func=cmd_banach)
    return parser


def _tol_from(args: argparse.Namespace) -> ToleranceConfig:
    tol = DEFAULT_TOL
    if args.tol_rank is not None:
        tol = replace(tol, rank_tol=args.tol_rank)
    if args.tol_angle is not None:
        tol = replace(tol, angle_tol=args.tol_angle)
    return tol


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        payload, code = args.func(args, _tol_from(args))
        _emit(payload, args.format, args.out, is_probe=(args.command == "probe"))
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModopError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    return code


if __name__ == "__main__":
    sys.exit(main())
