"""Newton refinement and continuation of the family's zeros.

Each zero of the base field is continued to a perturbed member by damped
Newton iteration, with the parameter ramped in continuation steps when a
direct solve leaves the basin.  The perturbation is kept inside a small
polydisk (RunConfig.radius) where the N zeros stay simple and separated;
a collision of tracked zeros is reported as the parameter leaving that
polydisk rather than as a numerical failure.

``first_order_point`` evaluates the closed first-order expansion of a
tracked zero.  The first coordinate is an implicit unknown of its own
level-set relation, so its linear term carries an extra 1/N; substituting
the unperturbed coordinate naively would lose that factor and degrade the
remainder from quadratic to linear in the perturbation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cpoly import PolyVectorField, eval_field, jacobian
from .errors import CollisionError, ConvergenceError, InputError
from .jouanolou import (
    FoliationParams,
    SingularPoint,
    _geom,
    closed_form_sing,
    counts,
    family_field,
    unit_roots,
)


@dataclass(frozen=True)
class RunConfig:
    """Numerical knobs shared across the laboratory.

    newton_tol / max_iters     damped Newton stopping rule
    continuation_steps         parameter ramp subdivisions (escalated x4 on failure)
    dedup_tol                  minimum separation between distinct tracked zeros
    radius                     polydisk radius for admissible perturbations
    fd_step                    finite-difference step for parameter derivatives
    tol_hyp / tol_nd           spectral classification thresholds
    align_tol                  distance-to-line threshold for the alignment census
    delta / max_order          small-divisor exponent and truncation order
    seed / samples             Monte Carlo sampling controls
    """

    newton_tol: float = 1e-12
    max_iters: int = 50
    continuation_steps: int = 1
    dedup_tol: float = 1e-6
    radius: float = 0.05
    fd_step: float = 1e-5
    tol_hyp: float = 1e-9
    tol_nd: float = 1e-9
    align_tol: float = 1e-8
    delta: float = 1.0
    max_order: int = 8
    seed: int = 123456789
    samples: int = 1000

    def __post_init__(self):
        for name in ("newton_tol", "dedup_tol", "radius", "fd_step",
                     "tol_hyp", "tol_nd", "align_tol"):
            if getattr(self, name) <= 0:
                raise InputError(f"{name} must be positive")
        if self.max_order < 2:
            raise InputError("max_order must be at least 2")
        if self.continuation_steps < 1:
            raise InputError("continuation_steps must be at least 1")
        if self.samples < 1:
            raise InputError("samples must be at least 1")


def newton_refine(
    field: PolyVectorField, x0, cfg: RunConfig, m: int = 0
) -> SingularPoint:
    """Damped Newton iteration toward a zero of the field.

    Full steps are halved (up to 20 times) whenever the residual fails to
    decrease.  Once the residual passes newton_tol one extra improving
    step is taken if available, which polishes the iterate well below the
    tolerance and makes downstream closed-form comparisons insensitive to
    the stopping point.  Non-convergence and singular Jacobians are
    reported through the converged flag, not raised.
    """
    x = np.asarray(x0, dtype=complex).copy()
    if x.shape != (field.n,):
        raise InputError(f"start point has shape {x.shape}, expected ({field.n},)")
    fx = eval_field(field, x)
    res = float(np.max(np.abs(fx)))
    iters = 0
    note = ""
    polished = False
    while iters < cfg.max_iters:
        if res < cfg.newton_tol:
            if polished:
                break
            polished = True
        try:
            step = np.linalg.solve(jacobian(field, x), fx)
        except np.linalg.LinAlgError:
            note = "singular jacobian"
            break
        t = 1.0
        accepted = False
        for _ in range(21):
            cand = x - t * step
            fc = eval_field(field, cand)
            rc = float(np.max(np.abs(fc)))
            if rc < res:
                x, fx, res = cand, fc, rc
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        iters += 1
    converged = res < cfg.newton_tol
    if not converged and not note:
        note = "newton stalled above tolerance"
    return SingularPoint(
        m=m,
        coords=tuple(x),
        residual=res,
        converged=converged,
        newton_iters=iters,
        note=note if not converged else "",
    )


def _check_radius(params: FoliationParams, cfg: RunConfig) -> None:
    size = max((abs(a) for a in params.alpha), default=0.0)
    if size > cfg.radius:
        raise InputError(
            f"perturbation size {size:.3g} exceeds the tracked polydisk radius {cfg.radius:.3g}"
        )


def track_one(params: FoliationParams, m: int, cfg: RunConfig) -> SingularPoint:
    """Continue the m-th unperturbed zero to the perturbed member.

    The parameter is ramped linearly in continuation steps, refining at
    each stage from the previous stage's zero.  On failure the step count
    escalates by factors of 4 (at most to 64) before a ConvergenceError
    naming the index is raised.
    """
    _check_radius(params, cfg)
    big_n = counts(params.n, params.d).N
    if not 1 <= m <= big_n:
        raise InputError(f"index m must lie in [1, {big_n}], got {m}")
    start = closed_form_sing(params.n, params.d)[m - 1]
    alpha = np.asarray(params.alpha, dtype=complex)
    if not np.any(alpha):
        return start

    steps = cfg.continuation_steps
    while True:
        x = np.asarray(start.coords, dtype=complex)
        point = None
        for stage in range(1, steps + 1):
            stage_params = FoliationParams(
                params.n, params.d, tuple(alpha * (stage / steps))
            )
            point = newton_refine(family_field(stage_params), x, cfg, m=m)
            if not point.converged:
                break
            x = np.asarray(point.coords, dtype=complex)
        if point is not None and point.converged:
            return point
        if steps * 4 > 64:
            raise ConvergenceError(
                f"tracking failed for index m={m} at steps={steps}: {point.note}"
            )
        steps *= 4


def track_singularities(params: FoliationParams, cfg: RunConfig) -> list[SingularPoint]:
    """Track all N zeros of a family member, sorted by index m.

    Raises ConvergenceError when an index fails to continue and
    CollisionError when two tracked zeros come within dedup_tol of each
    other (the parameter left the polydisk where zeros stay simple).
    """
    _check_radius(params, cfg)
    big_n = counts(params.n, params.d).N
    points = [track_one(params, m, cfg) for m in range(1, big_n + 1)]
    coords = np.array([p.coords for p in points])
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.max(np.abs(diff), axis=2)
    dist[np.diag_indices(big_n)] = np.inf
    a, b = np.unravel_index(np.argmin(dist), dist.shape)
    if dist[a, b] <= cfg.dedup_tol:
        raise CollisionError(
            f"tracked zeros m={points[a].m} and m={points[b].m} merged "
            f"(separation {dist[a, b]:.3e}); the perturbation left the safe polydisk"
        )
    return points


def first_order_point(n: int, d: int, m: int, alpha) -> np.ndarray:
    """First-order expansion of the m-th tracked zero in the perturbation.

    At alpha = 0 the result is bitwise the closed-form point.  The first
    coordinate's linear response comes from differentiating its implicit
    level-set relation (coefficients d^(j-1)/N); the other coordinates
    evaluate the displayed expansion at that corrected first coordinate,
    keeping the remainder quadratic in the perturbation.  All root-of-unity
    exponents are exact integers reduced mod N.
    """
    big_n = counts(n, d).N
    if not 1 <= m <= big_n:
        raise InputError(f"index m must lie in [1, {big_n}], got {m}")
    alpha = tuple(complex(a) for a in alpha)
    if len(alpha) != n:
        raise InputError(f"alpha has {len(alpha)} entries, expected {n}")
    table = unit_roots(big_n)

    def root(e: int) -> complex:
        return complex(table[e % big_n])

    # d x_1 / d alpha_j at 0: (d^(j-1) / N) * xi^(m * (-d - sum_{l=0}^{j-2} d^(n-l)))
    delta1 = 0j
    for j in range(1, n + 1):
        e_j = -d - sum(d ** (n - l) for l in range(j - 1))
        delta1 += alpha[j - 1] * (d ** (j - 1) / big_n) * root(m * e_j)

    out = np.zeros(n, dtype=complex)
    out[0] = root(m) + delta1
    for i in range(2, n + 1):
        e_i = -_geom(d, n + 1 - i)
        value = root(m * e_i) + e_i * root(m * (e_i - 1)) * delta1
        value += alpha[i - 1] * root(-m * d)
        for j in range(i + 1, n + 1):
            e_ij = -d - sum(d ** (n + 1 - i - l) for l in range(j - i))
            value += alpha[j - 1] * d ** (j - i) * root(m * e_ij)
        out[i - 1] = value
    return out
