"""The degree-d family on affine n-space and its exact combinatorics.

The base field has components x_{i+1}^d - x_i x_1^d for i < n and
1 - x_n x_1^d for the last one; a family member adds a constant alpha_i
to component i.  Every zero of the base field has coordinates that are
powers of a primitive root of unity of order N = 1 + d + ... + d^n, so
the closed forms below do all exponent arithmetic in exact integers
reduced mod N and only then take a complex exponential.  Powers of a
given root are read from one cached table per order, which keeps equal
exponents bitwise equal across call sites.

A cyclic group of order N acts on coordinates by these same root-of-unity
scalings and permutes the zeros in a single N-cycle; pushing the family
forward along a group element lands back in the family up to a scalar,
and ``pushforward_factor`` recovers that scalar and the new parameter
directly from the coefficient table.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .cpoly import PolyVectorField, diagonal_pushforward, eval_field, field_distance, scale_field
from .errors import FactorizationError, InputError

# Residual bound for matching a pushed-forward field to the family shape.
FACTOR_TOL = 1e-12


@lru_cache(maxsize=None)
def unit_roots(order: int) -> np.ndarray:
    """Table of e^(2 pi i k / order) for k = 0..order-1."""
    return np.exp(2j * np.pi * np.arange(order) / order)


def unit_root(k: int, order: int) -> complex:
    return complex(unit_roots(order)[k % order])


def _geom(d: int, s: int) -> int:
    """d + d^2 + ... + d^s as an exact integer (0 when s = 0)."""
    return sum(d**t for t in range(1, s + 1))


def _check_nd(n: int, d: int) -> None:
    if not isinstance(n, int) or n < 2:
        raise InputError(f"ambient dimension must be an integer >= 2, got {n!r}")
    if not isinstance(d, int) or d < 1:
        raise InputError(f"degree must be an integer >= 1, got {d!r}")


@dataclass(frozen=True)
class Counts:
    """Exact counts attached to a parameter pair (n, d).

    N: zeros of a family member (all simple for small parameters).
    M: dimension of the space of degree-d foliations on projective n-space.
    K: aligned (d+1)-point subsets among the zeros of the base field;
       nonzero only for odd n and d >= 2, where (d+1) * K = N.
    """

    N: int
    M: int
    K: int


@dataclass(frozen=True)
class FoliationParams:
    """A family member: ambient dimension n, degree d, constant perturbation alpha."""

    n: int
    d: int
    alpha: tuple[complex, ...] = ()

    def __post_init__(self):
        _check_nd(self.n, self.d)
        alpha = tuple(complex(a) for a in self.alpha) or (0j,) * self.n
        if len(alpha) != self.n:
            raise InputError(
                f"alpha has {len(alpha)} entries, expected {self.n}"
            )
        object.__setattr__(self, "alpha", alpha)


@dataclass
class SingularPoint:
    """A zero of a family member.

    m is the index of the unperturbed zero it continues (1..N, with m = N
    the all-ones point); residual is the sup-norm of the field there.
    """

    m: int
    coords: tuple[complex, ...]
    residual: float
    converged: bool
    newton_iters: int
    note: str = ""


@dataclass(frozen=True)
class GroupElement:
    """Power k of the symmetry generator, acting by x_i -> xi^weights_i x_i.

    weights are exponents of the order-N root xi, already reduced mod N;
    k = 0 is the identity (all weights zero).
    """

    k: int
    weights: tuple[int, ...]
    order: int


def counts(n: int, d: int) -> Counts:
    """Exact integer invariants N, M, K for the pair (n, d)."""
    _check_nd(n, d)
    big_n = sum(d**t for t in range(n + 1))
    big_m = n * comb(n + d, d) + comb(n + d - 1, d) - 1
    if n % 2 == 1 and d >= 2:
        big_k = sum(d**t for t in range(0, n, 2))
    else:
        big_k = 0
    return Counts(N=big_n, M=big_m, K=big_k)


def jouanolou_field(n: int, d: int) -> PolyVectorField:
    """The unperturbed degree-d field on affine n-space."""
    _check_nd(n, d)
    comps = []
    for i in range(n - 1):
        lead = [0] * n
        lead[i + 1] = d
        drag = [0] * n
        drag[i] += 1
        drag[0] += d
        comps.append({tuple(lead): 1.0 + 0j, tuple(drag): -1.0 + 0j})
    drag = [0] * n
    drag[n - 1] += 1
    drag[0] += d
    comps.append({(0,) * n: 1.0 + 0j, tuple(drag): -1.0 + 0j})
    return PolyVectorField(n, tuple(comps))


def family_field(params: FoliationParams) -> PolyVectorField:
    """The field of the family member: base field plus the constant alpha."""
    base = jouanolou_field(params.n, params.d)
    zero = (0,) * params.n
    comps = []
    for i, comp in enumerate(base.components):
        table = dict(comp)
        table[zero] = table.get(zero, 0) + params.alpha[i]
        comps.append(table)
    return PolyVectorField(params.n, tuple(comps))


def closed_form_sing(n: int, d: int) -> list[SingularPoint]:
    """All N zeros of the base field, from the exact root-of-unity formulas.

    The m-th point has first coordinate xi^m and i-th coordinate
    xi^(-m (d + d^2 + ... + d^(n+1-i))) for i >= 2, xi = e^(2 pi i / N).
    Exponents are exact integers reduced mod N; m = N gives (1, ..., 1).
    """
    _check_nd(n, d)
    big_n = counts(n, d).N
    table = unit_roots(big_n)
    base = jouanolou_field(n, d)
    exps = [1] + [-_geom(d, n + 1 - i) for i in range(2, n + 1)]
    points = []
    for m in range(1, big_n + 1):
        coords = tuple(complex(table[(m * e) % big_n]) for e in exps)
        residual = float(np.max(np.abs(eval_field(base, coords))))
        points.append(
            SingularPoint(m=m, coords=coords, residual=residual, converged=True, newton_iters=0)
        )
    return points


def generator_weights(n: int, d: int) -> tuple[int, ...]:
    """Root-of-unity exponents of the symmetry generator, reduced mod N.

    They coincide with the exponent pattern of the m = 1 zero, which is
    why the generator shifts the zeros by one index.
    """
    _check_nd(n, d)
    big_n = counts(n, d).N
    weights = [1] + [(-_geom(d, n + 1 - i)) % big_n for i in range(2, n + 1)]
    return tuple(w % big_n for w in weights)


def group_elements(n: int, d: int) -> list[GroupElement]:
    """All N powers of the generator, k = 0 (identity) through N - 1."""
    big_n = counts(n, d).N
    gen = generator_weights(n, d)
    return [
        GroupElement(k=k, weights=tuple((k * w) % big_n for w in gen), order=big_n)
        for k in range(big_n)
    ]


def group_action(g: GroupElement, x) -> np.ndarray:
    """Apply the diagonal root-of-unity scaling of g to a point."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (len(g.weights),):
        raise InputError(f"point has shape {x.shape}, expected ({len(g.weights)},)")
    scale = np.array([unit_root(w, g.order) for w in g.weights])
    return scale * x


def pushforward_factor(
    g: GroupElement, params: FoliationParams
) -> tuple[complex, tuple[complex, ...], float]:
    """Factor the pushforward of a family member along g as c * (member at alpha~).

    The factorization is read off the coefficient table of the pushed
    field: c is minus the coefficient of the x_n x_1^d monomial in the
    last component, and alpha~ comes from the constant terms.  Returns
    (c, alpha~, residual) where residual is the coefficientwise distance
    between the pushed field and c times the alpha~ member; anything
    above FACTOR_TOL raises, since group pushforwards must stay in the
    family.
    """
    n, d = params.n, params.d
    if len(g.weights) != n:
        raise InputError(f"group element has {len(g.weights)} weights, expected {n}")
    scale = [unit_root(w, g.order) for w in g.weights]
    pushed = diagonal_pushforward(family_field(params), scale)

    marker = [0] * n
    marker[n - 1] += 1
    marker[0] += d
    c = -pushed.components[n - 1].get(tuple(marker), 0j)
    if c == 0:
        raise FactorizationError("pushed field lost its top-degree marker monomial")
    zero = (0,) * n
    alpha_t = [pushed.components[i].get(zero, 0j) / c for i in range(n - 1)]
    alpha_t.append(pushed.components[n - 1].get(zero, 0j) / c - 1)
    alpha_t = tuple(alpha_t)

    model = scale_field(family_field(FoliationParams(n, d, alpha_t)), c)
    residual = field_distance(pushed, model)
    if residual >= FACTOR_TOL:
        raise FactorizationError(
            f"pushforward does not match the family shape: residual {residual:.3e}"
        )
    return c, alpha_t, residual
