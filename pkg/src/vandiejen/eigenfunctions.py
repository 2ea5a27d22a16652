"""Joint eigenfunctions, ground states, kernel functions, branch tracking.

The eigenfunction attached to a mass assignment is a product of
single-coordinate blocks and pair blocks, most of which carry square
roots of gamma-function ratios.  Square roots force a branch choice, and
this module deals with that in two complementary ways.

*Squared route.*  Products of gamma and building-block factors are
represented symbolically as :class:`GFactor` / :class:`SFactor` lists in
which every exponent is an integer, so no branch choice is needed.  The
squared modulus of a ground state or kernel function, and in particular
its exact multiplicative shift ratios (via the gamma difference
equation), are available through :func:`factor_value` and
:func:`factor_ratio`.  The verification engine uses these for the
branch-free residual checks.

*Continued route.*  For checking the conjugation identity between the
square-root form of the operator and its plain form, square roots are
continued analytically along straight-line paths from a fixed base point
(:class:`BranchTracker`).  This pins a concrete sheet for every factor
and makes sign bookkeeping falsifiable: deliberately flipping one sheet
(`set_fault`) must blow up the residual.

The module also provides the explicit factor builders for the ground
states and the three kernel types (gamma cross kernel, building-block
cross kernel, and the four-block deformed kernel), plus the deformed
trigonometric power sums used by the polynomial-invariance checks.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .gamma import gamma_G, gamma_ratio_shift
from .operators import MassTag, d_param
from .sfun import (
    DEFAULT_POLICY,
    CaseParams,
    DomainError,
    TruncationPolicy,
    s_eval,
)

__all__ = [
    "BranchError",
    "BranchTracker",
    "GFactor",
    "SFactor",
    "factor_value",
    "factor_ratio",
    "groundstate_sq_factors",
    "deformed_groundstate_sq_factors",
    "cauchy_kernel_factors",
    "dual_cauchy_kernel_factors",
    "pair_kind",
    "phi_factor_specs",
    "eigenfunction_value",
    "apply_sqrt_operator",
    "calibrate_conjugation_gauge",
    "psi_single",
    "psi_single_sq",
    "phi_pair",
    "phi_total",
    "groundstate_psi",
    "deformed_groundstate_value",
    "kernel_cauchy_value",
    "kernel_dual_cauchy_value",
    "kernel_deformed_value",
    "power_sum_weight",
    "deformed_power_sum",
    "quasi_invariance_defect",
]


class BranchError(RuntimeError):
    """Analytic continuation of a square root could not be completed."""


# ---------------------------------------------------------------------------
# symbolic factor lists (integer powers only, hence branch-free)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GFactor:
    """One gamma factor ``G(sum_i c_i Z_i + offset; alpha) ** power``.

    ``coeffs`` maps coordinate index to an integer coefficient.  Integer
    coefficients are required so that coordinate shifts by multiples of
    ``alpha`` stay inside the difference equation.
    """

    coeffs: tuple[tuple[int, int], ...]
    offset: complex
    alpha: complex
    power: int = 1

    def argument(self, Z: Sequence[complex]) -> complex:
        return sum(c * Z[i] for i, c in self.coeffs) + self.offset


@dataclass(frozen=True)
class SFactor:
    """One building-block factor ``s(sum_i c_i Z_i + offset) ** power``."""

    coeffs: tuple[tuple[int, int], ...]
    offset: complex
    power: int = 1

    def argument(self, Z: Sequence[complex]) -> complex:
        return sum(c * Z[i] for i, c in self.coeffs) + self.offset


Factor = GFactor | SFactor


def factor_value(
    case: CaseParams,
    factors: Sequence[Factor],
    Z: Sequence[complex],
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> complex:
    """Evaluate the product of all factors at the point ``Z``."""
    out = 1.0 + 0j
    for f in factors:
        arg = f.argument(Z)
        if isinstance(f, GFactor):
            base = complex(gamma_G(case, f.alpha, arg, policy))
        else:
            base = complex(s_eval(case, arg, policy))
        out *= base**f.power
    return out


def factor_ratio(
    case: CaseParams,
    factors: Sequence[Factor],
    Z: Sequence[complex],
    var: int,
    delta: complex,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> complex:
    """Exact ratio ``product(Z + delta e_var) / product(Z)``.

    Gamma factors are reduced through the difference equation, which
    requires ``coeff * delta`` to be an integer multiple of ``i alpha``;
    building-block factors are evaluated directly.  The result involves
    no gamma evaluations and no square roots.
    """
    out = 1.0 + 0j
    for f in factors:
        c = dict(f.coeffs).get(var, 0)
        if c == 0:
            continue
        arg = f.argument(Z)
        if isinstance(f, GFactor):
            steps_exact = c * delta / (1j * f.alpha)
            steps = round(steps_exact.real)
            if abs(steps_exact - steps) > 1e-9:
                raise DomainError(
                    f"shift {delta} times coefficient {c} is not an integer "
                    f"multiple of i*alpha = {1j * f.alpha}"
                )
            ratio = complex(gamma_ratio_shift(case, f.alpha, arg, steps, policy))
        else:
            ratio = complex(s_eval(case, arg + c * delta, policy)) / complex(
                s_eval(case, arg, policy)
            )
        out *= ratio**f.power
    return out


def groundstate_sq_factors(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    variables: Sequence[int],
) -> list[Factor]:
    """Squared ground state of the all-unit-mass operator on the given
    coordinate slots: per coordinate a doubled-argument block over the
    coupling blocks, per pair four sign combinations of a two-gamma ratio.
    """
    factors: list[Factor] = []
    b2 = 0.5j * beta
    for i in variables:
        factors.append(GFactor(((i, 2),), b2, beta, 1))
        factors.append(GFactor(((i, -2),), b2, beta, 1))
        for g_nu in g:
            factors.append(GFactor(((i, 1),), b2 - 1j * g_nu * beta, beta, -1))
            factors.append(GFactor(((i, -1),), b2 - 1j * g_nu * beta, beta, -1))
    idx = list(variables)
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            for e1 in (1, -1):
                for e2 in (1, -1):
                    pair = ((idx[a], e1), (idx[b], e2))
                    factors.append(GFactor(pair, b2, beta, 1))
                    factors.append(GFactor(pair, b2 - 1j * lam * beta, beta, -1))
    return factors


def deformed_groundstate_sq_factors(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    x_vars: Sequence[int],
    xt_vars: Sequence[int],
) -> list[Factor]:
    """Squared two-species ground state: an all-unit block on the plain
    coordinates, the dual block (couplings ``(lam+1-2g)/(2 lam)``, swapped
    parameters) on the deformed coordinates, divided by the paired cross
    denominators."""
    g_dual = tuple((lam + 1 - 2 * v) / (2 * lam) for v in g)
    factors = groundstate_sq_factors(case, g, lam, beta, x_vars)
    factors += groundstate_sq_factors(case, g_dual, 1.0 / lam, lam * beta, xt_vars)
    u = 0.5j * (lam - 1) * beta
    for i in x_vars:
        for k in xt_vars:
            for delta in (1, -1):
                pair = ((i, 1), (k, delta))
                factors.append(SFactor(pair, u, -1))
                factors.append(SFactor(pair, -u, -1))
    return factors


def cauchy_kernel_factors(
    lam: float,
    beta: float,
    x_vars: Sequence[int],
    y_vars: Sequence[int],
    alpha: complex | None = None,
    offset: complex | None = None,
    power: int = 1,
) -> list[Factor]:
    """Gamma cross kernel ``prod G(e x_j + e' y_k + offset; alpha)``.

    Defaults reproduce the plain-coordinate pairing (offset
    ``-i lam beta / 2`` at step ``beta``); the deformed-coordinate pairing
    passes ``offset=-i beta/2, alpha=lam*beta``.
    """
    if alpha is None:
        alpha = beta
    if offset is None:
        offset = -0.5j * lam * beta
    out: list[Factor] = []
    for j in x_vars:
        for k in y_vars:
            for e1 in (1, -1):
                for e2 in (1, -1):
                    out.append(GFactor(((j, e1), (k, e2)), offset, alpha, power))
    return out


def dual_cauchy_kernel_factors(
    x_vars: Sequence[int],
    y_vars: Sequence[int],
    power: int = 1,
) -> list[Factor]:
    """Building-block cross kernel ``prod s(x_j + delta y_k)``."""
    out: list[Factor] = []
    for j in x_vars:
        for k in y_vars:
            for delta in (1, -1):
                out.append(SFactor(((j, 1), (k, delta)), 0j, power))
    return out


# ---------------------------------------------------------------------------
# analytic continuation of square roots
# ---------------------------------------------------------------------------


class BranchTracker:
    """Continues square roots along straight paths from one base point.

    Every tracked factor is identified by a hashable key.  The first
    evaluation fixes the principal square root at the base point; later
    evaluations walk from the base to the requested target, choosing at
    each step the root closest to the previous value and bisecting the
    step whenever the choice is ambiguous.  Results are cached per
    (key, target).

    Continuation pins each root only up to one global sign per factor.
    ``set_gauge`` flips that sign coherently (at every point at once);
    the conjugation check calibrates gauges at the single base point and
    the identity then has no freedom left anywhere else.

    ``set_fault`` deliberately flips the sheet of one factor at targets
    selected by a predicate, which is an incoherent change.  Verification
    uses this to demonstrate that the residuals are sensitive to sheet
    errors.
    """

    def __init__(
        self,
        base_point: Sequence[complex],
        path_steps: int = 48,
        max_depth: int = 14,
        rel_floor: float = 1e-12,
    ) -> None:
        self.base = tuple(complex(v) for v in base_point)
        self.path_steps = path_steps
        self.max_depth = max_depth
        self.rel_floor = rel_floor
        self._cache: dict = {}
        self._gauge: dict = {}
        self._fault_key = None
        self._fault_pred: Callable[[tuple], bool] | None = None

    def set_gauge(self, key, sign: int) -> None:
        if sign not in (1, -1):
            raise ValueError("gauge sign must be +1 or -1")
        self._gauge[key] = sign

    def set_fault(self, key, predicate: Callable[[tuple], bool]) -> None:
        self._fault_key = key
        self._fault_pred = predicate

    def clear_fault(self) -> None:
        self._fault_key = None
        self._fault_pred = None

    def _point(self, target: tuple, t: float) -> tuple:
        return tuple(b + t * (z - b) for b, z in zip(self.base, target))

    def sqrt_at(self, key, fn: Callable[[Sequence[complex]], complex], target) -> complex:
        target = tuple(complex(v) for v in target)
        cache_key = (key, target)
        value = self._cache.get(cache_key)
        if value is None:
            value = self._continue(fn, target)
            self._cache[cache_key] = value
        value *= self._gauge.get(key, 1)
        if self._fault_key == key and self._fault_pred is not None and self._fault_pred(target):
            return -value
        return value

    def _continue(self, fn, target: tuple) -> complex:
        w0 = complex(fn(self.base))
        if w0 == 0:
            raise BranchError("square-root argument vanishes at the base point")
        prev = cmath.sqrt(w0)
        if target == self.base:
            return prev
        t_prev = 0.0
        for k in range(1, self.path_steps + 1):
            t_next = k / self.path_steps
            prev = self._step(fn, target, t_prev, prev, t_next, 0)
            t_prev = t_next
        return prev

    def _step(self, fn, target, t0: float, w_prev: complex, t1: float, depth: int) -> complex:
        w_sq = complex(fn(self._point(target, t1)))
        scale = abs(w_prev) ** 2 + abs(w_sq)
        if abs(w_sq) < self.rel_floor * scale:
            raise BranchError("square-root argument passes too close to zero along the path")
        root = cmath.sqrt(w_sq)
        d_plus = abs(root - w_prev)
        d_minus = abs(root + w_prev)
        chosen = root if d_plus <= d_minus else -root
        # ambiguous step: the two sheets are not clearly separated
        if min(d_plus, d_minus) > 0.5 * max(abs(root), abs(w_prev)):
            if depth >= self.max_depth:
                raise BranchError(
                    f"cannot separate square-root sheets near t={t1:.6f}"
                )
            t_mid = 0.5 * (t0 + t1)
            w_mid = self._step(fn, target, t0, w_prev, t_mid, depth + 1)
            return self._step(fn, target, t_mid, w_mid, t1, depth + 1)
        return chosen


# ---------------------------------------------------------------------------
# eigenfunction for a general mass assignment
# ---------------------------------------------------------------------------


def pair_kind(tag_j: MassTag, tag_k: MassTag) -> str:
    """Relation of the second mass to the first within the four-element
    mass set: ``same`` (equal), ``opposite`` (negated), ``dual``
    (equal to ``+1/(lam * m)``), or ``antidual`` (``-1/(lam * m)``)."""
    if tag_j is tag_k:
        return "same"
    opposite = {
        MassTag.PLUS_ONE: MassTag.MINUS_ONE,
        MassTag.MINUS_ONE: MassTag.PLUS_ONE,
        MassTag.PLUS_INV: MassTag.MINUS_INV,
        MassTag.MINUS_INV: MassTag.PLUS_INV,
    }
    dual = {
        MassTag.PLUS_ONE: MassTag.PLUS_INV,
        MassTag.PLUS_INV: MassTag.PLUS_ONE,
        MassTag.MINUS_ONE: MassTag.MINUS_INV,
        MassTag.MINUS_INV: MassTag.MINUS_ONE,
    }
    if opposite[tag_j] is tag_k:
        return "opposite"
    if dual[tag_j] is tag_k:
        return "dual"
    return "antidual"


def phi_factor_specs(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    tags: Sequence[MassTag],
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> list[tuple]:
    """Factor plan for the eigenfunction of a general mass assignment.

    Returns a list of ``(key, mode, fn)`` entries where ``fn`` maps a
    coordinate tuple to a complex value and ``mode`` says how the value
    enters the product: ``sqrt`` (continued square root), ``direct``
    (as is), or ``invsqrt`` (reciprocal square root).
    """
    n = len(tags)
    masses = [t.value_for(lam) for t in tags]
    specs: list[tuple] = []

    for j in range(n):
        m = masses[j]
        alpha = beta / m
        half = 0.5j * beta / m

        def w_single(Z, j=j, m=m, alpha=alpha, half=half):
            x = Z[j]
            num = complex(gamma_G(case, alpha, 2 * x + half, policy))
            num *= complex(gamma_G(case, alpha, -2 * x + half, policy))
            den = 1.0 + 0j
            for g_nu in g:
                off = half - 1j * d_param(g_nu, m, lam, tags[j]) * beta
                den *= complex(gamma_G(case, alpha, x + off, policy))
                den *= complex(gamma_G(case, alpha, -x + off, policy))
            return num / den

        specs.append((("single", j), "sqrt", w_single))

    for j in range(n):
        for k in range(j + 1, n):
            kind = pair_kind(tags[j], tags[k])
            m = masses[j]
            alpha = beta / m
            for e1 in (1, -1):
                for e2 in (1, -1):
                    key = ("pair", j, k, e1, e2)
                    if kind == "same":

                        def w_same(Z, j=j, k=k, e1=e1, e2=e2, m=m, alpha=alpha):
                            arg = e1 * Z[j] + e2 * Z[k] + 0.5j * beta / m
                            num = complex(gamma_G(case, alpha, arg, policy))
                            den = complex(
                                gamma_G(case, alpha, arg - 1j * lam * m * beta, policy)
                            )
                            return num / den

                        specs.append((key, "sqrt", w_same))
                    elif kind == "opposite":

                        def v_opp(Z, j=j, k=k, e1=e1, e2=e2, m=m, alpha=alpha):
                            arg = e1 * Z[j] + e2 * Z[k] - 0.5j * lam * m * beta
                            return complex(gamma_G(case, alpha, arg, policy))

                        specs.append((key, "direct", v_opp))
                    elif kind == "dual":

                        def w_dual(Z, j=j, k=k, e1=e1, e2=e2):
                            return complex(s_eval(case, e1 * Z[j] + e2 * Z[k], policy))

                        specs.append((key, "sqrt", w_dual))
                    else:

                        def w_anti(Z, j=j, k=k, e1=e1, e2=e2, m=m):
                            arg = (
                                e1 * Z[j]
                                + e2 * Z[k]
                                - 0.5j * lam * m * beta
                                + 0.5j * beta / m
                            )
                            return complex(s_eval(case, arg, policy))

                        specs.append((key, "invsqrt", w_anti))
    return specs


def eigenfunction_value(
    specs: Sequence[tuple],
    tracker: BranchTracker,
    Z: Sequence[complex],
) -> complex:
    """Evaluate the eigenfunction at ``Z`` with all square roots continued
    from the tracker's base point."""
    out = 1.0 + 0j
    for key, mode, fn in specs:
        if mode == "direct":
            out *= complex(fn(Z))
        elif mode == "sqrt":
            out *= tracker.sqrt_at(key, fn, Z)
        else:
            out /= tracker.sqrt_at(key, fn, Z)
    return out


def apply_sqrt_operator(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    tags: Sequence[MassTag],
    Z: Sequence[complex],
    h_fn: Callable[[Sequence[complex]], complex],
    tracker: BranchTracker,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> complex:
    """Action of the square-root form of the operator on ``h_fn``.

    Each shift term carries the square root of the shift coefficient at
    the evaluation point and the square root of the opposite coefficient
    at the shifted point, both continued from the tracker's base.
    """
    from .operators import coeff_V0, coeff_V_shift

    Z = tuple(complex(v) for v in Z)
    masses = tuple(t.value_for(lam) for t in tags)
    total = 0j
    for j, m_j in enumerate(masses):
        step = 1j * beta / m_j
        for sign in (1, -1):
            shifted = list(Z)
            shifted[j] = Z[j] - sign * step
            shifted = tuple(shifted)

            def w_here(P, j=j, sign=sign):
                return coeff_V_shift(case, g, lam, beta, masses, tags, P, j, sign, policy)

            def w_there(P, j=j, sign=sign):
                return coeff_V_shift(case, g, lam, beta, masses, tags, P, j, -sign, policy)

            root_here = tracker.sqrt_at(("coeff", j, sign), w_here, Z)
            root_there = tracker.sqrt_at(("coeff", j, -sign), w_there, shifted)
            pref = complex(s_eval(case, 1j * lam * m_j * beta, policy))
            total += pref * root_here * root_there * h_fn(shifted)
    total += coeff_V0(case, g, lam, beta, masses, Z, policy) * h_fn(Z)
    return total


def calibrate_conjugation_gauge(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    tags: Sequence[MassTag],
    specs: Sequence[tuple],
    tracker: BranchTracker,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> None:
    """Fix the square-root gauges at the tracker's base point.

    For each coordinate the continued product of the two coefficient
    roots times the ground-state ratio must reproduce the plain shift
    coefficient up to a sign that is constant in space.  This pins that
    sign using only the base point; it raises :class:`BranchError` when
    the ratio is not close to a sign, or when one flip per coordinate
    cannot make both shift directions consistent.
    """
    from .operators import coeff_V_shift

    base = tracker.base
    masses = tuple(t.value_for(lam) for t in tags)

    def term_ratio(j: int, sign: int) -> complex:
        step = 1j * beta / masses[j]
        shifted = list(base)
        shifted[j] = base[j] - sign * step
        shifted = tuple(shifted)

        def w_here(P, j=j, sign=sign):
            return coeff_V_shift(case, g, lam, beta, masses, tags, P, j, sign, policy)

        def w_there(P, j=j, sign=sign):
            return coeff_V_shift(case, g, lam, beta, masses, tags, P, j, -sign, policy)

        root_here = tracker.sqrt_at(("coeff", j, sign), w_here, base)
        root_there = tracker.sqrt_at(("coeff", j, -sign), w_there, shifted)
        plain = coeff_V_shift(case, g, lam, beta, masses, tags, base, j, sign, policy)
        phi_here = eigenfunction_value(specs, tracker, base)
        phi_there = eigenfunction_value(specs, tracker, shifted)
        return root_here * root_there * phi_there / (phi_here * plain)

    def to_sign(ratio: complex, where: str) -> int:
        if abs(ratio - 1) < 0.1:
            return 1
        if abs(ratio + 1) < 0.1:
            return -1
        raise BranchError(f"gauge ratio {ratio:.6f} at {where} is not a sign")

    for j in range(len(tags)):
        sigma = to_sign(term_ratio(j, 1), f"coordinate {j}, up shift")
        if sigma < 0:
            tracker.set_gauge(("coeff", j, 1), -1)
        check = to_sign(term_ratio(j, -1), f"coordinate {j}, down shift")
        if check < 0:
            raise BranchError(
                f"shift directions of coordinate {j} need opposite gauges"
            )


# ---------------------------------------------------------------------------
# named evaluators: single blocks, pair blocks, ground states, kernels
# ---------------------------------------------------------------------------


def psi_single(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    x: complex,
    tag: MassTag,
    tracker: BranchTracker,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> complex:
    """Single-coordinate block: square root of a doubled-argument gamma
    pair over the coupling gamma products, with the coupling offsets
    depending on the mass species.  The tracker's base must be a 1-tuple.
    """
    m = tag.value_for(lam)
    alpha = beta / m
    half = 0.5j * beta / m

    def w(Z):
        v = Z[0]
        num = complex(gamma_G(case, alpha, 2 * v + half, policy))
        num *= complex(gamma_G(case, alpha, -2 * v + half, policy))
        den = 1.0 + 0j
        for g_nu in g:
            off = half - 1j * d_param(g_nu, m, lam, tag) * beta
            den *= complex(gamma_G(case, alpha, v + off, policy))
            den *= complex(gamma_G(case, alpha, -v + off, policy))
        return num / den

    return tracker.sqrt_at(("psi", tag.value), w, (x,))


def psi_single_sq(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    x: complex,
    tag: MassTag,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> complex:
    """The defining product under the square root of :func:`psi_single`."""
    m = tag.value_for(lam)
    alpha = beta / m
    half = 0.5j * beta / m
    num = complex(gamma_G(case, alpha, 2 * x + half, policy))
    num *= complex(gamma_G(case, alpha, -2 * x + half, policy))
    den = 1.0 + 0j
    for g_nu in g:
        off = half - 1j * d_param(g_nu, m, lam, tag) * beta
        den *= complex(gamma_G(case, alpha, x + off, policy))
        den *= complex(gamma_G(case, alpha, -x + off, policy))
    return num / den


def phi_pair(
    case: CaseParams,
    lam: float,
    beta: float,
    x: complex,
    tag_j: MassTag,
    tag_k: MassTag,
    tracker: BranchTracker,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> complex:
    """Pair block at combined argument ``x``, by species relation.

    Same species takes the square-rooted gamma ratio, opposite species a
    plain gamma value, the dual relation ``sqrt(s(x))``, and the antidual
    relation a reciprocal square root.  The tracker's base must be a
    1-tuple for the rooted kinds.
    """
    kind = pair_kind(tag_j, tag_k)
    m = tag_j.value_for(lam)
    alpha = beta / m
    if kind == "same":

        def w_same(Z):
            arg = Z[0] + 0.5j * beta / m
            num = complex(gamma_G(case, alpha, arg, policy))
            den = complex(gamma_G(case, alpha, arg - 1j * lam * m * beta, policy))
            return num / den

        return tracker.sqrt_at(("phi", tag_j.value, tag_k.value), w_same, (x,))
    if kind == "opposite":
        return complex(gamma_G(case, alpha, x - 0.5j * lam * m * beta, policy))
    if kind == "dual":

        def w_dual(Z):
            return complex(s_eval(case, Z[0], policy))

        return tracker.sqrt_at(("phi", tag_j.value, tag_k.value), w_dual, (x,))

    def w_anti(Z):
        arg = Z[0] - 0.5j * lam * m * beta + 0.5j * beta / m
        return complex(s_eval(case, arg, policy))

    return 1.0 / tracker.sqrt_at(("phi", tag_j.value, tag_k.value), w_anti, (x,))


def phi_total(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    tags: Sequence[MassTag],
    Z: Sequence[complex],
    tracker: BranchTracker,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> complex:
    """Full eigenfunction for a general mass assignment (product of all
    single and pair blocks, square roots continued by the tracker)."""
    specs = phi_factor_specs(case, g, lam, beta, tags, policy)
    return eigenfunction_value(specs, tracker, Z)


def groundstate_psi(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    Z: Sequence[complex],
    variables: Sequence[int],
    tracker: BranchTracker,
    policy: TruncationPolicy = DEFAULT_POLICY,
    key_prefix: str = "gs",
) -> complex:
    """All-unit-mass ground state on the given coordinate slots of ``Z``.

    Written against the explicit unit-mass display rather than through
    :func:`phi_total`, so the two implementations cross-check each other.
    """
    b2 = 0.5j * beta
    out = 1.0 + 0j
    for i in variables:

        def w_single(P, i=i):
            v = P[i]
            num = complex(gamma_G(case, beta, 2 * v + b2, policy))
            num *= complex(gamma_G(case, beta, -2 * v + b2, policy))
            den = 1.0 + 0j
            for g_nu in g:
                den *= complex(gamma_G(case, beta, v + b2 - 1j * g_nu * beta, policy))
                den *= complex(gamma_G(case, beta, -v + b2 - 1j * g_nu * beta, policy))
            return num / den

        out *= tracker.sqrt_at((key_prefix, "single", i), w_single, Z)
    idx = list(variables)
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            for e1 in (1, -1):
                for e2 in (1, -1):

                    def w_pair(P, j=idx[a], k=idx[b], e1=e1, e2=e2):
                        arg = e1 * P[j] + e2 * P[k] + b2
                        num = complex(gamma_G(case, beta, arg, policy))
                        den = complex(gamma_G(case, beta, arg - 1j * lam * beta, policy))
                        return num / den

                    out *= tracker.sqrt_at(
                        (key_prefix, "pair", idx[a], idx[b], e1, e2), w_pair, Z
                    )
    return out


def deformed_groundstate_value(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    Z: Sequence[complex],
    x_vars: Sequence[int],
    xt_vars: Sequence[int],
    tracker: BranchTracker,
    policy: TruncationPolicy = DEFAULT_POLICY,
    key_prefix: str = "dgs",
) -> complex:
    """Two-species ground state: plain block times dual block over the
    square-rooted cross product."""
    g_dual = tuple((lam + 1 - 2 * v) / (2 * lam) for v in g)
    out = groundstate_psi(case, g, lam, beta, Z, x_vars, tracker, policy,
                          key_prefix=key_prefix + "-x")
    out *= groundstate_psi(case, g_dual, 1.0 / lam, lam * beta, Z, xt_vars,
                           tracker, policy, key_prefix=key_prefix + "-t")
    u = 0.5j * (lam - 1) * beta
    for i in x_vars:
        for k in xt_vars:
            for delta in (1, -1):

                def w_cross(P, i=i, k=k, delta=delta):
                    arg = P[i] + delta * P[k]
                    return complex(s_eval(case, arg + u, policy)) * complex(
                        s_eval(case, arg - u, policy)
                    )

                out /= tracker.sqrt_at(
                    (key_prefix, "cross", i, k, delta), w_cross, Z
                )
    return out


def kernel_cauchy_value(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    Z: Sequence[complex],
    x_vars: Sequence[int],
    y_vars: Sequence[int],
    tracker: BranchTracker,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> complex:
    """Gamma cross kernel joining a plain block at coupling ``g`` and one
    at the reflected coupling ``(lam+1)/2 - g``."""
    g_ref = tuple((lam + 1) / 2 - v for v in g)
    out = groundstate_psi(case, g, lam, beta, Z, x_vars, tracker, policy,
                          key_prefix="kc-x")
    out *= groundstate_psi(case, g_ref, lam, beta, Z, y_vars, tracker, policy,
                           key_prefix="kc-y")
    cross = cauchy_kernel_factors(lam, beta, x_vars, y_vars)
    return out * factor_value(case, cross, Z, policy)


def kernel_dual_cauchy_value(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    Z: Sequence[complex],
    x_vars: Sequence[int],
    yt_vars: Sequence[int],
    tracker: BranchTracker,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> complex:
    """Building-block cross kernel joining a plain block and a block with
    scaled parameters ``(g/lam, 1/lam, lam*beta)``."""
    g_scaled = tuple(v / lam for v in g)
    out = groundstate_psi(case, g, lam, beta, Z, x_vars, tracker, policy,
                          key_prefix="kd-x")
    out *= groundstate_psi(case, g_scaled, 1.0 / lam, lam * beta, Z, yt_vars,
                           tracker, policy, key_prefix="kd-t")
    cross = dual_cauchy_kernel_factors(x_vars, yt_vars)
    return out * factor_value(case, cross, Z, policy)


def kernel_deformed_value(
    case: CaseParams,
    g: Sequence[float],
    lam: float,
    beta: float,
    Z: Sequence[complex],
    x_vars: Sequence[int],
    xt_vars: Sequence[int],
    y_vars: Sequence[int],
    yt_vars: Sequence[int],
    tracker: BranchTracker,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> complex:
    """Four-block kernel: two two-species ground states joined by two
    gamma cross kernels and two building-block cross kernels."""
    g_ref = tuple((lam + 1) / 2 - v for v in g)
    out = deformed_groundstate_value(case, g, lam, beta, Z, x_vars, xt_vars,
                                     tracker, policy, key_prefix="kf-a")
    out *= deformed_groundstate_value(case, g_ref, lam, beta, Z, y_vars, yt_vars,
                                      tracker, policy, key_prefix="kf-b")
    cross = cauchy_kernel_factors(lam, beta, x_vars, y_vars)
    cross += cauchy_kernel_factors(lam, beta, xt_vars, yt_vars,
                                   alpha=lam * beta, offset=-0.5j * beta)
    cross += dual_cauchy_kernel_factors(x_vars, yt_vars)
    cross += dual_cauchy_kernel_factors(xt_vars, y_vars)
    return out * factor_value(case, cross, Z, policy)


# ---------------------------------------------------------------------------
# deformed trigonometric power sums
# ---------------------------------------------------------------------------


def power_sum_weight(r: float, lam: float, beta: float, n: int) -> float:
    """Relative weight of the deformed coordinates in the n-th power sum.

    The sign is forced by the hyperplane condition: shifting a plain and
    a deformed coordinate in lockstep by half steps must annihilate the
    generator on the coincidence hyperplane, which requires
    ``-sinh(r n beta) / sinh(r n lam beta)``.
    """
    return -math.sinh(r * n * beta) / math.sinh(r * n * lam * beta)


def deformed_power_sum(
    r: float,
    lam: float,
    beta: float,
    n: int,
    x: Sequence[complex],
    xt: Sequence[complex],
    weight: float | None = None,
) -> complex:
    """The n-th deformed power sum in exponential coordinates."""
    if weight is None:
        weight = power_sum_weight(r, lam, beta, n)
    total = 0j
    for v in x:
        total += cmath.exp(2j * r * n * v) + cmath.exp(-2j * r * n * v)
    for v in xt:
        total += weight * (cmath.exp(2j * r * n * v) + cmath.exp(-2j * r * n * v))
    return total


def quasi_invariance_defect(
    r: float,
    lam: float,
    beta: float,
    p_fn: Callable[[Sequence[complex], Sequence[complex]], complex],
    t: complex,
    j: int,
    k: int,
    x: Sequence[complex],
    xt: Sequence[complex],
) -> complex:
    """Hyperplane defect of ``p_fn`` at ``x_j = xt_k = t``.

    Both coordinates are moved to the coincidence point, then shifted in
    lockstep by ``+-(i beta/2, i lam beta/2)``; the difference of the two
    shifted values must vanish for quasi-invariant polynomials.
    """
    x_up = list(x)
    xt_up = list(xt)
    x_dn = list(x)
    xt_dn = list(xt)
    x_up[j] = t + 0.5j * beta
    xt_up[k] = t + 0.5j * lam * beta
    x_dn[j] = t - 0.5j * beta
    xt_dn[k] = t - 0.5j * lam * beta
    return p_fn(tuple(x_up), tuple(xt_up)) - p_fn(tuple(x_dn), tuple(xt_dn))
