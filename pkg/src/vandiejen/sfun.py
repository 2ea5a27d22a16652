"""Building-block special functions for the four difference-operator regimes.

Everything in this package is built on a single odd entire function ``s``
that comes in four flavours, selected by :class:`CaseKind`:

* ``RATIONAL``:        s(x) = x
* ``TRIGONOMETRIC``:   s(x) = sin(r x) / r
* ``HYPERBOLIC``:      s(x) = (a / pi) sinh(pi x / a)
* ``ELLIPTIC``:        s(x) = (2/r) sin(r x) prod_{n>=1} (1 - q^{2n})
                        (1 - 2 q^{2n} cos(2 r x) + q^{4n}),  q = exp(-r a)

All four behave like ``s(x) ~ x`` at the origin up to a case constant and
vanish exactly on a lattice of "half-period" translates.  The elliptic
flavour is an odd Jacobi theta function in disguise; both its sine series
and its product form are implemented here and cross-checked in the tests.

The module also records the quasi-periodicity data of ``s`` (sign and
exponential factor picked up under translation by each half-period), the
duplication rule relating ``s(2x)`` to shifted ``s`` factors, and a lattice
distance helper used everywhere to keep evaluation points away from zeros
of ``s`` that would otherwise poison quotients.

Evaluators accept scalars or numpy arrays and are vectorised over the
argument.  Passing a :class:`TruncationPolicy` with ``precision_dps`` set
routes scalar evaluation through ``mpmath`` at the requested number of
decimal digits; this is the slow path used for oracle-grade checks.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

__all__ = [
    "CaseKind",
    "CaseParams",
    "TruncationPolicy",
    "DomainError",
    "PoleProximityError",
    "ConvergenceError",
    "DEFAULT_POLICY",
    "theta_eval",
    "theta_product",
    "s_eval",
    "quasi_factor",
    "lattice_distance",
    "require_regular",
    "duplication_residual",
]

_THETA_TERM_CAP = 400


class DomainError(ValueError):
    """Raised when an evaluation request leaves the supported domain."""


class PoleProximityError(DomainError):
    """Raised when a point sits too close to a zero of ``s`` (hence to a
    pole of some quotient built from it)."""


class ConvergenceError(RuntimeError):
    """Raised when a series or product cannot reach the requested accuracy
    within the configured number of terms."""


class CaseKind(enum.Enum):
    """The four regimes of the building-block function ``s``."""

    RATIONAL = "I"
    TRIGONOMETRIC = "II"
    HYPERBOLIC = "III"
    ELLIPTIC = "IV"

    @classmethod
    def from_label(cls, label: str | "CaseKind") -> "CaseKind":
        """Accept ``I``/``II``/``III``/``IV`` (any case) or a member name."""
        if isinstance(label, cls):
            return label
        text = str(label).strip()
        for member in cls:
            if text.upper() == member.value or text.upper() == member.name.upper():
                return member
        raise DomainError(f"unknown case label {label!r}; expected I, II, III or IV")

    @property
    def label(self) -> str:
        return self.value


@dataclass(frozen=True)
class TruncationPolicy:
    """Knobs controlling series/product truncation and safety margins.

    Attributes
    ----------
    product_terms:
        Cap on the number of factors kept in infinite products (theta
        product, gamma-function products).  Raising it helps only when the
        relevant nome is close to 1.
    quadrature_points:
        Budget of Gauss-Legendre nodes for the hyperbolic gamma integral.
    quadrature_cutoff:
        Upper integration limit before the analytic tail correction.
    target_rel_err:
        Relative truncation target for adaptive series.
    pole_floor:
        Minimum allowed distance from the zero lattice of ``s``; points
        closer than this raise :class:`PoleProximityError` when checked.
    precision_dps:
        When set, scalar evaluations are carried out with ``mpmath`` at
        this many decimal digits instead of float64.
    """

    product_terms: int = 40
    quadrature_points: int = 200
    quadrature_cutoff: float = 40.0
    target_rel_err: float = 1e-13
    pole_floor: float = 0.05
    precision_dps: int | None = None

    def __post_init__(self) -> None:
        if self.product_terms < 1:
            raise DomainError("product_terms must be at least 1")
        if self.quadrature_points < 16:
            raise DomainError("quadrature_points must be at least 16")
        if not (self.quadrature_cutoff > 0):
            raise DomainError("quadrature_cutoff must be positive")
        if not (0 < self.target_rel_err < 1):
            raise DomainError("target_rel_err must lie in (0, 1)")
        if self.pole_floor < 0:
            raise DomainError("pole_floor must be non-negative")
        if self.precision_dps is not None and self.precision_dps < 15:
            raise DomainError("precision_dps below 15 digits is pointless")


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class CaseParams:
    """A concrete regime: the case kind plus its scale parameters.

    ``r`` is the trigonometric/elliptic frequency (cases II and IV) and
    ``a`` the hyperbolic/elliptic imaginary scale (cases III and IV).
    Parameters irrelevant to the chosen case are ignored but kept so that
    a single record can be passed around uniformly.
    """

    kind: CaseKind
    r: float = 1.0
    a: float = 1.0

    def __post_init__(self) -> None:
        kind = CaseKind.from_label(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in (CaseKind.TRIGONOMETRIC, CaseKind.ELLIPTIC) and not self.r > 0:
            raise DomainError(f"case {kind.label} needs r > 0, got r={self.r}")
        if kind in (CaseKind.HYPERBOLIC, CaseKind.ELLIPTIC) and not self.a > 0:
            raise DomainError(f"case {kind.label} needs a > 0, got a={self.a}")

    # -- lattice / half-period data -------------------------------------

    @property
    def rho(self) -> int:
        """Index of the last independent half-period (0, 1, 1, 3)."""
        return {
            CaseKind.RATIONAL: 0,
            CaseKind.TRIGONOMETRIC: 1,
            CaseKind.HYPERBOLIC: 1,
            CaseKind.ELLIPTIC: 3,
        }[self.kind]

    @property
    def omega(self) -> tuple[complex, ...]:
        """Half-periods ``omega_0 .. omega_rho`` (omega_0 is always 0)."""
        if self.kind is CaseKind.RATIONAL:
            return (0j,)
        if self.kind is CaseKind.TRIGONOMETRIC:
            return (0j, complex(math.pi / self.r))
        if self.kind is CaseKind.HYPERBOLIC:
            return (0j, 1j * self.a)
        w1 = complex(math.pi / self.r)
        w2 = 1j * self.a
        return (0j, w1, w2, -w1 - w2)

    @property
    def eps(self) -> tuple[int, ...]:
        """Sign picked up by ``s`` under translation by each half-period."""
        return (1, -1, -1, -1)[: self.rho + 1]

    @property
    def xi(self) -> tuple[int, ...]:
        """Exponential weight of each half-period translation (elliptic
        case only; zero wherever the translation is a plain sign flip)."""
        if self.kind is CaseKind.ELLIPTIC:
            return (0, 0, -1, 1)
        return (0,) * (self.rho + 1)

    @property
    def period_sum(self) -> complex:
        """Sum of the half-periods ``omega_0 + ... + omega_rho``."""
        return sum(self.omega, start=0j)

    @property
    def q(self) -> float:
        """Elliptic nome ``exp(-r a)``; zero outside the elliptic case."""
        if self.kind is CaseKind.ELLIPTIC:
            return math.exp(-self.r * self.a)
        return 0.0

    @property
    def zero_lattice_basis(self) -> tuple[complex, ...]:
        """Generators of the zero lattice of ``s`` (empty in case I)."""
        if self.kind is CaseKind.RATIONAL:
            return ()
        if self.kind is CaseKind.TRIGONOMETRIC:
            return (complex(math.pi / self.r),)
        if self.kind is CaseKind.HYPERBOLIC:
            return (1j * self.a,)
        return (complex(math.pi / self.r), 1j * self.a)

    # -- convenience ------------------------------------------------------

    def s(self, x, policy: TruncationPolicy = DEFAULT_POLICY):
        return s_eval(self, x, policy)

    def describe(self) -> str:
        bits = [f"case {self.kind.label} ({self.kind.name.lower()})"]
        if self.kind in (CaseKind.TRIGONOMETRIC, CaseKind.ELLIPTIC):
            bits.append(f"r={self.r:g}")
        if self.kind in (CaseKind.HYPERBOLIC, CaseKind.ELLIPTIC):
            bits.append(f"a={self.a:g}")
        if self.kind is CaseKind.ELLIPTIC:
            bits.append(f"q={self.q:.6g}")
        return ", ".join(bits)


def _as_complex_array(x) -> tuple[np.ndarray, bool]:
    """Coerce to a complex ndarray, remembering whether input was scalar."""
    arr = np.asarray(x)
    scalar = arr.ndim == 0
    return np.atleast_1d(arr).astype(np.complex128), scalar


def _restore(values: np.ndarray, scalar: bool):
    return complex(values[0]) if scalar else values


# ---------------------------------------------------------------------------
# theta function
# ---------------------------------------------------------------------------


def _nome_from(tau=None, q=None) -> complex:
    if (tau is None) == (q is None):
        raise DomainError("pass exactly one of tau or q")
    if q is None:
        q = cmath.exp(1j * cmath.pi * tau)
    q = complex(q)
    if not abs(q) < 1:
        raise DomainError(f"nome must satisfy |q| < 1, got |q|={abs(q):.6g}")
    if q == 0:
        raise DomainError("nome must be nonzero")
    return q


def theta_eval(z, tau=None, q=None, policy: TruncationPolicy = DEFAULT_POLICY):
    """Odd Jacobi theta function via its alternating sine series.

    Computes ``2 sum_{n>=0} (-1)^n q^{(n+1/2)^2} sin((2n+1) z)`` with the
    number of terms chosen adaptively from the tail bound
    ``|q|^{n(n+1)} exp(2 n |Im z|) < target_rel_err`` (the bound is relative
    to the first term).  Terms are assembled in exponential form so that
    large ``|Im z|`` cannot overflow before the nome decay kicks in.

    Parameters
    ----------
    z:
        Scalar or array argument.
    tau, q:
        Modular parameter or nome; exactly one must be given, with
        ``q = exp(i pi tau)`` and ``|q| < 1``.
    policy:
        Truncation control; only ``target_rel_err`` and ``precision_dps``
        are consulted here.
    """
    qq = _nome_from(tau=tau, q=q)
    if policy.precision_dps is not None:
        return _theta_eval_mp(z, qq, policy)

    zz, scalar = _as_complex_array(z)
    log_q = cmath.log(qq)  # principal branch fixes q**(1/4)
    decay = log_q.real  # = ln|q| < 0
    im_max = float(np.max(np.abs(zz.imag)))

    n_stop = None
    for n in range(1, _THETA_TERM_CAP + 1):
        if n * (n + 1) * decay + 2 * n * im_max < math.log(policy.target_rel_err):
            n_stop = n
            break
    if n_stop is None:
        raise ConvergenceError(
            "theta series tail still above target after "
            f"{_THETA_TERM_CAP} terms (|q|={abs(qq):.6g}, max|Im z|={im_max:.3g})"
        )

    peak = abs(log_q) / 4 + (2 * n_stop + 1) * im_max
    if peak > 650.0:
        raise DomainError(
            f"theta argument too deep in the strip: |Im z|={im_max:.3g} "
            "would overflow float64"
        )

    total = np.zeros_like(zz)
    for n in range(n_stop + 1):
        exponent = (n + 0.5) ** 2 * log_q
        # sin in exponential form, sharing the nome exponent
        term = (
            np.exp(exponent + 1j * (2 * n + 1) * zz)
            - np.exp(exponent - 1j * (2 * n + 1) * zz)
        ) / 2j
        if n % 2:
            total -= term
        else:
            total += term
    return _restore(2.0 * total, scalar)


def theta_product(z, tau=None, q=None, policy: TruncationPolicy = DEFAULT_POLICY):
    """Same odd theta function via its triple-product representation.

    ``2 q^{1/4} sin z prod_{n>=1} (1 - q^{2n}) (1 - 2 q^{2n} cos 2z + q^{4n})``.

    Kept as an independent implementation so the series form can be
    validated against it; quotient code elsewhere uses whichever is
    convenient.
    """
    qq = _nome_from(tau=tau, q=q)
    zz, scalar = _as_complex_array(z)

    if policy.precision_dps is not None:
        with mpmath.workdps(policy.precision_dps):
            qm = mpmath.mpmathify(complex(qq))
            out = []
            for val in zz.ravel():
                zm = mpmath.mpmathify(complex(val))
                prod = mpmath.mpf(1)
                for n in range(1, policy.product_terms + 1):
                    q2n = qm ** (2 * n)
                    prod *= (1 - q2n) * (1 - 2 * q2n * mpmath.cos(2 * zm) + q2n**2)
                out.append(2 * qm ** mpmath.mpf("0.25") * mpmath.sin(zm) * prod)
            vals = np.array([complex(v) for v in out]).reshape(zz.shape)
        return _restore(vals, scalar)

    im_max = float(np.max(np.abs(zz.imag)))
    cos_bound = 2.0 * math.exp(2 * im_max) + 1.0
    prod = np.ones_like(zz)
    converged = False
    for n in range(1, policy.product_terms + 1):
        q2n = qq ** (2 * n)
        prod *= (1 - q2n) * (1 - 2 * q2n * np.cos(2 * zz) + q2n * q2n)
        if abs(q2n) * (1.0 + cos_bound) < policy.target_rel_err:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"theta product not converged after {policy.product_terms} factors "
            f"(|q|={abs(qq):.6g}); raise product_terms"
        )
    q_quarter = np.exp(0.25 * cmath.log(qq))
    return _restore(2.0 * q_quarter * np.sin(zz) * prod, scalar)


def _theta_eval_mp(z, qq: complex, policy: TruncationPolicy):
    zz, scalar = _as_complex_array(z)
    with mpmath.workdps(policy.precision_dps):
        qm = mpmath.mpmathify(complex(qq))
        log_q = mpmath.log(qm)
        tol = mpmath.mpf(10) ** (-(policy.precision_dps - 2))
        out = []
        for val in zz.ravel():
            zm = mpmath.mpmathify(complex(val))
            im = abs(mpmath.im(zm))
            total = mpmath.mpc(0)
            for n in range(_THETA_TERM_CAP + 1):
                exponent = (n + mpmath.mpf(1) / 2) ** 2 * log_q
                term = (
                    mpmath.e ** (exponent + 1j * (2 * n + 1) * zm)
                    - mpmath.e ** (exponent - 1j * (2 * n + 1) * zm)
                ) / (2j)
                total += -term if n % 2 else term
                if n >= 1 and mpmath.re(n * (n + 1) * log_q) + 2 * n * im < mpmath.log(tol):
                    break
            else:
                raise ConvergenceError("theta series (mpmath) did not converge")
            out.append(2 * total)
        vals = np.array([complex(v) for v in out]).reshape(zz.shape)
    return _restore(vals, scalar)


# ---------------------------------------------------------------------------
# the building-block function s
# ---------------------------------------------------------------------------


def s_eval(case: CaseParams, x, policy: TruncationPolicy = DEFAULT_POLICY):
    """Evaluate the case's building-block function ``s`` at ``x``.

    Accepts scalars or arrays.  With ``policy.precision_dps`` set the
    computation runs in mpmath arithmetic (returned still as complex128
    unless the caller goes through :func:`s_eval_mp` directly).
    """
    if policy.precision_dps is not None:
        xx, scalar = _as_complex_array(x)
        vals = np.array(
            [complex(s_eval_mp(case, complex(v), policy.precision_dps)) for v in xx.ravel()]
        ).reshape(xx.shape)
        return _restore(vals, scalar)

    xx, scalar = _as_complex_array(x)
    kind = case.kind
    if kind is CaseKind.RATIONAL:
        vals = xx.copy()
    elif kind is CaseKind.TRIGONOMETRIC:
        vals = np.sin(case.r * xx) / case.r
    elif kind is CaseKind.HYPERBOLIC:
        vals = (case.a / math.pi) * np.sinh(math.pi * xx / case.a)
    else:
        scale = math.exp(case.r * case.a / 4) / case.r
        vals = scale * theta_eval(case.r * xx, q=case.q, policy=policy)
    return _restore(vals, scalar)


def s_eval_mp(case: CaseParams, x: complex, dps: int):
    """Scalar mpmath evaluation of ``s`` at ``dps`` decimal digits."""
    with mpmath.workdps(dps):
        xm = mpmath.mpmathify(complex(x))
        kind = case.kind
        if kind is CaseKind.RATIONAL:
            return xm
        if kind is CaseKind.TRIGONOMETRIC:
            return mpmath.sin(case.r * xm) / case.r
        if kind is CaseKind.HYPERBOLIC:
            return (case.a / mpmath.pi) * mpmath.sinh(mpmath.pi * xm / case.a)
        q = mpmath.e ** (-mpmath.mpf(case.r) * case.a)
        z = case.r * xm
        tol = mpmath.mpf(10) ** (-(dps + 5))
        total = mpmath.mpc(0)
        for n in range(_THETA_TERM_CAP + 1):
            term = (-1) ** n * q ** (n * (n + 1)) * mpmath.sin((2 * n + 1) * z)
            total += term
            if n >= 1 and q ** (n * (n + 1)) * mpmath.e ** (2 * n * abs(mpmath.im(z))) < tol:
                break
        else:
            raise ConvergenceError("elliptic s series (mpmath) did not converge")
        return 2 * total / case.r


def quasi_factor(case: CaseParams, x, nu: int, policy: TruncationPolicy = DEFAULT_POLICY):
    """Multiplier relating ``s(x + omega_nu)`` to ``s(x)``.

    Returns the factor ``eps_nu * exp(2 i r xi_nu (x + omega_nu / 2))`` so
    that ``s(x + omega_nu) == quasi_factor(...) * s(x)`` identically.  For
    the non-elliptic cases every ``xi_nu`` vanishes and the factor is the
    plain sign ``eps_nu``.
    """
    if not 0 <= nu <= case.rho:
        raise DomainError(f"half-period index {nu} out of range for case {case.kind.label}")
    eps = case.eps[nu]
    xi = case.xi[nu]
    if xi == 0:
        xx, scalar = _as_complex_array(x)
        return _restore(eps * np.ones_like(xx), scalar)
    xx, scalar = _as_complex_array(x)
    vals = eps * np.exp(2j * case.r * xi * (xx + case.omega[nu] / 2))
    return _restore(vals, scalar)


def lattice_distance(case: CaseParams, x) -> np.ndarray | float:
    """Distance from ``x`` to the zero lattice of ``s``.

    The lattice is spanned by the generators in ``zero_lattice_basis``
    (plus the origin); for case I it is just the origin.  The search window
    around the rounded coordinates is generous enough for any input.
    """
    xx, scalar = _as_complex_array(x)
    basis = case.zero_lattice_basis
    if not basis:
        dist = np.abs(xx)
        return float(dist[0]) if scalar else dist

    if len(basis) == 1:
        (w,) = basis
        if w.imag == 0:
            coord = xx.real / w.real
        else:
            coord = xx.imag / w.imag
        best = np.full(xx.shape, np.inf)
        base = np.round(coord)
        for dn in (-1, 0, 1):
            best = np.minimum(best, np.abs(xx - (base + dn) * w))
        return float(best[0]) if scalar else best

    w1, w2 = basis  # real period, imaginary period
    n1 = np.round(xx.real / w1.real)
    n2 = np.round(xx.imag / w2.imag)
    best = np.full(xx.shape, np.inf)
    for d1 in (-1, 0, 1):
        for d2 in (-1, 0, 1):
            cand = np.abs(xx - (n1 + d1) * w1 - (n2 + d2) * w2)
            best = np.minimum(best, cand)
    return float(best[0]) if scalar else best


def require_regular(case: CaseParams, x, policy: TruncationPolicy = DEFAULT_POLICY, what: str = "argument") -> None:
    """Raise :class:`PoleProximityError` if ``x`` is closer than the policy
    floor to a zero of ``s``."""
    dist = lattice_distance(case, x)
    floor = policy.pole_floor
    dmin = float(np.min(np.atleast_1d(dist)))
    if dmin < floor:
        raise PoleProximityError(
            f"{what} is within {dmin:.3g} of a zero of s (floor {floor:g}, "
            f"{case.describe()})"
        )


def duplication_residual(case: CaseParams, x, policy: TruncationPolicy = DEFAULT_POLICY):
    """Relative defect of the duplication rule at ``x``.

    The rule expresses ``s(2x)`` through the product of ``s(x - omega_nu/2)``
    over all half-periods, normalised by the constant ``s(-omega_nu/2)``
    factors for ``nu >= 1``:

        s(2x) = 2 * prod_{nu=0}^{rho} s(x - omega_nu/2)
                  / prod_{nu=1}^{rho} s(-omega_nu/2)

    Returns ``|lhs - rhs| / max(|lhs|, |rhs|)``.  Points where ``2x`` sits
    on the zero lattice are rejected since both sides vanish there.
    """
    xx, scalar = _as_complex_array(x)
    require_regular(case, 2 * xx, policy, what="duplication argument 2x")
    lhs = s_eval(case, 2 * xx, policy)
    num = np.ones_like(np.atleast_1d(lhs))
    for w in case.omega:
        num = num * np.atleast_1d(s_eval(case, xx - w / 2, policy))
    den = 1.0 + 0j
    for w in case.omega[1:]:
        den *= s_eval(case, -w / 2, policy)
    rhs = 2.0 * num / den
    lhs_arr = np.atleast_1d(lhs)
    resid = np.abs(lhs_arr - rhs) / np.maximum(np.abs(lhs_arr), np.abs(rhs))
    return _restore(resid.astype(np.complex128), scalar).real if scalar else resid
