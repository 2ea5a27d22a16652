"""Independent high-precision oracles for the unit tests.

Everything here is computed through mpmath with explicit tail bounds, not
through the package's own truncation machinery, so agreement is evidence
rather than tautology.  The frozen literals below were produced by these
oracles at 30+ significant digits before the corresponding package code
was written; tests compare against the literals directly where that is
cheaper than re-running the oracle.
"""

from __future__ import annotations

import mpmath as mp

# frozen reference values (30+ digits, parameters in the names)

# s, elliptic case, r=1, a=2, at x = 0.37 + 0.11i
S_ELLIPTIC_R1_A2_X037_011 = mp.mpc(
    "0.69301107346921759564584229936188",
    "0.20005064689952695727912252958369",
)

# primitive gamma, hyperbolic case, a=pi, alpha=1, at x = 0.2
G1_HYPERBOLIC_API_AL1_X02 = mp.mpc(
    "0.6274173691816741189570855389309",
    "0.14710358260253586354894612101606",
)

# primitive gamma, elliptic case, r=1, a=2, alpha=0.7, at x = 0.3 + 0.1i
G1_ELLIPTIC_R1_A2_AL07 = mp.mpc(
    "1.3868279693014650156630564252799",
    "0.56122574888245464761340636285753",
)

# step constant, elliptic case, r=1, a=2 (equals -i / prod(1 - e^{-4n}))
FE_CONSTANT_ELLIPTIC_R1_A2 = -1.0190055743114699j


def s_oracle(label: str, x, r=1.0, a=1.0, dps: int = 40) -> complex:
    """Building-block function via mpmath (theta series for the elliptic
    case through mp.jtheta, which uses its own acceleration)."""
    with mp.workdps(dps):
        z = mp.mpc(x)
        if label == "I":
            return complex(z)
        if label == "II":
            return complex(mp.sin(r * z) / r)
        if label == "III":
            return complex((a / mp.pi) * mp.sinh(mp.pi * z / a))
        q = mp.e ** (-r * a)
        return complex(mp.e ** (r * a / 4) * mp.jtheta(1, r * z, q) / r)


def theta_oracle(z, q, dps: int = 40) -> complex:
    with mp.workdps(dps):
        return complex(mp.jtheta(1, mp.mpc(z), mp.mpf(q)))


def g1_rational_oracle(alpha, x, dps: int = 40) -> complex:
    """Euler gamma reduction of the rational-case primitive."""
    with mp.workdps(dps):
        return complex(mp.gamma(mp.mpf(1) / 2 + mp.mpc(x) / (1j * mp.mpc(alpha))))


def g1_trigonometric_oracle(alpha, x, r=1.0, dps: int = 40) -> complex:
    """Gaussian prefactor times the single q-product, summed until the
    tail term drops below 10^-(dps+5)."""
    with mp.workdps(dps):
        z = mp.mpc(x)
        al = mp.mpc(alpha)
        pref = mp.e ** (-r * z * z / (2 * al))
        prod = mp.mpc(1)
        phase = mp.e ** (2j * r * z)
        n = 1
        while True:
            term = mp.e ** (-r * al * (2 * n - 1)) * phase
            prod *= 1 - term
            if abs(term) < mp.mpf(10) ** (-(dps + 5)):
                break
            n += 1
            if n > 100_000:
                raise RuntimeError("trigonometric oracle did not converge")
        return complex(pref / prod)


def g1_hyperbolic_oracle(alpha, x, a=1.0, dps: int = 50) -> complex:
    """Adaptive-quadrature evaluation of the hyperbolic integral at the
    shifted argument w = x - ia/2.

    The integrand has a removable singularity at the origin; evaluating
    close to it cancels catastrophically, so the stretch [0, y0] uses the
    leading Taylor coefficient (the error is O(y0^3)).  The tail decays
    like exp(-(a + Re alpha - 2 |Im w|) y), so keep Im x small and
    Re alpha comfortably positive.
    """
    with mp.workdps(dps):
        am = mp.mpf(a)
        w = mp.mpc(x) - 0.5j * am
        al = mp.mpc(alpha)

        def f(y):
            return (
                mp.sin(2 * w * y) / (2 * mp.sinh(am * y) * mp.sinh(al * y))
                - w / (am * al * y)
            ) / y

        y0 = mp.mpf("1e-6")
        c0 = -(w / (am * al)) * (2 * w * w / 3 + (am * am + al * al) / 6)
        head = c0 * y0
        integral = head + mp.quad(f, [y0, 1, 5, 20, 80, 320, mp.inf])
        return complex(mp.e ** (1j * integral))


def g1_elliptic_oracle(alpha, x, r=1.0, a=2.0, dps: int = 40) -> complex:
    """Gaussian prefactor times the double product at x - ia/2, with both
    product axes truncated by an explicit tail bound."""
    with mp.workdps(dps):
        z = mp.mpc(x)
        al = mp.mpc(alpha)
        w = z - 0.5j * a
        tiny = mp.mpf(10) ** (-(dps + 5))
        grow = mp.e ** (2 * r * abs(mp.im(w)))

        def axis_count(step: mp.mpf) -> int:
            n = 1
            while mp.e ** (-step * (2 * n - 1)) * grow > tiny:
                n += 1
                if n > 20_000:
                    raise RuntimeError("elliptic oracle did not converge")
            return n

        n_count = axis_count(mp.mpf(r) * a)
        m_count = axis_count(mp.mpf(r) * mp.re(al))
        e_plus = mp.e ** (2j * r * w)
        e_minus = mp.e ** (-2j * r * w)
        prod = mp.mpc(1)
        for n in range(1, n_count + 1):
            for m in range(1, m_count + 1):
                u = mp.e ** (-r * a * (2 * n - 1) - r * al * (2 * m - 1))
                prod *= (1 - u * e_minus) / (1 - u * e_plus)
        pref = mp.e ** (-r * z * z / (2 * al))
        return complex(pref * prod)


def fe_constant_elliptic_oracle(r=1.0, a=2.0, dps: int = 40) -> complex:
    with mp.workdps(dps):
        prod = mp.mpc(1)
        n = 1
        while True:
            term = mp.e ** (-2 * r * n * a)
            prod *= 1 - term
            if term < mp.mpf(10) ** (-(dps + 5)):
                break
            n += 1
        return complex(-1j * r / prod)


def psi_sq_rational_unit_oracle(x, beta, dps: int = 40) -> complex:
    """Square of the one-coordinate ground-state factor in the rational
    case with all couplings zero and unit mass, reduced to Euler gammas:
    with z = 2ix/beta it equals G(1-z) G(1+z) / [G(1-z/2) G(1+z/2)]^2."""
    with mp.workdps(dps):
        z = 2j * mp.mpc(x) / mp.mpf(beta)
        num = mp.gamma(1 - z) * mp.gamma(1 + z)
        den = (mp.gamma(1 - z / 2) * mp.gamma(1 + z / 2)) ** 2
        return complex(num / den)
