"""Independent reference computations for the assertions.

Nothing in this module may call into the package under test: values come from
mpmath/scipy/stdlib routines or from hand-derived closed forms, so agreement
is evidence rather than tautology.
"""

import math

import mpmath as mp
import numpy as np


def ml_reference(kappa, x, dps=120, max_terms=6000):
    """High-precision Taylor sum of the one-parameter Mittag-Leffler series."""
    with mp.workdps(dps):
        total = mp.mpf(0)
        j = 0
        while j < max_terms:
            term = mp.mpf(x) ** j / mp.gamma(kappa * j + 1)
            total += term
            if j > 5 and abs(term) < mp.mpf(10) ** (-dps + 20) * max(1, abs(total)):
                return float(total)
            j += 1
    raise ArithmeticError("reference series did not settle")


def erfc_series(x, terms=80):
    # Taylor series of erf about zero; plenty of accuracy for |x| <= 2
    acc, term = 0.0, float(x)
    for n in range(terms):
        acc += term / (2 * n + 1)
        term *= -x * x / (n + 1)
    return 1.0 - 2.0 / math.sqrt(math.pi) * acc


def singular_moment(kappa, t, power):
    """integral_0^t (t-s)^(kappa-1) s^power ds, closed form for power in {0, 1}."""
    if power == 0:
        return t**kappa / kappa
    if power == 1:
        return t ** (kappa + 1.0) / (kappa * (kappa + 1.0))
    raise ValueError("only the first two moments are tabulated")


def rod_inner_bisection(stiffness, functional, g, lo=-20.0, hi=20.0, steps=200):
    """Inner equilibrium by eliminating the interior displacements and bisecting
    on the end value; shares no code with the damped iteration."""
    g = np.asarray(g, dtype=float)
    e_end = np.zeros(stiffness.shape[0])
    e_end[-1] = 1.0

    def shoot(w):
        theta = float(functional.subgradient_selection(0.0, np.array([w]))[0])
        y = np.linalg.solve(stiffness, g - theta * e_end)
        return y, float(y[-1]) - w

    _, f_lo = shoot(lo)
    _, f_hi = shoot(hi)
    if (f_lo > 0.0) == (f_hi > 0.0):
        raise ValueError("no sign change on the bisection bracket")
    a, fa = lo, f_lo
    b = hi
    for _ in range(steps):
        mid = 0.5 * (a + b)
        _, fm = shoot(mid)
        if (fa > 0.0) == (fm > 0.0):
            a, fa = mid, fm
        else:
            b = mid
    y, _ = shoot(0.5 * (a + b))
    return y
