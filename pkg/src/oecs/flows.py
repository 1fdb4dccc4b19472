"""Catalogue of closed-form test flows.

Every flow is returned as an :class:`~oecs.grid_field.AnalyticField` with an
exact gradient. Parameters are keyword arguments; ``bounds=(x0, x1, y0, y1)``
and ``n=(nx, ny)`` override the default analysis grid and
``translate=(cx, cy)`` returns a copy of the flow drifting at constant
velocity, ``v(x - c t, t) + c``.
"""

from __future__ import annotations

import numpy as np

from .errors import UnknownFlow
from .grid_field import AnalyticField, GridAxis


def _steady_saddle(rate=1.0):
    def vel(x, y, t):
        return rate * x, -rate * y

    def grad(x, y, t):
        return rate, 0.0, 0.0, -rate

    return vel, grad, (-2, 2, -2, 2)


def _rigid_rotation(omega=1.0):
    def vel(x, y, t):
        return -omega * y, omega * x

    def grad(x, y, t):
        return 0.0, -omega, omega, 0.0

    return vel, grad, (-2, 2, -2, 2)


def _simple_shear(rate=1.0):
    def vel(x, y, t):
        return rate * y, 0.0 * x

    def grad(x, y, t):
        return 0.0, rate, 0.0, 0.0

    return vel, grad, (-2, 2, -2, 2)


def _linear(matrix=((0.0, 0.0), (0.0, 0.0)), offset=(0.0, 0.0)):
    A = np.asarray(matrix, dtype=float)
    b = np.asarray(offset, dtype=float)

    def vel(x, y, t):
        return A[0, 0] * x + A[0, 1] * y + b[0], A[1, 0] * x + A[1, 1] * y + b[1]

    def grad(x, y, t):
        return A[0, 0], A[0, 1], A[1, 0], A[1, 1]

    return vel, grad, (-2, 2, -2, 2)


def _linear_strain(S0=((0.0, 0.0), (0.0, 0.0)), S1=((1.0, 0.0), (0.0, -1.0)),
                   S2=((0.0, 1.0), (1.0, 0.0))):
    """Quadratic velocity whose rate of strain is ``S0 + x S1 + y S2``.

    Linear symmetric tensor fields always satisfy the 2D compatibility
    condition, so such a velocity exists; its spin part is fixed by the
    choice of coefficients below.
    """
    S0, S1, S2 = (np.asarray(S, dtype=float) for S in (S0, S1, S2))
    p11, p12, p22 = S1[0, 0], S1[0, 1], S1[1, 1]
    q11, q12, q22 = S2[0, 0], S2[0, 1], S2[1, 1]
    a1, a2, a3 = p11 / 2, q11, q12 - p22 / 2
    b1, b2, b3 = p12 - q11 / 2, p22, q22 / 2

    def vel(x, y, t):
        u = S0[0, 0] * x + S0[0, 1] * y + a1 * x * x + a2 * x * y + a3 * y * y
        v = S0[0, 1] * x + S0[1, 1] * y + b1 * x * x + b2 * x * y + b3 * y * y
        return u, v

    def grad(x, y, t):
        return (S0[0, 0] + 2 * a1 * x + a2 * y, S0[0, 1] + a2 * x + 2 * a3 * y,
                S0[0, 1] + 2 * b1 * x + b2 * y, S0[1, 1] + b2 * x + 2 * b3 * y)

    return vel, grad, (-1, 1, -1, 1)


def _cellular(amplitude=1.0):
    A = amplitude

    def vel(x, y, t):
        return A * np.sin(x) * np.cos(y), -A * np.cos(x) * np.sin(y)

    def grad(x, y, t):
        cc = np.cos(x) * np.cos(y)
        ss = np.sin(x) * np.sin(y)
        return A * cc, -A * ss, A * ss, -A * cc

    return vel, grad, (-np.pi, np.pi, -np.pi, np.pi)


def _perturbed_jet(eps=0.1):
    def vel(x, y, t):
        return (1 + eps * np.sin(x)) / np.cosh(y) ** 2, 0.0 * x

    def grad(x, y, t):
        sech2 = 1 / np.cosh(y) ** 2
        return (eps * np.cos(x) * sech2,
                -2 * sech2 * np.tanh(y) * (1 + eps * np.sin(x)), 0.0, 0.0)

    return vel, grad, (-np.pi, 3 * np.pi, -1.5, 1.5)


def _wedge_trisector(scale=1.0):
    """Cubic incompressible flow with a trisector at (-1, 0), a wedge at (1, 0).

    Its strain is ``diag(w, -w) + y (1 - x / 2) [[0, 1], [1, 0]]`` with
    ``w = (x^2 - 1) / 2``; the x-axis between the two is an e1-line.
    """
    k = scale

    def vel(x, y, t):
        return k * (x ** 3 / 6 - x / 2 + y * y), -k * (x * x - 1) * y / 2

    def grad(x, y, t):
        return k * (x * x - 1) / 2, 2 * k * y, -k * x * y, -k * (x * x - 1) / 2

    return vel, grad, (-2, 2, -1.5, 1.5)


# Lamb--Oseen angular velocity: Omega(rho) = (omega0 / 2) f(rho) with
# f(rho) = (1 - exp(-rho)) / rho and rho = r^2 / a^2.

def _lo_f(rho, em1):
    """``f(rho)`` given ``em1 = expm1(-rho)``."""
    small = rho < 1e-6
    if not np.any(small):
        return -em1 / rho
    r = np.where(small, 1.0, rho)
    return np.where(small, 1 - rho / 2 + rho * rho / 6, -em1 / r)


def _lo_df(rho, em1):
    small = rho < 1e-3
    if not np.any(small):
        return (rho * (em1 + 1) + em1) / (rho * rho)
    r = np.where(small, 1.0, rho)
    exact = (r * np.exp(-r) + np.expm1(-r)) / (r * r)
    return np.where(small, -0.5 + rho / 3 - rho * rho / 8, exact)


def _swirl(x, y, omega0, core):
    """Velocity and gradient entries of a Lamb--Oseen vortex at the origin."""
    rho = (x * x + y * y) / core ** 2
    em1 = np.expm1(-rho)
    om = 0.5 * omega0 * _lo_f(rho, em1)
    dom = omega0 * _lo_df(rho, em1) / core ** 2  # dOmega/dx_j = dom x_j
    u, v = -om * y, om * x
    return (u, v), (-dom * x * y, -om - dom * y * y, om + dom * x * x, dom * x * y)


def _power_vortex(amplitude, exponent):
    a, n = amplitude, exponent

    def vel(x, y, t):
        r = np.hypot(x, y)
        om = a * np.where(r > 0, r, 1.0) ** (n - 1)
        om = np.where(r > 0, om, a if n == 1 else 0.0)
        return -om * y, om * x

    def grad(x, y, t):
        r = np.hypot(x, y)
        rs = np.where(r > 0, r, 1.0)
        om = np.where(r > 0, a * rs ** (n - 1), a if n == 1 else 0.0)
        # dOmega/dx_j = a (n - 1) r^(n - 3) x_j
        c = np.where(r > 0, a * (n - 1) * rs ** (n - 3), 0.0)
        return (-c * x * y, -om - c * y * y, om + c * x * x, c * x * y)

    return vel, grad


def _axisymmetric_vortex(profile="power", amplitude=1.0, exponent=1.0,
                         omega0=1.0, core=1.0):
    """Vortex with azimuthal speed ``amplitude * r**exponent`` or Lamb--Oseen."""
    if profile == "power":
        vel, grad = _power_vortex(amplitude, exponent)
    elif profile in ("gaussian", "lamb_oseen"):
        def vel(x, y, t):
            return _swirl(x, y, omega0, core)[0]

        def grad(x, y, t):
            return _swirl(x, y, omega0, core)[1]
    else:
        raise UnknownFlow(f"unknown vortex profile {profile!r}")
    return vel, grad, (-2, 2, -2, 2)


def _perturbed_vortex(omega0=40.0, core=1.0, beta=2.0, eps=1.0,
                      satellite=(0.0, 7.0), satellite_omega=1.5,
                      satellite_core=0.5):
    """Lamb--Oseen vortex in a weak uniform strain ``eps (x, -y)``.

    Two additions make the fixture useful for limit-cycle work:

    * a weak radial component ``beta (1 - rho) exp(-rho) (x, y)``. On the
      circle of radius ``r`` the tangential stretch rate is then exactly
      ``beta (1 - rho) exp(-rho)``, so each circle is an isolated closed orbit
      of the stretch-rate direction field at that value. Without it every
      incompressible perturbation of an axisymmetric vortex leaves the
      near-circular orbits degenerate.
    * an optional weak satellite eddy (``satellite_omega = 0`` removes it)
      whose centre is a local Okubo--Weiss minimum sitting in strain strong
      enough to stretch material rather than trap it.
    """
    cx, cy = satellite

    def vel(x, y, t):
        (u, v), _ = _swirl(x, y, omega0, core)
        rho = (x * x + y * y) / core ** 2
        g = beta * (1 - rho) * np.exp(-rho)
        u = u + g * x + eps * x
        v = v + g * y - eps * y
        if satellite_omega:
            (us, vs), _ = _swirl(x - cx, y - cy, satellite_omega, satellite_core)
            u, v = u + us, v + vs
        return u, v

    def grad(x, y, t):
        _, (a, b, c, d) = _swirl(x, y, omega0, core)
        rho = (x * x + y * y) / core ** 2
        e = np.exp(-rho)
        g = beta * (1 - rho) * e
        dg = beta * (rho - 2) * e * 2 / core ** 2  # dg/dx_j = dg x_j
        a = a + g + dg * x * x + eps
        b = b + dg * x * y
        c = c + dg * x * y
        d = d + g + dg * y * y - eps
        if satellite_omega:
            _, (sa, sb, sc, sd) = _swirl(x - cx, y - cy, satellite_omega,
                                         satellite_core)
            a, b, c, d = a + sa, b + sb, c + sc, d + sd
        return a, b, c, d

    return vel, grad, (-5, 5, -5, 10)


_CATALOGUE = {
    "steady_saddle": _steady_saddle,
    "rigid_rotation": _rigid_rotation,
    "simple_shear": _simple_shear,
    "linear": _linear,
    "linear_strain": _linear_strain,
    "cellular": _cellular,
    "perturbed_jet": _perturbed_jet,
    "wedge_trisector": _wedge_trisector,
    "axisymmetric_vortex": _axisymmetric_vortex,
    "perturbed_vortex": _perturbed_vortex,
}

FLOW_NAMES = tuple(sorted(_CATALOGUE))

# Default analysis grid nodes per unit length (clipped to [41, 321]).
_DEFAULT_RESOLUTION = 20
_RESOLUTION = {"perturbed_vortex": 10}


def _translated(vel, grad, c):
    cx, cy = c

    def tvel(x, y, t):
        u, v = vel(x - cx * t, y - cy * t, t)
        return u + cx, v + cy

    def tgrad(x, y, t):
        return grad(x - cx * t, y - cy * t, t)

    return tvel, tgrad


def analytic_flow(name, bounds=None, n=None, translate=None, **params):
    """Build a named closed-form flow.

    Parameters
    ----------
    name : str
        One of :data:`FLOW_NAMES`.
    bounds : tuple, optional
        ``(x0, x1, y0, y1)`` analysis domain; each flow has a default.
    n : tuple of int, optional
        ``(nx, ny)`` analysis grid nodes.
    translate : tuple, optional
        Constant drift velocity ``(cx, cy)`` of a translating copy.
    **params
        Flow-specific parameters.

    Raises
    ------
    UnknownFlow
        If ``name`` is not in the catalogue or a parameter is not accepted.
    """
    try:
        builder = _CATALOGUE[name]
    except KeyError:
        raise UnknownFlow(f"unknown flow {name!r}; choose from "
                          f"{', '.join(FLOW_NAMES)}") from None
    try:
        vel, grad, default_bounds = builder(**params)
    except TypeError as exc:
        raise UnknownFlow(f"bad parameters for flow {name!r}: {exc}") from None
    x0, x1, y0, y1 = bounds if bounds is not None else default_bounds
    if n is None:
        res = _RESOLUTION.get(name, _DEFAULT_RESOLUTION)
        n = tuple(int(np.clip(round((hi - lo) * res) + 1, 41, 321))
                  for lo, hi in ((x0, x1), (y0, y1)))
    record = dict(params)
    if translate is not None:
        vel, grad = _translated(vel, grad, translate)
        record["translate"] = tuple(translate)
    return AnalyticField(name, record, vel, grad,
                         GridAxis.from_bounds(x0, x1, n[0]),
                         GridAxis.from_bounds(y0, y1, n[1]))
