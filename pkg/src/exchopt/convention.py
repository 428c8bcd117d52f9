"""Log-linear strike conventions and the optimal mixing coefficient a*.

A convention maps the two log spots (x, y) to the log strikes whose implied
vols feed the Margrabe substitution:

    k_X = (1 - a) x + a y,      k_Y = a x + (1 - a) y.

a = 0 reads each leg at its own money; a = 1 swaps the spots (the look-up
heuristic).  The unique first-order-optimal a* is available in closed form
from model limits or from measured ATM levels and skews.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConventionError, DomainError, InputError
from .heston import SmileObservables

__all__ = [
    "LinearConvention",
    "ModelLimits",
    "strikes",
    "a_star_parametric",
    "a_star_observables",
    "bound_a",
    "linear_convention_residual",
    "general_residual",
    "A_BOUNDS",
]

A_BOUNDS = (-1.0, 2.0)
_DENOM_TOL = 1e-12


@dataclass(frozen=True)
class LinearConvention:
    """A log-linear strike rule with mixing coefficient a."""

    a: float

    def __post_init__(self):
        if not np.isfinite(self.a):
            raise InputError(f"a must be finite, got {self.a}")

    def strikes(self, x: float, y: float) -> tuple[float, float]:
        return strikes(self.a, x, y)


@dataclass(frozen=True)
class ModelLimits:
    """Short-time model inputs of the parametric optimum: scaling factors and
    the three correlations.  Joint PSD of the correlation structure is owned
    by the simulation module, not enforced here."""

    lam_x: float
    lam_y: float
    rho: float
    rho_x: float
    rho_y: float

    def __post_init__(self):
        if not (np.isfinite(self.lam_x) and self.lam_x > 0):
            raise InputError(f"lam_x must be > 0, got {self.lam_x}")
        if not (np.isfinite(self.lam_y) and self.lam_y > 0):
            raise InputError(f"lam_y must be > 0, got {self.lam_y}")
        for name in ("rho", "rho_x", "rho_y"):
            v = getattr(self, name)
            if not (np.isfinite(v) and abs(v) <= 1.0):
                raise InputError(f"{name} must lie in [-1, 1], got {v}")


def strikes(a: float, x: float, y: float) -> tuple[float, float]:
    """(k_X, k_Y) = ((1-a) x + a y, a x + (1-a) y).

    Evaluated as x + a (y - x) so that both strikes equal x *exactly* (not just
    to rounding) when x == y; downstream coincidence checks rely on that.
    """
    if not (np.isfinite(a) and np.isfinite(x) and np.isfinite(y)):
        raise InputError(f"non-finite input: a={a}, x={x}, y={y}")
    return x + a * (y - x), y + a * (x - y)


def _a_star(numer: float, denom: float) -> float:
    if abs(denom) < _DENOM_TOL:
        raise DegenerateConventionError(
            f"convention denominator {denom:.3e} below {_DENOM_TOL}: "
            "no unique first-order optimum"
        )
    return numer / denom


def a_star_parametric(limits: ModelLimits) -> float:
    """a* = (rho_X lam_X - rho_Y lam_Y) /
    (rho_X (lam_X - rho lam_Y) - rho_Y (lam_Y - rho lam_X))."""
    lx, ly = limits.lam_x, limits.lam_y
    numer = limits.rho_x * lx - limits.rho_y * ly
    denom = limits.rho_x * (lx - limits.rho * ly) - limits.rho_y * (ly - limits.rho * lx)
    return _a_star(numer, denom)


def a_star_observables(obs: SmileObservables, rho: float) -> float:
    """a* from measured ATM levels I_i and skews S_i:

        a* = (S_X I_X - S_Y I_Y) /
             (S_X (I_X - rho I_Y) - S_Y (I_Y - rho I_X)).

    Reduces to a_star_parametric when the observables sit at their short-time
    limits I_i = lam_i sigma0, S_Y / S_X = rho_Y / rho_X.
    """
    if not (np.isfinite(rho) and abs(rho) <= 1.0):
        raise InputError(f"rho must lie in [-1, 1], got {rho}")
    ix, iy = obs.level_x, obs.level_y
    sx, sy = obs.skew_x, obs.skew_y
    numer = sx * ix - sy * iy
    denom = sx * (ix - rho * iy) - sy * (iy - rho * ix)
    return _a_star(numer, denom)


def bound_a(a: float, bounds: tuple[float, float] = A_BOUNDS) -> float:
    """Clamp a into [-1, 2] (extreme a pick vols from unquotable strikes)."""
    if not np.isfinite(a):
        raise InputError(f"a must be finite, got {a}")
    return min(max(a, bounds[0]), bounds[1])


def linear_convention_residual(a: float, limits: ModelLimits) -> float:
    """First-order optimality defect of the log-linear convention:

        a [rho_X (lam_X - rho lam_Y) - rho_Y (lam_Y - rho lam_X)]
          - (lam_X rho_X - rho_Y lam_Y),

    zero exactly at a = a_star_parametric.
    """
    if not np.isfinite(a):
        raise InputError(f"a must be finite, got {a}")
    lx, ly = limits.lam_x, limits.lam_y
    denom = limits.rho_x * (lx - limits.rho * ly) - limits.rho_y * (ly - limits.rho * lx)
    return a * denom - (lx * limits.rho_x - limits.rho_y * ly)


def general_residual(
    sigma0_x: float,
    sigma0_y: float,
    dplus_x: float,
    dplus_y: float,
    rho: float,
    rho_x: float,
    rho_y: float,
    dkx_dy: float,
    dky_dy: float,
) -> float:
    """First-order condition defect for an arbitrary strike convention.

    Left side: short-time slope of the exact exchange vol in the second log
    spot,

        (rho_X s_X - rho_Y s_Y) / (2 st^3)
            * [D_X (s_X - rho s_Y) + D_Y (s_Y - rho s_X)],

    with s_i the spot vols, D_i the short-time volatility response constants
    and st = sqrt(s_X^2 + s_Y^2 - 2 rho s_X s_Y).  Right side: same slope for
    the convention vol, with the limit substitutions skew_i =
    rho_i D_i / (2 s_i) and dI_Y/dy = -dI_Y/dz at the money.  Returns
    left - right; a convention is first-order optimal iff this vanishes.
    """
    for name, v in (
        ("sigma0_x", sigma0_x), ("sigma0_y", sigma0_y),
        ("dplus_x", dplus_x), ("dplus_y", dplus_y),
        ("dkx_dy", dkx_dy), ("dky_dy", dky_dy),
    ):
        if not np.isfinite(v):
            raise InputError(f"non-finite {name}={v}")
    for name, v in (("rho", rho), ("rho_x", rho_x), ("rho_y", rho_y)):
        if not (np.isfinite(v) and abs(v) <= 1.0):
            raise InputError(f"{name} must lie in [-1, 1], got {v}")
    st2 = sigma0_x**2 + sigma0_y**2 - 2.0 * rho * sigma0_x * sigma0_y
    if st2 <= 0.0:
        raise DomainError(f"degenerate model: sigma_tilde0^2 = {st2} <= 0")
    st = math.sqrt(st2)
    left = (
        (rho_x * sigma0_x - rho_y * sigma0_y)
        / (2.0 * st**3)
        * (dplus_x * (sigma0_x - rho * sigma0_y) + dplus_y * (sigma0_y - rho * sigma0_x))
    )
    skew_x = rho_x * dplus_x / (2.0 * sigma0_x)
    skew_y = rho_y * dplus_y / (2.0 * sigma0_y)
    # dI_Y/dz dk_Y/dy + dI_Y/dy collapses to skew_y (dk_Y/dy - 1) at the money
    right = (
        (sigma0_x - rho * sigma0_y) * skew_x * dkx_dy
        + (sigma0_y - rho * sigma0_x) * skew_y * (dky_dy - 1.0)
    ) / st
    return left - right
