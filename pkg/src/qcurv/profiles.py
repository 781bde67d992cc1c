"""Radial curvature profiles Q(r).

Every profile evaluates on arrays of radii and knows whether it is
certified to satisfy Q <= 1 or Q >= 1 everywhere, which decides the
Bol verdicts.  ``far_power`` is the growth exponent of Q at infinity used
by the analytic tail of radial integrals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CutoffConfig, DomainError, ramp

_NO_CUTOFFS = CutoffConfig()


class QProfile:
    depends_on_u0 = False
    breakpoints: tuple = ()

    def base(self, r, u0, cutoffs):
        raise NotImplementedError

    def __call__(self, r, u0=0.0, cutoffs=None):
        r = np.asarray(r, dtype=float)
        q = self.base(r, u0, cutoffs or _NO_CUTOFFS)
        if cutoffs is not None and cutoffs.eps > 0:
            q = q * (1.0 - ramp(cutoffs.eps * r))
        return q

    @property
    def ge_one(self):
        return False

    @property
    def le_one(self):
        return False

    @property
    def far_power(self):
        return 0.0

    def describe(self):
        return {"kind": type(self).__name__, **self.__dict__}


@dataclass(frozen=True)
class Constant(QProfile):
    c: float = 1.0

    def base(self, r, u0, cutoffs):
        return np.full(r.shape, float(self.c))

    @property
    def ge_one(self):
        return self.c >= 1.0

    @property
    def le_one(self):
        return self.c <= 1.0


@dataclass(frozen=True)
class Decay:
    """Integrable radial perturbation amplitude * g(r / scale).

    ``shape`` is one of gaussian (e^(-x^2)), exponential (e^(-x)) or
    algebraic (1 / (1 + x^power)).
    """

    amplitude: float
    shape: str = "gaussian"
    scale: float = 1.0
    power: float = 4.0

    def __post_init__(self):
        if self.shape not in ("gaussian", "exponential", "algebraic"):
            raise DomainError(f"unknown decay shape {self.shape!r}")
        if self.scale <= 0:
            raise DomainError("decay scale must be positive")

    def __call__(self, r):
        x = np.asarray(r, dtype=float) / self.scale
        if self.shape == "gaussian":
            g = np.exp(-x * x)
        elif self.shape == "exponential":
            g = np.exp(-x)
        else:
            g = 1.0 / (1.0 + x ** self.power)
        return self.amplitude * g


@dataclass(frozen=True)
class OnePlusL1(QProfile):
    """Q = 1 + f with f an integrable decay."""

    f: Decay

    def base(self, r, u0, cutoffs):
        return 1.0 + self.f(r)

    @property
    def ge_one(self):
        return self.f.amplitude >= 0

    @property
    def le_one(self):
        return self.f.amplitude <= 0


@dataclass(frozen=True)
class PowerSum(QProfile):
    """Q = c0 + c1 r^p (+ an optional integrable decay)."""

    c0: float
    c1: float
    p: float
    decay: Decay | None = None

    def base(self, r, u0, cutoffs):
        q = self.c0 + self.c1 * r ** self.p
        if self.decay is not None:
            q = q + self.decay(r)
        return q

    @property
    def ge_one(self):
        amp = 0.0 if self.decay is None else self.decay.amplitude
        return self.c0 >= 1.0 and self.c1 >= 0.0 and amp >= 0.0

    @property
    def le_one(self):
        amp = 0.0 if self.decay is None else self.decay.amplitude
        grows = self.c1 > 0 and self.p > 0
        return not grows and self.c0 + max(self.c1, 0.0) <= 1.0 and amp <= 0.0

    @property
    def far_power(self):
        return float(self.p) if self.c1 != 0 and self.p > 0 else 0.0


@dataclass(frozen=True)
class InversePower(QProfile):
    """Q = 1 + r^(-n alpha): turns |x|^(n alpha) Q into 1 + |x|^(n alpha)."""

    alpha: float
    n: int = 2

    def base(self, r, u0, cutoffs):
        return 1.0 + r ** (-self.n * self.alpha)

    @property
    def ge_one(self):
        return True

    @property
    def far_power(self):
        return max(0.0, -self.n * self.alpha)


@dataclass(frozen=True)
class Tent(QProfile):
    """(r - 1)(2 - r) on 1 < r < 2, zero elsewhere."""

    breakpoints = (1.0, 2.0)

    def base(self, r, u0, cutoffs):
        return np.where((r > 1.0) & (r < 2.0), (r - 1.0) * (2.0 - r), 0.0)

    @property
    def le_one(self):
        return True


@dataclass(frozen=True)
class PiecewiseLinearFamily(QProfile):
    """1 on B_1 and outside B_2, a tent of height k + 1 peaking at r = 3/2."""

    k: float
    breakpoints = (1.0, 1.5, 2.0)

    def base(self, r, u0, cutoffs):
        rising = 2.0 * self.k * (r - 1.0) + 1.0
        falling = -2.0 * self.k * (r - 2.0) + 1.0
        q = np.where(r < 1.5, rising, falling)
        return np.where((r < 1.0) | (r >= 2.0), 1.0, q)

    @property
    def ge_one(self):
        return self.k >= 0

    @property
    def le_one(self):
        return self.k <= 0


@dataclass(frozen=True)
class SelfScaled(QProfile):
    """1 + e^(-n p u(0)) r^(n alpha) phi_delta(r), with p and delta from the cut-offs."""

    alpha: float
    n: int = 2
    depends_on_u0 = True

    def base(self, r, u0, cutoffs):
        weight = r ** (self.n * self.alpha)
        if cutoffs.delta > 0:
            weight = weight * ramp(r / cutoffs.delta)
        return 1.0 + math.exp(-self.n * cutoffs.p * u0) * weight

    @property
    def ge_one(self):
        return True

    @property
    def far_power(self):
        return max(0.0, self.n * self.alpha)


@dataclass(frozen=True, eq=False)
class Tabulated(QProfile):
    """Piecewise-linear interpolation of samples, constant beyond the ends."""

    radii: tuple
    samples: tuple

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.size < 2 or r.size != len(self.samples) or np.any(np.diff(r) <= 0):
            raise DomainError("tabulated profile needs >= 2 strictly increasing radii")

    @property
    def breakpoints(self):
        return tuple(float(x) for x in self.radii if x > 0)

    def base(self, r, u0, cutoffs):
        return np.interp(r, self.radii, self.samples)

    @property
    def ge_one(self):
        return min(self.samples) >= 1.0

    @property
    def le_one(self):
        return max(self.samples) <= 1.0

    def describe(self):
        return {"kind": "Tabulated", "radii": list(self.radii), "samples": list(self.samples)}


def eval_q(profile, r, u0=0.0, cutoffs=None):
    """Effective curvature factor at a single radius r > 0."""
    if not r > 0:
        raise DomainError(f"curvature profiles are evaluated at r > 0, got r={r}")
    return float(profile(np.array([r]), u0, cutoffs)[0])
