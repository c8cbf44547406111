"""Catalog of discrepancy functions and their derivatives.

Contains the classic robust psi-families (sign, Huber, truncated sign,
bisquare) scaled to range [-1, 1], their one-sided rectified versions
max{0, psi}, the 0-1 indicator, and the sigmoid families used to anneal
towards the indicator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .model import ValidationError

# peak of t(1-t^2)^2 on [0, 1], attained at t = 1/sqrt(5)
_BISQUARE_PEAK = 16.0 / (25.0 * math.sqrt(5.0))

FAMILIES = (
    "sign",
    "rectified_sign",
    "huber",
    "rectified_huber",
    "truncated_sign",
    "rectified_truncated_sign",
    "bisquare",
    "rectified_bisquare",
    "indicator_01",
    "normal_cdf",
    "tanh",
    "arctan",
)

SIGMOID_FAMILIES = ("normal_cdf", "tanh", "arctan")
SMOOTH_FAMILIES = ("bisquare", "normal_cdf", "tanh", "arctan")


class NonDifferentiableError(ValidationError):
    """Derivative requested at a kink of a non-smooth family."""


def _sgn(t):
    # sgn(0) = 1 by convention
    return np.where(t >= 0.0, 1.0, -1.0)


@dataclass(frozen=True)
class PhiFunction:
    """A discrepancy function with value, derivative, and (when it
    exists) a Lipschitz constant for the derivative.

    Derivatives of piecewise families use the right derivative at kinks
    unless strict evaluation is requested.
    """

    family: str
    c: float = 1.0
    zeta: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown phi family {self.family!r}")
        if self.c <= 0:
            raise ValidationError("clipping parameter c must be positive")
        if self.zeta <= 0:
            raise ValidationError("sharpness zeta must be positive")

    @property
    def smooth(self):
        return self.family in SMOOTH_FAMILIES

    def with_zeta(self, zeta):
        return PhiFunction(self.family, c=self.c, zeta=zeta)

    # -- evaluation ------------------------------------------------------

    def value(self, t):
        t = np.asarray(t, dtype=float)
        c, z = self.c, self.zeta
        fam = self.family
        if fam == "sign":
            out = _sgn(t)
        elif fam == "rectified_sign":
            out = np.where(t >= 0.0, 1.0, 0.0)
        elif fam == "huber":
            out = np.clip(t / c, -1.0, 1.0)
        elif fam == "rectified_huber":
            out = np.clip(t / c, 0.0, 1.0)
        elif fam == "truncated_sign":
            out = _sgn(t) * (np.abs(t) <= c)
        elif fam == "rectified_truncated_sign":
            out = ((t >= 0.0) & (t <= c)).astype(float)
        elif fam == "bisquare":
            u = t / c
            out = u * (1.0 - u**2) ** 2 * (np.abs(u) <= 1.0) / _BISQUARE_PEAK
        elif fam == "rectified_bisquare":
            u = t / c
            out = np.maximum(0.0, u * (1.0 - u**2) ** 2 * (np.abs(u) <= 1.0)) / _BISQUARE_PEAK
        elif fam == "indicator_01":
            out = (t >= 0.0).astype(float)
        elif fam == "normal_cdf":
            out = ndtr(z * t)
        elif fam == "tanh":
            out = np.tanh(z * t)
        else:  # arctan
            out = (2.0 / math.pi) * np.arctan(z * t)
        return out if out.ndim else float(out)

    def grad(self, t, strict=False):
        t = np.asarray(t, dtype=float)
        c, z = self.c, self.zeta
        fam = self.family
        if strict and not self.smooth:
            kinks = self._kinks()
            if kinks and np.any(np.min(np.abs(t[..., None] - kinks), axis=-1) <= 1e-12):
                raise NonDifferentiableError(
                    f"{fam} is not differentiable at a requested point"
                )
        if fam in ("sign", "rectified_sign", "truncated_sign",
                   "rectified_truncated_sign", "indicator_01"):
            out = np.zeros_like(t)
        elif fam == "huber":
            out = np.where(np.abs(t) < c, 1.0 / c, 0.0)
            out = np.where(t == -c, 1.0 / c, out)  # right derivative at the kink
        elif fam == "rectified_huber":
            out = np.where((t >= 0.0) & (t < c), 1.0 / c, 0.0)
        elif fam == "bisquare":
            u = t / c
            out = (1.0 - u**2) * (1.0 - 5.0 * u**2) * (np.abs(u) <= 1.0) / (c * _BISQUARE_PEAK)
        elif fam == "rectified_bisquare":
            u = t / c
            out = (1.0 - u**2) * (1.0 - 5.0 * u**2) * ((u >= 0.0) & (u <= 1.0)) / (c * _BISQUARE_PEAK)
        elif fam == "normal_cdf":
            out = z * np.exp(-0.5 * (z * t) ** 2) / math.sqrt(2.0 * math.pi)
        elif fam == "tanh":
            out = z * (1.0 - np.tanh(z * t) ** 2)
        else:  # arctan
            out = (2.0 / math.pi) * z / (1.0 + (z * t) ** 2)
        return out if out.ndim else float(out)

    def value_and_grad(self, t):
        """Value and derivative in one pass, sharing work where the two
        overlap (the smooth families dominate solver time)."""
        t = np.asarray(t, dtype=float)
        c, z = self.c, self.zeta
        fam = self.family
        if fam == "tanh":
            v = np.tanh(z * t)
            return v, z * (1.0 - v * v)
        if fam == "normal_cdf":
            u = z * t
            return ndtr(u), z * np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
        if fam == "arctan":
            u = z * t
            return ((2.0 / math.pi) * np.arctan(u),
                    (2.0 / math.pi) * z / (1.0 + u * u))
        if fam == "bisquare":
            u = t / c
            inside = np.abs(u) <= 1.0
            w = 1.0 - u * u
            return (u * w * w * inside / _BISQUARE_PEAK,
                    w * (1.0 - 5.0 * u * u) * inside / (c * _BISQUARE_PEAK))
        return self.value(t), self.grad(t)

    def _kinks(self):
        c = self.c
        return {
            "sign": [0.0],
            "rectified_sign": [0.0],
            "huber": [-c, c],
            "rectified_huber": [0.0, c],
            "truncated_sign": [-c, 0.0, c],
            "rectified_truncated_sign": [0.0, c],
            "rectified_bisquare": [0.0],
            "indicator_01": [0.0],
        }.get(self.family, [])

    def lipschitz(self) -> Optional[float]:
        """A Lipschitz constant of the derivative, or None when the
        derivative has jumps."""
        c, z = self.c, self.zeta
        fam = self.family
        if fam == "tanh":
            # sup |d^2/dt^2 tanh(zt)| = z^2 * 4/(3 sqrt(3))
            return z**2 * 4.0 / (3.0 * math.sqrt(3.0))
        if fam == "normal_cdf":
            # sup |u pdf(u)| attained at u = 1
            return z**2 * math.exp(-0.5) / math.sqrt(2.0 * math.pi)
        if fam == "arctan":
            # sup of (4/pi) |u|/(1+u^2)^2 attained at u = 1/sqrt(3)
            return z**2 * 3.0 * math.sqrt(3.0) / (4.0 * math.pi)
        if fam == "bisquare":
            # sup |psi''| = 8/c^2 at |t| = c, divided by the range scaling
            return 8.0 / (c**2 * _BISQUARE_PEAK)
        return None


def make_phi(name, c=1.0, zeta=1.0):
    """Construct a PhiFunction from its stable string identifier."""
    return PhiFunction(name, c=c, zeta=zeta)
