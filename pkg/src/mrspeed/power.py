"""Convex power curves P(s) = c * s**alpha and the quantities derived from them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from scipy.optimize import bisect


class PowerDomainError(ValueError):
    """Raised when a power-curve quantity is evaluated outside its domain."""


def _check_nonneg(value: float, what: str) -> None:
    if value < 0 or math.isnan(value):
        raise PowerDomainError(f"{what} must be >= 0, got {value!r}")


@dataclass(frozen=True)
class PowerFunction:
    """Power consumed by a server running at speed ``s``: ``coefficient * s**alpha``.

    Instances are immutable and hashable, so they can be shared between
    concurrent runs and used as memoisation keys.
    """

    alpha: float
    coefficient: float = 1.0

    def __post_init__(self) -> None:
        if not self.alpha > 1:
            raise PowerDomainError(f"alpha must be > 1, got {self.alpha!r}")
        if not self.coefficient >= 1:
            raise PowerDomainError(f"coefficient must be >= 1, got {self.coefficient!r}")

    def eval(self, s: float) -> float:
        _check_nonneg(s, "speed")
        return self.coefficient * s**self.alpha

    __call__ = eval

    def inverse(self, x: float) -> float:
        """Speed at which the server draws power ``x``."""
        _check_nonneg(x, "power")
        return (x / self.coefficient) ** (1.0 / self.alpha)

    def derivative(self, s: float) -> float:
        _check_nonneg(s, "speed")
        return self.coefficient * self.alpha * s ** (self.alpha - 1.0)

    def delta(self, x: float) -> float:
        """Marginal power P'(P^-1(x)) at the speed whose power is ``x``."""
        _check_nonneg(x, "power")
        if x == 0:
            return 0.0
        return self.coefficient * self.alpha * (x / self.coefficient) ** (1.0 - 1.0 / self.alpha)

    def s_star(self) -> float:
        """Positive root of ``1 + P(s) = s P'(s)`` (the delay/energy balancing speed)."""
        return self._s_star

    @cached_property
    def _s_star(self) -> float:
        closed = (1.0 / (self.coefficient * (self.alpha - 1.0))) ** (1.0 / self.alpha)
        if math.isfinite(closed) and closed > 0:
            return closed
        return self.balancing_speed(1.0)

    def balancing_speed(self, weight: float) -> float:
        """Root of ``weight + P(s) = s P'(s)``, found by bisection.

        This is the constant speed minimising ``weight * w / s + (w / s) P(s)``
        for a single unit of work ``w`` whose completion carries ``weight``.
        """
        if weight <= 0:
            raise PowerDomainError(f"weight must be > 0, got {weight!r}")

        def residual(s: float) -> float:
            return s * self.derivative(s) - self.eval(s) - weight

        hi = 1.0
        while residual(hi) < 0:
            hi *= 2.0
        return bisect(residual, 0.0, hi, xtol=1e-12, maxiter=500)

    def s_bar(self) -> float:
        """``inf {s > 0 : P(s) > s}``; for the monomial family ``c**(-1/(alpha-1))``."""
        return self.coefficient ** (-1.0 / (self.alpha - 1.0))

    @classmethod
    def from_config(cls, config: dict) -> "PowerFunction":
        return cls(alpha=float(config["alpha"]), coefficient=float(config.get("power_coefficient", 1.0)))
