"""Discrete-time building blocks: bilinear-discretized first-order
transfer functions and trapezoidal PI regulators."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class FirstOrderBlock:
    """H(s) = (b1*s + b0) / (a1*s + a0), discretized with the bilinear
    (trapezoidal) rule at the step supplied to :meth:`step`.

    The bilinear map preserves the DC gain b0/a0 exactly.
    """

    b1: float
    b0: float
    a1: float
    a0: float
    u_prev: float = 0.0
    y_prev: float = 0.0

    def step(self, u: float, dt: float) -> float:
        n0 = 2.0 * self.b1 / dt + self.b0
        n1 = self.b0 - 2.0 * self.b1 / dt
        d0 = 2.0 * self.a1 / dt + self.a0
        d1 = self.a0 - 2.0 * self.a1 / dt
        y = (n0 * u + n1 * self.u_prev - d1 * self.y_prev) / d0
        self.u_prev = u
        self.y_prev = y
        return y

    def reset(self, u: float = 0.0, y: float = 0.0) -> None:
        self.u_prev = u
        self.y_prev = y


@dataclass
class PiController:
    """Trapezoidal PI with clamping anti-windup (back-calculation)."""

    kp: float
    ki: float
    lo: float = float("-inf")
    hi: float = float("inf")
    xi: float = 0.0
    e_prev: float = 0.0

    def step(self, e: float, dt: float, feedforward: float = 0.0) -> float:
        xi = self.xi + 0.5 * self.ki * dt * (e + self.e_prev)
        raw = self.kp * e + xi + feedforward
        out = min(max(raw, self.lo), self.hi)
        if out != raw:
            xi = out - self.kp * e - feedforward
        self.xi = xi
        self.e_prev = e
        return out

    def reset(self, xi: float = 0.0) -> None:
        self.xi = xi
        self.e_prev = 0.0
