"""Pitch-angle regulator: PI on rotor-speed error with output clamping,
anti-windup, and actuator rate limiting."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..params import TurbineParams
from .blocks import PiController


@dataclass
class PitchController:
    """Positive speed error (overspeed) pitches the blades out."""

    params: TurbineParams = field(default_factory=TurbineParams)
    beta: float = 0.0
    _pi: PiController = field(init=False)

    def __post_init__(self):
        p = self.params
        self._pi = PiController(kp=p.kp_pitch, ki=p.ki_pitch,
                                lo=0.0, hi=p.beta_max)
        self._pi.xi = min(max(self.beta, 0.0), p.beta_max)

    def step(self, delta_omega: float, dt: float) -> float:
        """One update; returns the achieved (rate-limited) pitch angle."""
        cmd = self._pi.step(delta_omega, dt)
        p = self.params
        db = (cmd - self.beta) / p.tau_beta
        db = min(max(db, -p.beta_rate), p.beta_rate)
        self.beta = min(max(self.beta + db * dt, 0.0), p.beta_max)
        return self.beta

    @property
    def command(self) -> float:
        return self._pi.kp * self._pi.e_prev + self._pi.xi
