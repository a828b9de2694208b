"""Overload mitigation for single-loop grid forming: when measured power
exceeds the cap, scale down the voltage amplitude reference and shift the
frequency reference toward unloading; recover first-order afterwards."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..params import LimiterConfig, ConfigError


@dataclass
class OverloadMitigation:
    limiter: LimiterConfig = field(
        default_factory=lambda: LimiterConfig(scheme="overload_mitigation"))
    k_ol: float = 0.05      # pu frequency shift per pu overload
    tau_ol: float = 0.01    # engagement lag, s
    tau_rec: float = 0.1    # recovery constant, s
    scale: float = 1.0
    omega_offset: float = 0.0
    engaged: bool = False

    def __post_init__(self):
        if self.limiter.scheme != "overload_mitigation":
            raise ConfigError("OverloadMitigation requires the "
                              "overload_mitigation limiter scheme")

    def step(self, p_meas: float, dt: float) -> tuple[float, float]:
        """Returns (amplitude scale, frequency offset in pu)."""
        p_max = self.limiter.p_max
        if p_meas > p_max:
            target = max(p_max / p_meas, 0.3)
            self.scale += (dt / self.tau_ol) * (target - self.scale)
            self.omega_offset += (dt / self.tau_ol) * (
                -self.k_ol * (p_meas - p_max) - self.omega_offset)
            self.engaged = True
        else:
            self.scale += (dt / self.tau_rec) * (1.0 - self.scale)
            self.omega_offset += (dt / self.tau_rec) * (0.0 - self.omega_offset)
            self.engaged = False
        return self.scale, self.omega_offset


def overload_mitigation(p_meas: float, limiter: LimiterConfig, dt: float,
                        state: OverloadMitigation | None = None
                        ) -> tuple[float, float]:
    """Functional wrapper; pass ``state`` to persist across steps."""
    if state is None:
        state = OverloadMitigation(limiter=limiter)
    return state.step(p_meas, dt)
