"""Three-phase modulation wave generator for single-loop grid forming."""

from __future__ import annotations

import math

_SHIFT = 2.0 * math.pi / 3.0


def modulation_wave(theta: float, e_ref: float) -> tuple[float, float, float]:
    """Balanced three-phase set u = E* * [sin(th), sin(th - 2pi/3),
    sin(th + 2pi/3)]; the components sum to zero identically."""
    ua = e_ref * math.sin(theta)
    ub = e_ref * math.sin(theta - _SHIFT)
    uc = -ua - ub
    return ua, ub, uc
