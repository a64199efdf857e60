"""Power-law change of variables between the original and additive-noise state.

The forward map z = x^(1-rho) turns the state-dependent diffusion into a
constant one; the inverse map x = z^(1/(1-rho)) recovers the original state.
Both are strictly positive on strictly positive inputs, and the jump update
is carried out in transformed coordinates.
"""

from __future__ import annotations

import math

from .model import JumpCoefficient, ModelParams

__all__ = ["lamperti_forward", "lamperti_inverse", "jump_map"]


def _checked_pow(base: float, expo: float, what: str) -> float:
    """exp(expo*log(base)) with range errors instead of silent 0 or inf.

    A zero result would leave the positive domain, so underflow raises.
    """
    out = math.exp(expo * math.log(base))  # OverflowError on upward overflow
    if out == 0.0:
        raise OverflowError(f"{what}: result underflowed to 0 for base {base}")
    return out


def lamperti_forward(rho: float, x: float) -> float:
    """z = x^(1-rho) for x > 0, rho > 1."""
    if not rho > 1.0:
        raise ValueError(f"rho must exceed 1, got {rho}")
    if not x > 0.0:
        raise ValueError(f"x must be strictly positive, got {x}")
    return _checked_pow(x, 1.0 - rho, "forward transform")


def lamperti_inverse(rho: float, z: float) -> float:
    """x = z^(1/(1-rho)) for z > 0, rho > 1."""
    if not rho > 1.0:
        raise ValueError(f"rho must exceed 1, got {rho}")
    if not z > 0.0:
        raise ValueError(f"z must be strictly positive, got {z}")
    return _checked_pow(z, 1.0 / (1.0 - rho), "inverse transform")


def jump_map(params: ModelParams, jump: JumpCoefficient, z: float) -> float:
    """Post-jump transformed state: (x + h(x))^(1-rho) with x = z^(1/(1-rho)).

    Exact identity when the jump size vanishes. A nonpositive x + h(x) means
    an invalid jump coefficient slipped past validation and raises.
    """
    if not z > 0.0:
        raise ValueError(f"z must be strictly positive, got {z}")
    x = _checked_pow(z, 1.0 / (1.0 - params.rho), "inverse transform")
    hx = jump.h(x)
    if hx == 0.0:
        return z
    moved = x + hx
    if not moved > 0.0:
        raise ValueError(
            f"jump leaves the positive domain: x + h(x) = {moved} at x = {x}"
        )
    return _checked_pow(moved, 1.0 - params.rho, "forward transform")
