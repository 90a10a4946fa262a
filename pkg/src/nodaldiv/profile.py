"""Certified convex interpolation profiles for collar potentials.

A profile with end slope A in (0, 1/2) interpolates monotonically and
convexly between the exponential end model A*(exp(s) - exp(-1)) - 1 near
s = -1 and the linear ramp 2s near 0:

    G'(s) = (1 - chi(s)) * A e^s + chi(s) * 2

with chi a smooth monotone bump-integral step supported on
[center - width, center + width] contained in (-1, 0).  Convexity holds
because G'' = (1 - chi) A e^s + chi' (2 - A e^s) and A e^s < 2 on s <= 0.
The blend center is placed by root finding so that G(-1) = -1 and
G(0) = 0 hold exactly; outside the blend window the profile evaluates by
the closed-form tails, inside by Gauss-Legendre quadrature anchored at the
linear end (so the linear tail is exact by construction and the quadrature
residual, near machine precision, is absorbed at the exponential seam where
the second derivative is safely positive).
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.optimize import brentq

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(160)
_EXP_M1 = math.exp(-1.0)

SAMPLE_COUNT = 2001


class ProfileError(ValueError):
    """Profile construction failed."""


def _bump(y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    inside = np.abs(y) < 1.0
    yi = y[inside]
    out[inside] = np.exp(-1.0 / (1.0 - yi * yi))
    return out


_BUMP_TOTAL = float(np.sum(_GL_WEIGHTS * _bump(_GL_NODES)))


def _step(y) -> np.ndarray:
    """Smooth monotone step: 0 for y <= -1, 1 for y >= 1 (bump integral)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    flat = y.ravel()
    out = np.zeros_like(flat)
    out[flat >= 1.0] = 1.0
    mid = np.flatnonzero((flat > -1.0) & (flat < 1.0))
    if mid.size:
        half = 0.5 * (flat[mid] + 1.0)
        nodes = -1.0 + half[:, None] * (_GL_NODES + 1.0)[None, :]
        out[mid] = half * (_bump(nodes) @ _GL_WEIGHTS) / _BUMP_TOTAL
    return out.reshape(y.shape)


@dataclasses.dataclass
class ConvexProfile:
    """Monotone convex profile with exponential and linear closed-form tails."""

    end_slope: float            # A, in (0, 1/2)
    blend_center: float         # m, with [m - w, m + w] in (-1, 0)
    blend_width: float          # w
    grid: np.ndarray            # uniform sample grid on [-1, 1]
    values: np.ndarray          # G at the grid
    derivatives: np.ndarray     # G' at the grid

    def derivative(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        chi = _step((s - self.blend_center) / self.blend_width)
        exp_part = self.end_slope * np.exp(s)
        return (1.0 - chi) * exp_part + chi * 2.0

    def second_derivative(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        y = (s - self.blend_center) / self.blend_width
        chi = _step(y)
        chi_p = _bump(np.atleast_1d(y)) / (_BUMP_TOTAL * self.blend_width)
        exp_part = self.end_slope * np.exp(s)
        return (1.0 - chi) * exp_part + chi_p * (2.0 - exp_part)

    def __call__(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lo = self.blend_center - self.blend_width
        hi = self.blend_center + self.blend_width
        out = np.empty_like(s)
        left = s <= lo
        right = s >= hi
        out[left] = self.end_slope * (np.exp(s[left]) - _EXP_M1) - 1.0
        out[right] = 2.0 * s[right]
        mid = ~(left | right)
        if np.any(mid):
            out[mid] = 2.0 * hi - self._tail_integral(s[mid])
        return out

    def _tail_integral(self, s: np.ndarray) -> np.ndarray:
        """Integral of G' from each s to the linear seam (anchors G at 2s)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        hi = self.blend_center + self.blend_width
        half = 0.5 * (hi - s)
        nodes = s[:, None] + half[:, None] * (_GL_NODES + 1.0)[None, :]
        return half * (self.derivative(nodes) @ _GL_WEIGHTS)

    @property
    def linear_from(self) -> float:
        """Left end of the exactly-linear tail."""
        return self.blend_center + self.blend_width


def build_profile(end_slope: float, blend_width: float = 0.1) -> ConvexProfile:
    """Construct the certified profile for the given end slope.

    The blend center solves G(0) = 0 given G(-1) = -1; when no root is
    bracketed for the requested width, the width is halved, up to 6 times.
    """
    A = float(end_slope)
    if not 0.0 < A < 0.5:
        raise ProfileError(f"end slope must lie in (0, 1/2), got {A}")
    w = float(blend_width)
    last_error = None
    for _ in range(7):
        lo, hi = -1.0 + w + 1e-9, -w - 1e-9
        if lo >= hi:
            w *= 0.5
            continue

        def mismatch(m: float) -> float:
            # G(0) when the blend integral is accumulated from the left tail
            prof = ConvexProfile(
                end_slope=A, blend_center=m, blend_width=w,
                grid=np.zeros(0), values=np.zeros(0), derivatives=np.zeros(0),
            )
            seam_left = m - w
            left_value = A * (math.exp(seam_left) - _EXP_M1) - 1.0
            blend = float(prof._tail_integral(np.array([seam_left]))[0])
            return left_value + blend + 2.0 * (0.0 - (m + w))

        try:
            f_lo, f_hi = mismatch(lo), mismatch(hi)
            if f_lo == 0.0:
                m = lo
            elif f_hi == 0.0:
                m = hi
            elif f_lo * f_hi > 0.0:
                raise ProfileError(
                    f"no blend center brackets G(0) = 0 for width {w}"
                )
            else:
                m = brentq(mismatch, lo, hi, xtol=1e-15, rtol=8.9e-16)
            prof = ConvexProfile(
                end_slope=A, blend_center=float(m), blend_width=w,
                grid=np.zeros(0), values=np.zeros(0), derivatives=np.zeros(0),
            )
            prof.grid = np.linspace(-1.0, 1.0, SAMPLE_COUNT)
            prof.values = prof(prof.grid)
            prof.derivatives = prof.derivative(prof.grid)
            _certify(prof)
            return prof
        except ProfileError as err:
            last_error = err
            w *= 0.5
    raise ProfileError(f"profile construction failed for A={A}: {last_error}")


def _certify(prof: ConvexProfile) -> None:
    if not (-1.0 < prof.blend_center - prof.blend_width
            and prof.blend_center + prof.blend_width < 0.0):
        raise ProfileError("blend window escapes (-1, 0)")
    v_m1 = float(prof(np.array([-1.0]))[0])
    v_0 = float(prof(np.array([0.0]))[0])
    if v_m1 != -1.0 or v_0 != 0.0:
        raise ProfileError(f"endpoint normalization failed: {v_m1}, {v_0}")
    if np.any(prof.derivatives <= 0.0):
        raise ProfileError("profile derivative is not strictly positive")
    second = prof.second_derivative(prof.grid)
    if np.any(second < -1e-12):
        raise ProfileError("profile is not convex at the sample grid")
