"""Closed-form 1-D profiles used to build kernels and test functions.

The analysis kernels are derived from the trigonometric bump
cos^(2m)(pi t) on (-1/2, 1/2), whose Fourier transform is a finite sinc sum.
That closed form is what makes the kernel certificates (moment vanishing,
annulus floor) and the Fourier-side operators reproducible to ~1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CosPowerBump:
    """c(t) = cos(pi t)^(2m) on |t| < 1/2, extended by zero.

    Expansion: c(t) = 4^-m * sum_{r=-m..m} C(2m, m+r) e^{2 pi i r t}, so all
    derivatives are trig polynomials on the support and the Fourier transform
    is a finite combination of shifted sincs.
    """

    m: int = 8

    def _weights(self) -> np.ndarray:
        m = self.m
        return np.array(
            [math.comb(2 * m, m + r) for r in range(-m, m + 1)], dtype=float
        ) * 0.25**m

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        inside = np.abs(t) < 0.5
        out[inside] = np.cos(np.pi * t[inside]) ** (2 * self.m)
        return out

    def derivative(self, order: int, t, dtype=np.float64):
        """order-th derivative, exact on the support (trig polynomial).

        dtype=np.longdouble gives extended-precision evaluation for the
        moment certificates (the terms are large and cancel).
        """
        if order == 0:
            return self.value(t).astype(dtype)
        t = np.asarray(t, dtype=dtype)
        out = np.zeros_like(t)
        inside = np.abs(t) < 0.5
        ti = t[inside]
        w = self._weights().astype(dtype)
        if dtype is np.longdouble:
            pi = np.longdouble("3.141592653589793238462643383279502884")
        else:
            pi = np.pi
        acc = np.zeros_like(ti)
        for r_off, wr in enumerate(w):
            r = r_off - self.m
            if r == 0:
                continue
            z = 2.0 * pi * r
            phase = z * ti
            # Re[(i z)^order e^{i phase}] cycles through cos/sin with signs.
            k = order % 4
            if k == 0:
                osc = np.cos(phase)
            elif k == 1:
                osc = -np.sin(phase)
            elif k == 2:
                osc = -np.cos(phase)
            else:
                osc = np.sin(phase)
            acc += wr * z**order * osc
        out[inside] = acc
        return out

    def fourier(self, xi):
        """Exact Fourier transform \\int c(t) e^{-2 pi i xi t} dt (real, even)."""
        xi = np.asarray(xi, dtype=float)
        w = self._weights()
        out = np.zeros_like(xi)
        for r_off, wr in enumerate(w):
            r = r_off - self.m
            out += wr * np.sinc(xi - r)
        return out

    @property
    def integral(self) -> float:
        return 0.25**self.m * math.comb(2 * self.m, self.m)

    @property
    def smoothness(self) -> int:
        """c is C^(2m-1)."""
        return 2 * self.m - 1


def smoothstep(u):
    """C-infinity monotone step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    out[u >= 1.0] = 1.0
    mid = (u > 0.0) & (u < 1.0)
    um = u[mid]
    a = np.exp(-1.0 / um)
    b = np.exp(-1.0 / (1.0 - um))
    out[mid] = a / (a + b)
    return out


@dataclass(frozen=True)
class PlateauWindow:
    """C-infinity window: 0 outside (lo, hi), 1 on [lo+rise, hi-fall]."""

    lo: float
    hi: float
    rise: float
    fall: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        up = smoothstep((t - self.lo) / self.rise)
        down = smoothstep((self.hi - t) / self.fall)
        return up * down


def bump_window(center: float = 0.0, halfwidth: float = 0.5):
    """exp(-1/(1-u^2)) style C-infinity bump, normalized to peak 1."""

    def w(t):
        t = np.asarray(t, dtype=float)
        u = (t - center) / halfwidth
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        return out

    return w


class OddNormalizedBump:
    """Odd eta in C_c^inf(-1/2, 1/2) with int_0^{1/2} eta = 1.

    eta(t) = c * t * exp(-1/(1 - (2t)^2)); the constant c is fixed once by a
    high-resolution midpoint quadrature and reused verbatim everywhere.
    """

    _QUAD_POINTS = 1 << 16

    def __init__(self):
        t = (np.arange(self._QUAD_POINTS) + 0.5) / self._QUAD_POINTS * 0.5
        raw = t * self._window(t)
        self.norm_const = 1.0 / (raw.sum() * 0.5 / self._QUAD_POINTS)

    @staticmethod
    def _window(t):
        t = np.asarray(t, dtype=float)
        u = 2.0 * t
        out = np.zeros_like(t)
        inside = np.abs(u) < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
        return out

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.norm_const * t * self._window(t)

    def sup(self) -> float:
        t = np.linspace(-0.5, 0.5, 1 << 12)
        return float(np.abs(self(t)).max())


@dataclass(frozen=True)
class PartitionBump:
    """1-D partition-of-unity bump: support (-delta/2, 1+delta/2), and
    sum_k bump(t-k) telescopes to exactly 1.
    """

    delta: float = 0.02

    def _step(self, t):
        # rises 0 -> 1 across (-delta/2, delta/2)
        return smoothstep((t + self.delta / 2.0) / self.delta)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self._step(t) - self._step(t - 1.0)


def radial_cutoff(rho: float = 0.375, tau: float = 1.5):
    """Smooth radial profile equal to 1 for r <= rho/tau, 0 for r >= rho."""
    inner = rho / tau

    def eta0(r):
        r = np.asarray(r, dtype=float)
        return smoothstep((rho - r) / (rho - inner))

    return eta0
