"""Builtin initial curves.

Admissibility status (mu > 0, see the admissibility module):

============  ==========================================================
segment       fails non-degeneracy (tau_2 = 0) and the third-order
              condition (residual = mu)
semicircle    fails the curvature condition (|k| = 1/r at the ends) and
              non-degeneracy at x = 1 (tau_2 = -1)
sine_arch     satisfies attachment, curvature and non-degeneracy; the
              third-order condition is generically violated, so flow runs
              from it need the admissibility override
============  ==========================================================
"""

import numpy as np

from .geometry import DiscreteCurve


def segment(length=2.0, n=128):
    """Straight segment gamma(x) = (length*x, 0) on the x-axis."""
    x = np.linspace(0.0, 1.0, n + 1)
    return DiscreteCurve(np.stack([length * x, np.zeros_like(x)], axis=1))


def semicircle(radius=1.0, n=256):
    """Upper semicircle gamma(x) = r(cos pi x, sin pi x); constant speed pi r."""
    t = np.pi * np.linspace(0.0, 1.0, n + 1)
    return DiscreteCurve(radius * np.stack([np.cos(t), np.sin(t)], axis=1))


def sine_arch(amplitude=0.1, periods=1.0, n=128):
    """Graph curve gamma(x) = (x, A sin(2 pi periods x)) attached to the axis."""
    x = np.linspace(0.0, 1.0, n + 1)
    if (periods * 2.0) != int(periods * 2.0):
        raise ValueError("periods must be a half-integer so the endpoints sit on the axis")
    return DiscreteCurve(np.stack([x, amplitude * np.sin(2.0 * np.pi * periods * x)], axis=1))


BUILTINS = {
    "segment": segment,
    "semicircle": semicircle,
    "sine_arch": sine_arch,
}
