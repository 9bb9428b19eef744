"""Brute-force reference calculations used to check the closed forms.

None of these share code with the quantities they verify: the Husimi
function is summed from the Fock expansion of the squeezed vacuum, the
variance oracle samples photonic quadratures directly, and the g2 oracle
draws raw Gaussian moments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class FockTruncation:
    n_max: int

    def __post_init__(self):
        if self.n_max < 0:
            raise ValidationError("n_max must be >= 0")

    @staticmethod
    def required(r: float) -> int:
        return int(np.ceil(4 * np.sinh(r) ** 2 + 20))

    @classmethod
    def for_squeezing(cls, r: float) -> "FockTruncation":
        return cls(cls.required(r))

    def check(self, r: float) -> None:
        need = self.required(r)
        if self.n_max < need:
            raise ValidationError(f"n_max={self.n_max} is too small for r={r}; use n_max >= {need}")


def husimi_fock_oracle(r: float, alpha: complex, trunc: FockTruncation | None = None) -> float:
    """|<alpha| S(r) |0>|^2 / pi from the even-photon Fock expansion.

    S(r)|0> = sum_m c_m |2m> with c_m = (-tanh r)^m sqrt((2m)!) / (2^m m! sqrt(cosh r)),
    and <alpha|n> = exp(-|alpha|^2/2) conj(alpha)^n / sqrt(n!).  The product of
    the two gives the term (-tanh r / 2)^m conj(alpha)^{2m} / m!, summed in
    log-magnitude form.
    """
    if r < 0:
        raise DomainError("squeezing parameter must be >= 0")
    trunc = FockTruncation.for_squeezing(r) if trunc is None else trunc
    trunc.check(r)
    ac = np.conj(complex(alpha))
    if r == 0 or ac == 0:
        return float(np.exp(-abs(alpha) ** 2) / np.pi / np.cosh(r))
    # the terms follow a Poisson-like profile in m with parameter lam
    lam = np.tanh(r) * abs(ac) ** 2 / 2
    m = np.arange(trunc.n_max // 2 + 1)
    log_mag = m * np.log(np.tanh(r) / 2) + 2 * m * np.log(abs(ac)) - gammaln(m + 1)
    terms = np.exp(log_mag) * np.exp(1j * (m * np.pi + 2 * m * np.angle(ac)))
    amp = np.sum(terms)
    if m[-1] < lam or abs(terms[-1]) > 1e-16 * abs(amp):
        need = 2 * int(np.ceil(lam + 10 * np.sqrt(lam) + 10))
        raise ValidationError(f"n_max={trunc.n_max} truncates the expansion at |alpha|={abs(ac):.3g}; "
                              f"use n_max >= {need}")
    if np.max(np.abs(terms)) > 1e6 * abs(amp):
        raise ValidationError(f"alternating Fock series loses precision at |alpha|={abs(ac):.3g}")
    q = np.exp(-abs(alpha) ** 2) * abs(amp) ** 2 / np.cosh(r)
    return float(q / np.pi)


def husimi_width_oracle(r: float, axis: str, x: float = 0.5) -> float:
    """Quadrature variance of the Fock-oracle Husimi function along one axis.

    ``axis='real'`` is the squeezed direction, ``'imag'`` the anti-squeezed
    one (for real r).  The Husimi function is Gaussian, so the variance
    follows from the log-ratio of its values at the origin and at distance
    ``x``: ``sigma = x^2 / (2 ln(Q(0)/Q(x)))``.
    """
    if axis not in ("real", "imag"):
        raise ValidationError("axis must be 'real' or 'imag'")
    point = x if axis == "real" else 1j * x
    return float(x**2 / (2 * np.log(husimi_fock_oracle(r, 0) / husimi_fock_oracle(r, point))))


def variance_mc_oracle(r: float, t: float, tau: float, n_draws: int = 100_000,
                       seed: int = 0, omega: float = 0.057):
    """Sampled excess variance of the squeezed-mode field at time t + tau.

    Draws quadratures (x, y) from the squeezed-vacuum Husimi Gaussian,
    whose variances are (1 + e^{-2r})/4 and (1 + e^{2r})/4, projects onto
    the instantaneous phase phi = 2 omega (t + tau) and returns
    ``(mean, excess, stderr)`` with the excess expressed in the units of
    the closed-form variance (vacuum total = 4, per-mode quadrature 1/2).
    """
    if n_draws < 10_000:
        raise ValidationError("variance oracle needs n_draws >= 1e4")
    if r < 0:
        raise DomainError("squeezing parameter must be >= 0")
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, np.sqrt((1 + np.exp(-2 * r)) / 4), n_draws)
    y = rng.normal(0.0, np.sqrt((1 + np.exp(2 * r)) / 4), n_draws)
    phi = 2 * omega * (t + tau)
    proj = x * np.cos(phi) - y * np.sin(phi)
    mean = float(proj.mean())
    dev2 = (proj - mean) ** 2
    var = float(dev2.mean())
    stderr = float(np.sqrt(dev2.var() / n_draws))
    # Husimi variance 1/2 is the vacuum; scaling by 8 maps onto the closed form
    return mean, 8.0 * (var - 0.5), 8.0 * stderr


def gaussian_moment_oracle(n: int, kind: str = "squeezed_1d", n_draws: int = 1_000_000,
                           seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo g2 of a power-law response chi = x**n (1D) or x**n + i y**n (2D).

    Returns ``(estimate, stderr)``; the error uses the delta method on the
    ratio <|chi|^4> / <|chi|^2>^2.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "squeezed_1d":
        x = rng.standard_normal(n_draws)
        i2 = x ** (2 * n)
    elif kind == "thermal_2d":
        x, y = rng.standard_normal((2, n_draws))
        i2 = x ** (2 * n) + y ** (2 * n)
    else:
        raise ValidationError(f"unknown kind {kind!r}")
    i4 = i2**2
    a, b = i4.mean(), i2.mean()
    g = a / b**2
    # gradient of a / b^2 is (1/b^2, -2a/b^3)
    cov = np.cov(np.stack([i4, i2]))
    grad = np.array([1 / b**2, -2 * a / b**3])
    stderr = float(np.sqrt(grad @ cov @ grad / n_draws))
    return float(g), stderr
