"""The standard bubble family, its weighted harmonic extension, and the
kernel fields generated by dilation and translation.

Two independent evaluation routes are provided for the extension:

* ``fourier_bessel`` — radial Hankel-type inversion of the separated
  representation  W(r, z) = D * int s^(n-1) what(s) phi(s z) e_nu(s r) ds,
  with nu = n/2 - 1 and e_nu the normalized oscillatory kernel
  Gamma(nu+1) (u/2)^(-nu) J_nu(u).  The single constant D is calibrated so
  that W(0, 0) equals the bubble's center value.
* ``poisson_kernel`` — convolution of the trace with the half-space kernel
  p_{n,g} z^(2g) / (|xbar - ybar|^2 + z^2)^((n+2g)/2).

The tensor-grid evaluator ``radial_profiles`` shares one s-quadrature across
all requested derivative fields, which keeps grid sweeps cheap.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy import integrate, special

from ._quad import gauss_panels, graded_edges
from .errors import DomainError, NumericError
from .specfun import (
    ProblemIndex,
    constants,
    profile_phi,
    profile_phi_prime,
    profile_what,
    sphere_area,
)

__all__ = [
    "BubbleParams",
    "HalfSpacePoint",
    "trace_bubble",
    "extension",
    "extension_gamma_half",
    "neumann_trace",
    "jacobi_field",
    "radial_profiles",
    "poisson_constant",
]

_S_CUT = 45.0   # K_g(s) < 3e-20 beyond this; truncation is below fp noise
_GAUSS_ORDER = 10


@dataclass(frozen=True)
class BubbleParams:
    """Concentration scale and center of a bubble."""

    lam: float = 1.0
    sigma: np.ndarray | None = None

    def __post_init__(self):
        if self.lam <= 0.0:
            raise DomainError("bubble scale lambda must be positive")

    def center(self, n):
        if self.sigma is None:
            return np.zeros(n)
        sig = np.asarray(self.sigma, dtype=float)
        if sig.shape != (n,):
            raise DomainError(f"sigma must have length {n}")
        return sig


@dataclass(frozen=True)
class HalfSpacePoint:
    """A point (xbar, xN) in the closed upper half-space."""

    xbar: np.ndarray
    xN: float

    def __post_init__(self):
        if self.xN < 0.0:
            raise DomainError("xN must be nonnegative")


def trace_bubble(idx, p, xbar):
    """Trace bubble alpha * (lam / (lam^2 + |xbar - sigma|^2))^(m/2)."""
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    sig = p.center(idx.n)
    rho2 = np.sum((xbar - sig) ** 2)
    alpha = constants(idx).alpha
    return alpha * (p.lam / (p.lam**2 + rho2)) ** (idx.m / 2.0)


def _trace_radial(idx, r):
    alpha = constants(idx).alpha
    return alpha * (1.0 + np.asarray(r, dtype=float) ** 2) ** (-idx.m / 2.0)


def _e_nu(nu, u):
    """Normalized Bessel kernel Gamma(nu+1) (u/2)^(-nu) J_nu(u); equals 1 at 0."""
    u = np.asarray(u, dtype=float)
    small = u < 1e-7
    us = np.where(small, 1.0, u)
    out = math.gamma(nu + 1.0) * (us / 2.0) ** (-nu) * special.jv(nu, us)
    # two-term series near zero, where the ratio form would divide 0 by 0
    return np.where(small, 1.0 - u**2 / (4.0 * (nu + 1.0)), out)


@lru_cache(maxsize=64)
def _s_rule(n, gamma, rmax_key):
    """Cached s-quadrature plus precomputed what-weights for one index.

    ``rmax_key`` bounds the largest r the rule must resolve: panel widths are
    chosen so each panel sees at most a few oscillations of e_nu(s r).
    """
    rmax = float(rmax_key)
    width = min(0.6, 5.0 / max(rmax, 1e-9))
    inner = graded_edges(0.0, min(1.0, _S_CUT), width / 4.0, ratio=1.5, h_max=width)
    outer = np.arange(inner[-1], _S_CUT + width, width)
    edges = np.unique(np.concatenate([inner, outer]))
    s, ws = gauss_panels(edges, _GAUSS_ORDER)
    idx = ProblemIndex(n, gamma)
    what = profile_what(idx, s)
    # calibration: W(0,0) = alpha forces D * int s^(n-1) what(s) ds = alpha,
    # and the s-integral has the closed form 2^(n-g-2) Gamma(m/2) Gamma(n/2)
    m = idx.m
    i0 = 2.0 ** (n - gamma - 2.0) * math.gamma(m / 2.0) * math.gamma(n / 2.0)
    D = constants(idx).alpha / i0
    return s, ws * D * s ** (n - 1) * what


def _rmax_key(rmax):
    """Bucket rmax to a power of two so the lru cache is effective."""
    return float(2.0 ** math.ceil(math.log2(max(rmax, 1.0))))


def radial_profiles(idx, r, z, fields=("W",)):
    """Evaluate extension-derived fields on the tensor grid r x z.

    ``r`` and ``z`` are 1-D arrays (z > 0 except where noted); returns a dict
    of (len(r), len(z)) arrays. Available fields:

    * ``W``        — the extension itself (z = 0 allowed)
    * ``Wr_over_r``— (1/r) dW/dr (finite at r = 0)
    * ``Wz``       — dW/dz (z > 0 required)
    * ``lap_tan``  — tangential Laplacian of W
    * ``W_minus_w``— W(r, z) - W(r, 0), computed inside the s-integral to
                     avoid catastrophic cancellation at small z
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    n, nu = idx.n, idx.n / 2.0 - 1.0
    s, kw = _s_rule(idx.n, idx.gamma, _rmax_key(r.max() if r.size else 1.0))

    needs_e1 = any(f in fields for f in ("Wr_over_r",))
    Ev = _e_nu(nu, np.outer(s, r))
    Ev1 = _e_nu(nu + 1.0, np.outer(s, r)) if needs_e1 else None

    sz = np.outer(s, z)
    pos = z > 0.0
    Ph = None
    if any(f in fields for f in ("W", "Wr_over_r", "lap_tan", "Wz", "W_minus_w")):
        Ph = np.empty_like(sz)
        if np.any(pos):
            Ph[:, pos] = profile_phi(idx, sz[:, pos])
        Ph[:, ~pos] = 1.0

    out = {}
    if "W" in fields:
        out["W"] = (Ev * kw[:, None]).T @ Ph
    if "Wr_over_r" in fields:
        out["Wr_over_r"] = -(Ev1 * (kw * s**2 / (2.0 * (nu + 1.0)))[:, None]).T @ Ph
    if "lap_tan" in fields:
        out["lap_tan"] = -(Ev * (kw * s**2)[:, None]).T @ Ph
    if "Wz" in fields:
        if np.any(~pos):
            raise DomainError("Wz requires z > 0")
        Phd = profile_phi_prime(idx, sz)
        out["Wz"] = (Ev * (kw * s)[:, None]).T @ Phd
    if "W_minus_w" in fields:
        out["W_minus_w"] = (Ev * kw[:, None]).T @ (Ph - 1.0)
    return out


def extension_gamma_half(idx, r, z, lam=1.0):
    """Closed-form extension at gamma = 1/2.

    With the weight trivial, the extension is harmonic in R^(n+1) and equals
    the shifted fundamental solution alpha * (lam / ((lam+z)^2 + r^2))^(m/2),
    m = n - 1; its trace is exactly the bubble.
    """
    if abs(idx.gamma - 0.5) > 1e-14:
        raise DomainError("closed form only available at gamma = 1/2")
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    alpha = constants(idx).alpha
    u = lam + z
    return alpha * (lam / (u**2 + r**2)) ** (idx.m / 2.0)


def poisson_constant(idx):
    """Normalization of the half-space kernel, Gamma((n+2g)/2)/(pi^(n/2) Gamma(g))."""
    n, g = idx.n, idx.gamma
    return math.gamma((n + 2.0 * g) / 2.0) / (math.pi ** (n / 2.0) * math.gamma(g))


def _extension_poisson(idx, r, z):
    """Poisson-kernel route at a single scaled point (r, z), z > 0."""
    n, g = idx.n, idx.gamma
    p_const = poisson_constant(idx)
    area_sub = sphere_area(n - 1) if n >= 2 else 2.0
    th, wth = np.polynomial.legendre.leggauss(80)
    th = 0.5 * math.pi * (th + 1.0)
    wth = 0.5 * math.pi * wth
    sinp = np.sin(th) ** (n - 2) if n >= 2 else np.ones_like(th)
    costh = np.cos(th)

    def integrand(rho):
        a = r * r + rho * rho + z * z
        b = 2.0 * r * rho
        ang = np.sum(wth * sinp * (a - b * costh) ** (-(n + 2.0 * g) / 2.0))
        return _trace_radial(idx, rho) * rho ** (n - 1) * ang

    val, err = integrate.quad(
        integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-10, limit=400
    )
    if not np.isfinite(val) or (val != 0 and err > 1e-6 * abs(val)):
        raise NumericError(
            "poisson-route quadrature did not converge",
            {"value": val, "abserr": err, "point": (r, z)},
        )
    return p_const * area_sub * z ** (2.0 * g) * val


def extension(idx, p, x, route="fourier_bessel"):
    """The extension W_{lam,sigma} at a half-space point."""
    sig = p.center(idx.n)
    xbar = np.atleast_1d(np.asarray(x.xbar, dtype=float))
    r = float(np.linalg.norm(xbar - sig)) / p.lam
    z = x.xN / p.lam
    scale = p.lam ** (-idx.m / 2.0)
    if x.xN == 0.0:
        return float(scale * _trace_radial(idx, r))
    if route == "fourier_bessel":
        w = radial_profiles(idx, np.array([r]), np.array([z]), ("W",))["W"][0, 0]
        return float(scale * w)
    if route == "poisson_kernel":
        return float(scale * _extension_poisson(idx, r, z))
    raise DomainError(f"unknown route {route!r}")


def neumann_trace(idx, p, xbar):
    """-kappa * lim_{z->0} z^(1-2g) dW/dz, by weighted-quotient extrapolation.

    Near the trace W = w + c z^(2g) + d z^2 + ..., so the quotient
    q(h) = 2g (W(r,h) - w(r)) / h^(2g) tends to the weighted-flux limit with
    corrections h^(2-2g) and h^2; a two-stage Richardson ladder removes both.
    """
    g = idx.gamma
    sig = p.center(idx.n)
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    r = float(np.linalg.norm(xbar - sig)) / p.lam
    kappa = constants(idx).kappa

    h0 = 0.04
    hs = np.array([h0, h0 / 2.0, h0 / 4.0])
    dif = radial_profiles(idx, np.array([r]), hs, ("W_minus_w",))["W_minus_w"][0]
    q = 2.0 * g * dif / hs ** (2.0 * g)
    # first stage strips the h^(2-2g) term, second the h^2 term
    f1 = 1.0 / (2.0 ** (2.0 - 2.0 * g) - 1.0)
    q1 = q[1:] + (q[1:] - q[:-1]) * f1
    q2 = q1[1] + (q1[1] - q1[0]) / 3.0
    if not np.isfinite(q2):
        raise NumericError("weighted-quotient extrapolation failed", {"q": q})
    val = -kappa * q2 * p.lam ** (-(idx.n + 2.0 * g) / 2.0)
    return float(val)


def jacobi_field(idx, k, x, delta=1e-4):
    """Kernel fields of the linearization: dilation (k=0) and translations.

    Z^0 = -dW/dlam at (1, 0) and Z^k = dW/dsigma_k at (1, 0), via central
    differences of the exact parameter covariance of the family.
    """
    if not 0 <= k <= idx.n:
        raise DomainError(f"k must lie in [0, {idx.n}]")
    xbar = np.atleast_1d(np.asarray(x.xbar, dtype=float))
    if k == 0:
        wp = extension(idx, BubbleParams(lam=1.0 + delta), x)
        wm = extension(idx, BubbleParams(lam=1.0 - delta), x)
        return -(wp - wm) / (2.0 * delta)
    e = np.zeros(idx.n)
    e[k - 1] = delta
    wp = extension(idx, BubbleParams(sigma=e), x)
    wm = extension(idx, BubbleParams(sigma=-e), x)
    return (wp - wm) / (2.0 * delta)


def jacobi_field_radial(idx, r, z):
    """Z^0 on the (r, z) tensor grid via the radial identity
    Z^0 = r W_r + z W_z + (m/2) W (z > 0 required)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    f = radial_profiles(idx, r, z, ("W", "Wr_over_r", "Wz"))
    return (
        r[:, None] ** 2 * f["Wr_over_r"]
        + z[None, :] * f["Wz"]
        + 0.5 * idx.m * f["W"]
    )
