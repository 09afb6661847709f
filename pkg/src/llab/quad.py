"""Adaptive quadrature helpers for complex-valued and oscillatory integrands.

All routines raise :class:`~llab.errors.QuadratureNonconverged` when the
requested relative tolerance cannot be certified within the evaluation
budget.  The default tolerance is deliberately much tighter than any
statistical deviation we measure against the resulting main terms.
"""

import math

import numpy as np
from scipy import integrate

from .errors import QuadratureNonconverged

DEFAULT_RTOL = 1e-10

# above this |t| the u^{-it} factor is integrated with scipy's dedicated
# oscillatory (Clenshaw-Curtis moment) rule after the v = log u substitution
OSC_THRESHOLD = 30.0

_QUAD_LIMIT = 400


def _quad(f, a, b, rtol, scale=1.0):
    """scipy.integrate.quad with convergence checking.

    ``scale`` sets the magnitude against which the absolute tolerance is
    anchored, so that integrals with heavy cancellation still converge.
    """
    epsabs = rtol * max(scale, 1e-300)
    val, err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=rtol, limit=_QUAD_LIMIT)
    if err > 10 * epsabs + 10 * rtol * abs(val):
        raise QuadratureNonconverged(
            f"estimated error {err:.3e} for integral of magnitude {abs(val):.3e}"
        )
    return val, err


def complex_quad(f, a, b, rtol=DEFAULT_RTOL, scale=1.0):
    """Integrate a complex-valued ``f`` over [a, b].

    Returns ``(value, err_bound)``.
    """
    re, re_err = _quad(lambda u: f(u).real, a, b, rtol, scale)
    im, im_err = _quad(lambda u: f(u).imag, a, b, rtol, scale)
    return complex(re, im), re_err + im_err


def _osc_quad(g, a, b, omega, rtol, scale):
    """∫_a^b exp(-i*omega*v) g(v) dv for real smooth g, via weighted quad."""
    epsabs = rtol * max(scale, 1e-300)
    kw = dict(epsabs=epsabs, epsrel=rtol, limit=_QUAD_LIMIT)
    c, c_err = integrate.quad(g, a, b, weight="cos", wvar=omega, **kw)
    s, s_err = integrate.quad(g, a, b, weight="sin", wvar=omega, **kw)
    err = c_err + s_err
    val = complex(c, -s)
    if err > 10 * epsabs + 10 * rtol * abs(val):
        raise QuadratureNonconverged(
            f"oscillatory integral error {err:.3e} at omega={omega:.3e}"
        )
    return val, err


def twisted_quad(density, a, b, t, rtol=DEFAULT_RTOL, scale=None):
    """Compute ∫_a^b u^{-it} density(u) du.

    ``density`` must accept scalar floats.  Uses the substitution
    v = log u, under which the integral becomes
    ∫ exp(-i t v) density(e^v) e^v dv, and applies a dedicated
    oscillatory rule when |t| is large.

    Returns ``(value, err_bound)``.
    """
    if b <= a:
        return 0j, 0.0
    if scale is None:
        mid = 0.5 * (a + b)
        scale = abs(density(mid)) * (b - a) + 1e-30
    if t == 0.0:
        val, err = _quad(density, a, b, rtol, scale)
        return complex(val), err
    la, lb = math.log(a), math.log(b)

    def g(v):
        ev = math.exp(v)
        return density(ev) * ev

    if abs(t) < OSC_THRESHOLD:
        return complex_quad(lambda v: np.exp(-1j * t * v) * g(v), la, lb, rtol, scale)
    return _osc_quad(g, la, lb, t, rtol, scale)


def gauss_legendre_panels(f, a, b, panel, nodes=8):
    """Composite Gauss-Legendre rule with fixed panel width.

    ``f`` must be vectorized over a numpy array and may return complex.
    """
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    n_panels = max(1, int(math.ceil((b - a) / panel)))
    edges = np.linspace(a, b, n_panels + 1)
    lo = edges[:-1]
    half = 0.5 * (edges[1:] - lo)
    # all nodes at once: shape (n_panels, nodes)
    pts = (lo + half)[:, None] + half[:, None] * xs[None, :]
    vals = f(pts.ravel()).reshape(n_panels, nodes)
    return np.sum(vals * ws[None, :] * half[:, None])


def refining_gl_quad(f, a, b, panel, rtol=1e-8, max_refine=12):
    """Panel-doubling Gauss-Legendre quadrature.

    Halves the panel width until two successive refinements agree to
    ``rtol`` relative.  Returns ``(value, err_estimate)``.
    """
    prev = gauss_legendre_panels(f, a, b, panel)
    for _ in range(max_refine):
        panel /= 2.0
        cur = gauss_legendre_panels(f, a, b, panel)
        diff = abs(cur - prev)
        if diff <= rtol * max(abs(cur), 1.0):
            return cur, diff
        prev = cur
    raise QuadratureNonconverged(
        f"panel refinement stalled at width {panel:.3e} (diff {diff:.3e})"
    )
