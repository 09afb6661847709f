"""Zeta-function numerics over point sequences and generalized number systems.

Covers direct series and Euler-product evaluation in the half-plane of
convergence, analytic continuation into the critical strip through the
partial-sum formula with its explicit error bound, the log-derivative
partial sum, effective Perron inversion with a per-term analytic kernel,
convexity-constant measurement, and an explicit template zeta built from
windowed oscillatory terms with prescribed critical-strip growth.
"""

import cmath
import csv
import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .beurling import BeurlingSystem
from .core import PointSequence
from .errors import (
    CutoffExceeded,
    PoleProximity,
    SigmaBelowTheta,
    SigmaTooSmall,
)

# mirrors the analytic treatment that stays away from the pole at s = 1
POLE_EXCLUSION_RADIUS = 0.25

_POLE_TOL = 1e-8


class ZetaMethod(enum.Enum):
    SERIES = "SERIES"
    EULER = "EULER"
    CONTINUED = "CONTINUED"
    TEMPLATE = "TEMPLATE"


@dataclass(frozen=True)
class ZetaValue:
    value: complex
    abs_error_bound: float
    method: ZetaMethod
    x: float = math.nan  # truncation point, where applicable

    def __post_init__(self):
        if not (self.abs_error_bound >= 0.0 and math.isfinite(self.abs_error_bound)):
            raise ValueError("error bound must be finite and non-negative")


def _points_of(obj):
    if isinstance(obj, BeurlingSystem):
        return obj.integers
    if isinstance(obj, PointSequence):
        return obj
    raise TypeError("expected a PointSequence or BeurlingSystem")


def _powers(values_log, s):
    """n^{-s} for an array of log n, vectorized."""
    return np.exp(-s * values_log)


def zeta_series(obj, s, tail_A=1.0):
    """Direct Dirichlet series over the stored points, sigma > 1.

    ``tail_A`` is the declared constant with N(x) <= A x, which gives the
    tail bound A*sigma*X^{1-sigma}/(sigma-1) + A*X^{1-sigma} past the
    largest stored point X.
    """
    seq = _points_of(obj)
    sigma = s.real
    if sigma <= 1.0:
        raise SigmaTooSmall(f"series needs sigma > 1, got {sigma}")
    if len(seq) == 0:
        raise ValueError("empty sequence")
    terms = _powers(seq.log_values, s)
    val = complex(math.fsum(terms.real), math.fsum(terms.imag))
    X = float(seq.values[-1])
    tail = tail_A * sigma * X ** (1.0 - sigma) / (sigma - 1.0) + tail_A * X ** (
        1.0 - sigma
    )
    return ZetaValue(val, tail, ZetaMethod.SERIES, X)


def zeta_euler(obj, s, cutoff_P=math.inf):
    """Euler product over primes <= cutoff_P, sigma > 1.

    The truncation bound exponentiates the exact tail sum over the stored
    primes beyond the cutoff (finite systems make this computable).
    """
    sigma = s.real
    if sigma <= 1.0:
        raise SigmaTooSmall(f"Euler product needs sigma > 1, got {sigma}")
    if isinstance(obj, BeurlingSystem):
        primes = np.asarray(obj.primes, dtype=float)
    else:
        primes = np.sort(np.asarray(list(obj), dtype=float))
    if primes.size == 0 or primes[0] <= 1.0:
        raise ValueError("need primes > 1")
    used = primes[primes <= cutoff_P]
    rest = primes[primes > cutoff_P]
    log_val = complex(0.0)
    for p in used:
        log_val -= cmath.log(1.0 - p ** (-s))
    val = cmath.exp(log_val)
    # |log tail| <= sum over skipped primes of p^{-sigma}/(1-p^{-sigma})
    tail_log = float(np.sum(rest ** (-sigma) / (1.0 - rest ** (-sigma)))) if rest.size else 0.0
    err = abs(val) * (math.expm1(tail_log)) if tail_log else 0.0
    return ZetaValue(val, err, ZetaMethod.EULER, float(used[-1]) if used.size else 0.0)


def measured_count_constant(seq, A, theta, x_max=None):
    """sup over the stored range of |N(u) - A u| / u^theta.

    N is a step function, so the sup is attained at the points themselves
    (right value) or just before them (left limit); both are checked.
    """
    vals = seq.values if x_max is None else seq.prefix(x_max)
    if vals.size == 0:
        return 0.0
    n_right = np.arange(1, vals.size + 1, dtype=float)
    n_left = n_right - 1.0
    with np.errstate(divide="ignore"):
        w = vals ** (-theta)
    c_right = np.abs(n_right - A * vals) * w
    c_left = np.abs(n_left - A * vals) * w
    return float(max(c_right.max(), c_left.max()))


def zeta_continued(obj, A, s, x, theta=0.0):
    """Partial sum minus main term: sum_{n_j <= x} n_j^{-s} - A x^{1-s}/(1-s).

    Valid continuation for sigma > theta when N(u) = A u + O(u^theta); the
    error bound C_E (1 + |s|/(sigma-theta)) x^{theta-sigma} uses the
    constant C_E measured from the stored points.
    """
    seq = _points_of(obj)
    sigma = s.real
    if sigma <= theta:
        raise SigmaBelowTheta(f"need sigma > theta={theta}, got {sigma}")
    if x < 1.0:
        raise ValueError("need x >= 1")
    if abs(s - 1.0) < _POLE_TOL:
        raise PoleProximity("s at the pole of the main term")
    n = seq.counting(x)
    if n:
        terms = _powers(seq.log_values[:n], s)
        part = complex(math.fsum(terms.real), math.fsum(terms.imag))
    else:
        part = 0j
    main = A * complex(x) ** (1.0 - s) / (1.0 - s)
    c_e = measured_count_constant(seq, A, theta, x_max=x)
    bound = c_e * (1.0 + abs(s) / (sigma - theta)) * x ** (theta - sigma)
    return ZetaValue(part - main, bound, ZetaMethod.CONTINUED, float(x))


def log_deriv(system, s, x, eps=0.5):
    """-zeta'/zeta via the truncated Mangoldt sum minus x^{1-s}/(1-s).

    Error bound max(|tau|, 1) * C * x^{eps-sigma} / (sigma - eps), with C
    the measured constant sup |psi(u) - u| / u^eps over the stored range.
    """
    sigma = s.real
    if sigma <= eps:
        raise SigmaTooSmall(f"need sigma > eps={eps}, got {sigma}")
    if abs(s - 1.0) < _POLE_TOL:
        raise PoleProximity("s at the main-term pole")
    system._check_cutoff(x)
    n = int(np.searchsorted(system._atom_values, x, side="right"))
    if n:
        terms = system._atom_weights[:n] * _powers(system._atom_logs[:n], s)
        part = complex(math.fsum(terms.real), math.fsum(terms.imag))
    else:
        part = 0j
    main = complex(x) ** (1.0 - s) / (1.0 - s)
    c = _measured_psi_constant(system, eps, x)
    bound = max(abs(s.imag), 1.0) * c * x ** (eps - sigma) / (sigma - eps)
    return ZetaValue(part - main, bound, ZetaMethod.CONTINUED, float(x))


def _measured_psi_constant(system, eps, x_max):
    atoms = system._atom_values
    n = int(np.searchsorted(atoms, x_max, side="right"))
    if n == 0:
        return 0.0
    cum = np.cumsum(system._atom_weights[:n])
    pts = atoms[:n]
    with np.errstate(divide="ignore"):
        w = pts ** (-eps)
    left = np.concatenate(([0.0], cum[:-1]))
    return float(
        max(np.max(np.abs(cum - pts) * w), np.max(np.abs(left - pts) * w))
    )


# ---------------------------------------------------------------------------
# effective Perron inversion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DirichletPolynomial:
    """Finite sum a_j n_j^{-s} with explicit coefficients."""

    points: tuple
    coeffs: tuple

    def __post_init__(self):
        if len(self.points) != len(self.coeffs) or not self.points:
            raise ValueError("need matching non-empty points and coeffs")
        if min(self.points) <= 0:
            raise ValueError("points must be positive")

    @classmethod
    def counting(cls, seq):
        """Coefficients all 1: F = zeta of the sequence, recovers N."""
        return cls(tuple(float(v) for v in seq.values), (1.0,) * len(seq))

    @classmethod
    def mangoldt(cls, system):
        """Lambda coefficients: F = -zeta'/zeta, recovers psi."""
        return cls(
            tuple(float(v) for v in system._atom_values),
            tuple(float(w) for w in system._atom_weights),
        )

    def __call__(self, s):
        pts = np.asarray(self.points)
        cs = np.asarray(self.coeffs)
        terms = cs * np.exp(-s * np.log(pts))
        return complex(math.fsum(terms.real), math.fsum(terms.imag))


def _perron_kernel(y, kappa, T):
    """(1/2pi i) * integral of y^s / s over the segment [kappa-iT, kappa+iT].

    Exact via the exponential integral: the antiderivative of y^s/s in s
    is Ei(s log y), giving Im(Ei((kappa+iT) log y)) / pi for y != 1.
    """
    L = math.log(y)
    if L == 0.0:
        # at y = 1 the integral reduces to (1/pi) arctan(T/kappa)
        return math.atan(T / kappa) / math.pi
    z = complex(kappa, T) * L
    # antiderivative of y^s/s is Ei(s log y); for y > 1 the path ends on
    # the branch continued from above (+i pi relative to -E1(-z)), while
    # for y < 1 -E1(-z) is already the continuous branch
    ei = -special.exp1(-z)
    if L > 0:
        ei += 1j * math.pi
    return ei.imag / math.pi


def perron_budget(poly, x, kappa, T):
    """x^kappa * sum |a_j| / (n_j^kappa (1 + T |log(x/n_j)|))."""
    pts = np.asarray(poly.points)
    cs = np.abs(np.asarray(poly.coeffs))
    y = x / pts
    return float(
        np.sum(cs * y**kappa / (1.0 + T * np.abs(np.log(y))))
    )


def perron_count(zeta_like, x, kappa, T, quad_step=0.25, budget_poly=None):
    """Truncated Perron inversion (1/2pi i) int F(s) x^s ds / s.

    For a :class:`DirichletPolynomial` the integral is evaluated term by
    term with the exact analytic kernel, so the only numerical error is
    at roundoff level.  For a black-box callable a panel-doubling
    Gauss-Legendre rule on the vertical segment is used (``quad_step`` is
    the starting panel height); supply ``budget_poly`` to get the
    truncation budget in that case.

    Returns ``(value, error_budget)`` where the budget is the truncation
    bound plus the quadrature error estimate.
    """
    if kappa <= 0:
        raise ValueError("need kappa > 0")
    if T <= 0:
        raise ValueError("need T > 0")
    if isinstance(zeta_like, DirichletPolynomial):
        pts = np.asarray(zeta_like.points)
        cs = np.asarray(zeta_like.coeffs)
        total = math.fsum(
            c * _perron_kernel(x / p, kappa, T) for p, c in zip(pts, cs)
        )
        quad_err = 1e-13 * float(np.sum(np.abs(cs) * (x / pts) ** kappa))
        budget = perron_budget(zeta_like, x, kappa, T)
        return complex(total), budget + quad_err

    from .quad import refining_gl_quad

    def integrand(v):
        v = np.atleast_1d(v)
        out = np.empty(v.shape, dtype=complex)
        for i, vi in enumerate(v):
            s = complex(kappa, vi)
            out[i] = zeta_like(s) * complex(x) ** s / s
        return out

    val, q_err = refining_gl_quad(integrand, -T, T, panel=quad_step)
    val /= 2.0 * math.pi
    q_err /= 2.0 * math.pi
    budget = perron_budget(budget_poly, x, kappa, T) if budget_poly else 0.0
    return complex(val), budget + q_err


# ---------------------------------------------------------------------------
# convexity measurement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexityEntry:
    sigma: float
    tau: float
    abs_zeta: float
    measured_C: float


@dataclass(frozen=True)
class ConvexityReport:
    entries: tuple
    max_low: float  # max C over the lower half of the tau range
    max_high: float
    passed: bool
    caveat: str = (
        "zero-freeness for sigma > 1/2 is assumed from the sampled grid only"
    )


def convexity_check(seq, A, sigma_grid, tau_grid, theta=0.5, drift_tol=1.25):
    """Measured convexity constants C(sigma, tau).

    C = |zeta(s)| / ((|tau|+1)/(sigma-1/2))^{2-2sigma} in general;
    at sigma = 3/4 the sharper normalization |tau|^{1/2} log|tau| + 1 is
    used.  Passes when the max over the upper half of the tau range does
    not exceed ``drift_tol`` times the max over the lower half.
    """
    taus = sorted(float(t) for t in tau_grid)
    entries = []
    for sigma in sigma_grid:
        sigma = float(sigma)
        if sigma <= 0.5:
            raise ValueError("sigma grid must lie in (1/2, 1]")
        for tau in taus:
            s = complex(sigma, tau)
            x = (abs(tau) + 1.0) ** 2
            z = zeta_continued(seq, A, s, max(x, 2.0), theta=theta)
            if abs(sigma - 0.75) < 1e-12:
                norm = abs(tau) ** 0.5 * math.log(max(abs(tau), 2.0)) + 1.0
            else:
                norm = ((abs(tau) + 1.0) / (sigma - 0.5)) ** (2.0 - 2.0 * sigma)
            entries.append(
                ConvexityEntry(sigma, tau, abs(z.value), abs(z.value) / norm)
            )
    mid = taus[len(taus) // 2]
    lows = [e.measured_C for e in entries if e.tau <= mid]
    highs = [e.measured_C for e in entries if e.tau > mid]
    max_low = max(lows) if lows else 0.0
    max_high = max(highs) if highs else 0.0
    return ConvexityReport(
        tuple(entries), max_low, max_high, max_high <= drift_tol * max_low
    )


# ---------------------------------------------------------------------------
# template zeta
# ---------------------------------------------------------------------------


def _two_pi_adjust(log_value, tau):
    """Nearest log with tau * log in 2 pi Z; moves it by less than pi/tau."""
    return 2.0 * math.pi * round(tau * log_value / (2.0 * math.pi)) / tau


@dataclass(frozen=True)
class TemplateZetaParams:
    """Windowed-oscillation template with prescribed critical-strip growth.

    Window k spans [A_k, B_k] with log A_k ~ (1+delta_k) log tau_k and
    log B_k ~ nu_k log tau_k, both snapped so that tau_k log A_k and
    tau_k log B_k are multiples of 2 pi (the snapping moves each log by
    less than 2 pi / tau_k).
    """

    beta: float
    tau_ks: tuple
    log_A: tuple
    log_B: tuple

    @classmethod
    def build(cls, beta, tau_ks, delta_ks, nu_ks):
        if not 0.5 < beta < 1.0:
            raise ValueError("need beta in (1/2, 1)")
        taus = [float(t) for t in tau_ks]
        if any(b <= a for a, b in zip(taus, taus[1:])) or min(taus) <= 1.0:
            raise ValueError("tau_ks must be increasing and > 1")
        log_A, log_B = [], []
        for tau, d, nu in zip(taus, delta_ks, nu_ks):
            la = _two_pi_adjust((1.0 + d) * math.log(tau), tau)
            lb = _two_pi_adjust(nu * math.log(tau), tau)
            if la >= lb:
                raise ValueError(f"window empty at tau={tau}: need 1+delta < nu")
            log_A.append(la)
            log_B.append(lb)
        return cls(beta, tuple(taus), tuple(log_A), tuple(log_B))

    @classmethod
    def default(cls, k_max=5, beta=0.8):
        # geometric growth of log tau keeps every window numerically
        # reachable (cross-checkable by quadrature) while later windows
        # stay irrelevant below astronomically large x
        ks = np.arange(1, k_max + 1)
        taus = np.exp(4.0 + 2.0 * ks)
        deltas = 1.0 / (60.0 * ks)
        nus = 2.0 - 1.0 / (ks + 2.0)
        return cls.build(beta, taus, deltas, nus)

    @property
    def k_max(self):
        return len(self.tau_ks)


def _window_term(params, k, log_u):
    """R_k(x) for log_u = log x: the windowed oscillatory integral in
    closed form, tau Re[u^{beta-1+i tau}/(beta-1+i tau)] between the
    clipped window bounds."""
    la, lb = params.log_A[k], params.log_B[k]
    if log_u <= la:
        return 0.0
    hi = min(log_u, lb)
    z = complex(params.beta - 1.0, params.tau_ks[k])

    def anti(v):
        return (cmath.exp(z * v) / z).real

    return params.tau_ks[k] * (anti(hi) - anti(la))


def template_psi(params, x, k_max=None):
    """psi_C(x) = x - log x - 1 + sum of the window terms R_k(x)."""
    if x < 1.0:
        raise ValueError("need x >= 1")
    lx = math.log(x)
    km = params.k_max if k_max is None else min(k_max, params.k_max)
    total = x - lx - 1.0
    for k in range(km):
        if lx <= params.log_A[k]:
            break  # windows ordered: later ones start even higher
        total += _window_term(params, k, lx)
    return total


def template_window_sum(params, x):
    """sum_k |R_k(x)|, for boundedness diagnostics."""
    lx = math.log(x)
    return math.fsum(
        abs(_window_term(params, k, lx))
        for k in range(params.k_max)
        if lx > params.log_A[k]
    )


def template_eta(params, k, s):
    """Mellin transform of the k-th window measure:

    (tau/2) (B^{beta-1-s} - A^{beta-1-s})
          * (1/(beta-1-s+i tau) + 1/(beta-1-s-i tau)).
    """
    tau = params.tau_ks[k]
    w = params.beta - 1.0 - s
    d1 = w + 1j * tau
    d2 = w - 1j * tau
    if min(abs(d1), abs(d2)) < _POLE_TOL:
        raise PoleProximity(f"s within {_POLE_TOL} of a template pole (k={k})")
    a_pow = cmath.exp(params.log_A[k] * w)
    b_pow = cmath.exp(params.log_B[k] * w)
    # orientation follows the transform itself: evaluating the window
    # antiderivative at B minus at A (the window phases are trivial by
    # the 2 pi snapping)
    return (tau / 2.0) * (b_pow - a_pow) * (1.0 / d1 + 1.0 / d2)


def template_logderiv(params, s, k_max=None):
    """-zeta_C'/zeta_C(s) = 1/(s-1) - 1/s + sum_k eta_k(s)."""
    if abs(s - 1.0) < _POLE_TOL or abs(s) < _POLE_TOL:
        raise PoleProximity("s at 0 or 1")
    km = params.k_max if k_max is None else min(k_max, params.k_max)
    total = 1.0 / (s - 1.0) - 1.0 / s
    for k in range(km):
        total += template_eta(params, k, s)
    return total


# ---------------------------------------------------------------------------
# critical-line diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalLineScan:
    entries: tuple  # (tau, abs_zeta, err_bound)
    slope: float  # least-squares slope of log|zeta| vs log tau
    method: str = "CONTINUED"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "abs_zeta", "method", "err_bound"])
        for tau, az, eb in self.entries:
            w.writerow(
                [format(tau, ".17g"), format(az, ".17g"), self.method, format(eb, ".17g")]
            )
        return buf.getvalue()


def critical_line_scan(seq, A, tau_grid, theta=0.0):
    """|zeta(1/2 + i tau)| through the continuation formula at x = tau^B.

    B = 1/(1/2 - theta) makes the continuation error decay like a fixed
    negative power of tau.  Returns magnitudes and the fitted growth
    exponent.
    """
    if theta >= 0.5:
        raise ValueError("need theta < 1/2")
    B = 1.0 / (0.5 - theta)
    x_top = float(seq.values[-1])
    entries = []
    for tau in sorted(float(t) for t in tau_grid):
        if tau < 2.0:
            raise ValueError("tau grid must start at 2 or above")
        x = tau**B
        if x > x_top:
            raise CutoffExceeded(f"x = tau^{B:.3g} = {x:.3g} beyond stored {x_top:.3g}")
        z = zeta_continued(seq, A, complex(0.5, tau), x, theta=theta)
        entries.append((tau, abs(z.value), z.abs_error_bound))
    lt = np.log([e[0] for e in entries])
    lz = np.log(np.maximum([e[1] for e in entries], 1e-300))
    slope = float(np.polyfit(lt, lz, 1)[0])
    return CriticalLineScan(tuple(entries), slope)


def lh_tilde_check(seq, x_grid, t_budget=32, eps=0.1, t_grid=None):
    """sup over sampled t >= N(x)^{1/2} of |S(x,t)| / (N(x)^{1/2} |t|^eps).

    Per x the t values are log-spaced from N(x)^{1/2} up to N(x)^2
    unless an explicit ``t_grid`` is given (values below the threshold
    are skipped).
    """
    from .core import exp_sum

    report = []
    for x in x_grid:
        x = float(x)
        n = seq.counting(x)
        if n == 0:
            report.append((x, 0.0, 0.0))
            continue
        t_min = math.sqrt(n)
        if t_grid is None:
            ts = np.geomspace(t_min, max(float(n) ** 2, t_min * 10.0), t_budget)
        else:
            ts = [t for t in t_grid if t >= t_min]
        worst = 0.0
        worst_t = 0.0
        for t in ts:
            ratio = abs(exp_sum(seq, x, float(t)).value) / (
                math.sqrt(n) * abs(t) ** eps
            )
            if ratio > worst:
                worst, worst_t = ratio, float(t)
        report.append((x, worst, worst_t))
    return report
