"""Point sequences, exponential sums, mean models, and deviation statistics.

This is the substrate every other module builds on: a finite non-decreasing
multiset of positive reals, the twisted sums sum_{n_j <= x} n_j^{-it}, the
smooth comparators M(x) with their twisted main-term integrals, and the
normalized deviation between the two.
"""

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DivisionDegenerate, InvalidGrid
from .quad import DEFAULT_RTOL, twisted_quad

_EPS = np.finfo(float).eps
_TINY = 1e-290


# ---------------------------------------------------------------------------
# sequences
# ---------------------------------------------------------------------------


class PointSequence:
    """A finite non-decreasing multiset of positive reals.

    Repeated values are stored expanded, so multiplicity is simply the
    repetition count.  Instances are immutable.
    """

    __slots__ = ("values", "log_values")

    def __init__(self, values, presorted=False):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if arr.size and not presorted:
            arr = np.sort(arr)
        else:
            arr = arr.copy()
        if arr.size:
            if not np.isfinite(arr).all():
                raise ValueError("sequence values must be finite")
            if arr[0] <= 0.0:
                raise ValueError("sequence values must be positive")
            if presorted and np.any(np.diff(arr) < 0):
                raise ValueError("values not sorted")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        logs = np.log(arr)
        logs.setflags(write=False)
        object.__setattr__(self, "log_values", logs)

    def __setattr__(self, name, value):
        raise AttributeError("PointSequence is immutable")

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return isinstance(other, PointSequence) and np.array_equal(
            self.values, other.values
        )

    def counting(self, x):
        """N(x): number of points <= x, with multiplicity."""
        return int(np.searchsorted(self.values, x, side="right"))

    def prefix(self, x):
        """Array view of all points <= x."""
        return self.values[: self.counting(x)]

    @classmethod
    def integers(cls, n):
        """The classical sequence 1, 2, ..., n."""
        return cls(np.arange(1, n + 1, dtype=np.float64), presorted=True)


@dataclass(frozen=True)
class ExpSumResult:
    """Value of a twisted sum with its accumulated floating-error bound."""

    value: complex
    terms_used: int
    est_roundoff: float


def exp_sum(seq, x, t):
    """sum over points n_j <= x (with multiplicity) of exp(-i t log n_j).

    The t = 0 case is the exact integer count.  Real and imaginary parts
    are accumulated with exactly-rounded (fsum) summation, so the reported
    ``est_roundoff`` is dominated by the per-term phase error
    ~ 2 |t| log(n) ulp.
    """
    if not (x > 0) or not math.isfinite(t):
        raise ValueError("need x > 0 and finite t")
    count = seq.counting(x)
    if count == 0:
        return ExpSumResult(0j, 0, 0.0)
    if t == 0.0:
        return ExpSumResult(complex(count), count, 0.0)
    logs = seq.log_values[:count]
    phases = -t * logs
    re = math.fsum(np.cos(phases))
    im = math.fsum(np.sin(phases))
    max_log = float(np.max(np.abs(logs)))
    per_term = 2.0 * abs(t) * max_log * _EPS + 4.0 * _EPS
    return ExpSumResult(complex(re, im), count, count * per_term)


# ---------------------------------------------------------------------------
# mean models
# ---------------------------------------------------------------------------


class MeanModel:
    """Smooth comparator M(x): M(x0) = 0, non-decreasing, right-continuous.

    Subclasses provide ``value`` (vectorizable where noted) and
    ``main_term``, the twisted integral over [x0, x] of u^{-it} dM(u).
    """

    x0 = 1.0

    def value(self, x):
        raise NotImplementedError

    def main_term(self, x, t, rtol=DEFAULT_RTOL):
        raise NotImplementedError

    def quantile(self, j, tol=1e-12):
        """x_j = inf{x : M(x) >= j}, by bracketed bisection."""
        from .random_models import step_quantile  # local: avoids cycle

        return step_quantile(self, j, tol)


class LinearMean(MeanModel):
    """M(x) = A (x - x0) on [x0, infinity)."""

    def __init__(self, slope, x0=1.0):
        if slope <= 0 or x0 < 0:
            raise ValueError("need slope > 0 and x0 >= 0")
        self.slope = float(slope)
        self.x0 = float(x0)

    def value(self, x):
        return self.slope * np.maximum(np.asarray(x, dtype=float) - self.x0, 0.0)

    def main_term(self, x, t, rtol=DEFAULT_RTOL):
        if x < self.x0:
            raise ValueError("x below support start")
        if t == 0.0:
            return complex(self.slope * (x - self.x0))
        s = 1.0 - 1j * t
        top = complex(x) ** s
        bot = complex(self.x0) ** s if self.x0 > 0 else 0j
        return self.slope * (top - bot) / s

    def quantile(self, j, tol=1e-12):
        return self.x0 + j / self.slope


def log_integral(x):
    """Li(x) = ∫_1^x (1 - 1/u) / log u du, for x >= 1 (vectorized)."""
    x = np.asarray(x, dtype=float)
    # li(x) - loglog(x) is an antiderivative of (1 - 1/u)/log(u) for x > 1
    with np.errstate(divide="ignore", invalid="ignore"):
        lx = np.log(x)
        anti = special.expi(lx) - np.log(lx)
    out = np.where(x > 1.0, anti - _LI_ANCHOR, 0.0)
    return out if out.ndim else float(out)


# antiderivative value approached as x -> 1+ : li(x) - loglog(x) -> gamma
_LI_ANCHOR = float(np.euler_gamma)


class LogIntegralMean(MeanModel):
    """M(x) = Li(x), the offset logarithmic integral; density (1-1/u)/log u."""

    x0 = 1.0

    def value(self, x):
        return log_integral(x)

    @staticmethod
    def density(u):
        if u <= 1.0:
            return 0.0
        return (1.0 - 1.0 / u) / math.log(u)

    def main_term(self, x, t, rtol=DEFAULT_RTOL):
        if x < 1.0:
            raise ValueError("x below support start")
        if x == 1.0:
            return 0j
        val, _ = twisted_quad(self.density, 1.0, x, t, rtol, scale=max(1.0, x))
        return val


class ShiftedLogIntegralMean(MeanModel):
    """M(x) = Li(x) - Li(x^a) for a in (0, 1)."""

    x0 = 1.0

    def __init__(self, a):
        if not 0.0 < a < 1.0:
            raise ValueError("need 0 < a < 1")
        self.a = float(a)

    def value(self, x):
        return log_integral(x) - log_integral(np.asarray(x, dtype=float) ** self.a)

    def density(self, u):
        if u <= 1.0:
            return 0.0
        lu = math.log(u)
        inner = (1.0 - u ** (-self.a)) / (self.a * lu) * self.a * u ** (self.a - 1.0)
        return (1.0 - 1.0 / u) / lu - inner

    def main_term(self, x, t, rtol=DEFAULT_RTOL):
        if x < 1.0:
            raise ValueError("x below support start")
        if x == 1.0:
            return 0j
        val, _ = twisted_quad(self.density, 1.0, x, t, rtol, scale=max(1.0, x))
        return val


class TabulatedStepMean(MeanModel):
    """Pure-jump M: atoms of given mass at given locations."""

    def __init__(self, jump_x, jump_mass, x0=None):
        jx = np.asarray(jump_x, dtype=float)
        jm = np.asarray(jump_mass, dtype=float)
        if jx.size != jm.size or jx.size == 0:
            raise ValueError("need matching non-empty jump arrays")
        order = np.argsort(jx, kind="stable")
        self.jump_x = jx[order]
        self.jump_mass = jm[order]
        if np.any(self.jump_mass < 0):
            raise ValueError("jump masses must be non-negative")
        self.cum = np.cumsum(self.jump_mass)
        self.x0 = float(x0) if x0 is not None else float(self.jump_x[0]) * 0.5

    @classmethod
    def comb(cls, k, count):
        """M(x) = (1/k) * floor(x - k + 1) for x >= k: atoms 1/k at k, k+1, ..."""
        locs = np.arange(k, k + count, dtype=float)
        return cls(locs, np.full(count, 1.0 / k), x0=float(k) - 0.5)

    def value(self, x):
        idx = np.searchsorted(self.jump_x, np.asarray(x, dtype=float), side="right")
        padded = np.concatenate(([0.0], self.cum))
        out = padded[idx]
        return out if out.ndim else float(out)

    def main_term(self, x, t, rtol=DEFAULT_RTOL):
        if x < self.x0:
            raise ValueError("x below support start")
        n = int(np.searchsorted(self.jump_x, x, side="right"))
        if n == 0:
            return 0j
        if t == 0.0:
            return complex(self.cum[n - 1])
        ph = np.exp(-1j * t * np.log(self.jump_x[:n]))
        return complex(np.sum(self.jump_mass[:n] * ph))


# ---------------------------------------------------------------------------
# deviation statistics
# ---------------------------------------------------------------------------


class Norm(enum.Enum):
    """Normalizations for |S(x,t) - main term|."""

    LH_EPS = "LH_EPS"
    PROB_BOUND = "PROB_BOUND"
    LH_TILDE = "LH_TILDE"


def normalizer(norm, eps, model, seq, x, t):
    if norm is Norm.LH_EPS:
        if abs(t) <= 1.0:
            raise ValueError("LH_EPS normalization needs |t| > 1")
        return math.sqrt(float(model.value(x))) * abs(t) ** eps
    if norm is Norm.PROB_BOUND:
        m = float(model.value(x))
        return (
            math.sqrt(m)
            * (math.sqrt(math.log(x + 1.0)) + math.sqrt(math.log(abs(t) + 1.0)))
            * math.log(x + 1.0)
        )
    if norm is Norm.LH_TILDE:
        return math.sqrt(seq.counting(x)) * abs(t) ** eps
    raise ValueError(f"unknown norm {norm}")


def deviation(seq, model, x, t, norm, eps=0.0, rtol=DEFAULT_RTOL):
    """raw deviation |exp_sum - main_term| divided by the chosen normalizer."""
    if x < model.x0:
        raise ValueError("x below model support")
    s = exp_sum(seq, x, t)
    m = model.main_term(x, t, rtol)
    raw = abs(s.value - m)
    denom = normalizer(norm, eps, model, seq, x, t)
    if denom < _TINY:
        raise DivisionDegenerate(f"normalizer {denom:.3e} at x={x}, t={t}")
    return raw / denom


@dataclass(frozen=True)
class GridEntry:
    x: float
    t: float
    raw_dev: float
    normalized_dev: float
    norm: str
    eps: float
    error: str = ""


@dataclass(frozen=True)
class DeviationGrid:
    """Scan results, sorted by (x, t); failed points are flagged, not fatal."""

    entries: tuple = field(default_factory=tuple)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "t", "raw_dev", "normalized_dev", "norm", "eps"])
        for e in self.entries:
            w.writerow(
                [
                    format(e.x, ".17g"),
                    format(e.t, ".17g"),
                    format(e.raw_dev, ".17g"),
                    format(e.normalized_dev, ".17g"),
                    e.norm,
                    format(e.eps, ".17g"),
                ]
            )
        return buf.getvalue()

    def to_json(self):
        return json.dumps(
            [
                {
                    "x": e.x,
                    "t": e.t,
                    "raw_dev": e.raw_dev,
                    "normalized_dev": e.normalized_dev,
                    "norm": e.norm,
                    "eps": e.eps,
                    "error": e.error,
                }
                for e in self.entries
            ],
            indent=2,
        )


def scan(seq, model, x_grid, t_rule, norm, eps=0.0, rtol=DEFAULT_RTOL):
    """Evaluate the deviation over an (x, t) grid.

    ``t_rule`` is either an explicit list of t values (the grid is the
    cartesian product) or a pair ``("power", p)`` pairing each x with
    t = x**p.  Per-point failures are recorded as flagged entries.
    """
    xs = list(x_grid)
    if not xs:
        raise InvalidGrid("empty x grid")
    if isinstance(t_rule, tuple) and len(t_rule) == 2 and t_rule[0] == "power":
        pairs = [(float(x), float(x) ** t_rule[1]) for x in xs]
    else:
        ts = list(t_rule)
        if not ts:
            raise InvalidGrid("empty t list")
        pairs = [(float(x), float(t)) for x in xs for t in ts]
    pairs.sort()
    entries = []
    for x, t in pairs:
        try:
            s = exp_sum(seq, x, t)
            m = model.main_term(x, t, rtol)
            raw = abs(s.value - m)
            denom = normalizer(norm, eps, model, seq, x, t)
            if denom < _TINY:
                raise DivisionDegenerate(f"normalizer at x={x}")
            entries.append(GridEntry(x, t, raw, raw / denom, norm.value, eps))
        except Exception as exc:  # flagged, never aborts the scan
            code = getattr(exc, "code", type(exc).__name__)
            entries.append(GridEntry(x, t, math.nan, math.nan, norm.value, eps, code))
    return DeviationGrid(tuple(entries))
