"""Probabilistic sequence samplers and Monte-Carlo deviation verification.

Two sampler families: quantile samplers drawing point j from the mean
model's mass on (x_{j-1}, x_j] (plus a block variant), and uniform-window
samplers drawing point j uniformly from (j/A - K j^theta, j/A + K j^theta].
All randomness is counter-based: the uniform driving point j is a pure
function of (seed, trial, j), so parallel generation matches serial and
reruns are bit-identical.
"""

import csv
import enum
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    LinearMean,
    Norm,
    PointSequence,
    TabulatedStepMean,
    exp_sum,
    normalizer,
)
from .errors import RootfindFail

CHUNK = 8192


def uniforms(seed, trial, start, count):
    """Uniforms u_j for j in [start, start+count), independent of call order.

    Each length-CHUNK block of indices is generated from its own Philox
    stream keyed by (seed, trial, block), so any sub-range can be produced
    without generating the rest.
    """
    out = np.empty(count)
    pos = 0
    j = start
    while pos < count:
        block, off = divmod(j, CHUNK)
        take = min(CHUNK - off, count - pos)
        key = [np.uint64(seed), (np.uint64(trial) << np.uint64(32)) | np.uint64(block)]
        u = np.random.Generator(np.random.Philox(key=key)).random(CHUNK)
        out[pos : pos + take] = u[off : off + take]
        pos += take
        j += take
    return out


class SamplerKind(enum.Enum):
    QUANTILE = "quantile"
    QUANTILE_BLOCK = "quantile_block"
    UNIFORM_WINDOW = "uniform_window"


@dataclass(frozen=True)
class SamplerSpec:
    """Description of a random sequence model.

    QUANTILE draws n_j from dM on (x_{j-1}, x_j]; QUANTILE_BLOCK draws the
    points of each index block jointly from the block's mass (block sizes
    must satisfy j_l - j_{l-1} <= block_c * sqrt(j_{l-1})); UNIFORM_WINDOW
    draws n_j uniformly from (j/A - K j^theta, j/A + K j^theta] ∩ (0, inf).
    """

    kind: SamplerKind
    J: int
    seed: int
    model: object = None  # MeanModel for the quantile kinds
    block_ends: tuple = ()  # for QUANTILE_BLOCK
    A: float = 1.0
    K: float = 1.0
    theta: float = 0.5
    block_c: float = 2.0

    def validate(self):
        if self.J < 1:
            raise ValueError("need J >= 1")
        if self.kind in (SamplerKind.QUANTILE, SamplerKind.QUANTILE_BLOCK):
            if self.model is None:
                raise ValueError("quantile sampler needs a mean model")
        if self.kind is SamplerKind.QUANTILE_BLOCK:
            ends = list(self.block_ends)
            if not ends or ends[-1] < self.J or ends != sorted(ends):
                raise ValueError("block_ends must be increasing and cover J")
            prev = 0
            for e in ends:
                if prev > 0 and e - prev > self.block_c * math.sqrt(prev):
                    raise ValueError(
                        f"block ({prev}, {e}] longer than {self.block_c}*sqrt(j)"
                    )
                prev = e
        if self.kind is SamplerKind.UNIFORM_WINDOW:
            if not (0.0 < self.theta < 1.0 and self.A > 0 and self.K > 0):
                raise ValueError("need 0 < theta < 1 and A, K > 0")

    def to_json(self):
        d = {"kind": self.kind.value, "J": self.J, "seed": self.seed}
        if self.kind is SamplerKind.UNIFORM_WINDOW:
            d.update(A=self.A, K=self.K, theta=self.theta)
        else:
            d["model"] = type(self.model).__name__
            if self.block_ends:
                d["block_ends"] = list(self.block_ends)
                d["block_c"] = self.block_c
        return json.dumps(d, indent=2)


# ---------------------------------------------------------------------------
# quantiles of a mean model
# ---------------------------------------------------------------------------


def step_quantile(model, target, tol=1e-12, hi_guess=2.0):
    """inf{x : M(x) >= target}, by bracket expansion + bisection.

    Works for continuous and step models alike; right-continuity makes the
    infimum well-defined.
    """
    lo = model.x0
    hi = max(hi_guess, lo + 1.0)
    for _ in range(200):
        if model.value(hi) >= target:
            break
        lo = hi
        hi *= 2.0
    else:
        raise RootfindFail(f"no bracket for quantile {target}")
    for _ in range(200):
        if hi - lo <= tol * max(1.0, abs(hi)):
            return hi
        mid = 0.5 * (lo + hi)
        if model.value(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def quantiles_of(model, J, tol=1e-12):
    """x_1..x_J with M(x_j) = j (inf-form for step models)."""
    if isinstance(model, LinearMean):
        return model.x0 + np.arange(1, J + 1) / model.slope
    out = np.empty(J)
    guess = model.x0 + 1.0
    for j in range(1, J + 1):
        guess = step_quantile(model, float(j), tol, hi_guess=guess * 1.0001 + 1.0)
        out[j - 1] = guess
    return out


def _invert_mass(model, targets, x_lo, x_hi, tol=1e-12):
    """Vectorized bisection: x with M(x) = target, inside [x_lo, x_hi]."""
    lo = np.array(x_lo, dtype=float, copy=True)
    hi = np.array(x_hi, dtype=float, copy=True)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        take_hi = np.asarray(model.value(mid)) >= targets
        hi = np.where(take_hi, mid, hi)
        lo = np.where(take_hi, lo, mid)
        if np.max(hi - lo) <= tol * max(1.0, float(np.max(np.abs(hi)))):
            break
    return hi


def _step_atoms(model):
    return (model.jump_x, model.cum) if isinstance(model, TabulatedStepMean) else None


def _sample_quantile(spec, trial):
    model = spec.model
    J = spec.J
    u = uniforms(spec.seed, trial, 0, J)
    targets = np.arange(J) + u  # mass coordinate in (j-1, j]
    if isinstance(model, LinearMean):
        return model.x0 + targets / model.slope
    atoms = _step_atoms(model)
    if atoms is not None:
        # mass-splitting at atoms: the point carrying mass `target` is the
        # first jump location whose cumulative mass reaches it
        jump_x, cum = atoms
        idx = np.searchsorted(cum, targets, side="left")
        if np.any(idx >= jump_x.size):
            raise ValueError("step model exhausted before J points")
        return jump_x[idx]
    xs = quantiles_of(model, J)
    x_lo = np.concatenate(([model.x0], xs[:-1]))
    return _invert_mass(model, targets, x_lo, xs)


def _sample_quantile_block(spec, trial):
    model = spec.model
    u = uniforms(spec.seed, trial, 0, spec.J)
    ends = [0] + [int(e) for e in spec.block_ends if e <= spec.J]
    if ends[-1] != spec.J:
        ends.append(spec.J)
    targets = np.empty(spec.J)
    for lo, hi in zip(ends[:-1], ends[1:]):
        # each point in the block draws from the whole block's mass
        targets[lo:hi] = lo + u[lo:hi] * (hi - lo)
    atoms = _step_atoms(model)
    if isinstance(model, LinearMean):
        pts = model.x0 + targets / model.slope
    elif atoms is not None:
        jump_x, cum = atoms
        idx = np.searchsorted(cum, targets, side="left")
        pts = jump_x[idx]
    else:
        xs = quantiles_of(model, spec.J)
        bounds = np.concatenate(([model.x0], xs))
        lo_idx = np.floor(targets).astype(int)
        pts = _invert_mass(model, targets, bounds[lo_idx], bounds[-1] * np.ones_like(targets))
    return pts


def _sample_uniform_window(spec, trial):
    j = np.arange(1, spec.J + 1, dtype=float)
    half = spec.K * j**spec.theta
    lo = np.maximum(j / spec.A - half, 0.0)
    hi = j / spec.A + half
    u = uniforms(spec.seed, trial, 0, spec.J)
    return lo + u * (hi - lo)


def sample(spec, trial=0, workers=1):
    """Draw the random sequence described by ``spec``.

    ``workers`` only affects scheduling: the output is bit-identical for
    any worker count because every point is a pure function of
    (seed, trial, j).
    """
    spec.validate()
    if spec.kind is SamplerKind.QUANTILE:
        fn = _sample_quantile
    elif spec.kind is SamplerKind.QUANTILE_BLOCK:
        fn = _sample_quantile_block
    else:
        fn = _sample_uniform_window
    if workers <= 1 or spec.kind is not SamplerKind.UNIFORM_WINDOW:
        pts = fn(spec, trial)
    else:
        # split the index range; chunk-keyed uniforms make this exact
        edges = np.linspace(0, spec.J, workers + 1).astype(int)
        parts = [None] * workers
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futs = {
                ex.submit(_uniform_window_range, spec, trial, a, b): i
                for i, (a, b) in enumerate(zip(edges[:-1], edges[1:]))
            }
            for f, i in futs.items():
                parts[i] = f.result()
        pts = np.concatenate(parts)
    return PointSequence(pts)


def _uniform_window_range(spec, trial, a, b):
    j = np.arange(a + 1, b + 1, dtype=float)
    half = spec.K * j**spec.theta
    lo = np.maximum(j / spec.A - half, 0.0)
    hi = j / spec.A + half
    u = uniforms(spec.seed, trial, a, b - a)
    return lo + u * (hi - lo)


# ---------------------------------------------------------------------------
# interval-overlap density of the uniform-window model
# ---------------------------------------------------------------------------


def f_density(u, K, theta):
    """(1/2K) * sum over j with u in I_j of j^{-theta}, I_j the window of j.

    The candidate j-range is bracketed around u and then filtered by the
    exact membership inequality.
    """
    if u <= 0:
        return 0.0
    slack = 4.0 * K * (u + 1.0) ** theta + 8.0
    j_lo = max(1, int(math.floor(u - slack)))
    j_hi = int(math.ceil(u + slack)) + 1
    j = np.arange(j_lo, j_hi + 1, dtype=float)
    half = K * j**theta
    inside = (j - half < u) & (u <= j + half)
    if not np.any(inside):
        return 0.0
    return float(np.sum(j[inside] ** (-theta))) / (2.0 * K)


def f_density_integral(x, K, theta):
    """F(x) = ∫_1^x f(u) du, computed exactly from the window overlaps."""
    if x <= 1.0:
        return 0.0
    slack = 4.0 * K * (x + 1.0) ** theta + 8.0
    j = np.arange(1, int(math.ceil(x + slack)) + 1, dtype=float)
    half = K * j**theta
    lo = np.maximum(j - half, 1.0)
    hi = np.minimum(j + half, x)
    overlap = np.maximum(hi - lo, 0.0)
    return float(np.sum(overlap * j ** (-theta))) / (2.0 * K)


# ---------------------------------------------------------------------------
# Monte-Carlo verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonteCarloReport:
    trials: int
    per_trial_max: tuple
    x_grid: tuple
    t_grid: tuple
    norm: str
    quantiles: dict  # {"q50":..., "q90":..., "q99":...}
    hoeffding_reference: float
    flagged: tuple = field(default_factory=tuple)

    def to_json(self):
        return json.dumps(
            {
                "trials": self.trials,
                "per_trial_max": list(self.per_trial_max),
                "x_grid": list(self.x_grid),
                "t_grid": list(self.t_grid),
                "norm": self.norm,
                "quantiles": self.quantiles,
                "hoeffding_reference": self.hoeffding_reference,
                "flagged": list(self.flagged),
            },
            indent=2,
        )

    def maxima_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "max_normalized_dev"])
        for i, v in enumerate(self.per_trial_max):
            w.writerow([i, format(v, ".17g")])
        return buf.getvalue()


def hoeffding_reference(x_J, t, C):
    """Union tail bound 4 / ((x_J+1)^{C^2/2} (|t|+1)^{C^2/2})."""
    p = C * C / 2.0
    return 4.0 / ((x_J + 1.0) ** p * (abs(t) + 1.0) ** p)


def _mc_model(spec):
    if spec.kind is SamplerKind.UNIFORM_WINDOW:
        return LinearMean(spec.A, 0.0)
    return spec.model


def _trial_max(spec, trial, x_grid, t_grid, norm, model):
    seq = sample(spec, trial)
    worst = 0.0
    for x in x_grid:
        for t in t_grid:
            s = exp_sum(seq, x, t)
            m = model.main_term(x, t)
            raw = abs(s.value - m)
            denom = normalizer(norm, 0.0, model, seq, x, t)
            if spec.kind is SamplerKind.UNIFORM_WINDOW:
                denom += x**spec.theta + x ** (1.0 - spec.theta)
            worst = max(worst, raw / denom)
    return worst


def monte_carlo(spec, trials, x_grid, t_grid, norm=Norm.PROB_BOUND, hoeffding_C=2.0):
    """Per-trial max normalized deviation over the grid, with quantiles.

    Uniform-window samplers additionally fold the systematic
    x^theta + x^{1-theta} allowance into the normalizer.
    """
    if trials < 1:
        raise ValueError("need trials >= 1")
    spec.validate()
    model = _mc_model(spec)
    maxima = []
    flagged = []
    for trial in range(trials):
        try:
            maxima.append(_trial_max(spec, trial, x_grid, t_grid, norm, model))
        except Exception as exc:
            flagged.append((trial, getattr(exc, "code", type(exc).__name__)))
            maxima.append(math.nan)
    arr = np.asarray(maxima)
    good = arr[np.isfinite(arr)]
    qs = (
        {
            "q50": float(np.quantile(good, 0.50)),
            "q90": float(np.quantile(good, 0.90)),
            "q99": float(np.quantile(good, 0.99)),
        }
        if good.size
        else {"q50": math.nan, "q90": math.nan, "q99": math.nan}
    )
    if spec.kind is SamplerKind.UNIFORM_WINDOW:
        x_J = spec.J / spec.A + spec.K * spec.J**spec.theta
    elif isinstance(spec.model, LinearMean):
        x_J = spec.model.quantile(spec.J)
    else:
        x_J = step_quantile(spec.model, spec.J)
    href = hoeffding_reference(x_J, max(abs(t) for t in t_grid), hoeffding_C)
    return MonteCarloReport(
        trials=trials,
        per_trial_max=tuple(maxima),
        x_grid=tuple(float(x) for x in x_grid),
        t_grid=tuple(float(t) for t in t_grid),
        norm=norm.value,
        quantiles=qs,
        hoeffding_reference=href,
        flagged=tuple(flagged),
    )
