"""Deterministic sequence builders.

Contains the phase-aligned window constructions that defeat square-root
cancellation (step-3 offsets and the general interval-of-length-m variant),
the density-one deletion construction, the adversarial phase-alignment
perturbation, and the mollified-comb mean model that makes square-root
cancellation hold by design.
"""

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .core import MeanModel, PointSequence, exp_sum
from .errors import ClusterViolation, InfeasibleT, PreconditionKTooSmall, \
    PreconditionMTooSmall, WindowOverlap

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# step-3 offset construction: n_j = 3j + delta_j, delta_j in {0, 1, 2}
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlignmentCertificate:
    """Witness that the aligned window forces |Re S_{K, 2piK}| >= (1-beta)cK - c."""

    K: int
    t: float
    re_S: float
    lower_bound: float
    alpha: float
    beta: float
    c: float
    sign: float

    @property
    def passed(self):
        return abs(self.re_S) >= self.lower_bound


def _check_phase_margin(K, beta, alpha):
    """Linearization error of t*log(1 + d/(3j)) must be <= alpha/2 in-window."""
    t = TWO_PI * K
    j = max(1, int(math.floor(beta * K)) + 1)
    worst = 0.0
    for d in (1, 2):
        exact = t * math.log1p(d / (3.0 * j))
        worst = max(worst, abs(exact - t * d / (3.0 * j)))
    return worst <= alpha / 2.0


def build_aligned_offsets(K_list, alpha, seed_prefix=None):
    """Build n_j = 3j + delta_j with offsets phase-aligned inside windows.

    For each K in ``K_list`` the window is the index range (beta*K, K] with
    beta = (1 + alpha/4pi)^{-1}; inside it delta_j maximizes
    sign * Re n_j^{-i 2piK}, where the sign matches Re S at the window
    start.  Outside all windows delta_j = 0.

    Returns ``(PointSequence, [AlignmentCertificate])``.
    """
    if not 0.0 < alpha < math.pi / 6.0:
        raise ValueError("need 0 < alpha < pi/6")
    K_list = [int(K) for K in K_list]
    if sorted(K_list) != K_list or len(set(K_list)) != len(K_list):
        raise ValueError("K_list must be strictly increasing")
    beta = 1.0 / (1.0 + alpha / (4.0 * math.pi))
    for prev, nxt in zip(K_list, K_list[1:]):
        if nxt < math.ceil(prev / beta):
            raise WindowOverlap(f"K={nxt} inside the window of K={prev}")
    if not _check_phase_margin(K_list[0], beta, alpha):
        raise PreconditionKTooSmall(
            f"phase linearization margin > alpha/2 at K={K_list[0]}"
        )
    c = math.cos(alpha + math.pi / 3.0)
    K_max = K_list[-1]
    j = np.arange(1, K_max + 1, dtype=np.float64)
    delta = np.zeros(K_max, dtype=np.int64)
    if seed_prefix is not None:
        pref = np.asarray(seed_prefix.values)
        base = 3.0 * j[: pref.size]
        d = np.rint(pref - base).astype(np.int64)
        if np.any(d < 0) or np.any(d > 2) or not np.allclose(base + d, pref):
            raise ValueError("seed_prefix is not of the form 3j + {0,1,2}")
        delta[: pref.size] = d

    certs = []
    for K in K_list:
        t = TWO_PI * K
        lo = int(math.floor(beta * K))  # window indices lo+1 .. K
        n = 3.0 * j + delta
        S_lo = complex(
            math.fsum(np.cos(t * np.log(n[:lo]))),
            -math.fsum(np.sin(t * np.log(n[:lo]))),
        )
        sign = 1.0 if S_lo.real >= 0.0 else -1.0
        jj = j[lo:K]
        cand = np.stack(
            [sign * np.cos(t * np.log(3.0 * jj + d)) for d in (0, 1, 2)]
        )
        delta[lo:K] = np.argmax(cand, axis=0)
        n = 3.0 * j + delta
        re_S = math.fsum(np.cos(t * np.log(n[:K])))
        certs.append(
            AlignmentCertificate(
                K=K,
                t=t,
                re_S=re_S,
                lower_bound=(1.0 - beta) * c * K - c,
                alpha=alpha,
                beta=beta,
                c=c,
                sign=sign,
            )
        )
    return PointSequence(3.0 * j + delta, presorted=True), certs


# ---------------------------------------------------------------------------
# general (m, k) windows: k integers kept out of each length-m interval
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MKCertificate:
    m: int
    k: int
    K: int
    t: float
    x: float
    abs_S: float
    c_measured: float  # |S| * m / (min(k, m-k) * x)
    beta: float
    sign: float


def build_mk_offsets(m, k, K_list, alpha):
    """Sequence keeping k integers out of each block [m*j, m*(j+1)).

    Kept offsets form an arc around the phase-maximizing offset inside the
    windows (beta*K, K] of block indices, t = 2piK; outside windows the
    first k offsets are kept, so N(x) = (k/m) x + O(1) everywhere.
    """
    if m < 3 or not 0 < k < m:
        raise ValueError("need m >= 3 and 0 < k < m")
    K_list = [int(K) for K in K_list]
    if sorted(K_list) != K_list or len(set(K_list)) != len(K_list):
        raise ValueError("K_list must be strictly increasing")
    # phase-slack alpha/2 across the window for the largest offset
    beta = 1.0 / (1.0 + alpha * m / (4.0 * math.pi * max(m - 1, 1)))
    for prev, nxt in zip(K_list, K_list[1:]):
        if nxt < math.ceil(prev / beta):
            raise WindowOverlap(f"K={nxt} inside the window of K={prev}")
    t0 = TWO_PI * K_list[0]
    j0 = int(math.floor(beta * K_list[0])) + 1
    worst = max(
        abs(t0 * math.log1p(d / (m * j0)) - t0 * d / (m * j0)) for d in (1, m - 1)
    )
    if worst > alpha / 2.0:
        raise PreconditionKTooSmall(f"phase linearization margin at K={K_list[0]}")

    K_max = K_list[-1]
    keep = np.zeros((K_max + 1, m), dtype=bool)
    keep[:, :k] = True  # default outside windows
    certs = []
    offsets = np.arange(m)
    arc = np.zeros(m, dtype=bool)
    half = (k - 1) // 2
    arc_offsets = np.arange(-half, k - half)  # k consecutive offsets
    for K in K_list:
        t = TWO_PI * K
        lo = int(math.floor(beta * K))
        vals = _mk_values(keep, m, lo)
        S_lo = complex(
            math.fsum(np.cos(t * np.log(vals))), -math.fsum(np.sin(t * np.log(vals)))
        )
        sign = 1.0 if S_lo.real >= 0.0 else -1.0
        for jb in range(lo + 1, K + 1):
            n = m * jb + offsets
            ph = sign * np.cos(t * np.log(n.astype(float)))
            best = int(np.argmax(ph))
            arc[:] = False
            arc[(best + arc_offsets) % m] = True
            keep[jb] = arc
        x = m * (K + 1) - 0.5
        vals = _mk_values(keep, m, K)
        S = complex(
            math.fsum(np.cos(t * np.log(vals))), -math.fsum(np.sin(t * np.log(vals)))
        )
        certs.append(
            MKCertificate(
                m=m,
                k=k,
                K=K,
                t=t,
                x=x,
                abs_S=abs(S),
                c_measured=abs(S) * m / (min(k, m - k) * x),
                beta=beta,
                sign=sign,
            )
        )
    vals = _mk_values(keep, m, K_max)
    return PointSequence(vals, presorted=True), certs


def _mk_values(keep, m, j_max):
    """All kept integers with block index 1..j_max, in increasing order."""
    jb = np.arange(1, j_max + 1)
    base = (m * jb)[:, None] + np.arange(m)[None, :]
    mask = keep[1 : j_max + 1]
    return base[mask].astype(np.float64)


# ---------------------------------------------------------------------------
# density-one deletion construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeletionWitness:
    """Parameters and measured sum of one deletion round."""

    M: int
    eps: float
    m: int
    l: int
    k: int
    J: int
    beta: float
    t: float
    S_abs: float
    threshold: float  # 0.9 * J * l acceptance line
    deleted_count: int
    sign: float


def density1_params(M, eps):
    m = int(math.floor(M ** (0.5 - eps)))
    l = int(math.floor(m ** (1.0 - eps)))
    k = m - l
    inv_beta = 1.0 + 1.0 / (8.0 * m)
    J = int(math.floor((inv_beta - 1.0) * M / m))
    t = TWO_PI * M * inv_beta / m
    return m, l, k, J, 1.0 / inv_beta, t


def build_deletion_sequence(M_list, eps):
    """Integers with ~l deletions per length-m subinterval of [M, M/beta).

    For each M the kept offsets in each subinterval form an arc of k (or
    k+1) values around the phase-maximizing offset at t = 2piM/(beta m);
    the final partial interval keeps everything.  Returns the deleted-
    integer sequence together with one :class:`DeletionWitness` per M.
    """
    if not 0.0 < eps < 0.25:
        raise ValueError("need 0 < eps < 1/4")
    M_list = [int(M) for M in M_list]
    if sorted(M_list) != M_list or len(set(M_list)) != len(M_list):
        raise ValueError("M_list must be strictly increasing")
    prev_end = 0
    for M in M_list:
        m, l, k, J, beta, t = density1_params(M, eps)
        if m < 2 or l < 1 or J < 1:
            raise PreconditionMTooSmall(f"degenerate parameters at M={M}")
        delta_max = m - 1
        worst = abs(
            t * math.log1p(delta_max / M) - t * delta_max / M
        )
        if worst > TWO_PI / (4.0 * m):
            raise PreconditionMTooSmall(f"phase margin > pi/2m at M={M}")
        if M <= prev_end:
            raise ValueError(f"M={M} overlaps the previous deletion range")
        prev_end = int(math.ceil(M / beta))

    x_max = int(math.floor(M_list[-1] / density1_params(M_list[-1], eps)[4]))
    keep = np.ones(x_max + 1, dtype=bool)
    keep[0] = False  # index 0 unused; integers are 1..x_max
    logs = np.log(np.arange(x_max + 1, dtype=np.float64), where=np.arange(x_max + 1) > 0,
                  out=np.zeros(x_max + 1))
    witnesses = []
    for M in M_list:
        m, l, k, J, beta, t = density1_params(M, eps)
        phases = np.exp(-1j * t * logs[1:])
        S_pre = complex(np.sum(phases[: M - 1][keep[1:M]]))
        sign = 1.0 if S_pre.real >= 0.0 else -1.0
        half = k // 2
        arc_offsets = np.arange(-half, half + 1)  # k or k+1 kept offsets
        deleted = 0
        for jb in range(1, J + 1):
            lo = M + (jb - 1) * m  # interval [lo, lo + m)
            block = np.arange(lo, lo + m)
            ph = sign * np.real(phases[block - 1])
            best = int(np.argmax(ph))
            mask = np.zeros(m, dtype=bool)
            mask[(best + arc_offsets) % m] = True
            keep[lo : lo + m] = mask
            deleted += int(m - mask.sum())
        x_w = int(math.floor(M / beta))
        S = complex(np.sum(phases[:x_w][keep[1 : x_w + 1]]))
        witnesses.append(
            DeletionWitness(
                M=M,
                eps=eps,
                m=m,
                l=l,
                k=k,
                J=J,
                beta=beta,
                t=t,
                S_abs=abs(S),
                threshold=0.9 * J * l,
                deleted_count=deleted,
                sign=sign,
            )
        )
    values = np.nonzero(keep)[0].astype(np.float64)
    return PointSequence(values, presorted=True), witnesses


# ---------------------------------------------------------------------------
# adversarial phase alignment inside interval boxes
# ---------------------------------------------------------------------------


def adversarial_perturb(seq, boxes, F, eps, x, t, phase_tol=1e-6):
    """Move each point inside its eps-box so its phase at t is -arg F(x,t).

    Points with index below the first j0 where boxes become relatively
    short ((b-a)/a <= 1), and points beyond x, are left untouched.  Raises
    INFEASIBLE_T when t is too small for the phase to be reachable.
    """
    vals = np.asarray(seq.values)
    boxes = [(float(a), float(b)) for a, b in boxes]
    if len(boxes) != vals.size:
        raise ValueError("one box per point required")
    for v, (a, b) in zip(vals, boxes):
        if not (a <= v <= b and a < b):
            raise ValueError("sequence not inside its boxes")
    j0 = 0
    while j0 < len(boxes) and (boxes[j0][1] - boxes[j0][0]) / boxes[j0][0] > 1.0:
        j0 += 1
    widths = [b - a for (a, b), v in zip(boxes, vals) if v <= x]
    if widths:
        t_min = 4.0 * math.pi * x / (eps * min(widths))
        if abs(t) < t_min:
            raise InfeasibleT(f"|t| < {t_min:.6g} cannot sweep a full phase turn")
    target = -np.angle(complex(F(x, t))) if F is not None else 0.0
    out = vals.copy()
    for idx in range(j0, vals.size):
        n = vals[idx]
        if n > x:
            continue
        a, b = boxes[idx]
        lo = max(a, n - eps * (b - a))
        hi = min(b, n + eps * (b - a))
        out[idx] = _solve_phase(lo, hi, t, target, phase_tol)
    return PointSequence(out)


def _solve_phase(lo, hi, t, target, tol):
    """n' in [lo, hi] with -t*log(n') = target (mod 2pi), to phase tol."""
    # -t log n' decreases in n' for t > 0; invert directly on the log line
    llo, lhi = math.log(lo), math.log(hi)
    a, b = sorted((-t * llo, -t * lhi))
    k = math.ceil((a - target) / TWO_PI)
    phase = target + TWO_PI * k
    if phase > b:
        raise InfeasibleT("phase unreachable inside the box")
    n = math.exp(phase / (-t))
    n = min(max(n, lo), hi)
    err = _wrap(-t * math.log(n) - target)
    if abs(err) > tol:
        # fall back to bisection on the wrapped phase around the solution
        step = TWO_PI / abs(t)
        a_n, b_n = max(lo, n * math.exp(-step)), min(hi, n * math.exp(step))
        fa = _wrap(-t * math.log(a_n) - target)
        for _ in range(200):
            mid = 0.5 * (a_n + b_n)
            fm = _wrap(-t * math.log(mid) - target)
            if abs(fm) <= tol:
                return mid
            if (fa > 0) == (fm > 0):
                a_n, fa = mid, fm
            else:
                b_n = mid
        raise InfeasibleT("phase bisection failed")
    return n


def _wrap(phi):
    return (phi + math.pi) % TWO_PI - math.pi


# ---------------------------------------------------------------------------
# mollified comb mean model
# ---------------------------------------------------------------------------


def _bump_nodes(n_nodes=64):
    """Quadrature nodes/weights of the unit-mass bump exp(-1/(1-u^2)) on (-1,1).

    Weights are renormalized to sum exactly to one so that the comb's total
    mass per point is exactly one.
    """
    xs, ws = np.polynomial.legendre.leggauss(n_nodes)
    vals = np.exp(-1.0 / (1.0 - xs * xs))
    w = ws * vals
    return xs, w / w.sum()


_BUMP_X, _BUMP_W = _bump_nodes()

LAMBDA_LOG_CAP = 700.0


class MollifiedCombMean(MeanModel):
    """M'(x) = sum_j phi_{lambda_j}(x - n_j), lambda_j = min(e^{C n_j}, cap).

    Each unit-mass bump is represented by fixed quadrature nodes; points
    whose bump width falls below floating spacing are exact point masses.
    """

    def __init__(self, seq, C, lambda_log_cap=LAMBDA_LOG_CAP, cluster_c1=2.0):
        vals = np.asarray(seq.values)
        if C < 1.0:
            raise ValueError("need C >= 1")
        self.C = float(C)
        self.points = vals
        self.x0 = float(vals[0]) - 1.0 if vals.size else 1.0
        _check_clustering(vals, C / 2.0, cluster_c1)
        log_lam = np.minimum(C * vals, lambda_log_cap)
        inv_lam = np.exp(-log_lam)
        atomic = inv_lam < 2.0 * np.spacing(vals)
        locs = []
        masses = []
        for v, il, at in zip(vals, inv_lam, atomic):
            if at:
                locs.append(np.array([v]))
                masses.append(np.array([1.0]))
            else:
                locs.append(v + il * _BUMP_X)
                masses.append(_BUMP_W.copy())
        self.node_x = np.concatenate(locs) if locs else np.zeros(0)
        self.node_w = np.concatenate(masses) if masses else np.zeros(0)
        order = np.argsort(self.node_x, kind="stable")
        self.node_x = self.node_x[order]
        self.node_w = self.node_w[order]
        self.node_logs = np.log(self.node_x) if self.node_x.size else self.node_x
        self.cum = np.cumsum(self.node_w)

    def value(self, x):
        idx = np.searchsorted(self.node_x, np.asarray(x, dtype=float), side="right")
        padded = np.concatenate(([0.0], self.cum))
        out = padded[idx]
        return out if out.ndim else float(out)

    def main_term(self, x, t, rtol=None):
        n = int(np.searchsorted(self.node_x, x, side="right"))
        if n == 0:
            return 0j
        if t == 0.0:
            return complex(self.cum[n - 1])
        ph = np.exp(-1j * t * self.node_logs[:n])
        return complex(np.sum(self.node_w[:n] * ph))


def _check_clustering(vals, c, c1):
    """Counts within e^{-c x} of each point must stay below c1 * sqrt(x)."""
    for v in vals:
        w = math.exp(-c * v)
        lo = np.searchsorted(vals, v - w, side="left")
        hi = np.searchsorted(vals, v + w, side="right")
        if hi - lo > max(2.0, c1 * math.sqrt(v)):
            raise ClusterViolation(f"{hi - lo} points within {w:.3e} of {v}")


def mollified_mean(seq, C, lambda_log_cap=LAMBDA_LOG_CAP):
    """Mollified comb model for ``seq``; see :class:`MollifiedCombMean`."""
    return MollifiedCombMean(seq, C, lambda_log_cap)


# ---------------------------------------------------------------------------
# certificate serialization
# ---------------------------------------------------------------------------


def certificates_json(construction, params, certs):
    """Uniform certificate schema: {construction, params, witnesses: [...]}."""
    witnesses = []
    for c in certs:
        d = asdict(c)
        if isinstance(c, AlignmentCertificate):
            d.update(x=3.0 * c.K + 2.0, value=c.re_S, bound=c.lower_bound,
                     passed=c.passed)
        elif isinstance(c, DeletionWitness):
            d.update(x=c.M / c.beta, value=c.S_abs, bound=c.threshold,
                     passed=c.S_abs >= c.threshold)
        elif isinstance(c, MKCertificate):
            d.update(value=c.abs_S, bound=0.0, passed=c.c_measured > 0.0)
        witnesses.append(d)
    return json.dumps(
        {"construction": construction, "params": params, "witnesses": witnesses},
        indent=2,
    )
