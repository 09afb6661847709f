"""Independent reference implementations used only by the test suite.

Nothing here imports the numerical routines under test: the classical
zeta oracle is a from-scratch Euler-Maclaurin evaluation, the multiset
enumerator uses plain exponent vectors, and the window-transform oracle
integrates period by period in extended precision.
"""

import itertools
import math

import mpmath as mp
import numpy as np

# Bernoulli numbers B_2, B_4, ..., B_20
_BERNOULLI = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
]


def zeta_em(s, N=50, terms=10):
    """Classical Riemann zeta by Euler-Maclaurin with ``terms`` corrections.

    zeta(s) = sum_{n<N} n^-s + N^{1-s}/(s-1) + N^-s/2
            + sum_k B_2k/(2k)! * (s)(s+1)...(s+2k-2) * N^{-s-2k+1}
    """
    s = complex(s)
    total = sum(n ** (-s) for n in range(1, N))
    total += N ** (1.0 - s) / (s - 1.0)
    total += 0.5 * N ** (-s)
    rising = s  # s(s+1)...(s+2k-2), updated incrementally
    fact = 2.0  # (2k)!
    power = complex(N) ** (-s - 1.0)
    for k in range(1, terms + 1):
        total += _BERNOULLI[k - 1] / fact * rising * power
        rising *= (s + 2.0 * k - 1.0) * (s + 2.0 * k)
        fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0)
        power /= N * N
    return total


def dirichlet_sum(values, s):
    """Plain direct summation of value^-s (independent of the package)."""
    return sum(complex(v) ** (-complex(s)) for v in values)


def multiset_products(primes, X):
    """All products of the primes (with repetition-as-distinct indices)
    up to X, as a sorted list, via exhaustive exponent vectors."""
    ranges = []
    for p in primes:
        e_max = int(math.floor(math.log(X) / math.log(p) + 1e-12))
        ranges.append(range(e_max + 1))
    out = []
    for exps in itertools.product(*ranges):
        v = 1.0
        for p, e in zip(primes, exps):
            v *= p**e
        if v <= X * (1.0 + 1e-12):
            out.append(v)
    return sorted(out)


def window_transform(beta, tau, log_a, log_b, s, dps=30):
    """integral over [log_a, log_b] of tau cos(tau v) e^{(beta-1-s)v} dv,
    integrated one cosine period at a time in extended precision."""
    with mp.workdps(dps):
        tau_m = mp.mpf(tau)
        la = mp.mpf(log_a)
        lb = mp.mpf(log_b)
        w = mp.mpf(beta) - 1 - mp.mpc(s)
        m = max(1, int(mp.nint(tau_m * (lb - la) / (2 * mp.pi))))
        h = (lb - la) / m

        def f(v):
            return tau_m * mp.cos(tau_m * v) * mp.e ** (w * v)

        return complex(
            mp.fsum(mp.quad(f, [la + j * h, la + (j + 1) * h]) for j in range(m))
        )


def chebyshev_psi(limit):
    """Classical psi(x) jump table up to ``limit`` by sieve."""
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(math.isqrt(limit)) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    weights = np.zeros(limit + 1)
    for p in np.nonzero(sieve)[0]:
        q = p
        while q <= limit:
            weights[q] = math.log(p)
            q *= p
    return np.cumsum(weights)
