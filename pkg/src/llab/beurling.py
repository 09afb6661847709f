"""Generalized number systems built from arbitrary real primes > 1.

A system is the multiset of all finite products of its primes up to a
cutoff, with repetition-as-distinct multiplicity: listing the prime 2
twice makes 4 appear three times (2*2 from indices (1,1), (1,2), (2,2)
collapse to the multisets {1,1}, {1,2}, {2,2}).  On top of the multiset
we provide the Chebyshev and prime counting functions, their twisted
variants, and the remainder terms against the x/(1-it) main terms.
"""

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .core import PointSequence
from .errors import BudgetExceeded, CutoffExceeded, InvalidPrime
from .quad import DEFAULT_RTOL, twisted_quad

DEFAULT_MAX_ATOMS = 200_000_000

# beyond this many factors the running product is tracked in log space to
# keep rounding from drifting
_LOG_SPACE_DEPTH = 50


def rational_primes(limit):
    """All rational primes <= limit, by sieve."""
    if limit < 2:
        return []
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(math.isqrt(limit)) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return [float(p) for p in np.nonzero(sieve)[0]]


class BeurlingSystem:
    """Integers and Mangoldt atoms of a finite generalized prime list."""

    def __init__(self, primes, X, integers, mangoldt_atoms):
        self.primes = tuple(primes)
        self.X = float(X)
        self.integers = integers
        self.mangoldt_atoms = tuple(mangoldt_atoms)
        atoms = np.asarray([a[0] for a in mangoldt_atoms], dtype=float)
        weights = np.asarray([a[1] for a in mangoldt_atoms], dtype=float)
        order = np.argsort(atoms, kind="stable")
        self._atom_values = atoms[order]
        self._atom_weights = weights[order]
        self._atom_logs = np.log(self._atom_values) if atoms.size else atoms
        self._prime_values = np.sort(np.asarray(self.primes, dtype=float))
        self._prime_logs = np.log(self._prime_values)

    # -- generation ---------------------------------------------------------

    @classmethod
    def generate(cls, primes, X, max_atoms=DEFAULT_MAX_ATOMS, workers=1):
        """Enumerate all products of ``primes`` up to ``X``.

        Depth-first over non-decreasing prime-index chains, so each index
        multiset is produced exactly once.  A crude pre-estimate
        (product of per-prime exponent ranges) skips mid-flight checks
        when it already fits the budget; otherwise the enumeration counts
        as it goes and aborts past ``max_atoms``.
        """
        primes = sorted(float(p) for p in primes)
        if not primes:
            raise InvalidPrime("need at least one prime")
        if primes[0] <= 1.0:
            raise InvalidPrime(f"prime {primes[0]} <= 1")
        X = float(X)
        if X < 1.0:
            raise ValueError("need cutoff X >= 1")
        logX = math.log(X) if X > 1 else 0.0
        logs = [math.log(p) for p in primes]
        max_exp = [int(logX / lp) for lp in logs]
        # upper bound on the product count, in log space to avoid overflow
        log_estimate = sum(math.log(e + 1) for e in max_exp)
        # the product bound is very loose for many primes, so it only decides
        # whether mid-flight counting is needed, never rejects outright
        checked = log_estimate > math.log(max_atoms)
        counter = [0]

        def walk(start, log_prod, prod, depth, out):
            for i in range(start, len(primes)):
                new_log = log_prod + logs[i]
                if new_log > logX + 1e-12:
                    break  # primes sorted: later indices only larger
                if depth + 1 > _LOG_SPACE_DEPTH:
                    new_prod = None
                    value = math.exp(new_log)
                else:
                    new_prod = prod * primes[i]
                    if new_prod > X * (1.0 + 1e-12):
                        continue
                    value = new_prod
                out.append(value)
                counter[0] += 1
                if checked and counter[0] > max_atoms:
                    raise BudgetExceeded(
                        f"exceeded {max_atoms} products during enumeration "
                        f"(loose pre-estimate e^{log_estimate:.1f})"
                    )
                walk(i, new_log, new_prod if new_prod is not None else 0.0, depth + 1, out)
            return out

        if workers > 1 and len(primes) > 1:
            branches = [
                i for i in range(len(primes)) if logs[i] <= logX + 1e-12
            ]
            parts = [None] * len(branches)
            with ThreadPoolExecutor(max_workers=workers) as ex:
                futs = {
                    ex.submit(
                        walk, i, logs[i], primes[i], 1, [primes[i]]
                    ): pos
                    for pos, i in enumerate(branches)
                }
                for f, pos in futs.items():
                    parts[pos] = f.result()
            values = [1.0] + [v for part in parts for v in part]
        else:
            values = walk(0, 0.0, 1.0, 0, [1.0])
        atoms = []
        for p, lp, e_max in zip(primes, logs, max_exp):
            for nu in range(1, e_max + 1):
                atoms.append((p**nu, lp))
        return cls(primes, X, PointSequence(values), atoms)

    @classmethod
    def brute_force(cls, primes, X):
        """Reference enumeration by exhaustive exponent vectors.

        Only meant for small systems; used to validate ``generate``.
        """
        primes = sorted(float(p) for p in primes)
        if not primes or primes[0] <= 1.0:
            raise InvalidPrime("need primes > 1")
        X = float(X)
        logX = math.log(X) if X > 1 else 0.0
        max_exp = [int(logX / math.log(p)) for p in primes]
        values = []

        def multiset_products(i, prod):
            if i == len(primes):
                values.append(prod)
                return
            v = prod
            for _ in range(max_exp[i] + 1):
                if v > X * (1.0 + 1e-12):
                    break
                multiset_products(i + 1, v)
                v *= primes[i]

        multiset_products(0, 1.0)
        atoms = [
            (p**nu, math.log(p))
            for p, e in zip(primes, max_exp)
            for nu in range(1, e + 1)
        ]
        return cls(primes, X, PointSequence(values), atoms)

    # -- counting functions -------------------------------------------------

    def _check_cutoff(self, x):
        if x > self.X * (1.0 + 1e-12):
            raise CutoffExceeded(f"x={x} beyond generated cutoff {self.X}")

    def psi(self, x):
        """Chebyshev function: sum of log p over prime powers <= x."""
        self._check_cutoff(x)
        n = int(np.searchsorted(self._atom_values, x, side="right"))
        return float(math.fsum(self._atom_weights[:n]))

    def pi_count(self, x):
        """Number of primes <= x (with repetition)."""
        self._check_cutoff(x)
        return int(np.searchsorted(self._prime_values, x, side="right"))

    def psi_twisted(self, x, t):
        """sum over prime powers p^nu <= x of log(p) * (p^nu)^{-it}."""
        self._check_cutoff(x)
        n = int(np.searchsorted(self._atom_values, x, side="right"))
        if n == 0:
            return 0j
        if t == 0.0:
            return complex(math.fsum(self._atom_weights[:n]))
        ph = np.exp(-1j * t * self._atom_logs[:n])
        w = self._atom_weights[:n]
        return complex(math.fsum(w * ph.real), math.fsum(w * ph.imag))

    def R(self, x, t):
        """psi(x, t) minus the main term x^{1-it}/(1-it); zero for x < 1."""
        if x < 1.0:
            return 0j
        return self.psi_twisted(x, t) - complex(x) ** (1.0 - 1j * t) / (1.0 - 1j * t)

    def pi_twisted(self, x, t):
        """sum over primes p <= x of p^{-it}."""
        self._check_cutoff(x)
        n = int(np.searchsorted(self._prime_values, x, side="right"))
        if n == 0:
            return 0j
        if t == 0.0:
            return complex(n)
        ph = np.exp(-1j * t * self._prime_logs[:n])
        return complex(math.fsum(ph.real), math.fsum(ph.imag))

    def r(self, x, t, rtol=DEFAULT_RTOL):
        """pi(x, t) minus the integral of u^{-it}/log(u) from p_1 to x.

        Zero for x < 1; the lower limit p_1 > 1 keeps the integrand away
        from the log singularity.
        """
        if x < 1.0:
            return 0j
        p1 = float(self._prime_values[0])
        if x <= p1:
            return self.pi_twisted(x, t)
        val, _ = twisted_quad(
            lambda u: 1.0 / math.log(u), p1, x, t, rtol, scale=max(1.0, x)
        )
        return self.pi_twisted(x, t) - val

    def rh_deviation(self, x_grid):
        """[(x, |psi(x) - x| / sqrt(x))] over the grid."""
        out = []
        for x in x_grid:
            x = float(x)
            self._check_cutoff(x)
            out.append((x, abs(self.psi(x) - x) / math.sqrt(x)))
        return out

    # -- serialization ------------------------------------------------------

    def save(self, path):
        vals, mult = np.unique(self.integers.values, return_counts=True)
        np.savez_compressed(
            path,
            primes=np.asarray(self.primes, dtype=float),
            X=np.asarray([self.X]),
            values=vals,
            multiplicities=mult,
            atom_values=self._atom_values,
            atom_weights=self._atom_weights,
        )

    @classmethod
    def load(cls, path):
        with np.load(path) as d:
            primes = d["primes"]
            X = float(d["X"][0])
            values = np.repeat(d["values"], d["multiplicities"].astype(int))
            atoms = list(zip(d["atom_values"].tolist(), d["atom_weights"].tolist()))
        return cls(primes.tolist(), X, PointSequence(values, presorted=True), atoms)

    def to_csv(self):
        """Value/multiplicity table; intended for small systems."""
        vals, mult = np.unique(self.integers.values, return_counts=True)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "multiplicity"])
        for v, m in zip(vals, mult):
            w.writerow([format(v, ".17g"), int(m)])
        return buf.getvalue()
