"""Degree distributions and their generating functions.

Two size-biased generating functions are exposed and they differ by a
factor of ``z``:

* :func:`excess_pgf` is ``sum_k (k p_k / <k>) z**k``, the form used when the
  emergence calculation is written down with the neighbour's full degree.
* :func:`offspring_pgf` is ``sum_k (k p_k / <k>) z**(k - 1)``, which counts the
  ``k - 1`` onward edges of a node reached along an edge. The fixed-point
  solvers in :mod:`maskperc.analytic` use this one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels

KINDS = ("poisson", "powerlaw", "empirical")


@dataclass(frozen=True)
class DegreeDistribution:
    """A degree distribution ``p_k``.

    Use the constructors :meth:`poisson`, :meth:`powerlaw`, :meth:`empirical`
    or :func:`load_pmf` rather than building one by hand.
    """

    kind: str
    mean_param: float = 0.0
    exponent: float = 0.0
    kmin: int = 0
    kmax: int = 0
    support: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64), repr=False)
    probs: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    @classmethod
    def poisson(cls, mean: float) -> "DegreeDistribution":
        mean = float(mean)
        if not math.isfinite(mean) or mean < 0:
            raise ValueError(f"Poisson mean must be finite and >= 0, got {mean}")
        kmax = int(math.ceil(mean + 12.0 * math.sqrt(mean) + 20.0))
        return cls(kind="poisson", mean_param=mean, kmax=kmax)

    @classmethod
    def powerlaw(cls, exponent: float, kmin: int = 1, kmax: int = 100) -> "DegreeDistribution":
        """Pure power law ``p_k ~ k**-exponent`` on ``kmin..kmax``."""
        kmin, kmax = int(kmin), int(kmax)
        if kmin < 1 or kmax < kmin:
            raise ValueError(f"power law needs 1 <= kmin <= kmax, got kmin={kmin}, kmax={kmax}")
        k = np.arange(kmin, kmax + 1, dtype=np.int64)
        w = k.astype(float) ** (-float(exponent))
        return cls(kind="powerlaw", exponent=float(exponent), kmin=kmin, kmax=kmax,
                   support=k, probs=w / w.sum())

    @classmethod
    def empirical(cls, pmf: dict[int, float], normalize: bool = False) -> "DegreeDistribution":
        if not pmf:
            raise ValueError("empirical pmf is empty")
        items = sorted((int(k), float(p)) for k, p in pmf.items())
        k = np.array([kk for kk, _ in items], dtype=np.int64)
        p = np.array([pp for _, pp in items])
        if np.any(k < 0):
            raise ValueError("degrees must be nonnegative")
        if len(np.unique(k)) != len(k):
            raise ValueError("duplicate degree in pmf")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("pmf values must be finite and nonnegative")
        total = p.sum()
        if normalize:
            if total <= 0:
                raise ValueError("pmf has zero mass")
            p = p / total
        elif abs(total - 1.0) > 1e-9:
            raise ValueError(f"pmf sums to {total!r}, not 1 (pass normalize=True to rescale)")
        keep = p > 0
        return cls(kind="empirical", kmin=int(k[keep].min()), kmax=int(k[keep].max()),
                   support=k[keep], probs=p[keep])

    # -- tables ------------------------------------------------------------
    def table(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(k, p_k)`` arrays; Poisson is truncated at ``kmax``."""
        if self.kind != "poisson":
            return self.support, self.probs
        k = np.arange(self.kmax + 1, dtype=np.int64)
        lam = self.mean_param
        if lam == 0:
            p = np.zeros(k.size)
            p[0] = 1.0
            return k, p
        logp = -lam + k * math.log(lam) - np.array([math.lgamma(x + 1) for x in k])
        return k, np.exp(logp)

    @property
    def mean(self) -> float:
        return moments(self)[0]

    def describe(self) -> dict[str, object]:
        if self.kind == "poisson":
            return {"distribution": "poisson", "mean": self.mean_param}
        if self.kind == "powerlaw":
            return {"distribution": "powerlaw", "exponent": self.exponent,
                    "kmin": self.kmin, "kmax": self.kmax}
        return {"distribution": "empirical", "kmin": self.kmin, "kmax": self.kmax}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DegreeDistribution):
            return NotImplemented
        return (self.kind, self.mean_param, self.exponent, self.kmin, self.kmax) == (
            other.kind, other.mean_param, other.exponent, other.kmin, other.kmax
        ) and np.array_equal(self.support, other.support) and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash((self.kind, self.mean_param, self.exponent, self.kmin, self.kmax,
                     self.support.tobytes(), self.probs.tobytes()))


def _check_unit(z: float) -> float:
    z = float(z)
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"z must lie in [0, 1], got {z}")
    return z


def pgf(dist: DegreeDistribution, z: float) -> float:
    """``g(z) = sum_k p_k z**k``."""
    z = _check_unit(z)
    if dist.kind == "poisson":
        return math.exp(dist.mean_param * (z - 1.0))
    k, p = dist.table()
    return float(np.dot(p, z ** k))


def excess_pgf(dist: DegreeDistribution, z: float) -> float:
    """``G(z) = sum_k (k p_k / <k>) z**k`` (size-biased, full degree as exponent).

    For Poisson this is ``z * g(z)``. The series is always used so the closed
    form can be checked against it.
    """
    z = _check_unit(z)
    mean = moments(dist)[0]
    if mean <= 0:
        raise ValueError("excess-degree PGF undefined for zero mean degree")
    k, p = dist.table()
    return float(np.dot(k * p, z ** k)) / mean


def offspring_pgf(dist: DegreeDistribution, z: float) -> float:
    """``sum_k (k p_k / <k>) z**(k-1)``: onward edges of a node reached by an edge."""
    z = _check_unit(z)
    return generating_functions(dist).G1(z)


def moments(dist: DegreeDistribution) -> tuple[float, float]:
    """``(<k>, <k^2>)``; exact for Poisson, truncated sums otherwise."""
    if dist.kind == "poisson":
        lam = dist.mean_param
        return lam, lam + lam * lam
    k, p = dist.table()
    kf = k.astype(float)
    return float(np.dot(p, kf)), float(np.dot(p, kf * kf))


def mean_excess_degree(dist: DegreeDistribution) -> float:
    """``(<k^2> - <k>) / <k>``, the mean number of onward edges; 0 for an edgeless graph."""
    if dist.kind == "poisson":
        return dist.mean_param
    k1, k2 = moments(dist)
    return (k2 - k1) / k1 if k1 > 0 else 0.0


@dataclass(frozen=True)
class GeneratingFunctions:
    """Unchecked callables for solver inner loops (arguments assumed in [0, 1])."""

    g: Callable[[float], float]
    dg: Callable[[float], float]
    G1: Callable[[float], float]
    dG1: Callable[[float], float]


def generating_functions(dist: DegreeDistribution) -> GeneratingFunctions:
    if dist.kind == "poisson":
        lam = dist.mean_param
        exp = math.exp

        def g(z: float) -> float:
            return exp(lam * (z - 1.0))

        def dg(z: float) -> float:
            return lam * exp(lam * (z - 1.0))

        # For Poisson the onward-edge distribution is the degree distribution itself.
        return GeneratingFunctions(g, dg, g, dg)

    k, p = dist.table()
    kf = k.astype(float)
    mean = float(np.dot(p, kf))
    c1 = kf * p                       # k p_k
    c2 = kf * (kf - 1.0) * p          # k (k-1) p_k
    km1 = np.maximum(kf - 1.0, 0.0)
    km2 = np.maximum(kf - 2.0, 0.0)

    def g(z: float) -> float:
        return float(np.dot(p, z ** kf))

    def dg(z: float) -> float:
        return float(np.dot(c1, z ** km1))

    if mean <= 0:
        def G1(z: float) -> float:
            raise ValueError("offspring PGF undefined for zero mean degree")
        return GeneratingFunctions(g, dg, G1, G1)

    def G1(z: float) -> float:
        return float(np.dot(c1, z ** km1)) / mean

    def dG1(z: float) -> float:
        return float(np.dot(c2, z ** km2)) / mean

    return GeneratingFunctions(g, dg, G1, dG1)


def sample_degrees(dist: DegreeDistribution, n: int, rng_seed: int) -> np.ndarray:
    """Draw ``n`` i.i.d. degrees with an even total.

    If the sum is odd, one uniformly chosen entry is redrawn (repeatedly) until
    the sum is even.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    cdf, support = sampler_args(dist, n)
    return _kernels.sample_degrees(np.random.default_rng(rng_seed), cdf, support, n)


def sampler_args(dist: DegreeDistribution, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(cdf, support)`` tables for inverse-CDF sampling in the compiled kernels.

    Poisson uses its table truncated at ``kmax`` (tail mass below 1e-12).
    """
    k, p = dist.table()
    if n % 2 == 1 and np.all(k[p > 0] % 2 == 1):
        raise ValueError("every supported degree is odd and n is odd: no even-sum sequence exists")
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    return cdf, k.astype(np.int64)


def load_pmf(path: str | Path, normalize: bool = False) -> DegreeDistribution:
    """Read a ``degree,probability`` file (optional header, ``#`` comments)."""
    pmf: dict[int, float] = {}
    seen_data = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [s.strip() for s in line.split(",")]
            try:
                if len(parts) != 2:
                    raise ValueError
                k, p = int(parts[0]), float(parts[1])
            except ValueError:
                if not seen_data:
                    seen_data = True  # header row
                    continue
                raise ValueError(f"{path}:{lineno}: expected 'degree,probability', got {line!r}") from None
            seen_data = True
            if k in pmf:
                raise ValueError(f"{path}:{lineno}: duplicate degree {k}")
            pmf[k] = p
    return DegreeDistribution.empirical(pmf, normalize=normalize)
