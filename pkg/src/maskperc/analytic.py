"""Analytic predictions for the mask model.

Emergence is solved through the equivalent two-strain mutation model
(effective transmissibilities ``Q`` and mutation matrix ``mu``), epidemic
size through the two-type tree recursion, and the threshold through the
spectral radius of ``T diag(m, 1-m)``.

Both fixed points are found by plain iteration from the side that converges
monotonically to the wanted branch: extinction upward from (0, 0) to the
smallest fixed point, infection downward from (1, 1) to the largest. When
plain iteration is slow (close to the threshold) the solver switches to Newton
steps, which from that side stay on the same branch because the maps are
monotone and convex (extinction) or concave (infection).
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .degree import DegreeDistribution, generating_functions, mean_excess_degree, moments
from .graph import MaskModelParams

TOL = 1e-12
NEAR_CRITICAL_TOL = 1e-14
NEAR_CRITICAL_BAND = 1e-3
MAX_ITER = 1_000_000
NEWTON_AFTER = 500
HISTORY = 1000

Vec = tuple[float, float]


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, what: str, iterations: int, residual: float):
        super().__init__(f"{what} did not converge after {iterations} iterations "
                         f"(last residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class FixedPointDiagnostics:
    iterations: int
    residual: float
    converged: bool
    tol: float
    newton_steps: int = 0
    damped: bool = False
    slow: bool = False
    history: tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class MutationAnalogue:
    """Two-strain model with transmissibilities ``Q`` and row-stochastic ``mu``.

    A row of ``mu`` whose ``Q`` is zero is undefined; it is stored as NaN and
    flagged in ``degenerate``. Such a strain never transmits.
    """

    Q1: float
    Q2: float
    mu: tuple[tuple[float, float], tuple[float, float]]
    degenerate: tuple[bool, bool] = (False, False)

    @property
    def mu_matrix(self) -> np.ndarray:
        return np.array(self.mu, dtype=float)

    def _rows(self) -> tuple[Vec, Vec]:
        r1 = (0.0, 0.0) if self.degenerate[0] else self.mu[0]
        r2 = (0.0, 0.0) if self.degenerate[1] else self.mu[1]
        return r1, r2


def mutation_map(params: MaskModelParams) -> MutationAnalogue:
    """Effective transmissibility of each type and the type mix of whom it infects."""
    m = params.m
    a11, a12 = params.T11 * m, params.T12 * (1.0 - m)
    a21, a22 = params.T21 * m, params.T22 * (1.0 - m)
    Q1, Q2 = a11 + a12, a21 + a22
    nan = float("nan")
    row1 = (a11 / Q1, a12 / Q1) if Q1 > 0 else (nan, nan)
    row2 = (a21 / Q2, a22 / Q2) if Q2 > 0 else (nan, nan)
    return MutationAnalogue(Q1=Q1, Q2=Q2, mu=(row1, row2), degenerate=(Q1 == 0, Q2 == 0))


def spectral_radius_2x2(a: float, b: float, c: float, d: float) -> float:
    """Largest eigenvalue of ``[[a, b], [c, d]]`` with nonnegative entries."""
    half_tr = 0.5 * (a + d)
    disc = 0.25 * (a - d) ** 2 + b * c
    return half_tr + math.sqrt(max(disc, 0.0))


def transmission_radius(params: MaskModelParams) -> float:
    """``rho(T diag(m, 1-m))``."""
    m = params.m
    return spectral_radius_2x2(params.T11 * m, params.T12 * (1 - m),
                               params.T21 * m, params.T22 * (1 - m))


def r0(dist: DegreeDistribution, params: MaskModelParams) -> float:
    """``((<k^2> - <k>)/<k>) * rho(T diag(m, 1-m))``."""
    return mean_excess_degree(dist) * transmission_radius(params)


def _fixed_point(step: Callable[[Vec], Vec], jac: Callable[[Vec], tuple[Vec, Vec]] | None, x0: Vec, *,
                 what: str, tol: float, max_iter: int, near_critical: bool) -> tuple[Vec, FixedPointDiagnostics]:
    x = x0
    history: deque[float] = deque(maxlen=HISTORY)
    prev = math.inf
    rises = 0
    damped = False
    newton = 0
    res = math.inf
    for it in range(1, max_iter + 1):
        fx = step(x)
        f0, f1 = fx[0] - x[0], fx[1] - x[1]
        res = max(abs(f0), abs(f1))
        history.append(res)
        if res < tol:
            diag = FixedPointDiagnostics(it, res, True, tol, newton, damped, False, tuple(history))
            return fx, diag
        rises = rises + 1 if res > prev else 0
        prev = res
        if rises >= 3 and not damped:
            damped = True
        if jac is not None and it > NEWTON_AFTER and not damped:
            (j00, j01), (j10, j11) = jac(x)
            a, b, c, d = 1.0 - j00, -j01, -j10, 1.0 - j11
            det = a * d - b * c
            if det > 0:
                dx0 = (d * f0 - b * f1) / det
                dx1 = (a * f1 - c * f0) / det
                # Accept only steps that move the same way as the plain iteration, at least as far.
                if dx0 * f0 >= 0 and dx1 * f1 >= 0 and abs(dx0) >= abs(f0) and abs(dx1) >= abs(f1):
                    x = (min(1.0, max(0.0, x[0] + dx0)), min(1.0, max(0.0, x[1] + dx1)))
                    newton += 1
                    continue
        if damped:
            x = (0.5 * (x[0] + fx[0]), 0.5 * (x[1] + fx[1]))
        else:
            x = fx
    diag = FixedPointDiagnostics(max_iter, res, False, tol, newton, damped, near_critical, tuple(history))
    if near_critical:
        return x, diag
    raise ConvergenceError(what, max_iter, res)


def _near_critical(dist: DegreeDistribution, params: MaskModelParams) -> bool:
    return abs(r0(dist, params) - 1.0) < NEAR_CRITICAL_BAND


SNAP = 1e-8


def _snap(x: Vec, target: float, subcritical: bool) -> Vec:
    # Below threshold the trivial fixed point is the only one; drop the residue
    # left by stopping a slowly converging iteration at a finite tolerance.
    if subcritical and max(abs(x[0] - target), abs(x[1] - target)) < SNAP:
        return target, target
    return x


def _edgeless(dist: DegreeDistribution) -> bool:
    return moments(dist)[0] <= 0


@dataclass(frozen=True)
class Emergence:
    """``extinction[i]`` is the extinction probability with a type-(i+1) patient zero.

    ``q`` is the extinction probability of the branch below a later-generation
    infective of each type.
    """

    extinction: Vec
    emergence: Vec
    mixed: float
    q: Vec
    diagnostics: FixedPointDiagnostics


def emergence_probability(dist: DegreeDistribution, params: MaskModelParams, *,
                          tol: float = TOL, max_iter: int = MAX_ITER) -> Emergence:
    mut = mutation_map(params)
    m = params.m
    if _edgeless(dist):
        diag = FixedPointDiagnostics(0, 0.0, True, tol)
        return Emergence((1.0, 1.0), (0.0, 0.0), 0.0, (1.0, 1.0), diag)
    gf = generating_functions(dist)
    G1, dG1, g = gf.G1, gf.dG1, gf.g
    (mu11, mu12), (mu21, mu22) = mut._rows()
    Q1, Q2 = mut.Q1, mut.Q2

    def args(x: Vec) -> Vec:
        s, t = x
        return (1.0 - Q1 + Q1 * (s * mu11 + t * mu12),
                1.0 - Q2 + Q2 * (s * mu21 + t * mu22))

    def step(x: Vec) -> Vec:
        a1, a2 = args(x)
        return G1(a1), G1(a2)

    def jac(x: Vec) -> tuple[Vec, Vec]:
        a1, a2 = args(x)
        d1, d2 = dG1(a1), dG1(a2)
        return (d1 * Q1 * mu11, d1 * Q1 * mu12), (d2 * Q2 * mu21, d2 * Q2 * mu22)

    near = _near_critical(dist, params)
    q, diag = _fixed_point(step, jac, (0.0, 0.0), what="extinction fixed point",
                           tol=NEAR_CRITICAL_TOL if near else tol, max_iter=max_iter,
                           near_critical=near)
    q = _snap(q, 1.0, r0(dist, params) < 1.0)
    a1, a2 = args(q)
    P1, P2 = min(1.0, g(a1)), min(1.0, g(a2))
    return Emergence((P1, P2), (1.0 - P1, 1.0 - P2), m * (1.0 - P1) + (1.0 - m) * (1.0 - P2), q, diag)


# -- epidemic size -------------------------------------------------------------

def _infection_coefficients(params: MaskModelParams, target: int) -> Vec:
    """Per-neighbour infection weights for a type-``target`` node: ``(m T_1t, (1-m) T_2t)``."""
    m = params.m
    if target == 1:
        return m * params.T11, (1.0 - m) * params.T21
    if target == 2:
        return m * params.T12, (1.0 - m) * params.T22
    raise ValueError("type must be 1 or 2")


def f_closed(z: int, q1: float, q2: float, params: MaskModelParams, type: int) -> float:
    """Probability a type-``type`` node with ``z`` lower neighbours is infected.

    Each neighbour is masked with probability ``m``, infected with probability
    ``q1``/``q2`` by type, and then transmits independently, so the binomial
    sums collapse to ``1 - (1 - m q1 T_1t - (1-m) q2 T_2t)**z``.
    """
    c1, c2 = _infection_coefficients(params, type)
    return 1.0 - (1.0 - c1 * q1 - c2 * q2) ** z


def f_literal(z: int, q1: float, q2: float, params: MaskModelParams, type: int) -> float:
    """Same quantity as :func:`f_closed`, by explicit triple binomial sum (z <= 20)."""
    if z > 20:
        raise ValueError("f_literal is O(z^3); z must be <= 20")
    if z < 0:
        raise ValueError("z must be >= 0")
    m = params.m
    if type == 1:
        ta, tb = params.T11, params.T21
    elif type == 2:
        ta, tb = params.T12, params.T22
    else:
        raise ValueError("type must be 1 or 2")
    comb = math.comb
    total = 0.0
    for x in range(z + 1):
        px = comb(z, x) * m ** x * (1 - m) ** (z - x)
        for u in range(x + 1):
            pu = comb(x, u) * q1 ** u * (1 - q1) ** (x - u)
            for v in range(z - x + 1):
                pv = comb(z - x, v) * q2 ** v * (1 - q2) ** (z - x - v)
                total += px * pu * pv * (1.0 - (1.0 - ta) ** u * (1.0 - tb) ** v)
    return total


@dataclass(frozen=True)
class EpidemicSize:
    """``S1``/``S2``: probability a masked/unmasked node is infected, given emergence."""

    S1: float
    S2: float
    S: float
    q_inf: Vec
    diagnostics: FixedPointDiagnostics


def epidemic_size(dist: DegreeDistribution, params: MaskModelParams, *,
                  tol: float = TOL, max_iter: int = MAX_ITER) -> EpidemicSize:
    m = params.m
    if _edgeless(dist):
        return EpidemicSize(0.0, 0.0, 0.0, (0.0, 0.0), FixedPointDiagnostics(0, 0.0, True, tol))
    gf = generating_functions(dist)
    G1, dG1, g = gf.G1, gf.dG1, gf.g
    c11, c21 = _infection_coefficients(params, 1)
    c12, c22 = _infection_coefficients(params, 2)

    # sum_k (k p_k/<k>) f_i(k-1, q) = 1 - G1(base_i), where f_i(z) = 1 - base_i**z
    def bases(x: Vec) -> Vec:
        q1, q2 = x
        return 1.0 - c11 * q1 - c21 * q2, 1.0 - c12 * q1 - c22 * q2

    def step(x: Vec) -> Vec:
        b1, b2 = bases(x)
        return 1.0 - G1(b1), 1.0 - G1(b2)

    def jac(x: Vec) -> tuple[Vec, Vec]:
        b1, b2 = bases(x)
        d1, d2 = dG1(b1), dG1(b2)
        return (d1 * c11, d1 * c21), (d2 * c12, d2 * c22)

    near = _near_critical(dist, params)
    q, diag = _fixed_point(step, jac, (1.0, 1.0), what="epidemic-size fixed point",
                           tol=NEAR_CRITICAL_TOL if near else tol, max_iter=max_iter,
                           near_critical=near)
    q = _snap(q, 0.0, r0(dist, params) < 1.0)
    b1, b2 = bases(q)
    S1, S2 = max(0.0, 1.0 - g(b1)), max(0.0, 1.0 - g(b2))
    return EpidemicSize(S1, S2, S1 * m + S2 * (1.0 - m), q, diag)


# -- two-strain mutation model ---------------------------------------------------

@dataclass(frozen=True)
class MutationSize:
    """Final fractions infected carrying strain 1 / strain 2 (after mutation)."""

    S1: float
    S2: float
    total: float
    p: Vec
    diagnostics: FixedPointDiagnostics


def mutation_epidemic_size(dist: DegreeDistribution, analogue: MutationAnalogue, *,
                           tol: float = TOL, max_iter: int = MAX_ITER) -> MutationSize:
    """Epidemic size of the two-strain model with mutation.

    A node whose lower neighbours deliver ``x`` successful strain-1 and ``y``
    strain-2 infections is infected when ``x + y > 0``, takes strain 1 with
    probability ``x/(x+y)``, then mutates from strain ``i`` to ``j`` with
    probability ``mu[i][j]``. Strain-``i`` carriers transmit with ``Q_i``
    independently per neighbour.

    ``p[j]`` is the probability that a node reached along an edge ends up
    infected with strain ``j``. With ``a = p1 Q1`` and ``b = p2 Q2`` a child
    delivers strain 1 with probability ``a`` and strain 2 with ``b``; given
    ``x + y = r > 0`` successes, ``x`` is Binomial(r, a/(a+b)) so the
    expected share ``x/(x+y)`` is ``a/(a+b)`` and the sums over ``(x, y)`` and
    over degree collapse onto the offspring PGF.
    """
    if _edgeless(dist):
        return MutationSize(0.0, 0.0, 0.0, (0.0, 0.0), FixedPointDiagnostics(0, 0.0, True, tol))
    gf = generating_functions(dist)
    G1, g = gf.G1, gf.g
    (mu11, mu12), (mu21, mu22) = analogue._rows()
    Q1, Q2 = analogue.Q1, analogue.Q2

    def split(x: Vec, pgf: Callable[[float], float]) -> Vec:
        a, b = x[0] * Q1, x[1] * Q2
        tot = a + b
        if tot <= 0:
            return 0.0, 0.0
        r = 1.0 - pgf(1.0 - tot)
        return r * (a * mu11 + b * mu21) / tot, r * (a * mu12 + b * mu22) / tot

    def step(x: Vec) -> Vec:
        return split(x, G1)

    rho = spectral_radius_2x2(Q1 * mu11, Q1 * mu12, Q2 * mu21, Q2 * mu22)
    near = abs(mean_excess_degree(dist) * rho - 1.0) < NEAR_CRITICAL_BAND
    p, diag = _fixed_point(step, None, (0.5, 0.5), what="mutation-size fixed point",
                                 tol=NEAR_CRITICAL_TOL if near else tol, max_iter=max_iter,
                                 near_critical=near)
    p = _snap(p, 0.0, mean_excess_degree(dist) * rho < 1.0)
    S1, S2 = split(p, g)
    return MutationSize(S1, S2, S1 + S2, p, diag)


# -- combined ------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticPrediction:
    """Everything the solvers predict for one parameter point.

    ``extinction`` holds the probabilities that the outbreak dies out given a
    masked / unmasked patient zero and ``emergence`` their complements;
    ``emergence_mixed`` averages over a uniformly random patient zero.
    """

    R0: float
    extinction: Vec
    emergence: Vec
    emergence_mixed: float
    q_ext: Vec
    q_inf: Vec
    S1: float
    S2: float
    S: float
    m: float
    emergence_diagnostics: FixedPointDiagnostics
    size_diagnostics: FixedPointDiagnostics

    def as_row(self) -> dict[str, float | int]:
        ed, sd = self.emergence_diagnostics, self.size_diagnostics
        return {
            "R0": self.R0,
            "P_ext_masked": self.extinction[0], "P_ext_unmasked": self.extinction[1],
            "emerge_masked": self.emergence[0], "emerge_unmasked": self.emergence[1],
            "emerge_mixed": self.emergence_mixed,
            "q_ext_1": self.q_ext[0], "q_ext_2": self.q_ext[1],
            "q_inf_1": self.q_inf[0], "q_inf_2": self.q_inf[1],
            "S1": self.S1, "S2": self.S2, "S": self.S,
            "S1_share": self.S1 * self.m, "S2_share": self.S2 * (1.0 - self.m),
            "ext_iterations": ed.iterations, "ext_residual": ed.residual,
            "size_iterations": sd.iterations, "size_residual": sd.residual,
        }


def predict(dist: DegreeDistribution, params: MaskModelParams, *, tol: float = TOL,
            max_iter: int = MAX_ITER) -> AnalyticPrediction:
    em = emergence_probability(dist, params, tol=tol, max_iter=max_iter)
    sz = epidemic_size(dist, params, tol=tol, max_iter=max_iter)
    return AnalyticPrediction(
        R0=r0(dist, params), extinction=em.extinction, emergence=em.emergence,
        emergence_mixed=em.mixed, q_ext=em.q, q_inf=sz.q_inf, S1=sz.S1, S2=sz.S2, S=sz.S,
        m=params.m, emergence_diagnostics=em.diagnostics, size_diagnostics=sz.diagnostics)
