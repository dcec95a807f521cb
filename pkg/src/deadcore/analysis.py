"""Empirical verification layer: core detection, exponent fits, rescaling,
comparison and growth probes.

All measurements work on grid functions; nothing here solves an equation.
Radii are snapped to lattice multiples of the spacing so that sup-over-ball
values are reproducible and rescaling comparisons are exact where possible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fraclap import assemble
from .grid import Grid, GridFunction, GridSpec, TailModel, discrete_derivative, make_grid, sup_on_ball
from .profiles import growth_exponent
from .solver import ReactionSpec, SolveReport, SolverConfig, solve, solve_local

__all__ = [
    "dead_core_interval",
    "detect_dead_core",
    "detect_branching",
    "ExponentFit",
    "fit_growth_exponent",
    "blow_up",
    "comparison_check",
    "LiouvilleReport",
    "liouville_probe",
    "one_phase_branching_check",
    "SLimitRow",
    "s_limit_study",
    "write_exponent_csv",
    "write_branching_csv",
    "write_slimit_csv",
]

_SMALL_SUP = 1e-8  # pragmatic smallness scale for the growth probe's assertion


def dead_core_interval(x: np.ndarray, u: np.ndarray, threshold: float):
    """Endpoints of the longest contiguous run with |u| <= threshold, or None."""
    mask = np.abs(u) <= threshold
    if not mask.any():
        return None
    best_len, best = 0, None
    i = 0
    n = mask.size
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            if j - i + 1 > best_len:
                best_len, best = j - i + 1, (i, j)
            i = j + 1
        else:
            i += 1
    i0, i1 = best
    return float(x[i0]), float(x[i1])


def detect_dead_core(u: GridFunction, threshold: float):
    """Largest interior interval where |u| <= threshold, as (x_lo, x_hi)."""
    return dead_core_interval(u.grid.x_interior, u.interior_values, threshold)


def detect_branching(
    u: GridFunction,
    s: float,
    gamma: float,
    thresholds: tuple[float, float, float] | None = None,
) -> np.ndarray:
    """Interior nodes where u, Du, and D2u all vanish to scale.

    Default thresholds are (10 h^beta, 10 h^(beta-1), 10 h^(beta-2)) with
    beta = 2s/(1-gamma), the rates at which the three quantities vanish when
    u grows exactly like |x - x0|^beta.  Contiguous candidate runs are
    coalesced to the single node minimizing the combined normalized score,
    so an exact profile yields exactly one point.
    """
    h = u.grid.h
    beta = growth_exponent(s, gamma)
    if thresholds is None:
        thresholds = (10 * h**beta, 10 * h ** (beta - 1), 10 * h ** (beta - 2))
    t0, t1, t2 = thresholds
    du = discrete_derivative(u, 1)
    d2u = discrete_derivative(u, 2)
    idx = u.grid.interior
    v0 = np.abs(u.values[idx])
    v1 = np.abs(du.values[idx])
    v2 = np.abs(d2u.values[idx])
    cand = (v0 <= t0) & (v1 <= t1) & (v2 <= t2)
    if not cand.any():
        return np.array([])
    score = v0 / t0 + v1 / t1 + v2 / t2
    xs = []
    i = 0
    n = cand.size
    x_int = u.grid.x_interior
    while i < n:
        if cand[i]:
            j = i
            while j + 1 < n and cand[j + 1]:
                j += 1
            k = i + int(np.argmin(score[i : j + 1]))
            xs.append(x_int[k])
            i = j + 1
        else:
            i += 1
    return np.array(xs)


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    r2: float
    radii: np.ndarray
    values: np.ndarray
    deriv_order: int


def fit_growth_exponent(
    u: GridFunction,
    x0: float,
    r_min: float | None = None,
    r_max: float | None = None,
    k: int = 8,
    deriv_order: int = 0,
) -> ExponentFit:
    """Log-log regression of sup-over-ball growth about x0.

    Measures q(r) = sup over the closed ball B_r(x0) of |u| (or |Du| for
    deriv_order 1) at k radii log-spaced in [r_min, r_max] and snapped to
    lattice multiples of h.  Defaults: r_min = 8h, r_max = a/4.
    """
    h = u.grid.h
    a = u.grid.a
    if r_min is None:
        r_min = 8 * h
    if r_max is None:
        r_max = a / 4
    if r_min < 4 * h:
        raise ValueError("fit window must start at or above 4h")
    if not r_max > r_min:
        raise ValueError("empty fit window")
    if k < 4:
        raise ValueError("at least 4 radii are required")
    raw = np.exp(np.linspace(np.log(r_min), np.log(r_max), k))
    mults = np.unique(np.maximum(np.round(raw / h).astype(int), 4))
    radii = mults * h
    if radii.size < 4:
        raise ValueError("fit window too narrow after lattice snapping")
    target = u if deriv_order == 0 else discrete_derivative(u, 1)
    vals = np.array([sup_on_ball(target, x0, r) for r in radii])
    if np.all(vals < 1e-300):
        raise ValueError("flat function: nothing to fit in the window")
    t = np.log(radii)
    y = np.log(vals)
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    sst = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid**2)) / float(sst) if sst > 0 else 1.0
    return ExponentFit(
        slope=float(slope),
        intercept=float(intercept),
        r2=float(r2),
        radii=radii,
        values=vals,
        deriv_order=deriv_order,
    )


def blow_up(u: GridFunction, x0: float, r: float, s: float, gamma: float) -> GridFunction:
    """Rescaled function v_r(x) = u(x0 + r x) / r^(2s/(1-gamma)).

    x0 must be a grid node and r must lie in (0, 1].  When r is a lattice
    multiple of h (r/h integer), v_r lives on a grid with spacing h/r and its
    values are exact nodal gathers of u; otherwise v_r is resampled onto a
    spacing-h grid by linear interpolation.  The window is the largest
    standard grid that keeps x0 + r*x inside [-R, R]; it must reach at least
    twice the unit interior window.
    """
    if not (0.0 < r <= 1.0):
        raise ValueError("r must lie in (0, 1]")
    h = u.grid.h
    R = u.grid.R
    if abs(x0 / h - round(x0 / h)) > 1e-9:
        raise ValueError("x0 must be a grid node")
    beta = growth_exponent(s, gamma)
    scale = r ** (-beta)
    aligned = abs(r / h - round(r / h)) <= 1e-9 * max(1.0, r / h)
    if aligned:
        hp = h / r  # node j of the new grid maps to u-node x0 + j*h
        m_half = int(min(round((R - abs(x0)) / h), round(R * r / h)))
    else:
        hp = h
        m_half = int(min(np.floor((R - abs(x0)) / (r * h)), round(R / h)))
    if m_half * hp < 2.0:
        raise ValueError("rescaled window does not fit the grid")
    Rp = m_half * hp
    spec = GridSpec(h=hp, a=1.0, R=Rp)
    new_grid = make_grid(spec)
    if aligned:
        i0 = int(round((x0 + R) / h))
        j = np.arange(-m_half, m_half + 1)
        vals = u.values[i0 + j] * scale
    else:
        vals = np.interp(x0 + r * new_grid.x, u.grid.x, u.values) * scale
    return GridFunction(new_grid, vals, TailModel.zero())


def _tails_ordered(t1: TailModel, t2: TailModel, R: float) -> bool:
    # The difference of two tail values is c1 y^-p1 - c2 y^-p2, which changes
    # sign at most once on (R, inf); nonnegativity at R and in the limit is
    # therefore equivalent to nonnegativity throughout.
    at_R = t1.value(R) - t2.value(R)
    lim1, lim2 = t1.limit(), t2.limit()
    if np.isinf(lim1) or np.isinf(lim2):
        lim = np.inf if (np.isinf(lim1) and lim1 > 0) or (np.isinf(lim2) and lim2 < 0) else -np.inf
        return at_R >= 0 and lim > 0
    return at_R >= 0 and (lim1 - lim2) >= 0


def comparison_check(u1: GridFunction, u2: GridFunction, residual_tol: float) -> bool:
    """Discrete comparison test: does u1 dominate u2 up to solver error?

    Requires the exterior data of u1 to dominate that of u2 at every
    exterior node and in the tail (rejects unordered inputs); returns True
    when u1 >= u2 - 10*residual_tol at every interior node.
    """
    if u1.grid.spec != u2.grid.spec:
        raise ValueError("grid mismatch")
    g1 = u1.exterior_values
    g2 = u2.exterior_values
    if not (g1 >= g2).all():
        raise ValueError("exterior data are not ordered")
    if not _tails_ordered(u1.tail, u2.tail, u1.grid.R):
        raise ValueError("tail models are not ordered")
    return bool((u1.interior_values >= u2.interior_values - 10 * residual_tol).all())


@dataclass
class LiouvilleReport:
    classification: str  # "decaying", "critical", or "growing"
    radii: np.ndarray
    q: np.ndarray
    sup_abs: float
    asserted_small: bool | None  # set only for solver-produced inputs


def liouville_probe(
    u: GridFunction,
    s: float,
    gamma: float,
    radii: np.ndarray | None = None,
    from_solver: bool = False,
) -> LiouvilleReport:
    """Classify the growth of q(r) = sup_{B_r}|u| / r^(2s/(1-gamma)).

    Per doubling of r: a strict decrease by factor >= 1.1 classifies as
    "decaying" (and for solver outputs additionally asserts that sup|u| is
    small), staying within factor 1.1 as "critical", anything else as
    "growing".  This is a classifier over a truncated grid, not a proof
    device: only the growth hypothesis and the smallness conclusion are
    examined.
    """
    h = u.grid.h
    a = u.grid.a
    beta = growth_exponent(s, gamma)
    if radii is None:
        r = 4 * h
        rs = []
        while r <= a:
            rs.append(r)
            r *= 2
        radii = np.array(rs)
    if radii.size < 3:
        raise ValueError("need at least three doubling radii")
    q = np.array([sup_on_ball(u, 0.0, r) / r**beta for r in radii])
    sup_abs = sup_on_ball(u, 0.0, float(radii[-1]))
    if np.all(q < 1e-300):
        cls = "decaying"  # identically zero at working precision
    else:
        ratios = q[1:] / np.maximum(q[:-1], 1e-300)
        if np.all(ratios <= 1.0 / 1.1):
            cls = "decaying"
        elif np.all(ratios <= 1.1) and np.all(ratios >= 1.0 / 1.1):
            cls = "critical"
        else:
            cls = "growing"
    asserted = None
    if from_solver and cls == "decaying":
        asserted = bool(sup_abs <= _SMALL_SUP * max(1.0, float(np.abs(u.values).max())))
    return LiouvilleReport(
        classification=cls, radii=radii, q=q, sup_abs=float(sup_abs), asserted_small=asserted
    )


def one_phase_branching_check(report: SolveReport) -> bool:
    """Do the branching thresholds hold at the free boundary of a one-phase solve?"""
    if report.mode != "one_phase":
        raise ValueError("report is not from a one-phase solve")
    if report.free_boundary is None:
        raise ValueError("no free boundary")
    u = report.solution
    h = u.grid.h
    beta = growth_exponent(report.s, report.gamma)
    du = discrete_derivative(u, 1)
    d2u = discrete_derivative(u, 2)
    i = int(np.argmin(np.abs(u.grid.x - report.free_boundary)))
    return bool(
        abs(u.values[i]) <= 10 * h**beta
        and abs(du.values[i]) <= 10 * h ** (beta - 1)
        and abs(d2u.values[i]) <= 10 * h ** (beta - 2)
    )


def random_ordered_pair(grid: Grid, rng: np.random.Generator) -> tuple[GridFunction, GridFunction]:
    """Smooth bounded exterior data g1 >= g2 with a strictly positive gap.

    Each function is a sum of three Gaussian bumps with random centers in the
    exterior band, random widths, amplitudes, and left-side signs; the gap is
    0.02 plus a squared bump, so the ordering is strict everywhere.  Both
    carry zero tails.
    """

    def bumps(y):
        g = np.zeros_like(y)
        for _ in range(3):
            c = rng.uniform(grid.a, grid.R)
            w = rng.uniform(0.3, 1.5)
            amp = rng.uniform(-1.0, 1.0)
            sgn = rng.choice((-1.0, 1.0))
            g += amp * np.exp(-(((np.abs(y) - c) / w) ** 2)) * np.where(y < 0, sgn, 1.0)
        return g

    ye = grid.x[grid.exterior]
    v1 = np.zeros(grid.n)
    v2 = np.zeros(grid.n)
    base = bumps(ye)
    gap = 0.02 + 0.5 * bumps(ye) ** 2
    v1[grid.exterior] = base
    v2[grid.exterior] = base - gap
    return (
        GridFunction(grid, v1, TailModel.zero()),
        GridFunction(grid, v2, TailModel.zero()),
    )


@dataclass
class ComparisonTrial:
    pair: int
    violation: float  # max over interior of (u2 - u1), 0 when ordered
    passed: bool
    converged: bool


def comparison_campaign(
    grid: Grid,
    s: float,
    reaction: ReactionSpec,
    n_pairs: int,
    seed: int,
    config: SolverConfig | None = None,
) -> list[ComparisonTrial]:
    """Solve random ordered data pairs and test the discrete comparison property."""
    config = config or SolverConfig()
    op = assemble(grid, s)
    rng = np.random.default_rng(seed)
    trials = []
    for k in range(n_pairs):
        g1, g2 = random_ordered_pair(grid, rng)
        rep1 = solve(op, g1, reaction, config)
        rep2 = solve(op, g2, reaction, config)
        gap = float(
            (rep2.solution.interior_values - rep1.solution.interior_values).max()
        )
        passed = comparison_check(rep1.solution, rep2.solution, config.residual_tol)
        trials.append(
            ComparisonTrial(
                pair=k,
                violation=max(0.0, gap),
                passed=passed,
                converged=rep1.converged and rep2.converged,
            )
        )
    return trials


@dataclass
class SLimitRow:
    s: float
    distance: float
    slope: float


def s_limit_study(
    grid: Grid,
    s_values,
    reaction: ReactionSpec,
    g: GridFunction,
    config: SolverConfig | None = None,
) -> tuple[list[SLimitRow], SolveReport]:
    """Solve at each s with fixed data and measure the distance to the local limit.

    The local reference uses the same gamma and the Dirichlet values of g at
    the nodes +-a.  distance is the interior sup difference; slope is the
    central growth fit of the nonlocal solution.
    """
    config = config or SolverConfig()
    ia = int(grid.interior[0] - 1)
    ib = int(grid.interior[-1] + 1)
    local_rep = solve_local(grid, reaction, (g.values[ia], g.values[ib]), config)
    u_loc = local_rep.solution.interior_values
    rows = []
    for s in s_values:
        op = assemble(grid, float(s))
        rep = solve(op, g, reaction, config)
        d = float(np.abs(rep.solution.interior_values - u_loc).max())
        fit = fit_growth_exponent(rep.solution, 0.0)
        rows.append(SLimitRow(s=float(s), distance=d, slope=fit.slope))
    return rows, local_rep


def write_exponent_csv(path: str, rows) -> None:
    """Rows of (s, gamma, x0, ExponentFit) as the exponent-study CSV."""
    with open(path, "w") as fh:
        fh.write("s,gamma,x0,slope,target,relative_gap,r2\n")
        for s, gamma, x0, fit in rows:
            target = growth_exponent(s, gamma) - fit.deriv_order
            gap = abs(fit.slope - target) / target
            fh.write(
                f"{s:.17g},{gamma:.17g},{x0:.17g},{fit.slope:.17g},"
                f"{target:.17g},{gap:.17g},{fit.r2:.17g}\n"
            )


def write_branching_csv(path: str, u: GridFunction, points: np.ndarray) -> None:
    """Detected branching points with their vanishing quantities."""
    du = discrete_derivative(u, 1)
    d2u = discrete_derivative(u, 2)
    with open(path, "w") as fh:
        fh.write("x0,u,du,d2u\n")
        for x0 in points:
            i = int(np.argmin(np.abs(u.grid.x - x0)))
            fh.write(
                f"{x0:.17g},{u.values[i]:.17g},{du.values[i]:.17g},{d2u.values[i]:.17g}\n"
            )


def write_slimit_csv(path: str, rows: list[SLimitRow]) -> None:
    with open(path, "w") as fh:
        fh.write("s,distance,slope\n")
        for row in rows:
            fh.write(f"{row.s:.17g},{row.distance:.17g},{row.slope:.17g}\n")
