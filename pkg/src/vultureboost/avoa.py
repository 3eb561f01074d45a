"""African vulture search over box-bounded real domains.

Population metaheuristic steered by two elite solutions per iteration and a
noisy satiation level F that hands control from long-range exploration
(|F| >= 1) to two exploitation stages (0.5 <= |F| < 1, then |F| < 0.5, the
latter with heavy-tailed jumps). The engine minimizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_EPS = 1e-12


@dataclass(frozen=True)
class AvoaParams:
    """Controlling parameters; defaults follow the recommended configuration."""

    population_size: int = 50
    max_iterations: int = 40
    p1: float = 0.6
    p2: float = 0.4
    p3: float = 0.6
    l1: float = 0.8
    l2: float = 0.2
    w_exponent: float = 2.5
    levy_beta: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        for name in ("p1", "p2", "p3", "l1", "l2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if abs(self.l1 + self.l2 - 1.0) > 1e-12:
            raise ValueError("l1 + l2 must equal 1")
        if not 0.0 < self.levy_beta <= 2.0:
            raise ValueError("levy_beta must lie in (0, 2]")


@dataclass(frozen=True)
class SearchBounds:
    """Box constraints; every emitted position is clamped into the box."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size < 1:
            raise ValueError("bounds must be 1-D vectors of equal length")
        if not (lo < hi).all():
            raise ValueError("each lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


@dataclass(frozen=True)
class VultureState:
    """A candidate position and its fitness."""

    position: np.ndarray
    fitness: float


@dataclass
class ConvergenceTrace:
    """Best-so-far fitness per iteration plus bookkeeping counters."""

    best_fitness_per_iteration: list[float]
    best_position_final: np.ndarray
    evaluations: int
    phase_counts: dict[str, int] = field(default_factory=dict)
    phase_log: list[tuple[float, str]] | None = None

    def to_csv(self, path, value_name: str = "best_fitness",
               values=None, header_comment: str | None = None) -> None:
        """One row per iteration; optional substitute value column."""
        series = self.best_fitness_per_iteration if values is None else values
        with open(path, "w", encoding="utf-8") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write(f"iteration,{value_name}\n")
            for i, v in enumerate(series, start=1):
                fh.write(f"{i},{v!r}\n")


def roulette_select(scores, rng) -> int:
    """Draw an index with probability proportional to its nonnegative score."""
    s = np.asarray(scores, dtype=float)
    if (s < 0).any():
        raise ValueError("selection scores must be nonnegative")
    total = s.sum()
    if total <= 0:
        raise ValueError("all-zero selection scores")
    return int(np.searchsorted(np.cumsum(s), rng.uniform(0.0, total), side="right"))


def selection_scores(fitnesses) -> np.ndarray:
    """Nonnegative roulette scores for a minimizing engine: max_f - f_i + eps."""
    f = np.asarray(fitnesses, dtype=float)
    return f.max() - f + _EPS


def pick_reference(best1: VultureState, best2: VultureState,
                   params: AvoaParams, rng) -> VultureState:
    """Elite guiding this update: best1 with probability l1, else best2."""
    idx = roulette_select(np.array([params.l1, params.l2]), rng)
    return best1 if idx == 0 else best2


def satiation_rate(iteration: int, max_iterations: int,
                   params: AvoaParams, rng) -> float:
    """Hunger level F for one vulture; decays noisily toward 0.

    Draw order: rand1 ~ U(0,1), z ~ U(-1,1), h ~ U(-2,2).
    """
    rand1 = rng.uniform(0.0, 1.0)
    z = rng.uniform(-1.0, 1.0)
    h = rng.uniform(-2.0, 2.0)
    frac = iteration / max_iterations
    t = h * (math.sin(0.5 * math.pi * frac) ** params.w_exponent
             + math.cos(0.5 * math.pi * frac) - 1.0)
    return (2.0 * rand1 + 1.0) * z * (1.0 - frac) + t


def exploration_step(v: VultureState, ref: VultureState, F: float,
                     bounds: SearchBounds, params: AvoaParams, rng) -> np.ndarray:
    """Long-range move around (or away from) the chosen elite; |F| >= 1.

    Draw order: gate ~ U(0,1); focused branch then draws X ~ U(0,2)^dim,
    global branch draws rand2, rand3 ~ U(0,1).
    """
    p, r = v.position, ref.position
    if rng.uniform(0.0, 1.0) <= params.p1:
        X = rng.uniform(0.0, 2.0, size=p.size)
        distance = np.abs(X * r - p)
        new = r - distance * F
    else:
        rand2 = rng.uniform(0.0, 1.0)
        rand3 = rng.uniform(0.0, 1.0)
        new = r - F + rand2 * ((bounds.upper - bounds.lower) * rand3 + bounds.lower)
    return bounds.clamp(new)


def exploitation_stage1(v: VultureState, ref: VultureState, F: float,
                        bounds: SearchBounds, params: AvoaParams, rng) -> np.ndarray:
    """Siege fight or rotational flight; 0.5 <= |F| < 1.

    Draw order: gate ~ U(0,1); siege branch draws X ~ U(0,2)^dim then
    rand4 ~ U(0,1), rotational branch draws rand5, rand6 ~ U(0,1).
    """
    p, r = v.position, ref.position
    if rng.uniform(0.0, 1.0) <= params.p2:
        X = rng.uniform(0.0, 2.0, size=p.size)
        distance = np.abs(X * r - p)
        rand4 = rng.uniform(0.0, 1.0)
        new = distance * (F + rand4) - (r - p)
    else:
        rand5 = rng.uniform(0.0, 1.0)
        rand6 = rng.uniform(0.0, 1.0)
        s1 = r * (rand5 * p / (2.0 * math.pi)) * np.cos(p)
        s2 = r * (rand6 * p / (2.0 * math.pi)) * np.sin(p)
        new = r - (s1 + s2)
    return bounds.clamp(new)


def exploitation_stage2(v: VultureState, best1: VultureState, best2: VultureState,
                        ref: VultureState, F: float, bounds: SearchBounds,
                        params: AvoaParams, rng) -> np.ndarray:
    """Aggressive siege toward both elites, or a Levy-flight raid; |F| < 0.5.

    Draw order: gate ~ U(0,1); only the Levy branch draws further
    (u then v standard-normal vectors inside levy_sample).
    """
    p = v.position
    if rng.uniform(0.0, 1.0) <= params.p3:
        b1, b2 = best1.position, best2.position
        a1 = b1 - (b1 * p) / (b1 - p ** 2 + _EPS) * F
        a2 = b2 - (b2 * p) / (b2 - p ** 2 + _EPS) * F
        new = (a1 + a2) / 2.0
    else:
        r = ref.position
        new = r - np.abs(r - p) * F * levy_sample(p.size, params.levy_beta, rng)
    return bounds.clamp(new)


def levy_sigma(beta: float) -> float:
    """Scale of the numerator normal in the Mantegna heavy-tail sampler."""
    num = math.gamma(1.0 + beta) * math.sin(math.pi * beta / 2.0)
    den = math.gamma((1.0 + beta) / 2.0) * beta * 2.0 ** ((beta - 1.0) / 2.0)
    return (num / den) ** (1.0 / beta)


def levy_sample(dim: int, beta: float, rng) -> np.ndarray:
    """Heavy-tailed step per dimension: 0.01 * u * sigma / |v|^(1/beta).

    Draw order: u ~ N(0,1)^dim, then v ~ N(0,1)^dim.
    """
    if not 0.0 < beta <= 2.0:
        raise ValueError("beta must lie in (0, 2]")
    u = rng.standard_normal(dim) * levy_sigma(beta)
    v = rng.standard_normal(dim)
    return 0.01 * u / np.abs(v) ** (1.0 / beta)


def _checked_eval(objective, x: np.ndarray) -> float:
    value = float(objective(x))
    if not math.isfinite(value):
        raise ValueError(f"objective returned non-finite value {value} at {x.tolist()}")
    return value


def optimize(objective, bounds: SearchBounds, params: AvoaParams,
             initial_population: np.ndarray | None = None,
             record_phases: bool = False):
    """Minimize objective over the box; returns (best VultureState, trace).

    Deterministic for a fixed seed. Per-iteration draw order, one vulture
    at a time in index order: reference pick, satiation draws, phase gate,
    branch draws. The whole population moves each iteration; the returned
    state and trace track the best position ever evaluated. Fitness calls
    are pure reads of the objective and could run in parallel per
    iteration; this implementation keeps them sequential for exact draw
    accounting.
    """
    rng = np.random.default_rng(params.seed)
    n, dim = params.population_size, bounds.dim

    if initial_population is None:
        pop = rng.uniform(bounds.lower, bounds.upper, size=(n, dim))
    else:
        pop = np.asarray(initial_population, dtype=float).copy()
        if pop.shape != (n, dim):
            raise ValueError(f"initial population must have shape {(n, dim)}")
        pop = bounds.clamp(pop)

    fit = np.array([_checked_eval(objective, row) for row in pop])
    evaluations = n
    best_idx = int(np.argmin(fit))
    best_pos = pop[best_idx].copy()
    best_val = float(fit[best_idx])

    history: list[float] = []
    phase_counts = {"exploration": 0, "stage1": 0, "stage2": 0}
    phase_log: list[tuple[float, str]] = []

    for iteration in range(params.max_iterations):
        order = np.argsort(fit, kind="stable")
        best1 = VultureState(pop[order[0]].copy(), float(fit[order[0]]))
        best2 = VultureState(pop[order[1]].copy(), float(fit[order[1]]))

        new_pop = np.empty_like(pop)
        for i in range(n):
            state = VultureState(pop[i], float(fit[i]))
            ref = pick_reference(best1, best2, params, rng)
            F = satiation_rate(iteration, params.max_iterations, params, rng)
            if abs(F) >= 1.0:
                phase = "exploration"
                new_pop[i] = exploration_step(state, ref, F, bounds, params, rng)
            elif abs(F) >= 0.5:
                phase = "stage1"
                new_pop[i] = exploitation_stage1(state, ref, F, bounds, params, rng)
            else:
                phase = "stage2"
                new_pop[i] = exploitation_stage2(state, best1, best2, ref, F,
                                                 bounds, params, rng)
            phase_counts[phase] += 1
            if record_phases:
                phase_log.append((F, phase))

        pop = new_pop
        fit = np.array([_checked_eval(objective, row) for row in pop])
        evaluations += n
        it_best = int(np.argmin(fit))
        if fit[it_best] < best_val:
            best_val = float(fit[it_best])
            best_pos = pop[it_best].copy()
        history.append(best_val)

    trace = ConvergenceTrace(history, best_pos.copy(), evaluations, phase_counts,
                             phase_log if record_phases else None)
    return VultureState(best_pos, best_val), trace
