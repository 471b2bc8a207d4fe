"""Meta-evaluation: human rankings from pairwise judgments and correlations.

Two ranking producers:

* Expected Wins — a system's score is its mean win rate over opponents,
  counting decisive comparisons only (ties are dropped from numerator and
  denominator alike); opponents never met decisively are skipped.
* TrueSkill — each system's skill is a Gaussian N(mu, sigma^2) updated match
  by match with the standard two-player factor-graph equations (draws
  included, margin derived from the configured draw probability); the
  reported score is the conservative mu - 3*sigma.

Metric scores are then correlated against a ranking with Pearson's r or
Spearman's rho (average ranks on ties), and `grid_search_factors` sweeps the
trade-off simplex for the factor tuple maximizing Pearson correlation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.stats import norm

from .corpus_io import A_WINS, B_WINS, TIE, JudgmentSet
from .scoring import TradeOffFactors


class ConstantInputError(ValueError):
    """Correlation is undefined when either vector is constant."""


def pearson(xs: list[float], ys: list[float]) -> float:
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise ValueError("correlation needs at least two points")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    cov = sxx = syy = 0.0
    for x, y in zip(xs, ys):
        dx, dy = x - mean_x, y - mean_y
        cov += dx * dy
        sxx += dx * dx
        syy += dy * dy
    if sxx == 0.0 or syy == 0.0:
        raise ConstantInputError("correlation undefined for constant input")
    r = cov / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def fractional_ranks(values: list[float]) -> list[float]:
    """1-based ranks; tied values share the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg_rank = (i + j) / 2 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg_rank
        i = j + 1
    return ranks


def spearman(xs: list[float], ys: list[float]) -> float:
    return pearson(fractional_ranks(xs), fractional_ranks(ys))


@dataclass
class RankingScore:
    """Per-system scores plus systems whose score could not be determined."""

    scores: dict[str, float]
    undefined: list[str] = field(default_factory=list)

    def order(self) -> list[str]:
        return sorted(self.scores, key=lambda s: (-self.scores[s], s))


def expected_wins(judgments: JudgmentSet) -> RankingScore:
    wins: dict[tuple[str, str], int] = {}
    for comp in judgments.comparisons:
        if comp.outcome == TIE:
            continue
        winner, loser = (
            (comp.system_a, comp.system_b)
            if comp.outcome == A_WINS
            else (comp.system_b, comp.system_a)
        )
        wins[(winner, loser)] = wins.get((winner, loser), 0) + 1

    scores: dict[str, float] = {}
    undefined: list[str] = []
    for system in judgments.systems:
        rates = []
        for other in judgments.systems:
            if other == system:
                continue
            won = wins.get((system, other), 0)
            lost = wins.get((other, system), 0)
            if won + lost == 0:
                continue  # no decisive meetings with this opponent
            rates.append(won / (won + lost))
        if rates:
            scores[system] = sum(rates) / len(rates)
        else:
            undefined.append(system)
    return RankingScore(scores=scores, undefined=undefined)


@dataclass
class TrueSkillParams:
    mu0: float = 25.0
    sigma0: float = 25.0 / 3.0
    beta: float = 25.0 / 6.0
    tau: float = 25.0 / 300.0
    draw_probability: float = 0.10

    def __post_init__(self) -> None:
        if self.sigma0 <= 0 or self.beta <= 0 or self.tau < 0:
            raise ValueError("sigma0 and beta must be > 0, tau >= 0")
        if not 0.0 <= self.draw_probability < 1.0:
            raise ValueError("draw_probability must lie in [0, 1)")


def _v_win(x: float) -> float:
    denom = float(norm.cdf(x))
    if denom < 1e-300:
        return -x  # asymptote of pdf/cdf for very unlikely outcomes
    return float(norm.pdf(x)) / denom


def _w_win(x: float) -> float:
    v = _v_win(x)
    return v * (v + x)


def _v_draw(diff: float, margin: float) -> float:
    x = abs(diff)
    a, b = margin - x, -margin - x
    denom = float(norm.cdf(a) - norm.cdf(b))
    if denom < 1e-300:
        return -diff
    v = float(norm.pdf(b) - norm.pdf(a)) / denom
    return -v if diff < 0 else v


def _w_draw(diff: float, margin: float) -> float:
    x = abs(diff)
    a, b = margin - x, -margin - x
    denom = float(norm.cdf(a) - norm.cdf(b))
    if denom < 1e-300:
        return 1.0
    v = float(norm.pdf(b) - norm.pdf(a)) / denom
    return v * v + float(a * norm.pdf(a) - b * norm.pdf(b)) / denom


def trueskill_ratings(
    judgments: JudgmentSet, params: TrueSkillParams | None = None
) -> dict[str, tuple[float, float]]:
    """Sequential two-player updates over the comparisons in file order.

    Returns the posterior (mu, sigma) per system.
    """
    p = params or TrueSkillParams()
    mu = {s: p.mu0 for s in judgments.systems}
    var = {s: p.sigma0**2 for s in judgments.systems}
    # Margin inside which a performance difference counts as a draw.
    draw_margin = float(norm.ppf((p.draw_probability + 1.0) / 2.0)) * math.sqrt(2.0) * p.beta

    for comp in judgments.comparisons:
        a, b = comp.system_a, comp.system_b
        var[a] += p.tau**2
        var[b] += p.tau**2
        c2 = 2.0 * p.beta**2 + var[a] + var[b]
        c = math.sqrt(c2)
        if comp.outcome == TIE:
            first, second = a, b
            diff = (mu[a] - mu[b]) / c
            v = _v_draw(diff, draw_margin / c)
            w = _w_draw(diff, draw_margin / c)
        else:
            first, second = (a, b) if comp.outcome == A_WINS else (b, a)
            x = (mu[first] - mu[second] - draw_margin) / c
            v = _v_win(x)
            w = _w_win(x)
        mu[first] += var[first] / c * v
        mu[second] -= var[second] / c * v
        var[first] *= max(1e-12, 1.0 - var[first] / c2 * w)
        var[second] *= max(1e-12, 1.0 - var[second] / c2 * w)

    return {s: (mu[s], math.sqrt(var[s])) for s in judgments.systems}


def trueskill_rank(judgments: JudgmentSet, params: TrueSkillParams | None = None) -> RankingScore:
    """Rank by conservative skill estimate mu - 3*sigma."""
    ratings = trueskill_ratings(judgments, params)
    return RankingScore(scores={s: m - 3.0 * sig for s, (m, sig) in ratings.items()})


class GridSearchError(RuntimeError):
    pass


def enumerate_factor_grid(grid_step: float) -> list[TradeOffFactors]:
    """All factor tuples with entries in {step, 2*step, ...} summing to 1."""
    if grid_step <= 0 or grid_step >= 1:
        raise ValueError("grid step must lie in (0, 1)")
    n = round(1.0 / grid_step)
    if abs(n * grid_step - 1.0) > 1e-9:
        raise ValueError(f"grid step {grid_step} does not divide 1 evenly")
    grid = []
    for k1 in range(1, n - 2):
        for k2 in range(1, n - 1 - k1):
            for k3 in range(1, n - k1 - k2):
                k4 = n - k1 - k2 - k3
                grid.append(
                    TradeOffFactors(
                        round(k1 * grid_step, 12),
                        round(k2 * grid_step, 12),
                        round(k3 * grid_step, 12),
                        round(k4 * grid_step, 12),
                    )
                )
    return grid


def correlation_against(
    metric_scores: dict[str, float], human: RankingScore, method: str = "pearson"
) -> float:
    systems = [s for s in sorted(human.scores) if s in metric_scores]
    if len(systems) < 2:
        raise ValueError("need at least two systems shared by metric and ranking")
    xs = [metric_scores[s] for s in systems]
    ys = [human.scores[s] for s in systems]
    return pearson(xs, ys) if method == "pearson" else spearman(xs, ys)


def grid_search_factors(
    score_fn, human: RankingScore, grid_step: float = 0.05
) -> TradeOffFactors:
    """Factor tuple maximizing Pearson correlation against a human ranking.

    ``score_fn(factors)`` must return per-system metric scores.  The grid is
    scanned in lexicographic order, so ties keep the earliest tuple.
    """
    grid = enumerate_factor_grid(grid_step)
    if not grid:
        raise GridSearchError(f"no valid grid point for step {grid_step}")
    best: TradeOffFactors | None = None
    best_r = -math.inf
    for factors in grid:
        try:
            r = correlation_against(score_fn(factors), human)
        except ConstantInputError:
            continue
        if r > best_r:
            best, best_r = factors, r
    if best is None:
        raise GridSearchError("every grid point produced an undefined correlation")
    return best


@dataclass
class FoldResult:
    held_out: int
    factors: TradeOffFactors
    heldout_pearson: float


def cross_validate_factors(
    folds: list[tuple[object, RankingScore]], grid_step: float = 0.05
) -> list[FoldResult]:
    """Leave-one-out sweep: tune factors on all folds but one, test on it.

    Each fold pairs a ``score_fn(factors) -> dict`` with its human ranking
    (e.g. one fold per reference set).
    """
    if len(folds) < 2:
        raise ValueError("cross-validation needs at least two folds")
    results = []
    grid = enumerate_factor_grid(grid_step)
    for held in range(len(folds)):
        train = [f for i, f in enumerate(folds) if i != held]
        best, best_r = None, -math.inf
        for factors in grid:
            rs = []
            try:
                for fn, human in train:
                    rs.append(correlation_against(fn(factors), human))
            except ConstantInputError:
                continue
            mean_r = sum(rs) / len(rs)
            if mean_r > best_r:
                best, best_r = factors, mean_r
        if best is None:
            raise GridSearchError("cross-validation found no usable grid point")
        fn, human = folds[held]
        results.append(
            FoldResult(
                held_out=held,
                factors=best,
                heldout_pearson=correlation_against(fn(best), human),
            )
        )
    return results
