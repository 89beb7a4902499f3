"""Scenario generator and scoring harness for selection procedures.

Datasets with known truth are generated from a Gaussian copula over arbitrary
marginals, optionally with spike-at-zero mass, and procedures are scored on
correct inclusion/exclusion, the shape distance between fitted and true
per-variable curves, and coefficient error, all with Monte-Carlo standard
errors. Every number is a deterministic function of (scenario, replications,
procedure configuration).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.special import ndtr, ndtri

from .data import Dataset, Family
from .errors import DomainError, InvalidCorrelationError, ModelBuildError
from .glm import FitResult, fit
from .model import ModelSpec, Term
from .selection import Criterion, SelectionTrace, backward_eliminate
from .mfp import MfpConfig, MfpResult, mfp


# ---------------------------------------------------------------------------
# Marginal distributions (inverse-CDF interface for the copula)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Uniform:
    lo: float = 0.0
    hi: float = 1.0

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * u

    @property
    def strictly_positive(self) -> bool:
        return self.lo >= 0.0


@dataclass(frozen=True)
class Normal:
    mu: float = 0.0
    sigma: float = 1.0

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return self.mu + self.sigma * ndtri(u)

    @property
    def strictly_positive(self) -> bool:
        return False


@dataclass(frozen=True)
class LogNormal:
    mu: float = 0.0
    sigma: float = 1.0

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return np.exp(self.mu + self.sigma * ndtri(u))

    @property
    def strictly_positive(self) -> bool:
        return True


@dataclass(frozen=True)
class Exponential:
    rate: float = 1.0

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return -np.log1p(-u) / self.rate

    @property
    def strictly_positive(self) -> bool:
        return True


Marginal = Union[Uniform, Normal, LogNormal, Exponential]


# ---------------------------------------------------------------------------
# True effects
# ---------------------------------------------------------------------------

TRUE_FORMS = ("null", "linear", "log", "power", "step")


@dataclass(frozen=True)
class Effect:
    """True contribution of one covariate to the linear predictor."""

    variable: str
    form: str = "linear"
    coefficient: float = 0.0
    param: float = 0.0  # exponent for "power", threshold for "step"

    def __post_init__(self):
        if self.form not in TRUE_FORMS:
            raise DomainError(f"unknown true form {self.form!r}")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.form == "null" or self.coefficient == 0.0:
            return np.zeros_like(x)
        if self.form == "linear":
            base = x
        elif self.form == "log":
            base = np.log(x)
        elif self.form == "power":
            base = x ** self.param
        else:
            base = (x > self.param).astype(float)
        return self.coefficient * base

    def model_term(self) -> Term | None:
        """The correctly specified model term, for oracle fitting."""
        if self.form == "null":
            return None
        if self.form == "linear":
            return Term.linear(self.variable)
        if self.form == "log":
            return Term.fp(self.variable, (0.0,))
        if self.form == "power":
            return Term.fp(self.variable, (self.param,))
        return Term.indicator(self.variable, self.param)


@dataclass(frozen=True)
class Covariate:
    name: str
    marginal: Marginal = Normal()
    spike_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.spike_prob < 1.0:
            raise DomainError(f"spike probability must be in [0, 1), got {self.spike_prob}")
        if self.spike_prob > 0.0 and not self.marginal.strictly_positive:
            raise DomainError(
                f"spike-at-zero covariate {self.name!r} needs a nonnegative marginal")


@dataclass(frozen=True)
class Scenario:
    """Complete recipe for one synthetic dataset family."""

    n: int
    covariates: tuple[Covariate, ...]
    effects: tuple[Effect, ...] = ()
    correlation: np.ndarray | None = None
    family: Family = Family.GAUSSIAN
    noise_sd: float = 1.0
    intercept: float = 0.0
    outcome_name: str = "y"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        object.__setattr__(self, "effects", tuple(self.effects))
        if self.n < 2:
            raise DomainError("scenario needs n >= 2")
        names = [c.name for c in self.covariates]
        if len(set(names)) != len(names):
            raise DomainError("duplicate covariate names")
        for e in self.effects:
            if e.variable not in names:
                raise DomainError(f"effect references unknown covariate {e.variable!r}")
        if self.correlation is not None:
            R = np.asarray(self.correlation, dtype=float)
            if R.shape != (len(names), len(names)):
                raise DomainError("correlation matrix shape does not match covariates")
            if not np.allclose(R, R.T):
                raise InvalidCorrelationError("correlation matrix is not symmetric")
            object.__setattr__(self, "correlation", R)

    @property
    def covariate_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.covariates)

    def true_effect(self, variable: str) -> Effect:
        for e in self.effects:
            if e.variable == variable:
                return e
        return Effect(variable, "null", 0.0)


def generate(scenario: Scenario, replication: int = 0) -> Dataset:
    """Deterministic dataset for (scenario.seed, replication).

    Correlated covariates come from a Gaussian copula: correlated standard
    normals are pushed through the normal CDF and then each marginal's inverse
    CDF. A spike covariate is set to zero where its copula uniform falls below
    the spike probability, and otherwise drawn from the upper remainder of its
    marginal, preserving the dependence ordering.
    """
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=scenario.seed, spawn_key=(replication,)))
    p = len(scenario.covariates)
    z = rng.standard_normal((scenario.n, p))
    if scenario.correlation is not None:
        try:
            chol = np.linalg.cholesky(scenario.correlation)
        except np.linalg.LinAlgError:
            raise InvalidCorrelationError(
                "correlation matrix is not positive definite") from None
        z = z @ chol.T
    u = np.clip(ndtr(z), 1e-12, 1.0 - 1e-12)

    columns: dict[str, np.ndarray] = {}
    eta = np.full(scenario.n, scenario.intercept)
    for j, cov in enumerate(scenario.covariates):
        uj = u[:, j]
        if cov.spike_prob > 0.0:
            at_zero = uj < cov.spike_prob
            u_rest = (uj - cov.spike_prob) / (1.0 - cov.spike_prob)
            x = np.where(at_zero, 0.0,
                         cov.marginal.ppf(np.clip(u_rest, 1e-12, 1.0 - 1e-12)))
        else:
            x = cov.marginal.ppf(uj)
        columns[cov.name] = x
        effect = scenario.true_effect(cov.name)
        if effect.form != "null":
            if effect.form in ("log", "power") and np.any(x <= 0.0) and cov.spike_prob == 0.0:
                raise DomainError(
                    f"true form {effect.form!r} needs positive {cov.name!r} values")
            if cov.spike_prob > 0.0 and effect.form in ("log", "power"):
                contrib = np.zeros(scenario.n)
                pos = x > 0.0
                contrib[pos] = effect.evaluate(x[pos])
                eta += contrib
            else:
                eta += effect.evaluate(x)

    if scenario.family is Family.GAUSSIAN:
        y = eta + scenario.noise_sd * rng.standard_normal(scenario.n)
    else:
        prob = 1.0 / (1.0 + np.exp(-eta))
        y = (rng.random(scenario.n) < prob).astype(float)
    columns[scenario.outcome_name] = y
    return Dataset.from_columns(columns, outcome=scenario.outcome_name,
                                family=scenario.family)


# ---------------------------------------------------------------------------
# Procedure protocol and adapters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitSummary:
    """What a procedure must report to be scored."""

    selected: frozenset[str]
    curves: Mapping[str, Callable[[np.ndarray], np.ndarray]] | None = None
    linear_coefficients: Mapping[str, float] | None = None


Procedure = Callable[[Dataset], FitSummary]


def component_curve(fitted: FitResult, term: Term) -> Callable[[np.ndarray], np.ndarray]:
    coefs = [fitted.coefficient(lab) for lab in term.labels()]

    def curve(x: np.ndarray) -> np.ndarray:
        cols = term.transform.columns(np.asarray(x, dtype=float))
        return sum(c * col for c, col in zip(coefs, cols))

    return curve


def _summary_from_fit(fitted: FitResult) -> FitSummary:
    curves = {}
    linear = {}
    for term in fitted.spec.terms:
        prior = curves.get(term.variable)
        extra = component_curve(fitted, term)
        if prior is None:
            curves[term.variable] = extra
        else:  # several terms of one variable add up (spike models)
            curves[term.variable] = lambda x, a=prior, b=extra: a(x) + b(x)
        labels = term.labels()
        if len(labels) == 1 and labels[0] == term.variable:
            linear[term.variable] = fitted.coefficient(labels[0])
    return FitSummary(
        selected=frozenset(t.variable for t in fitted.spec.terms),
        curves=curves,
        linear_coefficients=linear,
    )


def be_procedure(criterion: Criterion,
                 candidates: Sequence[str] | None = None) -> Procedure:
    """Backward elimination from the all-linear full model."""

    def run(dataset: Dataset) -> FitSummary:
        names = tuple(candidates) if candidates is not None else dataset.candidate_names
        start = ModelSpec(tuple(Term.linear(v) for v in names))
        trace = backward_eliminate(dataset, start, criterion)
        return _summary_from_fit(trace.final_fit)

    return run


def mfp_procedure(config: MfpConfig | None = None,
                  candidates: Sequence[str] | None = None) -> Procedure:
    """Combined variable and function selection."""

    def run(dataset: Dataset) -> FitSummary:
        names = tuple(candidates) if candidates is not None else dataset.candidate_names
        result = mfp(dataset, names, config)
        return _summary_from_fit(result.fit)

    return run


def oracle_procedure(scenario: Scenario) -> Procedure:
    """Fits the correctly specified model; benchmark upper bound."""

    def run(dataset: Dataset) -> FitSummary:
        terms = tuple(t for t in (e.model_term() for e in scenario.effects) if t is not None)
        fitted = fit(dataset, ModelSpec(terms))
        return _summary_from_fit(fitted)

    return run


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

SHAPE_GRID_POINTS = 41
SHAPE_QUANTILES = (0.01, 0.99)


def _shape_distance(x: np.ndarray, true_effect: Effect,
                    fitted_curve: Callable[[np.ndarray], np.ndarray] | None) -> float:
    """Mean squared difference between fitted and true curves on the central
    quantile grid of x, both vertically aligned at the covariate mean."""
    lo, hi = np.quantile(x, SHAPE_QUANTILES)
    if not hi > lo:
        return 0.0
    grid = np.linspace(lo, hi, SHAPE_GRID_POINTS)
    anchor = np.array([float(x.mean())])
    truth = true_effect.evaluate(grid) - true_effect.evaluate(anchor)
    if fitted_curve is None:
        fhat = np.zeros_like(grid)
    else:
        fhat = fitted_curve(grid) - fitted_curve(anchor)
    return float(np.mean((fhat - truth) ** 2))


@dataclass(frozen=True)
class VariableScore:
    variable: str
    true_form: str
    inclusion_rate: float
    inclusion_mc_error: float
    correct_rate: float
    shape_distance_mean: float
    shape_distance_mc_error: float


@dataclass(frozen=True)
class EvaluationReport:
    replications: int
    n_failed: int
    per_variable: tuple[VariableScore, ...]
    coefficient_rmse: float | None

    def score(self, variable: str) -> VariableScore:
        for s in self.per_variable:
            if s.variable == variable:
                return s
        raise DomainError(f"no score for variable {variable!r}")


def evaluate(procedure: Procedure, scenario: Scenario,
             replications: int) -> EvaluationReport:
    """Run generate + procedure per replication and aggregate the scores.

    Failed replications (model-building errors) are counted and excluded from
    the denominators. Rates carry binomial Monte-Carlo errors; shape distances
    carry the standard error of their mean.
    """
    if replications < 1:
        raise DomainError("replications must be >= 1")
    names = scenario.covariate_names
    included = {v: [] for v in names}
    correct = {v: [] for v in names}
    shape = {v: [] for v in names}
    sq_errors: list[float] = []
    n_failed = 0
    for r in range(replications):
        dataset = generate(scenario, replication=r)
        try:
            summary = procedure(dataset)
        except ModelBuildError:
            n_failed += 1
            continue
        for v in names:
            effect = scenario.true_effect(v)
            truly_in = effect.form != "null" and effect.coefficient != 0.0
            is_in = v in summary.selected
            included[v].append(1.0 if is_in else 0.0)
            correct[v].append(1.0 if is_in == truly_in else 0.0)
            curve = (summary.curves or {}).get(v) if is_in else None
            shape[v].append(_shape_distance(dataset.column(v), effect, curve))
            if effect.form == "linear" and summary.linear_coefficients is not None:
                fitted_coef = summary.linear_coefficients.get(v, 0.0) if is_in else 0.0
                sq_errors.append((fitted_coef - effect.coefficient) ** 2)
    n_ok = replications - n_failed
    if n_ok == 0:
        raise ModelBuildError("every replication failed")
    scores = []
    for v in names:
        inc = np.asarray(included[v])
        dist = np.asarray(shape[v])
        rate = float(inc.mean())
        scores.append(VariableScore(
            variable=v,
            true_form=scenario.true_effect(v).form,
            inclusion_rate=rate,
            inclusion_mc_error=math.sqrt(rate * (1.0 - rate) / n_ok),
            correct_rate=float(np.asarray(correct[v]).mean()),
            shape_distance_mean=float(dist.mean()),
            shape_distance_mc_error=float(dist.std(ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else 0.0,
        ))
    rmse = math.sqrt(sum(sq_errors) / len(sq_errors)) if sq_errors else None
    return EvaluationReport(
        replications=replications,
        n_failed=n_failed,
        per_variable=tuple(scores),
        coefficient_rmse=rmse,
    )


# ---------------------------------------------------------------------------
# Exhaustive best-subset search (internal oracle for small problems)
# ---------------------------------------------------------------------------

def best_subset(dataset: Dataset, candidates: Sequence[str],
                criterion: Criterion, max_candidates: int = 12) -> tuple[str, ...]:
    """Minimum-information-criterion subset by full enumeration.

    Test oracle only: exponential cost, capped at `max_candidates` variables.
    AIC and BIC are supported; ties go to the smaller model, then to
    enumeration order.
    """
    names = tuple(candidates)
    if len(names) > max_candidates:
        raise DomainError(f"best-subset enumeration capped at {max_candidates} candidates")
    if criterion.kind == "pvalue":
        raise DomainError("best-subset search needs an information criterion")
    penalty = 2.0 if criterion.kind == "aic" else math.log(dataset.n)
    best: tuple[float, int, tuple[str, ...]] | None = None
    for size in range(len(names) + 1):
        for subset in itertools.combinations(names, size):
            fitted = fit(dataset, ModelSpec(tuple(Term.linear(v) for v in subset)))
            ic = -2.0 * fitted.log_likelihood + penalty * fitted.model_df
            key = (ic, size, subset)
            if best is None or key < best:
                best = key
    return best[2]
