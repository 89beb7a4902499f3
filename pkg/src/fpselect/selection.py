"""Classical variable selection on fixed functional forms.

Backward elimination, forward selection, stepwise, univariable screening, and
augmented backward elimination with a change-in-estimate safeguard. Stopping
rules are expressed as p-value thresholds; information criteria translate
exactly into such thresholds for nested comparisons (a k-d.f. block passes the
AIC comparison iff its likelihood-ratio statistic exceeds 2k, i.e. iff its
p-value is below chi2_sf(2k, k), and analogously with penalty log(n) for BIC),
so selection under AIC/BIC is implemented through that equivalence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

from .chi2 import chi2_sf
from .data import Dataset
from .errors import CycleDetectedError, DomainError, ExposureMissingError
from .glm import FitResult, deviance_test, fit
from .model import ModelSpec, Term


@dataclass(frozen=True)
class Criterion:
    """Stopping rule: a fixed significance level, or AIC/BIC."""

    kind: str  # "pvalue" | "aic" | "bic"
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in ("pvalue", "aic", "bic"):
            raise DomainError(f"unknown criterion kind {self.kind!r}")
        if self.kind == "pvalue":
            if self.alpha is None or not 0.0 < self.alpha <= 1.0:
                raise DomainError(f"p-value criterion needs alpha in (0, 1], got {self.alpha}")
        elif self.alpha is not None:
            raise DomainError(f"{self.kind} criterion takes no alpha")

    @staticmethod
    def p_value(alpha: float) -> "Criterion":
        return Criterion("pvalue", alpha)

    @staticmethod
    def aic() -> "Criterion":
        return Criterion("aic")

    @staticmethod
    def bic() -> "Criterion":
        return Criterion("bic")

    def __str__(self) -> str:
        return f"pvalue({self.alpha:g})" if self.kind == "pvalue" else self.kind


def criterion_threshold(criterion: Criterion, n: int, df: int = 1) -> float:
    """Significance level equivalent to the criterion for a df-parameter step.

    AIC corresponds to chi2_sf(2*df, df) (0.157 at one degree of freedom); BIC
    to chi2_sf(df*log(n), df), which shrinks as the sample grows.
    """
    if df < 1:
        raise DomainError(f"df must be >= 1, got {df}")
    if criterion.kind == "pvalue":
        return float(criterion.alpha)
    if criterion.kind == "aic":
        return chi2_sf(2.0 * df, df)
    if n < 2:
        raise DomainError(f"BIC threshold needs n >= 2, got {n}")
    return chi2_sf(df * math.log(n), df)


@dataclass(frozen=True)
class SelectionStep:
    action: str  # "add" | "drop" | "keep-confounder"
    variable: str
    term: Term
    p_value: float
    deviance_after: float


@dataclass(frozen=True)
class SelectionTrace:
    """Full record of a selection run; replaying `steps` from the start model
    reproduces `final_spec`."""

    start_spec: ModelSpec
    steps: tuple[SelectionStep, ...]
    final_spec: ModelSpec
    final_fit: FitResult
    criterion: Criterion

    @property
    def selected_variables(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(t.variable for t in self.final_spec.terms))


def _removal_pvalue(dataset: Dataset, current_fit: FitResult, spec: ModelSpec,
                    term: Term) -> tuple[float, FitResult, int]:
    reduced_spec = spec.without_term(term)
    reduced_fit = fit(dataset, reduced_spec)
    df = max(current_fit.model_df - reduced_fit.model_df, 1)
    return deviance_test(reduced_fit, current_fit, df), reduced_fit, df


def backward_eliminate(dataset: Dataset, start_spec: ModelSpec,
                       criterion: Criterion,
                       protected: Sequence[Term] = ()) -> SelectionTrace:
    """Drop the least significant term while it fails the criterion.

    Terms generating several design columns (dummy blocks, second-degree FP
    pairs) are tested and dropped jointly. `protected` terms are never
    candidates for removal.
    """
    spec = start_spec
    current = fit(dataset, spec)
    protected = tuple(protected)
    steps: list[SelectionStep] = []
    while True:
        worst = None
        for term in spec.terms:
            if term in protected:
                continue
            p, reduced_fit, df = _removal_pvalue(dataset, current, spec, term)
            if worst is None or p > worst[0]:
                worst = (p, term, reduced_fit, df)
        if worst is None:
            break
        p, term, reduced_fit, df = worst
        if p <= criterion_threshold(criterion, dataset.n, df):
            break
        spec = spec.without_term(term)
        current = reduced_fit
        steps.append(SelectionStep("drop", term.variable, term, p, current.deviance))
    return SelectionTrace(start_spec, tuple(steps), spec, current, criterion)


def _as_terms(candidates: Sequence[Union[str, Term]]) -> tuple[Term, ...]:
    return tuple(c if isinstance(c, Term) else Term.linear(c) for c in candidates)


def forward_select(dataset: Dataset, candidates: Sequence[Union[str, Term]],
                   criterion: Criterion,
                   start_spec: ModelSpec | None = None) -> SelectionTrace:
    """Starting from the intercept-only model, repeatedly add the most
    significant remaining candidate while it passes the criterion."""
    initial = start_spec or ModelSpec()
    spec = initial
    current = fit(dataset, spec)
    remaining = [t for t in _as_terms(candidates) if t not in spec.terms]
    steps: list[SelectionStep] = []
    while remaining:
        best = None
        for term in remaining:
            bigger_spec = spec.with_term(term)
            bigger_fit = fit(dataset, bigger_spec)
            df = max(bigger_fit.model_df - current.model_df, 1)
            p = deviance_test(current, bigger_fit, df)
            if best is None or p < best[0]:
                best = (p, term, bigger_fit, df)
        p, term, bigger_fit, df = best
        if p > criterion_threshold(criterion, dataset.n, df):
            break
        spec = spec.with_term(term)
        current = bigger_fit
        remaining.remove(term)
        steps.append(SelectionStep("add", term.variable, term, p, current.deviance))
    return SelectionTrace(initial, tuple(steps), spec, current, criterion)


def stepwise(dataset: Dataset, candidates: Sequence[Union[str, Term]],
             criterion_in: Criterion, criterion_out: Criterion | None = None,
             max_iterations: int = 100) -> SelectionTrace:
    """Forward selection with backward re-checks after every addition.

    The entry threshold must not exceed the exit threshold, otherwise the
    procedure can oscillate; that configuration raises CycleDetected up front.
    """
    criterion_out = criterion_out or criterion_in
    thr_in = criterion_threshold(criterion_in, dataset.n, 1)
    thr_out = criterion_threshold(criterion_out, dataset.n, 1)
    if thr_in > thr_out + 1e-12:
        raise CycleDetectedError(
            f"entry threshold {thr_in:.4g} exceeds exit threshold {thr_out:.4g}"
        )
    all_terms = _as_terms(candidates)
    spec = ModelSpec()
    current = fit(dataset, spec)
    steps: list[SelectionStep] = []
    for _ in range(max_iterations):
        changed = False
        # Forward step: best addition among candidates not in the model.
        best = None
        for term in all_terms:
            if term in spec.terms:
                continue
            bigger_fit = fit(dataset, spec.with_term(term))
            df = max(bigger_fit.model_df - current.model_df, 1)
            p = deviance_test(current, bigger_fit, df)
            if best is None or p < best[0]:
                best = (p, term, bigger_fit, df)
        if best is not None and best[0] <= criterion_threshold(criterion_in, dataset.n, best[3]):
            p, term, bigger_fit, _ = best
            spec = spec.with_term(term)
            current = bigger_fit
            steps.append(SelectionStep("add", term.variable, term, p, current.deviance))
            changed = True
        # Backward re-checks until every retained term passes.
        while True:
            worst = None
            for term in spec.terms:
                p, reduced_fit, df = _removal_pvalue(dataset, current, spec, term)
                if worst is None or p > worst[0]:
                    worst = (p, term, reduced_fit, df)
            if worst is None or worst[0] <= criterion_threshold(criterion_out, dataset.n, worst[3]):
                break
            p, term, reduced_fit, _ = worst
            spec = spec.without_term(term)
            current = reduced_fit
            steps.append(SelectionStep("drop", term.variable, term, p, current.deviance))
            changed = True
        if not changed:
            return SelectionTrace(ModelSpec(), tuple(steps), spec, current, criterion_in)
    raise CycleDetectedError(f"stepwise did not settle within {max_iterations} iterations")


def _max_exposure_change(fit_with: FitResult, fit_without: FitResult,
                         exposure_labels: Sequence[str], mode: str) -> float:
    change = 0.0
    for label in exposure_labels:
        b_with = fit_with.coefficient(label)
        b_without = fit_without.coefficient(label)
        if mode == "standardized":
            se = fit_with.standard_error(label)
            change = max(change, abs(b_with - b_without) / se if se > 0 else math.inf)
        else:
            denom = abs(b_with)
            change = max(change, abs(b_with - b_without) / denom if denom > 0 else math.inf)
    return change


def augmented_backward_eliminate(dataset: Dataset, start_spec: ModelSpec,
                                 alpha: float, exposure: Union[str, Term],
                                 cie_threshold: float = 0.05,
                                 mode: str = "standardized") -> SelectionTrace:
    """Backward elimination that keeps passive confounders of an exposure.

    The exposure term itself is never dropped. A non-significant term is still
    retained (recorded as "keep-confounder") when removing it would change the
    exposure coefficient by more than `cie_threshold`, measured per exposure
    column as |change|/SE in "standardized" mode or |change|/|coefficient| in
    "relative" mode (the maximum over columns for multi-column exposures).
    """
    if mode not in ("standardized", "relative"):
        raise DomainError(f"mode must be 'standardized' or 'relative', got {mode!r}")
    if isinstance(exposure, Term):
        exposure_term = exposure
    else:
        matches = [t for t in start_spec.terms if t.variable == exposure]
        if not matches:
            raise ExposureMissingError(f"exposure {exposure!r} not in the starting model")
        exposure_term = matches[0]
    if exposure_term not in start_spec.terms:
        raise ExposureMissingError(f"exposure term for {exposure_term.variable!r} not in the starting model")
    exposure_labels = exposure_term.labels()

    spec = start_spec
    current = fit(dataset, spec)
    steps: list[SelectionStep] = []
    kept_as_confounder: set[Term] = set()
    while True:
        ranked = []
        for term in spec.terms:
            if term == exposure_term or term in kept_as_confounder:
                continue
            p, reduced_fit, df = _removal_pvalue(dataset, current, spec, term)
            if p > alpha:
                ranked.append((p, term, reduced_fit))
        ranked.sort(key=lambda item: -item[0])
        dropped = False
        for p, term, reduced_fit in ranked:
            change = _max_exposure_change(current, reduced_fit, exposure_labels, mode)
            if change > cie_threshold:
                kept_as_confounder.add(term)
                steps.append(SelectionStep("keep-confounder", term.variable, term,
                                           p, current.deviance))
                continue
            spec = spec.without_term(term)
            current = reduced_fit
            steps.append(SelectionStep("drop", term.variable, term, p, current.deviance))
            # A drop changes every removal test; confounder verdicts are reassessed.
            kept_as_confounder.clear()
            dropped = True
            break
        if not dropped:
            break
    return SelectionTrace(start_spec, tuple(steps), spec, current, Criterion.p_value(alpha))


SCREENING_NOTE = ("univariable screening is discouraged: adjusted and unadjusted "
                  "effects can differ in either direction, so this filter may be misleading")


@dataclass(frozen=True)
class ScreenResult:
    selected: tuple[str, ...]
    p_values: dict[str, float]
    note: str = SCREENING_NOTE


def univariable_screen(dataset: Dataset, candidates: Sequence[Union[str, Term]],
                       alpha: float) -> ScreenResult:
    """Variables whose single-variable model beats the intercept at `alpha`.

    Provided for comparison purposes only; the result carries a warning note.
    """
    null_fit = fit(dataset, ModelSpec())
    pvals: dict[str, float] = {}
    selected: list[str] = []
    for term in _as_terms(candidates):
        single = fit(dataset, ModelSpec((term,)))
        df = max(single.model_df - null_fit.model_df, 1)
        p = deviance_test(null_fit, single, df)
        pvals[term.variable] = p
        if p < alpha:
            selected.append(term.variable)
    return ScreenResult(tuple(selected), pvals)
