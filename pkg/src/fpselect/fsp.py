"""Function selection procedure: a closed test deciding, for one variable,
among exclusion, linearity, and first- or second-degree fractional polynomials.

With degree 2 allowed the procedure runs up to three nested likelihood-ratio
tests, all against the best-fitting FP2 model: (1) against the null model on
4 d.f. (overall association; stop with Excluded if not significant), (2)
against a straight line on 3 d.f. (evidence for nonlinearity; stop with
Linear), (3) against the best FP1 on 2 d.f. (FP1 if not significant, FP2
otherwise). With degree 1 the analogous two steps use 2 and 1 d.f. Because
the tests are closed, the familywise type-I error stays near the nominal
level, and a linear function is the default unless nonlinearity is strongly
supported.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DomainError, TooFewDistinctValuesError
from .fp import FpPowers, PreTransform, pretransform
from .fpsearch import FpSearchResult, best_fp, check_adjustment
from .glm import FitResult, deviance_test, fit
from .model import ModelSpec, Term


class FunctionForm(enum.Enum):
    EXCLUDED = "excluded"
    LINEAR = "linear"
    FP1 = "fp1"
    FP2 = "fp2"


_COMPLEXITY = {
    FunctionForm.EXCLUDED: 0,
    FunctionForm.LINEAR: 1,
    FunctionForm.FP1: 2,
    FunctionForm.FP2: 3,
}


def fsp_degrees_of_freedom(max_degree: int) -> tuple[int, ...]:
    """Per-step test degrees of freedom: (4, 3, 2) for degree 2, (2, 1) for degree 1."""
    if max_degree == 2:
        return (4, 3, 2)
    if max_degree == 1:
        return (2, 1)
    raise DomainError(f"max_degree must be 1 or 2, got {max_degree}")


@dataclass(frozen=True)
class FunctionDecision:
    """Verdict of the function selection procedure for one variable.

    `step_pvalues` records the tests actually performed, in order, so the
    verdict can be re-derived from the record. `term` is the realized model
    term (None when excluded). `degraded_to_linear` marks variables with too
    few distinct values for the FP search, which get a linear-vs-null test
    only.
    """

    variable: str
    verdict: FunctionForm
    powers: FpPowers | None
    step_pvalues: tuple[float, ...]
    alpha: float
    alpha_nonlinear: float
    max_degree: int
    pretransform: PreTransform | None
    term: Term | None
    fit: FitResult | None = None
    degraded_to_linear: bool = False
    forced_in: bool = False

    @property
    def included(self) -> bool:
        return self.verdict is not FunctionForm.EXCLUDED

    def complexity(self) -> int:
        return _COMPLEXITY[self.verdict]


def _significant(p: float, alpha: float) -> bool:
    return p <= alpha


def _linear_only_decision(dataset: Dataset, variable: str, alpha: float,
                          adjustment: ModelSpec, forced: bool,
                          term: Term | None = None,
                          degraded: bool = False) -> FunctionDecision:
    term = term or Term.linear(variable)
    fit_null = fit(dataset, adjustment)
    fit_lin = fit(dataset, adjustment.with_term(term))
    df = len(fit_lin.column_labels) - len(fit_null.column_labels)
    pvalues: tuple[float, ...] = ()
    include = True
    if not forced:
        p1 = deviance_test(fit_null, fit_lin, max(df, 1))
        pvalues = (p1,)
        include = _significant(p1, alpha)
    if include:
        return FunctionDecision(variable, FunctionForm.LINEAR, None, pvalues,
                                alpha, alpha, 1, None, term, fit_lin,
                                degraded_to_linear=degraded, forced_in=forced)
    return FunctionDecision(variable, FunctionForm.EXCLUDED, None, pvalues,
                            alpha, alpha, 1, None, None, None,
                            degraded_to_linear=degraded, forced_in=forced)


def fsp_select(dataset: Dataset, variable: str, alpha: float,
               max_degree: int = 2,
               adjustment: ModelSpec | None = None,
               alpha_nonlinear: float | None = None,
               force_in: bool = False,
               pre: PreTransform | None = None,
               center_at: float | None = None) -> FunctionDecision:
    """Run the closed function selection test for one variable.

    `alpha` governs the overall inclusion test (step 1) and, unless
    `alpha_nonlinear` is given, the later steps as well. `force_in` skips the
    inclusion test, so the weakest possible verdict is Linear. Variables with
    fewer than 5 distinct values cannot support the FP search and fall back to
    a linear-vs-null test. The adjustment spec must not contain the variable.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must be in (0, 1], got {alpha}")
    alpha_nl = alpha if alpha_nonlinear is None else alpha_nonlinear
    if not 0.0 < alpha_nl <= 1.0:
        raise DomainError(f"alpha_nonlinear must be in (0, 1], got {alpha_nl}")
    dfs = fsp_degrees_of_freedom(max_degree)
    adjustment = adjustment or ModelSpec()
    check_adjustment(adjustment, variable)

    x = dataset.column(variable)
    n_distinct = np.unique(x).size
    if n_distinct < 2:
        raise TooFewDistinctValuesError(f"{variable!r} is constant")
    if n_distinct < 5:
        return _linear_only_decision(dataset, variable, alpha, adjustment, force_in,
                                     degraded=True)

    if pre is None:
        pre = pretransform(x)
    fit_null = fit(dataset, adjustment)
    linear_term = Term.fp(variable, (1.0,), pre, center_at)
    fit_linear = fit(dataset, adjustment.with_term(linear_term))
    search1 = best_fp(dataset, variable, 1, adjustment, pre, center_at)
    search2: FpSearchResult | None = None
    best = search1
    if max_degree == 2:
        search2 = best_fp(dataset, variable, 2, adjustment, pre, center_at)
        best = search2

    pvalues: list[float] = []
    if not force_in:
        p1 = deviance_test(fit_null, best.fit, dfs[0])
        pvalues.append(p1)
        if not _significant(p1, alpha):
            return FunctionDecision(variable, FunctionForm.EXCLUDED, None,
                                    tuple(pvalues), alpha, alpha_nl, max_degree,
                                    pre, None, None)

    p2 = deviance_test(fit_linear, best.fit, dfs[1])
    pvalues.append(p2)
    if not _significant(p2, alpha_nl):
        return FunctionDecision(variable, FunctionForm.LINEAR, None,
                                tuple(pvalues), alpha, alpha_nl, max_degree,
                                pre, linear_term, fit_linear, forced_in=force_in)

    if max_degree == 1:
        return FunctionDecision(variable, FunctionForm.FP1, search1.best_powers,
                                tuple(pvalues), alpha, alpha_nl, max_degree,
                                pre, search1.fit.spec.terms[-1], search1.fit,
                                forced_in=force_in)

    assert search2 is not None
    p3 = deviance_test(search1.fit, search2.fit, dfs[2])
    pvalues.append(p3)
    if not _significant(p3, alpha_nl):
        return FunctionDecision(variable, FunctionForm.FP1, search1.best_powers,
                                tuple(pvalues), alpha, alpha_nl, max_degree,
                                pre, search1.fit.spec.terms[-1], search1.fit,
                                forced_in=force_in)
    return FunctionDecision(variable, FunctionForm.FP2, search2.best_powers,
                            tuple(pvalues), alpha, alpha_nl, max_degree,
                            pre, search2.fit.spec.terms[-1], search2.fit,
                            forced_in=force_in)
