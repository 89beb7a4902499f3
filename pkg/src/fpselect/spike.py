"""Semi-continuous covariates with positive mass at exactly zero.

Such a variable is decomposed into a binary exposure indicator Z (1 where
x > 0) and a fractional polynomial on the positive part. The FP basis is
centered at the transformed origin, so fitted values for unexposed rows do
not depend on the curve and the Z coefficient is exactly the jump at zero;
this separates the qualitative exposed/unexposed contrast from the
quantitative dose-response within the exposed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import AllZeroError, DomainError, NoSpikeError
from .fp import FpPowers, PreTransform, pretransform
from .fpsearch import best_fp
from .fsp import FunctionForm
from .glm import FitResult, deviance_test, fit
from .model import ModelSpec, Term


@dataclass(frozen=True)
class SpikeDecomposition:
    """Indicator plus transformed positive part for a spike-at-zero variable."""

    variable: str
    indicator: np.ndarray
    positive_part: np.ndarray
    zero_fraction: float
    pre: PreTransform
    origin: float  # transformed value assigned to x == 0
    n_distinct_positive: int

    def merge_back(self) -> np.ndarray:
        """Reconstruct the original column (exact inverse of the decomposition)."""
        x = self.positive_part * self.pre.scale - self.pre.shift
        return np.where(self.indicator > 0.0, x, 0.0)


def spike_decompose(x, variable: str = "x") -> SpikeDecomposition:
    """Split a nonnegative column with zeros into indicator and positive part.

    The pre-transformation is computed on the full column, so zero maps to a
    strictly positive transformed origin; positive-part values for unexposed
    rows are set to that origin, completing the design for all rows.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("spike-at-zero variable must be nonnegative")
    zeros = x == 0.0
    if not zeros.any():
        raise NoSpikeError("no zeros present; use a plain FP analysis")
    if zeros.all():
        raise AllZeroError("variable is identically zero")
    pre = pretransform(x)
    z = pre.apply(x)
    origin = float(pre.apply(np.zeros(1))[0])
    return SpikeDecomposition(
        variable=variable,
        indicator=(~zeros).astype(float),
        positive_part=np.where(zeros, origin, z),
        zero_fraction=float(zeros.mean()),
        pre=pre,
        origin=origin,
        n_distinct_positive=int(np.unique(x[~zeros]).size),
    )


class SpikeVerdict(enum.Enum):
    NONE = "none"
    Z_ONLY = "z-only"
    FP_ONLY = "fp-only"
    Z_AND_FP = "z-and-fp"


_FP_DF = {FunctionForm.LINEAR: 1, FunctionForm.FP1: 2, FunctionForm.FP2: 4}


@dataclass(frozen=True)
class SpikeDecision:
    """Outcome of the component selection for one spike-at-zero variable.

    Records the joint inclusion p-value and, when reached, the removal
    p-values of each component, so the verdict can be re-derived.
    """

    variable: str
    verdict: SpikeVerdict
    fp_form: FunctionForm | None
    powers: FpPowers | None
    joint_pvalue: float
    drop_z_pvalue: float | None
    drop_fp_pvalue: float | None
    alpha: float
    decomposition: SpikeDecomposition
    terms: tuple[Term, ...]
    fit: FitResult | None


def _select_fp_form(dataset: Dataset, variable: str, alpha: float, max_degree: int,
                    base: ModelSpec, pre: PreTransform, origin: float):
    """Choose the curve complexity for the positive part, holding the rest of
    `base` fixed: straight line unless the best FP beats it, then FP1 unless
    the best FP2 beats that."""
    linear_term = Term.fp(variable, (1.0,), pre, origin)
    fit_linear = fit(dataset, base.with_term(linear_term))
    search1 = best_fp(dataset, variable, 1, base, pre, origin)
    if max_degree == 1:
        p_nonlin = deviance_test(fit_linear, search1.fit, 1)
        if p_nonlin > alpha:
            return FunctionForm.LINEAR, None, linear_term, fit_linear
        return FunctionForm.FP1, search1.best_powers, search1.fit.spec.terms[-1], search1.fit
    search2 = best_fp(dataset, variable, 2, base, pre, origin)
    p_nonlin = deviance_test(fit_linear, search2.fit, 3)
    if p_nonlin > alpha:
        return FunctionForm.LINEAR, None, linear_term, fit_linear
    p_fp2 = deviance_test(search1.fit, search2.fit, 2)
    if p_fp2 > alpha:
        return FunctionForm.FP1, search1.best_powers, search1.fit.spec.terms[-1], search1.fit
    return FunctionForm.FP2, search2.best_powers, search2.fit.spec.terms[-1], search2.fit


def spike_fsp(dataset: Dataset, variable: str, alpha: float,
              max_degree: int = 2,
              adjustment: ModelSpec | None = None) -> SpikeDecision:
    """Select among no effect, indicator only, curve only, or both.

    Step 1 tests the joint model {Z, curve} against the null at `alpha`
    (1 + curve d.f.); failure means no effect. Step 2 tests removal of each
    component from the joint model (1 d.f. for Z, the curve's d.f. for the
    curve) and keeps the components whose removal is rejected; if neither
    removal is rejected, the single component with the smaller removal
    p-value is kept. Curve d.f. follow the function-selection convention
    (linear 1, FP1 2, FP2 4). A degenerate positive part (fewer than 5
    distinct values) falls back to the indicator-only path.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must be in (0, 1], got {alpha}")
    adjustment = adjustment or ModelSpec()
    if adjustment.has_variable(variable):
        raise DomainError(f"adjustment spec already contains {variable!r}")
    decomp = spike_decompose(dataset.column(variable), variable)
    z_term = Term.indicator(variable, 0.0)
    fit_null = fit(dataset, adjustment)

    if decomp.n_distinct_positive < 5:
        fit_z = fit(dataset, adjustment.with_term(z_term))
        p_joint = deviance_test(fit_null, fit_z, 1)
        if p_joint > alpha:
            return SpikeDecision(variable, SpikeVerdict.NONE, None, None, p_joint,
                                 None, None, alpha, decomp, (), None)
        return SpikeDecision(variable, SpikeVerdict.Z_ONLY, None, None, p_joint,
                             None, None, alpha, decomp, (z_term,), fit_z)

    base_with_z = adjustment.with_term(z_term)
    fp_form, powers, fp_term, _ = _select_fp_form(
        dataset, variable, alpha, max_degree, base_with_z, decomp.pre, decomp.origin)
    fp_df = _FP_DF[fp_form]

    fit_joint = fit(dataset, adjustment.with_term(z_term).with_term(fp_term))
    p_joint = deviance_test(fit_null, fit_joint, 1 + fp_df)
    if p_joint > alpha:
        return SpikeDecision(variable, SpikeVerdict.NONE, fp_form, powers, p_joint,
                             None, None, alpha, decomp, (), None)

    fit_fp_only = fit(dataset, adjustment.with_term(fp_term))
    fit_z_only = fit(dataset, adjustment.with_term(z_term))
    p_drop_z = deviance_test(fit_fp_only, fit_joint, 1)
    p_drop_fp = deviance_test(fit_z_only, fit_joint, fp_df)

    keep_z = p_drop_z <= alpha
    keep_fp = p_drop_fp <= alpha
    if keep_z and keep_fp:
        verdict, terms, final = SpikeVerdict.Z_AND_FP, (z_term, fp_term), fit_joint
    elif keep_z:
        verdict, terms, final = SpikeVerdict.Z_ONLY, (z_term,), fit_z_only
    elif keep_fp:
        verdict, terms, final = SpikeVerdict.FP_ONLY, (fp_term,), fit_fp_only
    elif p_drop_z < p_drop_fp:
        verdict, terms, final = SpikeVerdict.Z_ONLY, (z_term,), fit_z_only
    else:
        verdict, terms, final = SpikeVerdict.FP_ONLY, (fp_term,), fit_fp_only
    if verdict is not SpikeVerdict.Z_AND_FP:
        fp_kept = verdict is SpikeVerdict.FP_ONLY
        return SpikeDecision(variable, verdict, fp_form if fp_kept else None,
                             powers if fp_kept else None, p_joint,
                             p_drop_z, p_drop_fp, alpha, decomp, terms, final)
    return SpikeDecision(variable, verdict, fp_form, powers, p_joint,
                         p_drop_z, p_drop_fp, alpha, decomp, terms, final)
