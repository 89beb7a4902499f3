"""Shrinkage factors: calibration identities, overfitting detection, grouping."""

import numpy as np
import pytest

from fpselect import (Criterion, Dataset, DomainError, KFold, LeaveOneOut,
                      ModelSpec, Term, backward_eliminate, default_cv_scheme,
                      fit, global_shrinkage, joint_shrinkage,
                      parameterwise_shrinkage)
from fpselect.errors import CollinearComponentsError


def make_dataset(cols):
    return Dataset.from_columns(cols, outcome="y")


class TestGlobal:
    def test_noiseless_data_calibrates_to_one(self):
        x = np.linspace(-3.0, 3.0, 40)
        ds = make_dataset({"x": x, "y": 1.0 + 2.0 * x})
        factors = global_shrinkage(ds, ModelSpec((Term.linear("x"),)), LeaveOneOut())
        assert factors.factors["global"] == pytest.approx(1.0, abs=1e-6)

    def test_strong_predictor_near_one(self):
        rng = np.random.default_rng(461)
        n = 1000
        x = rng.standard_normal(n)
        ds = make_dataset({"x": x, "y": 3.0 * x + rng.standard_normal(n)})
        factors = global_shrinkage(ds, ModelSpec((Term.linear("x"),)), KFold(10, 0))
        assert factors.factors["global"] == pytest.approx(1.0, abs=0.05)

    def test_noise_selection_shrinks_below_one(self):
        rng = np.random.default_rng(463)
        reps, collected = 150, []
        for _ in range(reps):
            n = 100
            cols = {f"x{j}": rng.standard_normal(n) for j in range(5)}
            cols["y"] = rng.standard_normal(n)
            ds = make_dataset(cols)
            trace = backward_eliminate(
                ds, ModelSpec(tuple(Term.linear(f"x{j}") for j in range(5))),
                Criterion.p_value(0.05))
            if not trace.final_spec.terms:
                continue
            factors = global_shrinkage(ds, trace.final_spec, LeaveOneOut())
            collected.append(factors.factors["global"])
        assert len(collected) > 20
        assert np.mean(collected) < 0.9

    def test_deterministic_given_seeded_scheme(self):
        rng = np.random.default_rng(467)
        n = 300
        cols = {"a": rng.standard_normal(n), "b": rng.standard_normal(n)}
        cols["y"] = cols["a"] + 0.5 * cols["b"] + rng.standard_normal(n)
        ds = make_dataset(cols)
        spec = ModelSpec((Term.linear("a"), Term.linear("b")))
        f1 = global_shrinkage(ds, spec, KFold(10, 42))
        f2 = global_shrinkage(ds, spec, KFold(10, 42))
        assert f1.factors == f2.factors

    def test_default_scheme_cutover(self):
        assert isinstance(default_cv_scheme(200), LeaveOneOut)
        assert isinstance(default_cv_scheme(201), KFold)


class TestParameterwise:
    def test_single_term_equals_global(self):
        rng = np.random.default_rng(479)
        n = 120
        x = rng.standard_normal(n)
        ds = make_dataset({"x": x, "y": 0.8 * x + rng.standard_normal(n)})
        spec = ModelSpec((Term.linear("x"),))
        g = global_shrinkage(ds, spec, LeaveOneOut())
        p = parameterwise_shrinkage(ds, spec, LeaveOneOut())
        assert p.factors["x"] == pytest.approx(g.factors["global"], abs=1e-8)

    def test_weak_term_shrinks_more_than_strong(self):
        rng = np.random.default_rng(487)
        diffs = []
        for _ in range(100):
            n = 150
            xs = rng.standard_normal(n)
            xw = rng.standard_normal(n)
            y = 1.5 * xs + 0.15 * xw + rng.standard_normal(n)
            ds = make_dataset({"xs": xs, "xw": xw, "y": y})
            f = parameterwise_shrinkage(
                ds, ModelSpec((Term.linear("xs"), Term.linear("xw"))), KFold(10, 7))
            diffs.append(f.factors["xs"] - f.factors["xw"])
        assert np.mean(diffs) > 0.05

    def test_orthogonal_strong_terms_near_one(self):
        rng = np.random.default_rng(491)
        n = 900
        q = np.linalg.qr(rng.standard_normal((n, 2)))[0] * np.sqrt(n)
        y = 2.0 * q[:, 0] + 2.0 * q[:, 1] + rng.standard_normal(n)
        ds = make_dataset({"a": q[:, 0], "b": q[:, 1], "y": y})
        f = parameterwise_shrinkage(ds, ModelSpec((Term.linear("a"), Term.linear("b"))),
                                    KFold(10, 3))
        assert f.factors["a"] == pytest.approx(1.0, abs=0.06)
        assert f.factors["b"] == pytest.approx(1.0, abs=0.06)

    def test_collinear_components_detected(self):
        rng = np.random.default_rng(499)
        n = 80
        x = rng.standard_normal(n)
        ds = make_dataset({"a": x, "b": 2.0 * x, "y": x + rng.standard_normal(n)})
        spec = ModelSpec((Term.linear("a"), Term.linear("b")))
        with pytest.warns(UserWarning, match="aliased"):
            with pytest.raises(CollinearComponentsError):
                parameterwise_shrinkage(ds, spec, LeaveOneOut())


class TestJoint:
    def _fp2_dataset(self):
        rng = np.random.default_rng(503)
        n = 250
        x = rng.uniform(0.5, 4.0, n)
        z = rng.standard_normal(n)
        y = 1.0 / x + x + 0.5 * z + rng.normal(scale=0.4, size=n)
        ds = make_dataset({"x": x, "z": z, "y": y})
        spec = ModelSpec((Term.fp("x", (-1.0, 1.0)), Term.linear("z")))
        return ds, spec

    def test_singleton_groups_equal_parameterwise(self):
        rng = np.random.default_rng(509)
        n = 200
        a, b = rng.standard_normal(n), rng.standard_normal(n)
        y = a + 0.3 * b + rng.standard_normal(n)
        ds = make_dataset({"a": a, "b": b, "y": y})
        spec = ModelSpec((Term.linear("a"), Term.linear("b")))
        j = joint_shrinkage(ds, spec, cv=KFold(10, 5))
        p = parameterwise_shrinkage(ds, spec, KFold(10, 5))
        assert j.factors["a"] == pytest.approx(p.factors["a"], abs=1e-10)
        assert j.factors["b"] == pytest.approx(p.factors["b"], abs=1e-10)

    def test_all_terms_one_group_equals_global(self):
        ds, spec = self._fp2_dataset()
        j = joint_shrinkage(ds, spec, groups=[list(spec.terms)], cv=KFold(10, 5))
        g = global_shrinkage(ds, spec, KFold(10, 5))
        (jf,) = j.factors.values()
        assert jf == pytest.approx(g.factors["global"], abs=1e-10)

    def test_fp_pair_shares_one_factor_scaling_the_curve(self):
        ds, spec = self._fp2_dataset()
        fitted = fit(ds, spec)
        j = joint_shrinkage(ds, spec, cv=KFold(10, 5))
        fp_term = spec.terms[0]
        labels = fp_term.labels()
        factor = j.factors["+".join(labels)]
        shrunk = j.apply(fitted, ds)
        for lab in labels:
            i = fitted.column_labels.index(lab)
            assert shrunk[i] == pytest.approx(factor * fitted.coefficients[i], rel=1e-12)

    def test_groups_must_partition(self):
        ds, spec = self._fp2_dataset()
        with pytest.raises(DomainError):
            joint_shrinkage(ds, spec, groups=[[spec.terms[0]]], cv=KFold(10, 5))


class TestShrunkenModel:
    def test_in_sample_deviance_not_better_than_ml(self):
        rng = np.random.default_rng(521)
        n = 150
        a, b = rng.standard_normal(n), rng.standard_normal(n)
        y = 0.6 * a + 0.2 * b + rng.standard_normal(n)
        ds = make_dataset({"a": a, "b": b, "y": y})
        spec = ModelSpec((Term.linear("a"), Term.linear("b")))
        fitted = fit(ds, spec)
        factors = parameterwise_shrinkage(ds, spec, LeaveOneOut())
        shrunk = factors.apply(fitted, ds)
        from fpselect.model import design_matrix
        X, _, _ = design_matrix(ds, spec)
        rss_shrunk = float(np.sum((ds.outcome - X @ shrunk) ** 2))
        assert rss_shrunk >= fitted.deviance - 1e-10

    def test_shrunken_slope_scaled_and_mean_preserved(self):
        rng = np.random.default_rng(523)
        n = 120
        x = rng.standard_normal(n) + 1.0
        y = 0.5 * x + rng.standard_normal(n)
        ds = make_dataset({"x": x, "y": y})
        spec = ModelSpec((Term.linear("x"),))
        fitted = fit(ds, spec)
        factors = global_shrinkage(ds, spec, LeaveOneOut())
        shrunk = factors.apply(fitted, ds)
        c = factors.factors["global"]
        i = fitted.column_labels.index("x")
        assert shrunk[i] == pytest.approx(c * fitted.coefficients[i], rel=1e-12)
        from fpselect.model import design_matrix
        X, _, _ = design_matrix(ds, spec)
        assert np.mean(X @ shrunk) == pytest.approx(np.mean(X @ fitted.coefficients), rel=1e-10)


class TestReselection:
    def test_reselection_inside_folds_shrinks_harder_on_noise(self):
        rng = np.random.default_rng(541)
        deltas = []
        for _ in range(80):
            n = 120
            cols = {f"x{j}": rng.standard_normal(n) for j in range(4)}
            cols["y"] = rng.standard_normal(n)
            ds = make_dataset(cols)
            start = ModelSpec(tuple(Term.linear(f"x{j}") for j in range(4)))
            trace = backward_eliminate(ds, start, Criterion.p_value(0.05))
            if not trace.final_spec.terms:
                continue

            def reselect(train, start=start):
                return backward_eliminate(train, start, Criterion.p_value(0.05)).final_spec

            naive = global_shrinkage(ds, trace.final_spec, KFold(10, 11))
            honest = global_shrinkage(ds, trace.final_spec, KFold(10, 11),
                                      reselect=reselect)
            deltas.append(naive.factors["global"] - honest.factors["global"])
        assert len(deltas) > 5
        assert np.mean(deltas) > 0.0
