"""Supervised models: conditioning on labeled pairs, prediction, and
the Gaussian-process pipeline with its finite cross-check."""

import math
from fractions import Fraction as F

import numpy as np
import pytest

import probmorph as pm
from probmorph import (
    FiniteSpace,
    GPModel,
    SchemaError,
    SupervisedModel,
    TestInputs,
    TrainingSet,
    constant_mean,
    finite_kernel,
    gauss_condition,
    gp_joint,
    gp_posterior_predictive,
    label_marginals,
    posterior,
    predictive,
    prob_measure,
    restriction_consistency,
    sampling_kernel,
    squared_exponential,
    zero_mean,
)

TH = FiniteSpace(("t1", "t2"))
INPUTS = FiniteSpace(("a", "b"))
LABELS = FiniteSpace((0, 1))

# two Bernoulli labelers: one strongly input-dependent, one fair coin
H1 = finite_kernel(INPUTS, LABELS, [[F(9, 10), F(1, 10)],
                                    [F(1, 10), F(9, 10)]])
H2 = finite_kernel(INPUTS, LABELS, [[F(1, 2), F(1, 2)],
                                    [F(1, 2), F(1, 2)]])
MODEL = SupervisedModel(prior=prob_measure(TH, [F(1, 2), F(1, 2)]),
                        supervisors=(H1, H2))


class TestModelValidation:
    def test_one_supervisor_per_hypothesis(self):
        with pytest.raises(SchemaError):
            SupervisedModel(prior=MODEL.prior, supervisors=(H1,))

    def test_supervisors_share_spaces(self):
        other = finite_kernel(FiniteSpace(("a",)), LABELS, [[F(1), F(0)]])
        with pytest.raises(SchemaError):
            SupervisedModel(prior=MODEL.prior, supervisors=(H1, other))

    def test_test_inputs_must_be_nonempty(self):
        with pytest.raises(SchemaError):
            TestInputs(())


class TestSamplingKernel:
    def test_single_input_rows_are_supervisor_rows(self):
        sk = sampling_kernel(MODEL, ["a"])
        assert sk.target == LABELS
        assert list(sk.rows[0]) == [F(9, 10), F(1, 10)]
        assert list(sk.rows[1]) == [F(1, 2), F(1, 2)]

    def test_repeated_input_squares_the_row(self):
        sk = sampling_kernel(MODEL, ["a", "a"])
        assert list(sk.rows[1]) == [F(1, 4)] * 4     # fair coin twice

    def test_rows_are_products_across_distinct_inputs(self):
        sk = sampling_kernel(MODEL, ["a", "b"])
        # strongly input-dependent labeler: P(y_a=0, y_b=1) = 0.9 * 0.9
        assert sk.rows[0][sk.target.index((0, 1))] == F(81, 100)

    def test_unknown_input_is_rejected(self):
        with pytest.raises(SchemaError):
            sampling_kernel(MODEL, ["c"])


class TestPosterior:
    def test_empty_training_set_returns_the_prior(self):
        res = posterior(MODEL, TrainingSet(()))
        assert res.measure is MODEL.prior
        assert not res.null_evidence

    def test_hand_value_one_observation(self):
        res = posterior(MODEL, TrainingSet((("a", 1),)))
        assert list(res.measure.weights) == [F(1, 6), F(5, 6)]
        assert not res.null_evidence

    def test_identical_supervisors_are_uninformative(self):
        model = SupervisedModel(prior=prob_measure(TH, [F(1, 3), F(2, 3)]),
                                supervisors=(H2, H2))
        res = posterior(model, TrainingSet((("a", 1), ("b", 0))))
        assert pm.measures_equal(res.measure, model.prior)

    def test_impossible_evidence_flags_and_returns_prior(self):
        sure = finite_kernel(INPUTS, LABELS, [[F(1), F(0)], [F(1), F(0)]])
        model = SupervisedModel(prior=prob_measure(TH, [F(1, 2), F(1, 2)]),
                                supervisors=(sure, sure))
        res = posterior(model, TrainingSet((("a", 1),)))
        assert res.null_evidence
        assert pm.measures_equal(res.measure, model.prior)

    def test_sequential_equals_batch(self):
        s_all = TrainingSet((("a", 1), ("b", 0), ("a", 0)))
        batch = posterior(MODEL, s_all)
        step1 = posterior(MODEL, TrainingSet(s_all.pairs[:1]))
        model2 = SupervisedModel(
            prior=prob_measure(TH, step1.measure.weights),
            supervisors=MODEL.supervisors)
        step2 = posterior(model2, TrainingSet(s_all.pairs[1:]))
        assert pm.measures_equal(batch.measure, step2.measure)

    def test_posterior_is_order_insensitive(self):
        pairs = (("a", 1), ("b", 0), ("a", 0), ("b", 1))
        fwd = posterior(MODEL, TrainingSet(pairs))
        rev = posterior(MODEL, TrainingSet(pairs[::-1]))
        assert pm.measures_equal(fwd.measure, rev.measure)


class TestPredictive:
    def test_hand_value(self):
        res = predictive(MODEL, TrainingSet((("a", 1),)), TestInputs(("b",)))
        assert res.measure.space == LABELS
        assert res.measure.weight(1) == F(17, 30)
        assert res.measure.weight(0) == F(13, 30)

    def test_single_hypothesis_predicts_its_own_rows(self):
        single = SupervisedModel(prior=prob_measure(FiniteSpace(("t",)), [F(1)]),
                                 supervisors=(H1,))
        res = predictive(single, TrainingSet(()), TestInputs(("a", "b")))
        sk = sampling_kernel(single, ["a", "b"])
        assert list(res.measure.weights) == list(sk.rows[0])

    def test_empty_training_gives_the_prior_predictive(self):
        res = predictive(MODEL, TrainingSet(()), TestInputs(("a",)))
        want = pm.pushforward(sampling_kernel(MODEL, ["a"]), MODEL.prior)
        assert pm.measures_equal(res.measure, want)

    def test_joint_marginals_sum_out_correctly(self):
        res = predictive(MODEL, TrainingSet((("a", 1),)), TestInputs(("a", "b")))
        margs = label_marginals(res.measure)
        assert len(margs) == 2
        only_b = predictive(MODEL, TrainingSet((("a", 1),)), TestInputs(("b",)))
        assert pm.measures_equal(margs[1], only_b.measure)

    def test_null_evidence_propagates(self):
        sure = finite_kernel(INPUTS, LABELS, [[F(1), F(0)], [F(1), F(0)]])
        model = SupervisedModel(prior=prob_measure(TH, [F(1, 2), F(1, 2)]),
                                supervisors=(sure, sure))
        res = predictive(model, TrainingSet((("a", 1),)), TestInputs(("b",)))
        assert res.null_evidence


class TestRestriction:
    def test_no_restriction_is_trivially_consistent(self):
        s = TrainingSet((("a", 1), ("b", 0)))
        assert restriction_consistency(MODEL, s, TestInputs(("a", "b")))

    def test_unqueried_inputs_never_matter(self):
        big = FiniteSpace(("a", "b", "c", "d", "e"))
        rng = np.random.default_rng(11)
        from probmorph.laws import random_kernel
        sup = tuple(random_kernel(rng, big, LABELS, "rational")
                    for _ in range(2))
        model = SupervisedModel(prior=prob_measure(TH, [F(2, 5), F(3, 5)]),
                                supervisors=sup)
        s = TrainingSet((("b", 1),))
        t = TestInputs(("d",))
        assert restriction_consistency(model, s, t)
        small = pm.restrict_inputs(model, ("b", "d"))
        assert small.inputs.labels == ("b", "d")
        assert pm.measures_equal(posterior(small, s).measure,
                                 posterior(model, s).measure)


class TestGPRegression:
    GP = GPModel(mean_fn=zero_mean(),
                 cov_fn=squared_exponential(1.0, 1.0),
                 noise_var=1.0)

    def test_joint_blocks_put_test_first_and_noise_on_training(self):
        j = gp_joint(self.GP, [0.0], [0.7])
        k = math.exp(-0.7 ** 2 / 2)
        assert np.allclose(j.cov, [[1.0, k], [k, 2.0]])
        assert np.allclose(j.mean, [0.0, 0.0])

    def test_hand_value(self):
        pred = gp_posterior_predictive(self.GP, TrainingSet(((0.0, 1.0),)),
                                       TestInputs((0.0,)))
        assert abs(pred.mean[0] - 0.5) < 1e-12
        assert abs(pred.cov[0, 0] - 0.5) < 1e-12

    def test_noiseless_gp_interpolates_exactly(self):
        gp = GPModel(zero_mean(), squared_exponential(1.0, 1.0), 0.0)
        pred = gp_posterior_predictive(gp, TrainingSet(((0.3, 2.0),)),
                                       TestInputs((0.3,)))
        assert abs(pred.mean[0] - 2.0) < 1e-12
        assert abs(pred.cov[0, 0]) < 1e-12

    def test_constant_mean_shifts_the_prior_predictive(self):
        gp = GPModel(constant_mean(5.0), squared_exponential(1.0, 1.0), 0.5)
        pred = gp_posterior_predictive(gp, TrainingSet(((0.0, 5.0),)),
                                       TestInputs((100.0,)))
        # far from the data the prediction falls back to the mean fn
        assert abs(pred.mean[0] - 5.0) < 1e-6

    def test_two_routes_agree(self):
        xs = [0.0, 0.5, 1.3]
        ys = [1.0, 0.2, -0.4]
        ts = [0.25, 2.0]
        direct = gp_posterior_predictive(
            self.GP, TrainingSet(tuple(zip(xs, ys))), TestInputs(tuple(ts)))
        routed = gauss_condition(gp_joint(self.GP, xs, ts), len(ts), ys)
        assert pm.gaussians_equal(direct, routed, tol=1e-12)

    def test_duplicate_noiseless_training_points_raise(self):
        gp = GPModel(zero_mean(), squared_exponential(1.0, 1.0), 0.0)
        s = TrainingSet(((0.0, 1.0), (0.0, 1.0)))
        with pytest.raises(pm.SingularMatrixError):
            gp_posterior_predictive(gp, s, TestInputs((0.5,)))
        # explicit jitter makes the solve go through
        pred = gp_posterior_predictive(gp, s, TestInputs((0.5,)), jitter=1e-8)
        assert math.isfinite(pred.mean[0])

    def test_vector_inputs_are_supported(self):
        gp = GPModel(zero_mean(), squared_exponential(1.0, 1.0), 0.1)
        s = TrainingSet((((0.0, 0.0), 1.0), ((1.0, 1.0), -1.0)))
        t = TestInputs(((0.5, 0.5),))
        pred = gp_posterior_predictive(gp, s, t)
        assert pred.dim == 1 and math.isfinite(pred.mean[0])

    def test_against_finite_conditioning_on_a_grid(self):
        # one training and one test point; discretize the 2-D joint,
        # disintegrate it, and compare the conditional's moments
        gp = GPModel(zero_mean(), squared_exponential(1.0, 1.0), 0.25)
        x, t = 0.0, 0.7
        joint = gp_joint(gp, [x], [t])          # (test, train)
        sds = np.sqrt(np.diag(joint.cov))
        grid = pm.GridSpec.around(joint.mean, sds, 6.0, 1.0 / 40)
        m = pm.gauss_discretize(joint, grid)
        cond = pm.disintegrate(pm.mirror(m))    # train -> test
        train_labels = np.asarray(cond.source.labels)
        y = float(train_labels[int(np.argmin(np.abs(train_labels - 0.5)))])
        row = cond.row(y)
        pts = np.asarray(row.space.labels)
        w = np.asarray(row.weights)
        mean_f = float(w @ pts)
        var_f = float(w @ (pts - mean_f) ** 2)
        exact = gp_posterior_predictive(gp, TrainingSet(((x, y),)),
                                        TestInputs((t,)))
        assert abs(mean_f - exact.mean[0]) / abs(exact.mean[0]) < 1e-3
        assert abs(var_f - exact.cov[0, 0]) / exact.cov[0, 0] < 1e-3
