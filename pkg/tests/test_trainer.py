import math

import numpy as np
import pytest

from plm.data import Dataset, SynthSpec, generate_synthetic
from plm.errors import DegenerateInstanceError, InvalidInputError
from plm.trainer import CRAMMING, UNDERSTANDING, PlmConfig, find_contradictions, initialize, train

# reduced AGDO budgets keep each run to a few seconds
QUICK = dict(epsilon=0.1, max_outer=20, inner_epochs=50, prune_max_outer=5, prune_inner_epochs=50)


def dataset(X, y):
    X = np.asarray(X, dtype=float)
    return Dataset(X, np.asarray(y, dtype=float))


class TestInitialize:
    def test_single_node(self, rng):
        ds = dataset(rng.uniform(size=(30, 3)), rng.uniform(size=30))
        assert initialize(ds, PlmConfig(init_epochs=200)).p == 1

    def test_deterministic(self, rng):
        ds = dataset(rng.uniform(size=(30, 3)), rng.uniform(size=30))
        cfg = PlmConfig(init_epochs=300, seed=5)
        assert initialize(ds, cfg).same_weights(initialize(ds, cfg))

    def test_untuned_weights_in_range(self, rng):
        ds = dataset(rng.uniform(size=(5, 4)), np.zeros(5))
        net = initialize(ds, PlmConfig(init_epochs=0))
        assert np.all(np.abs(net.hidden) <= 0.5) and np.all(np.abs(net.output) <= 0.5)

    def test_constant_target_fitted_by_tuning(self, rng):
        ds = dataset(rng.uniform(size=(40, 2)), np.full(40, 0.7))
        net = initialize(ds, PlmConfig(epsilon=0.05))
        assert np.max(np.abs(net(ds.X) - 0.7)) <= 0.05


class TestTrain:
    def test_constant_dataset_needs_no_stages(self, rng):
        ds = dataset(rng.uniform(size=(40, 2)), np.full(40, 0.7))
        report = train(ds, PlmConfig(epsilon=0.05))
        assert report.stages == []
        assert report.route_frequencies == {}
        assert report.final_n_acceptable == 40

    def test_piecewise_linear_runs(self):
        for seed in range(20):
            ds = generate_synthetic(SynthSpec(200, 2, "piecewise-linear", 0.0, seed))
            cfg = PlmConfig(seed=seed, **QUICK)
            report = train(ds, cfg)
            assert report.final_n_acceptable >= math.floor(0.97 * 200), seed
            assert all(s.d_n <= cfg.epsilon for s in report.stages)
            assert all(c.d_n <= cfg.epsilon for c in report.checkpoints)
            trace = report.n_acceptable_trace
            assert all(a <= b for a, b in zip(trace, trace[1:]))
            assert len(report.stages) <= 200
            for s in report.stages:
                assert s.route in (UNDERSTANDING, CRAMMING)
                assert s.n > (trace[s.stage - 1] if s.stage else 0)
            if report.stages:
                assert sum(report.route_frequencies.values()) == pytest.approx(100.0)

    def test_checkpoints_cover_every_stage(self):
        ds = generate_synthetic(SynthSpec(60, 3, "teacher", 0.0, 1))
        report = train(ds, PlmConfig(**QUICK))
        points = {(c.stage, c.point) for c in report.checkpoints}
        for s in report.stages:
            assert (s.stage, s.route) in points and (s.stage, "organize") in points

    def test_cramming_route_grows_by_three(self):
        ds = generate_synthetic(SynthSpec(60, 3, "teacher", 0.0, 2))
        report = train(ds, PlmConfig(**QUICK))
        for s in report.stages:
            if s.route == CRAMMING:
                assert s.p_after == s.p_before + 3 - s.prunes
            else:
                assert s.p_after == s.p_before - s.prunes

    def test_po_mode(self):
        ds = generate_synthetic(SynthSpec(60, 2, "piecewise-linear", 0.0, 3))
        report = train(ds, PlmConfig(mode="PO", **QUICK))
        assert report.final_n_acceptable >= math.floor(0.97 * 60)

    def test_deterministic_report(self):
        ds = generate_synthetic(SynthSpec(60, 3, "teacher", 0.05, 4))
        cfg = PlmConfig(seed=9, **QUICK)
        assert train(ds, cfg).to_text() == train(ds, cfg).to_text()

    def test_contradictory_duplicates(self):
        X = [[0.1, 0.2], [0.5, 0.5], [0.1, 0.2]]
        with pytest.raises(DegenerateInstanceError) as info:
            train(dataset(X, [0.0, 0.3, 1.0]), PlmConfig(epsilon=0.05))
        assert info.value.pair == (0, 2)

    def test_duplicate_reaching_cramming_is_skipped(self, rng):
        X = rng.uniform(size=(20, 2))
        y = np.sin(6 * X[:, 0]) + X[:, 1] ** 2
        X[7], y[7] = X[3], y[3] + 0.08  # same input, targets 0.08 apart, eps 0.05
        # a single tiny understanding step sends nearly every stage to cramming,
        # which cannot separate the twins
        cfg = PlmConfig(epsilon=0.05, stop_fraction=1.0, max_outer=1, inner_epochs=1, eta_understanding=1e-6, reg_epochs=0,
                        prune_max_outer=1, prune_inner_epochs=1)
        report = train(dataset(X, y), cfg)
        assert len(report.skipped) == 1 and report.skipped[0] in (3, 7)
        assert report.final_n_acceptable == 19

    def test_too_small(self):
        with pytest.raises(InvalidInputError):
            train(dataset([[0.0]], [1.0]), PlmConfig())


def test_find_contradictions():
    ds = dataset([[0.0], [1.0], [0.0], [1.0]], [0.0, 0.0, 0.05, 0.2])
    assert find_contradictions(ds, 0.04) == [(1, 3)]
    assert find_contradictions(ds, 0.1) == []


@pytest.mark.parametrize("kwargs", [dict(stop_fraction=0.0), dict(stop_fraction=1.5), dict(epsilon=-1.0),
                                    dict(mode="XYZ")])
def test_config_validation(kwargs):
    with pytest.raises(InvalidInputError):
        PlmConfig(**kwargs)


def test_report_text_roundtrip_fields():
    ds = generate_synthetic(SynthSpec(40, 2, "teacher", 0.0, 6))
    report = train(ds, PlmConfig(**QUICK))
    text = report.to_text()
    assert text.count("\nstage ") == len(report.stages)
    assert "time" not in text
