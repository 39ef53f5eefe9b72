import dataclasses
import math

import numpy as np
import pytest

from tsmt.errors import ConfigurationError
from tsmt.methods import ProcedureSpec, run_method
from tsmt.presets import scenario_preset
from tsmt.simulation import (
    ScenarioConfig,
    estimate_metrics,
    generate_dataset,
    pooled_se,
    proportion_se,
    run_replication,
    worker_count,
)

TS = ProcedureSpec("ts-bonf", sigma_mode="estimated")
BONF = ProcedureSpec("bonferroni")


def pooled_correlations(config, pairs, reps):
    """Correlation of rows i and k pooled over replications."""
    xs = {i: [] for pair in pairs for i in pair}
    for r in range(reps):
        data, _ = generate_dataset(config, r)
        for i in xs:
            xs[i].append(data[i])
    rows = {i: np.concatenate(v) for i, v in xs.items()}
    return np.array([np.corrcoef(rows[i], rows[k])[0, 1] for i, k in pairs])


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"rho": 1.0, "dependence": "equal_correlation"},
            {"rho": -0.1, "dependence": "equal_correlation"},
            {"rho": 0.3},
            {"dependence": "block", "rho": 0.3},
            {"dependence": "block", "rho": 0.3, "block_size": 0},
            {"signal_count": 11},
            {"variance_mode": "lognormal"},
            {"variance_range": (0.0, 1.0)},
            {"replications": 0},
            {"procedures": ("ts-bonf",)},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            ScenarioConfig(m=10, n=5, **kwargs)


class TestGenerate:
    def test_deterministic(self):
        cfg = ScenarioConfig(m=20, n=6, signal_count=4, rho=0.3, dependence="equal_correlation",
                             variance_mode="per_hypothesis_uniform", base_seed=9)
        a, la = generate_dataset(cfg, 5)
        b, lb = generate_dataset(cfg, 5)
        assert np.array_equal(a, b) and np.array_equal(la, lb)
        assert not np.array_equal(a, generate_dataset(cfg, 6)[0])

    def test_signal_rows(self):
        cfg = ScenarioConfig(m=30, n=4000, signal_count=int(math.floor(30 ** (1 - 0.5))),
                             mean_mode="constant", mean_value=3.0)
        data, labels = generate_dataset(cfg, 0)
        k = cfg.signal_count
        assert labels.tolist() == [True] * k + [False] * (30 - k)
        means = data.mean(axis=1)
        assert np.all(np.abs(means[:k] - 3.0) < 0.1)
        assert np.all(np.abs(means[k:]) < 0.1)

    def test_uniform_means_redrawn_or_fixed(self):
        base = dict(m=5, n=3000, signal_count=5, mean_mode="uniform_pm1")
        redraw = ScenarioConfig(**base)
        fixed = ScenarioConfig(**base, redraw_means=False)
        m0, m1 = generate_dataset(redraw, 0)[0].mean(axis=1), generate_dataset(redraw, 1)[0].mean(axis=1)
        assert np.max(np.abs(m0 - m1)) > 0.2
        f0, f1 = generate_dataset(fixed, 0)[0].mean(axis=1), generate_dataset(fixed, 1)[0].mean(axis=1)
        assert np.max(np.abs(f0 - f1)) < 0.15
        assert np.all(np.abs(f0) <= 1.1)

    def test_independent_rows_uncorrelated(self):
        cfg = ScenarioConfig(m=60, n=15)
        reps = 200
        rng = np.random.default_rng(0)
        all_pairs = [(i, k) for i in range(60) for k in range(i + 1, 60)]
        pairs = [all_pairs[j] for j in rng.choice(len(all_pairs), 200, replace=False)]
        corr = pooled_correlations(cfg, pairs, reps)
        assert np.mean(np.abs(corr)) <= 3 / math.sqrt(reps * 15)

    def test_equal_correlation(self):
        cfg = ScenarioConfig(m=10, n=15, rho=0.5, dependence="equal_correlation")
        corr = pooled_correlations(cfg, [(0, 1), (3, 7), (2, 9)], 400)
        assert np.all(np.abs(corr - 0.5) <= 0.05)

    def test_block_correlation(self):
        cfg = ScenarioConfig(m=20, n=15, rho=0.6, dependence="block", block_size=5)
        within, across = pooled_correlations(cfg, [(0, 4), (5, 6)], 400), pooled_correlations(cfg, [(0, 5), (9, 10)], 400)
        assert np.all(np.abs(within - 0.6) <= 0.05)
        assert np.all(np.abs(across) <= 0.05)

    def test_common_variance(self):
        cfg = ScenarioConfig(m=50, n=2000, variance_mode="common_uniform", variance_range=(0.5, 1.5))
        var = generate_dataset(cfg, 3)[0].var(axis=1)
        assert np.ptp(var) < 0.25 and 0.45 < var.mean() < 1.55


class TestReplication:
    def test_deterministic(self):
        cfg = ScenarioConfig(m=50, n=15, procedures=(TS, BONF), signal_count=5, base_seed=3)
        assert run_replication(cfg, 11) == run_replication(cfg, 11)

    def test_matches_direct_call(self):
        cfg = ScenarioConfig(m=50, n=15, procedures=(TS,), signal_count=10, mean_mode="constant", base_seed=3)
        out = run_replication(cfg, 2)
        data, labels = generate_dataset(cfg, 2)
        res = run_method(TS, data)
        assert out.outcomes[0].rejected == tuple(res.rejected.tolist())
        assert out.outcomes[0].true_rejections == int(labels[res.rejected].sum())

    def test_no_signals_power_absent(self):
        cfg = ScenarioConfig(m=20, n=10, procedures=(TS,), replications=5)
        assert run_replication(cfg, 0).power_fractions == (None,)
        (rep,) = estimate_metrics(cfg, workers=1)
        assert rep.avg_power_hat is None and rep.global_power_hat is None
        assert [name for name, *_ in rep.estimates()] == ["fwer", "type1_global", "mean_selected"]

    def test_about_half_selected_under_null(self):
        (cell,) = [c for c in scenario_preset("fig8_3", reps=200) if c.rho == 0 and c.signal_count == 0]
        ts = run_method(cell.procedures[0], generate_dataset(cell, 0)[0])
        assert 35 <= ts.n_selected <= 65
        (rep,) = estimate_metrics(dataclasses.replace(cell, procedures=cell.procedures[:1]), workers=1)
        assert rep.mean_selected == pytest.approx(50, abs=3 * rep.mean_selected_se + 1)


class TestMetrics:
    def test_single_replication(self):
        cfg = ScenarioConfig(m=20, n=10, procedures=(TS, BONF), signal_count=3, replications=1,
                             mean_mode="constant", mean_value=2.0)
        for rep in estimate_metrics(cfg, workers=1):
            for _, value, se in rep.estimates():
                assert se == 0.0
            assert rep.fwer_hat in (0.0, 1.0) and rep.global_power_hat in (0.0, 1.0)

    def test_ranges_and_se(self):
        cfg = ScenarioConfig(m=40, n=10, procedures=(TS, BONF), signal_count=5, replications=60)
        for rep in estimate_metrics(cfg, workers=1):
            for name, value, se in rep.estimates():
                if name != "mean_selected":
                    assert 0.0 <= value <= 1.0
            assert rep.fwer_se == pytest.approx(proportion_se(rep.fwer_hat, 60))

    def test_parallel_determinism(self):
        cells = scenario_preset("fig8_1", reps=30, seed=4)
        cell = next(c for c in cells if c.panel == "power" and c.rho == 0.5)
        cell = dataclasses.replace(cell, procedures=cell.procedures[:4] + (
            dataclasses.replace(cell.procedures[4], hc_reps=300),))
        base = estimate_metrics(cell, workers=1)
        assert estimate_metrics(cell, workers=2) == base
        assert estimate_metrics(cell, workers=8) == base

    def test_worker_count(self, monkeypatch):
        monkeypatch.setenv("TSMT_THREADS", "3")
        assert worker_count() == 3
        assert worker_count(5) == 5
        monkeypatch.setenv("TSMT_THREADS", "many")
        with pytest.raises(ConfigurationError):
            worker_count()
        with pytest.raises(ConfigurationError):
            worker_count(0)

    def test_pooled_se(self):
        assert pooled_se(3.0, 4.0) == 5.0


@pytest.mark.slow
def test_fwer_null_cell_independent():
    cfg = ScenarioConfig(m=200, n=15, procedures=(TS,), replications=2000, base_seed=1)
    (rep,) = estimate_metrics(cfg)
    assert rep.fwer_hat <= 0.05 + 3 * math.sqrt(0.05 * 0.95 / 2000)


@pytest.mark.slow
def test_avg_power_dominance_fig8_2_left():
    cell = next(c for c in scenario_preset("fig8_2", reps=1000, seed=2)
                if c.panel == "equal_var_0.5_1.5" and c.x == 0.7)
    cell = dataclasses.replace(cell, procedures=cell.procedures[:2])
    ts, bonf = estimate_metrics(cell)
    assert ts.avg_power_hat - bonf.avg_power_hat > 2 * pooled_se(ts.avg_power_se, bonf.avg_power_se)


@pytest.mark.slow
def test_block_dependence_selected_fraction_concentrates():
    m, gamma, s = 10_000, 0.6, 10
    cfg = ScenarioConfig(m=m, n=15, rho=0.5, dependence="block", block_size=s, base_seed=5,
                         procedures=(ProcedureSpec("ts-bonf", gamma=gamma, sigma_mode="estimated"),))
    ratios = np.array([run_replication(cfg, r).outcomes[0].n_selected for r in range(500)]) / m**gamma
    assert ratios.std(ddof=1) <= 0.15


@pytest.mark.slow
def test_two_stage_fwer_in_every_all_null_preset_cell():
    for name in ("fig8_1", "fig8_2", "fig8_3", "fig8_4"):
        for cell in scenario_preset(name, reps=1000, seed=3):
            if cell.signal_count:
                continue
            two_stage = tuple(p for p in cell.procedures if p.method in ("ts-bonf", "ts-holm"))
            (rep,) = estimate_metrics(dataclasses.replace(cell, procedures=two_stage))
            assert rep.fwer_hat <= 0.05 + 3 * math.sqrt(0.05 * 0.95 / 1000), cell.scenario_id


@pytest.mark.slow
def test_fig8_4_power_flat_in_rho():
    cells = scenario_preset("fig8_4", reps=500, seed=6)
    reps = [estimate_metrics(dataclasses.replace(c, procedures=c.procedures[:1]))[0] for c in cells]
    powers = [r.avg_power_hat for r in reps]
    hi, lo = int(np.argmax(powers)), int(np.argmin(powers))
    assert powers[hi] - powers[lo] <= 4 * pooled_se(reps[hi].avg_power_se, reps[lo].avg_power_se)
