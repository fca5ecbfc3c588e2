import numpy as np
import pytest

from graphda.datagen import BenchmarkSpec
from graphda.harness import (DEFAULT_GRIDS, ROW_COLUMNS, ExperimentConfig, TestSplit,
                             TrainSplit, ValidationSplit, benchmark_trial_data,
                             config_from_mapping, curve_to_csv, default_grid, default_threads,
                             evaluate_models, expand_grid, format_table, load_config,
                             mnist_trial_data, parse_config_text, read_rows_csv,
                             read_snapshot, rows_to_csv, run_benchmark_experiment,
                             run_experiment, run_mnist_experiment, run_mu_sweep,
                             run_sample_sweep, run_sparsity_sweep, snapshot_paths,
                             summarize_rows, tune, tune_prefixes, validation_score,
                             write_snapshot)
from graphda.learners import LEARNERS, HyperParams, run_stream
from graphda.metrics import TABLE_COLUMNS

SMALL_GRIDS = {
    "graphda": {"sparsity": (6,), "gamma": (10.0, 100.0)},
    "da-iht": {"sparsity": (6, 12), "gamma": (10.0, 100.0)},
    "l1-rda": {"lam": (0.01, 0.1), "gamma": (10.0,), "rho": (0.0,)},
    "adagrad": {"lam": (0.001,), "eta": (0.1, 1.0)},
    "adam": {"alpha": (0.01, 0.1)},
    "stoiht": {"sparsity": (6,), "gamma": (0.01,)},
    "graphstoiht": {"sparsity": (6,), "gamma": (0.01,)},
}


def small_cfg(**kw):
    base = dict(rows=6, cols=6, subgraph_size=6, mu=1.0, n_train=60, n_validate=60,
                n_test=60, trials=2, seed=3, grids=SMALL_GRIDS)
    base.update(kw)
    return ExperimentConfig(**base)


def test_default_grids():
    for name in LEARNERS:
        assert default_grid(name)
    assert len(DEFAULT_GRIDS["l1-rda"]["lam"]) == 14
    assert len(DEFAULT_GRIDS["l1-rda"]["gamma"]) == 9
    assert len(DEFAULT_GRIDS["adam"]["alpha"]) == 8
    assert default_grid("graphda", "mnist")["sparsity"][0] == 30
    with pytest.raises(ValueError):
        default_grid("sgd")


def test_expand_grid_order_and_filter():
    pts = expand_grid({"sparsity": (2, 50), "gamma": (1, 2)}, p=10)
    assert [p for p, _ in pts] == [(("sparsity", 2), ("gamma", 1.0)),
                                   (("sparsity", 2), ("gamma", 2.0))]
    assert pts[1][1] == HyperParams(sparsity=2, gamma=2.0)
    with pytest.raises(ValueError):
        expand_grid({"sparsity": (50,)}, p=10)
    with pytest.raises(ValueError):
        expand_grid({"bogus": (1,)})
    with pytest.raises(ValueError):
        expand_grid({"sparsity": (2.5,)})


def test_parse_config_text():
    text = """
    # benchmark
    experiment = benchmark
    trials = 3   # inline comment
    learners = graphda, adam
    grid.adam.alpha = 0.1, 0.01
    """
    vals = parse_config_text(text)
    assert vals["trials"] == "3" and vals["grids"] == {"adam": {"alpha": ("0.1", "0.01")}}
    cfg = config_from_mapping(vals)
    assert cfg.trials == 3 and cfg.learners == ("graphda", "adam")
    assert cfg.grid_for("adam") == {"alpha": ("0.1", "0.01")}
    for bad in ("trials 3", "a = 1\na = 2", "grid.adam = 1", "= 4", "grid.adam.alpha = ,"):
        with pytest.raises(ValueError):
            parse_config_text(bad)
    with pytest.raises(ValueError):
        config_from_mapping({"colour": "red"})


def test_config_file_overrides_flags(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("trials = 2\nseed = 9\n")
    cfg = load_config(path, {"trials": 5, "threads": 3})
    assert (cfg.trials, cfg.seed, cfg.threads) == (2, 9, 3)


@pytest.mark.parametrize("bad", [
    {"experiment": "nope"}, {"learners": ()}, {"learners": ("sgd",)}, {"trials": 0},
    {"threads": 0}, {"criterion": "auc"}, {"strategy": "x"}, {"experiment": "sweep-mu"},
    {"grids": {"sgd": {}}}, {"grids": {"adam": {"alpha": ()}}}, {"subgraph_size": 0},
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig(**bad)


def test_default_threads(monkeypatch):
    monkeypatch.setenv("GRAPHDA_THREADS", "4")
    assert default_threads() == 4
    monkeypatch.setenv("GRAPHDA_THREADS", "four")
    with pytest.raises(ValueError):
        default_threads()


def test_splits_are_read_only_and_typed():
    data = benchmark_trial_data(BenchmarkSpec(6, 6, 6, 1.0, 20, 20, 20, 0), 0)
    with pytest.raises(ValueError):
        data.train.X[0, 0] = 1.0
    with pytest.raises(TypeError):
        tune("adam", {"alpha": (0.1,)}, data.test, data.validation)
    with pytest.raises(TypeError):
        tune("adam", {"alpha": (0.1,)}, data.train, data.test)
    with pytest.raises(TypeError):
        evaluate_models(np.zeros(36), np.zeros(36), data.truth, data.validation)
    with pytest.raises(ValueError):
        TrainSplit(np.zeros((3, 2)), np.zeros(2))


def test_trial_data_determinism_and_pairing():
    spec = BenchmarkSpec(8, 8, 10, 0.3, 30, 30, 30, 5)
    a = benchmark_trial_data(spec, 1)
    b = benchmark_trial_data(spec, 1)
    assert np.array_equal(a.train.X, b.train.X) and np.array_equal(a.test.y, b.test.y)
    c = benchmark_trial_data(BenchmarkSpec(8, 8, 10, 1.0, 30, 30, 30, 5), 1)
    assert np.array_equal(a.truth.support, c.truth.support)
    d = benchmark_trial_data(spec, 2)
    assert not np.array_equal(a.train.X, d.train.X)


def test_test_split_only_used_for_evaluation():
    cfg = small_cfg(trials=1)
    data = benchmark_trial_data(cfg.benchmark_spec(), 0)
    from graphda.harness import run_benchmark_trial
    for name in LEARNERS:
        run_benchmark_trial(cfg, name, 0, data)
    assert set(data.test.access_log) == {"evaluate"}
    assert "evaluate" not in data.train.access_log + data.validation.access_log


def test_validation_score():
    X = np.array([[1.0], [-1.0]])
    assert validation_score([1.0], X, np.array([1.0, -1.0]), "accuracy") == 1.0
    assert validation_score([2.0], X, np.array([1.0, -1.0]), "mse") == -1.0
    assert validation_score([np.nan], X, np.array([1.0, 1.0]), "mse") == -np.inf
    with pytest.raises(ValueError):
        validation_score([1.0], X, np.ones(2), "auc")


def test_tune_singleton_and_ties():
    data = benchmark_trial_data(BenchmarkSpec(6, 6, 6, 1.0, 40, 40, 40, 0), 0)
    res = tune("adam", {"alpha": (0.05,)}, data.train, data.validation)
    assert res.index == 0 and res.hyper.alpha == 0.05 and len(res.scores) == 1
    # a huge lambda zeroes every model, so all scores tie and the first wins
    res = tune("l1-rda", {"lam": (1e6, 2e6), "gamma": (1.0,)}, data.train, data.validation)
    assert res.scores[0] == res.scores[1] and res.index == 0
    traj = run_stream("adam", HyperParams(alpha=0.05), data.train.X, data.train.y)
    res = tune("adam", {"alpha": (0.05,)}, data.train, data.validation)
    assert np.allclose(res.w, traj.w)


def test_tune_prefixes_match_fresh_runs():
    data = benchmark_trial_data(BenchmarkSpec(6, 6, 6, 1.0, 50, 40, 40, 0), 0)
    grid = {"sparsity": (4, 6), "gamma": (10.0, 100.0)}
    out = tune_prefixes("da-iht", grid, data.train, data.validation, [20, 50])
    for n in (20, 50):
        fresh = tune("da-iht", grid, TrainSplit(data.train.X[:n], data.train.y[:n]),
                     data.validation)
        assert out[n].index == fresh.index
        assert np.allclose(out[n].w, fresh.w) and np.allclose(out[n].w_bar, fresh.w_bar)
    with pytest.raises(ValueError):
        tune_prefixes("da-iht", grid, data.train, data.validation, [51])


def test_snapshot_round_trip_and_recompute(tmp_path):
    cfg = small_cfg(trials=1, learners=("da-iht", "adam"), snapshots=str(tmp_path))
    rows = run_benchmark_experiment(cfg)
    data = benchmark_trial_data(cfg.benchmark_spec(), 0)
    for row in rows:
        pw, pb = snapshot_paths(tmp_path, row.method, 0)
        w, t = read_snapshot(pw)
        w_bar, _ = read_snapshot(pb)
        assert t == cfg.n_train
        fw, fb, cw, cb = evaluate_models(w, w_bar, data.truth, data.test)
        assert (fw, fb, cw, cb) == (row.feature_wt, row.feature_wbar, row.class_wt,
                                    row.class_wbar)
    bad = tmp_path / "bad.txt"
    bad.write_text("p 3 t 1\n1.0\n")
    with pytest.raises(ValueError):
        read_snapshot(bad)
    write_snapshot(bad, [0.1, 2.0], 7)
    w, t = read_snapshot(bad)
    assert t == 7 and list(w) == [0.1, 2.0]


def test_benchmark_rows_and_csv(tmp_path):
    cfg = small_cfg()
    rows = run_benchmark_experiment(cfg)
    assert [(r.trial, r.method) for r in rows] == [(t, m) for t in range(2) for m in LEARNERS]
    adam = [r for r in rows if r.method == "adam"]
    assert all(r.feature_wt.nonzero_ratio == 1.0 for r in adam)
    for r in rows:
        assert 0 <= r.online_miss_wt <= cfg.n_train
    path = tmp_path / "rows.csv"
    text = rows_to_csv(rows, path)
    assert text.splitlines()[0] == ",".join(ROW_COLUMNS)
    back = read_rows_csv(path)
    assert len(back) == len(rows)
    assert back[0]["f1"] == rows[0].feature_wt.f1 and back[0]["params"] == rows[0].params
    summary = summarize_rows(rows)
    assert [m for m, _, _ in summary] == list(LEARNERS)
    assert summarize_rows(back)[0][2]["f1"] == summary[0][2]["f1"]
    table = format_table(summary)
    assert table.splitlines()[0].startswith("method") and "±" in table


def test_csv_independent_of_thread_count():
    cfg = small_cfg(learners=("da-iht", "l1-rda", "graphda"), trials=3)
    one = rows_to_csv(run_benchmark_experiment(cfg))
    two = rows_to_csv(run_benchmark_experiment(cfg.updated(threads=2)))
    assert one == two


def test_sweeps_shape():
    cfg = small_cfg(learners=("da-iht", "l1-rda"), trials=2)
    pts = run_sparsity_sweep(cfg, [3, 6])
    assert [(p.x, p.method, p.metric) for p in pts][:2] == [(3.0, "da-iht", "error_wt"),
                                                          (3.0, "da-iht", "error_wbar")]
    assert len(pts) == 4 and all(0 <= p.mean <= 1 and p.count == 2 for p in pts)
    with pytest.raises(ValueError):
        run_sparsity_sweep(cfg.updated(learners=("adam",)), [3])
    pts = run_mu_sweep(cfg, [0.1, 1.0])
    assert len(pts) == 8
    pts = run_sample_sweep(cfg, [20, 60])
    assert {p.x for p in pts} == {20.0, 60.0} and all(0 <= p.mean <= 1 for p in pts)
    text = curve_to_csv(pts)
    assert text.splitlines()[0] == "sweep,x,method,metric,mean,std,count"


def test_mnist_experiment_small():
    cfg = ExperimentConfig(experiment="mnist", learners=("da-iht",), trials=1,
                           digits=(1,), n_validate=50, n_test=50, sweep_values=(100, 200),
                           grids={"da-iht": {"sparsity": (37,), "gamma": (50.0,)}})
    data = mnist_trial_data(cfg, 1, 0, 10)
    assert set(np.unique(data.truth.wstar)) == {0.0, 1.0}
    pts = run_experiment(cfg)
    assert {p.metric for p in pts} == {"f1_wt", "f1_wbar"}
    assert all(p.sweep == "mnist-constant" for p in pts)
    assert run_mnist_experiment(cfg, "normalized", [100])[0].sweep == "mnist-normalized"
