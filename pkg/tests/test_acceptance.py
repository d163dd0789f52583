"""Acceptance gate: one test per headline criterion, one PASS line each.

Run with ``pytest tests/test_acceptance.py -v -s``. The first four
criteria are pure numerics and run in seconds; the three training
criteria (g2 reproduction, rank sensitivity, Lorenz rollout stability)
train real models and together take on the order of 15 minutes. All
training is deterministic per seed, so the outcomes reproduce exactly.
"""

import itertools

import numpy as np

from hotrnn import autodiff as ad
from hotrnn.autodiff import Tensor
from hotrnn.cells import MRNNCell, RNNCell, HOTRNNCell, make_cell
from hotrnn.dynamics import GenzSpec, LorenzSpec, gen_genz_dataset, gen_lorenz_dataset
from hotrnn.pipeline import (
    Normalizer,
    impute_cross_sectional,
    resample,
    rotate_augment,
    window_and_split,
)
from hotrnn.training import (
    ModelConfig,
    TrainConfig,
    apply_overrides,
    expand_grid,
    train_model,
)
from hotrnn.tt import dense_param_count, init_tt, param_count, to_dense, tt_contract
from hotrnn.evaluate import rmse_by_horizon

from test_pipeline import make_table
from test_tt import brute_force_contract
from util import check_grads


def report(name, detail=""):
    suffix = f"  ({detail})" if detail else ""
    print(f"\n[PASS] {name}{suffix}")


# -- criterion 1: oracle equivalence ----------------------------------------


def test_oracle_equivalence():
    worst = 0.0
    for h, lags, order, rank in itertools.product(
        (2, 3, 4), (1, 2), (1, 2, 3), (1, 2, 4)
    ):
        rng = np.random.default_rng(1000 * h + 100 * lags + 10 * order + rank)
        for _ in range(20):
            tt = init_tt(h, lags, order, rank, rng)
            dense = to_dense(tt)
            s = rng.normal(size=tt.state_len)
            got = tt_contract(tt, Tensor(s)).data
            want = brute_force_contract(dense, s)
            err = np.max(np.abs(got - want))
            worst = max(worst, err)
            assert err < 1e-10, (h, lags, order, rank, err)
    report("oracle equivalence", f"54 grid points x 20 draws, worst {worst:.2e}")


# -- criterion 2: gradient suite --------------------------------------------


def test_gradient_suite():
    kinds = ("rnn", "lstm", "mrnn", "mlstm", "hornn", "hotrnn", "hotlstm")
    xs = np.random.default_rng(7).normal(size=(3, 1, 2))
    for kind in kinds:
        cell = make_cell(kind, 2, 3, np.random.default_rng(11), lags=2,
                         order=2, ranks=2)

        def loss():
            state = cell.initial_state(1)
            total = None
            for x in xs:
                h, state = cell.step(state, Tensor(x))
                term = ad.tensor_sum(h * h)
                total = term if total is None else total + term
            return total

        check_grads(loss, cell.parameters(), tol=1e-3)
    report("gradient suite", "7 cell kinds, 3-step unroll, rel err < 1e-3")


# -- criterion 3: parameter-count claim -------------------------------------


def test_param_count_claim():
    checked = 0
    for h, lags, order in itertools.product((2, 3, 4, 8, 16), (1, 2, 3), (1, 2, 3)):
        n = h * lags + 1
        for rank in (1, 2, 4, 8):
            count = param_count(h, lags, order, rank)
            assert count <= h * rank**2 + n * rank**2 * order
            if n ** (order - 1) > rank**2 * order:
                assert count < dense_param_count(h, lags, order)
                checked += 1
    report("parameter-count claim", f"{checked} grid points in reduction region")


# -- criterion 4: degeneracy ------------------------------------------------


def test_degeneracy():
    r = np.random.default_rng(40)
    h, d, lags = 3, 2, 2
    n = h * lags + 1

    # first-order full-rank train reproduces the linear history baseline
    mrnn = MRNNCell(d, h, lags, r)
    hot = HOTRNNCell(d, h, lags, 1, h, np.random.default_rng(41))
    hot.w_hx.data[...] = mrnn.w_hx.data
    dense = np.zeros((h, n))
    dense[:, 0] = mrnn.b.data
    dense[:, 1:] = mrnn.w_hh.data.T
    hot.tt.cores[0].data[...] = np.eye(h)[None]
    hot.tt.cores[1].data[...] = dense[:, :, None]
    x = Tensor(r.normal(size=(4, d)))
    sm, sh = mrnn.initial_state(4), hot.initial_state(4)
    for a, b in zip(sm.history, sh.history):
        init = r.normal(size=(4, h))
        a.data[...] = init
        b.data[...] = init
    hm, _ = mrnn.step(sm, x)
    hh, _ = hot.step(sh, x)
    assert np.max(np.abs(hm.data - hh.data)) < 1e-10

    # single-lag history baseline collapses to the plain recurrent cell
    mrnn1 = MRNNCell(d, h, 1, np.random.default_rng(42))
    rnn = RNNCell(d, h, np.random.default_rng(43))
    rnn.w_hx.data[...] = mrnn1.w_hx.data
    rnn.w_hh.data[...] = mrnn1.w_hh.data
    rnn.b.data[...] = mrnn1.b.data
    s1, s2 = mrnn1.initial_state(4), rnn.initial_state(4)
    init = r.normal(size=(4, h))
    s1.history[0].data[...] = init
    s2.history[0].data[...] = init
    h1, _ = mrnn1.step(s1, x)
    h2, _ = rnn.step(s2, x)
    assert np.array_equal(h1.data, h2.data)
    report("degeneracy", "first-order tt == linear baseline, single lag == rnn")


# -- shared helpers for the training criteria -------------------------------


def normalized_windows(sequences, w_in, w_out, stride, seed=0):
    ds = window_and_split(sequences, w_in, w_out, stride, seed=seed)
    train, val, test = ds.subset("train"), ds.subset("val"), ds.subset("test")
    d = sequences.shape[2]
    norm = Normalizer.fit(
        np.concatenate([train[0].reshape(-1, d), train[1].reshape(-1, d)])
    )
    nz = lambda p: (norm.transform(p[0]), norm.transform(p[1]))
    return nz(train), nz(val), nz(test), norm


def train_config(kind, seed, d=1, hidden=16, steps=400, **model_kw):
    return TrainConfig(
        model=ModelConfig(kind=kind, input_size=d, hidden_size=hidden, **model_kw),
        learning_rate=5e-3, max_steps=steps, batch_size=16,
        eval_interval=100, ma_window=3, patience=5, seed=seed,
    )


# -- criterion 5: g2 forecasting reproduction -------------------------------


def test_genz_reproduction():
    spec = GenzSpec(kind="product_peak", n_samples=10_000, seq_len=100)
    train, val, test, norm = normalized_windows(
        gen_genz_dataset(spec, 0), 5, 80, 100
    )
    val = (val[0][:64], val[1][:64])
    test = (test[0][:400], test[1][:400])

    lstm_rmse, mlstm_rmse, hot_rmse = [], [], []
    for seed in (1, 2, 3):
        run = train_model(train_config("lstm", seed), train, val)
        lstm_rmse.append(rmse_by_horizon(run.model, *test, [80], norm)[80])
        run = train_model(train_config("mlstm", seed, lags=2), train, val)
        mlstm_rmse.append(rmse_by_horizon(run.model, *test, [80], norm)[80])
        best = None
        for ov in expand_grid({"rank": [2, 4], "lags": [2, 3]}):
            cfg = apply_overrides(
                train_config("hotlstm", seed, lags=2, order=2, rank=2), ov
            )
            cand = train_model(cfg, train, val)
            if best is None or cand.val_loss < best.val_loss:
                best = cand
        hot_rmse.append(rmse_by_horizon(best.model, *test, [80], norm)[80])

    hot, lstm = np.mean(hot_rmse), np.mean(lstm_rmse)
    assert hot <= lstm, (hot, lstm)
    report("g2 reproduction",
           f"mean rmse@80 tt-lstm {hot:.6f} <= lstm {lstm:.6f} "
           f"(mlstm {np.mean(mlstm_rmse):.6f}), 3 seeds")


# -- criterion 6: rank sensitivity ------------------------------------------


def test_rank_sensitivity():
    # Univariate g2 is a 1-D Markov map, so a single recurrent feature --
    # which rank 1 already provides -- has full capacity for it. Three
    # independent g2 channels force a 3-dimensional minimal state, where
    # a too-low rank genuinely saturates.
    spec = GenzSpec(kind="product_peak", n_samples=1500, seq_len=40)
    channels = [gen_genz_dataset(spec, s) for s in (0, 10, 20)]
    train, val, test, norm = normalized_windows(
        np.concatenate(channels, axis=2), 5, 20, 40
    )
    val = (val[0][:64], val[1][:64])
    test = (test[0][:100], test[1][:100])

    means = {}
    for rank in (1, 2, 4, 8):
        vals = []
        for seed in (1, 2, 3):
            cfg = train_config("hotlstm", seed, d=3, hidden=8, steps=500,
                               lags=2, order=2, rank=rank)
            run = train_model(cfg, train, val)
            vals.append(rmse_by_horizon(run.model, *test, [20], norm)[20])
        means[rank] = float(np.mean(vals))
    floor = min(means[2], means[4], means[8])
    assert means[1] > floor, means
    report("rank sensitivity",
           f"rank-1 rmse {means[1]:.6f} > best higher-rank {floor:.6f}")


# -- criterion 7: Lorenz rollout stability ----------------------------------


def test_lorenz_stability():
    spec = LorenzSpec(n_traj=600, seq_len=50)
    train, val, test, norm = normalized_windows(
        gen_lorenz_dataset(spec, 0), 10, 40, 50
    )

    fracs = []
    for seed in (1, 2, 3):
        cfg = train_config("hotlstm", seed, d=3, steps=500,
                           lags=2, order=2, rank=2)
        run = train_model(cfg, train, val)
        preds = norm.inverse(run.model.forecast(test[0], 40))
        assert np.all(np.isfinite(preds))
        inside = (
            (np.abs(preds[..., 0]) <= 50)
            & (np.abs(preds[..., 1]) <= 50)
            & (preds[..., 2] >= -10)
            & (preds[..., 2] <= 80)
        )
        frac = float(np.mean(np.all(inside, axis=1)))
        fracs.append(frac)
        assert frac >= 0.8, (seed, frac)
    report("lorenz stability",
           "40-step rollouts in attractor box, fractions "
           + ", ".join(f"{f:.2f}" for f in fracs))


# -- criterion 8: data-pipeline suite ---------------------------------------


def test_data_pipeline_suite():
    # cross-sectional imputation: row mean fills, empty rows dropped
    table = make_table([[1.0, np.nan, 3.0]])
    out, dropped = impute_cross_sectional(table)
    np.testing.assert_array_equal(out.values, [[1.0, 2.0, 3.0]])
    assert dropped == 0
    out, dropped = impute_cross_sectional(
        make_table([[1.0, 2.0], [np.nan, np.nan]])
    )
    assert dropped == 1 and len(out.values) == 1

    # block-mean resampling with ragged tail dropped
    res = resample(make_table([[1.0], [2.0], [3.0], [4.0], [5.0]]), 2)
    np.testing.assert_array_equal(res.values, [[1.5], [3.5]])

    # rotation augmentation: weekly shifts of a year give 52 copies
    year = np.arange(365, dtype=np.float64)[:, None]
    rolled = rotate_augment(year, 7)
    assert rolled.shape == (52, 365, 1)
    np.testing.assert_array_equal(rolled[0], year)

    # sequence-level split: floor-tenth val/test, disjoint ids
    ds = window_and_split(np.zeros((5928, 3, 1)), 1, 2, 3, seed=0)
    counts = {tag: len(set(ds.sequence_ids[ds.splits == tag]))
              for tag in ("train", "val", "test")}
    assert counts == {"train": 4744, "val": 592, "test": 592}
    for a, b in itertools.combinations(("train", "val", "test"), 2):
        assert set(ds.sequence_ids[ds.splits == a]).isdisjoint(
            ds.sequence_ids[ds.splits == b]
        )
    report("data-pipeline suite",
           "imputation, resampling, rotation, split disjointness")


# -- criterion 9: training determinism --------------------------------------


def test_train_determinism():
    spec = GenzSpec(kind="product_peak", n_samples=200, seq_len=30)
    train, val, _, _ = normalized_windows(gen_genz_dataset(spec, 0), 4, 8, 30)
    cfg = train_config("hotlstm", 5, steps=40, hidden=4, lags=2, order=2, rank=2)
    a = train_model(cfg, train, val)
    b = train_model(cfg, train, val)
    assert a.log == b.log
    for name, p in a.model.parameters().items():
        assert np.array_equal(p.data, b.model.parameters()[name].data), name
    report("determinism", "identical seed/config -> bit-identical run")
