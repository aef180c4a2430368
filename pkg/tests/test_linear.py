import numpy as np
import pytest

from skelloc.clustering import ClusterModel
from skelloc.errors import DivergenceError
from skelloc.linear import fit, load_linear_models, reconstruct, save_linear_models
from skelloc.radiosim import RssDatabase


def make_db(series: np.ndarray) -> RssDatabase:
    """series: (n_points, n_ap, n_training) -> database with a zero reference sample."""
    n, n_ap, n_k = series.shape
    values = np.zeros((n, n_ap, n_k + 1))
    values[:, :, 1:] = series
    values[:, :, 0] = series.mean(axis=2)
    pos = np.column_stack([np.arange(n, dtype=float), np.zeros(n)])
    return RssDatabase(values=values, point_positions=pos, time_labels=np.arange(n_k + 1))


def single_cluster(n: int) -> ClusterModel:
    return ClusterModel(
        exemplars=np.array([0]),
        exemplar_of=np.zeros(n, dtype=int),
        clusters=(np.arange(n),),
        converged=True,
        n_iter=1,
    )


def two_clusters() -> ClusterModel:
    # exemplars 0 and 2 over points {0,1} and {2,3}
    return ClusterModel(
        exemplars=np.array([0, 2]),
        exemplar_of=np.array([0, 0, 2, 2]),
        clusters=(np.array([0, 1]), np.array([2, 3])),
        converged=True,
        n_iter=1,
    )


def ols_oracle(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xm, ym = x.mean(), y.mean()
    slope = float(((x - xm) * (y - ym)).sum() / ((x - xm) ** 2).sum())
    return slope, float(ym - slope * xm)


# ---------------------------------------------------------------- fit


def test_exact_linear_relation_recovered():
    rng = np.random.default_rng(0)
    x = rng.uniform(-60.0, -40.0, 12)
    series = np.stack([x, 2.0 * x + 1.0])[:, None, :]
    models = fit(make_db(series), single_cluster(2), learning_rate=0.1, epochs=200)
    assert models.coeff[1, 0] == pytest.approx(2.0, abs=1e-3)
    assert models.bias[1, 0] == pytest.approx(1.0, abs=1e-3)
    assert not models.degenerate[1, 0]


def test_constant_monitor_series_degenerates():
    series = np.zeros((2, 1, 8))
    series[0, 0, :] = -50.0  # zero-variance exemplar series
    series[1, 0, :] = np.linspace(-60.0, -53.0, 8)
    models = fit(make_db(series), single_cluster(2), learning_rate=0.1, epochs=50)
    assert models.degenerate[1, 0]
    assert models.coeff[1, 0] == 0.0
    assert models.bias[1, 0] == pytest.approx(series[1, 0].mean(), abs=1e-12)


def test_sgd_matches_closed_form_ols_on_noisy_data():
    rng = np.random.default_rng(42)
    n_k = 40
    x = rng.uniform(-10.0, 10.0, n_k)
    slopes = [1.7, -0.8, 0.3]
    inters = [-3.0, 2.5, 0.7]
    series = np.empty((4, 1, n_k))
    series[0, 0] = x
    for i in range(1, 4):
        series[i, 0] = slopes[i - 1] * x + inters[i - 1] + rng.normal(0, 0.1, n_k)
    models = fit(make_db(series), single_cluster(4), learning_rate=0.001, epochs=20000)
    for i in range(1, 4):
        c_ols, b_ols = ols_oracle(x, series[i, 0])
        assert models.coeff[i, 0] == pytest.approx(c_ols, abs=1e-3)
        assert models.bias[i, 0] == pytest.approx(b_ols, abs=1e-3)


def test_fit_beats_constant_mean_predictor():
    rng = np.random.default_rng(3)
    n_k = 30
    x = rng.uniform(-8.0, 8.0, n_k)
    series = np.empty((3, 2, n_k))
    for l in range(2):
        series[0, l] = x
        series[1, l] = 1.2 * x - 4.0 + rng.normal(0, 0.5, n_k)
        series[2, l] = -0.5 * x + 1.0 + rng.normal(0, 0.5, n_k)
    db = make_db(series)
    models = fit(db, single_cluster(3), learning_rate=0.01, epochs=2000)
    y = db.values[:, :, 1:]
    x_all = db.values[models.cluster_model.exemplar_of, :, 1:]
    pred = models.coeff[:, :, None] * x_all + models.bias[:, :, None]
    mae_fit = np.abs(pred - y).mean(axis=2)
    mae_mean = np.abs(y - y.mean(axis=2, keepdims=True)).mean(axis=2)
    assert (mae_fit <= mae_mean + 1e-6).all()


def test_fit_diverges_at_unit_learning_rate():
    rng = np.random.default_rng(1)
    x = rng.uniform(-60.0, -40.0, 20)
    series = np.stack([x, 1.5 * x + 2.0 + rng.normal(0, 1.0, 20)])[:, None, :]
    with pytest.raises(DivergenceError):
        fit(make_db(series), single_cluster(2), learning_rate=1.0, epochs=200)


# ---------------------------------------------------------------- reconstruct


def _identity_models(cm, n, n_ap=1):
    return fit(
        make_db(np.tile(np.linspace(-5, 5, 9), (n, n_ap, 1))), cm, 0.1, 5
    )  # placeholder, overwritten below


def test_reconstruct_identity_mapping():
    from skelloc.linear import LinearModelSet

    cm = two_clusters()
    models = LinearModelSet(
        coeff=np.ones((4, 2)),
        bias=np.zeros((4, 2)),
        degenerate=np.zeros((4, 2), dtype=bool),
        cluster_model=cm,
    )
    mp_now = np.array([[-40.0, -45.0], [-55.0, -60.0]])
    out = reconstruct(models, mp_now)
    assert np.allclose(out[0], mp_now[0]) and np.allclose(out[1], mp_now[0])
    assert np.allclose(out[2], mp_now[1]) and np.allclose(out[3], mp_now[1])


def test_reconstruct_zero_coeff_returns_bias():
    from skelloc.linear import LinearModelSet

    cm = single_cluster(3)
    bias = np.array([[-50.0], [-55.0], [-60.0]])
    models = LinearModelSet(
        coeff=np.zeros((3, 1)),
        bias=bias,
        degenerate=np.zeros((3, 1), dtype=bool),
        cluster_model=cm,
    )
    out = reconstruct(models, np.array([[-10.0]]))
    assert np.allclose(out, bias)


def test_reconstruct_is_linear_in_monitor_input():
    from skelloc.linear import LinearModelSet

    rng = np.random.default_rng(8)
    cm = two_clusters()
    models = LinearModelSet(
        coeff=rng.normal(size=(4, 2)),
        bias=rng.normal(size=(4, 2)),
        degenerate=np.zeros((4, 2), dtype=bool),
        cluster_model=cm,
    )
    x = rng.normal(size=(2, 2))
    zero = reconstruct(models, np.zeros((2, 2)))
    for a in (0.5, 2.0, -3.0):
        lhs = reconstruct(models, a * x) - zero
        rhs = a * (reconstruct(models, x) - zero)
        assert np.allclose(lhs, rhs)


def test_reconstruct_recovers_heldout_linear_data():
    rng = np.random.default_rng(5)
    n_k = 30
    x = rng.uniform(-6.0, 6.0, n_k + 1)
    series = np.stack([x[:-1], 2.0 * x[:-1] - 1.0, 0.5 * x[:-1] + 4.0])[:, None, :]
    models = fit(make_db(series), single_cluster(3), learning_rate=0.01, epochs=2000)
    held_out = x[-1]
    out = reconstruct(models, np.array([[held_out]]))
    assert out[0, 0] == pytest.approx(held_out, abs=1e-3)
    assert out[1, 0] == pytest.approx(2.0 * held_out - 1.0, abs=1e-3)
    assert out[2, 0] == pytest.approx(0.5 * held_out + 4.0, abs=1e-3)


def test_reconstruct_missing_exemplar_row_errors():
    rng = np.random.default_rng(2)
    series = rng.normal(-50, 3, size=(4, 2, 10))
    models = fit(make_db(series), two_clusters(), learning_rate=0.01, epochs=100)
    with pytest.raises(ValueError, match="cluster"):
        reconstruct(models, np.array([[-40.0, -45.0]]))


def test_model_file_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    series = rng.normal(-50, 3, size=(4, 2, 10))
    cm = two_clusters()
    models = fit(make_db(series), cm, learning_rate=0.01, epochs=100)
    path = tmp_path / "lr.txt"
    save_linear_models(models, path)
    loaded = load_linear_models(path, cm)
    assert np.array_equal(loaded.coeff, models.coeff)
    assert np.array_equal(loaded.bias, models.bias)
    assert np.array_equal(loaded.degenerate, models.degenerate)
