import math

import numpy as np
import pytest

from timebin_qudits.chain import PreparationSetting, build_measurement_chain
from timebin_qudits.errors import ConfigError
from timebin_qudits.montecarlo import (
    NO_WINDOW,
    CountMatrix,
    NoiseModel,
    binomial_standard_error,
    counts_to_json,
    frame_start_ps,
    reference_windows,
    run_experiment,
    sample_shot,
)
from timebin_qudits.oracle import detection_model_probabilities

LOSSLESS = NoiseModel(jitter_sigma_ps=0.0, transmissions={})


def test_noise_model_defaults():
    n = NoiseModel()
    assert n.efficiency == pytest.approx(0.80 * 0.76)
    assert n.frame_ps == pytest.approx(12500.0)


@pytest.mark.parametrize(
    "kwargs",
    [dict(mu=-1), dict(jitter_sigma_ps=-1), dict(dark_count_rate_hz=-1), dict(rep_rate_hz=0), dict(transmissions={"x": 2})],
)
def test_noise_model_validation(kwargs):
    with pytest.raises(ConfigError):
        NoiseModel(**kwargs)


def test_frame_start():
    windows = reference_windows(build_measurement_chain(4, 0))
    assert frame_start_ps(windows) == -1500


def test_click_probability_matches_poisson():
    shots = 200_000
    counts = run_experiment(4, noise=LOSSLESS, shots=shots, seed=3, basis_pairs=[(0, 0)])[(0, 0)]
    p = 1 - math.exp(-0.14)
    for i in range(4):
        clicks = counts.counts[i, :4].sum()
        assert abs(clicks / shots - p) < 4 * binomial_standard_error(p, shots)
        assert counts.counts[i, 4] == 0
        assert clicks == counts.counts[i, i]


def test_identical_seeds_identical_counts():
    a = run_experiment(4, shots=20_000, seed=11)
    b = run_experiment(4, shots=20_000, seed=11)
    for key in a:
        np.testing.assert_array_equal(a[key].counts, b[key].counts)
    c = run_experiment(4, shots=20_000, seed=12)
    assert any((a[k].counts != c[k].counts).any() for k in a)


def test_threads_do_not_change_results():
    serial = run_experiment(4, shots=20_000, seed=5, shards=4, workers=1)
    threaded = run_experiment(4, shots=20_000, seed=5, shards=4, workers=4)
    for key in serial:
        np.testing.assert_array_equal(serial[key].counts, threaded[key].counts)


def test_shards_cover_all_shots():
    cm = run_experiment(4, noise=NoiseModel(mu=5.0, transmissions={}), shots=1001, seed=1, shards=3)[(1, 1)]
    assert cm.shots == 1001
    assert cm.counts.sum() <= 4 * 1001
    assert cm.counts.sum() > 4 * 1001 * 0.99


def test_against_detection_model():
    noise = NoiseModel(dark_count_rate_hz=2e6)
    shots = 50_000
    counts = run_experiment(4, noise=noise, shots=shots, seed=7)
    windows = reference_windows(build_measurement_chain(4, 0))
    for (a, b), cm in counts.items():
        expected = detection_model_probabilities(
            a,
            b,
            mu=noise.mu,
            efficiency=noise.efficiency,
            jitter_sigma_ps=noise.jitter_sigma_ps,
            dark_count_rate_hz=noise.dark_count_rate_hz,
            frame_ps=noise.frame_ps,
            frame_start_ps=frame_start_ps(windows),
        )[:, :5]
        freq = cm.counts / shots
        se = np.sqrt(expected * (1 - expected) / shots)
        assert np.all(np.abs(freq - expected) <= np.maximum(5 * se, 1e-12))


def test_sample_shot_labels(rng):
    a = build_measurement_chain(4, 1)
    setting = PreparationSetting.for_state(4, 1, 2)
    seen = {sample_shot(setting, a, NoiseModel(mu=30.0, jitter_sigma_ps=0.0, transmissions={}), rng) for _ in range(50)}
    assert seen == {2}
    far = NoiseModel(mu=3.0, jitter_sigma_ps=1e6, transmissions={})
    labels = {sample_shot(setting, a, far, rng) for _ in range(200)}
    assert NO_WINDOW in labels
    assert sample_shot(setting, a, NoiseModel(mu=0.0), rng) is None


def test_count_matrix_serialisation():
    cm = CountMatrix(0, 1, np.arange(10).reshape(2, 5), 100, 42)
    assert CountMatrix.from_dict(cm.to_dict()).counts.tolist() == cm.counts.tolist()
    csv_text = cm.to_csv({"seed": 42})
    lines = csv_text.splitlines()
    assert lines[0] == "# seed=42"
    assert lines[1] == "alpha,beta,i,j,count"
    assert "0,1,0,no_window,2" in lines
    assert len(lines) == 2 + 2 * 3
    merged = cm + cm
    assert merged.shots == 200 and merged.counts[1, 2] == 14
    assert '"01"' in counts_to_json({(0, 1): cm})


def test_negative_shots():
    with pytest.raises(ConfigError):
        run_experiment(4, shots=-1)
