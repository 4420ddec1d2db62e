import inspect

import numpy as np
import pytest

from revolve.bench import run_ablation, run_synthetic
from revolve.errors import InvalidArgumentError
from revolve.pipeline import PipelineConfig
from revolve.particles import FilterConfig
from revolve.synth import realistic_scene, static_scene


@pytest.fixture(scope="module")
def small_report():
    cfg = PipelineConfig(filter=FilterConfig(n_particles=200))
    return run_ablation("sensors", realistic_scene(4), seeds=[0, 1], cfg=cfg)


def test_labels_and_shape(small_report):
    assert [r.label for r in small_report.rows] == ["1", "2", "1+2"]
    for r in small_report.rows:
        assert len(r.ae) == 2 and len(r.frame_ae) == 2 and len(r.frame_ae[0]) == 4


def test_seed_average(small_report):
    r = small_report.row("1+2")
    assert r.mean_ae == pytest.approx(np.mean([f.mean() for f in r.frame_ae]), rel=1e-12)
    assert r.mean_ae <= r.mean_hd


def test_table_and_records(small_report):
    table = small_report.to_table()
    assert "AE (mm)" in table and "(2 seeds averaged)" in table
    recs = small_report.to_records()
    assert [x["setting"] for x in recs] == ["1", "2", "1+2"]


def test_ten_seed_default():
    assert list(inspect.signature(run_ablation).parameters["seeds"].default) == list(range(10))


def test_unknown_protocol():
    with pytest.raises(InvalidArgumentError):
        run_ablation("colour", static_scene(2), seeds=[0])


def test_full_run_matches_the_same_setting_in_the_ablation(small_report):
    cfg = PipelineConfig(filter=FilterConfig(n_particles=200))
    rec = run_synthetic(realistic_scene(4), 1, cfg)
    assert rec.mean_ae == small_report.row("1+2").ae[1]


def test_run_synthetic_deterministic():
    cfg = PipelineConfig(filter=FilterConfig(n_particles=100))
    a = run_synthetic(static_scene(3), 5, cfg)
    b = run_synthetic(static_scene(3), 5, cfg)
    assert [f.ae_mm for f in a.frames] == [f.ae_mm for f in b.frames]
    assert all(np.array_equal(x.best.knots, y.best.knots) for x, y in zip(a.frames, b.frames))
