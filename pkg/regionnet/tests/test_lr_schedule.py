import math

import pytest

from regionnet.schedule import TrainerConfig, default_warmup, lr_schedule


def cfg_of(total, warmup, base=5e-4):
    return TrainerConfig(base_lr=base, total_batches=total, warmup_batches=warmup)


def test_warmup_end_gives_base_lr():
    cfg = cfg_of(200, 10)
    assert lr_schedule(10, cfg) == pytest.approx(cfg.base_lr, abs=0.0)


def test_total_batches_limit_gives_zero():
    cfg = cfg_of(200, 10)
    assert lr_schedule(200, cfg) == pytest.approx(0.0, abs=1e-12)


def test_post_warmup_midpoint_is_half_base():
    # cosine term at the midpoint of the decay span is cos(pi/2) = 0
    cfg = cfg_of(210, 10)
    assert lr_schedule(10 + 100, cfg) == pytest.approx(0.5 * cfg.base_lr)


def test_warmup_ramp_is_linear_from_zero():
    cfg = cfg_of(100, 8)
    ramp = [lr_schedule(i, cfg) for i in range(9)]
    assert ramp[0] == 0.0
    steps = [b - a for a, b in zip(ramp, ramp[1:])]
    for s in steps:
        assert s == pytest.approx(cfg.base_lr / 8)


def test_continuous_at_warmup_boundary():
    for total, warmup in ((40, 2), (160, 8), (1000, 50), (7, 1)):
        cfg = cfg_of(total, warmup)
        gap = abs(lr_schedule(warmup, cfg) - lr_schedule(warmup - 1, cfg))
        # one linear step is the largest jump the curve may take there
        assert gap <= cfg.base_lr / warmup + 1e-15


def test_nonincreasing_after_warmup():
    for total, warmup in ((40, 2), (160, 8), (333, 17)):
        cfg = cfg_of(total, warmup)
        values = [lr_schedule(i, cfg) for i in range(warmup, total + 1)]
        for a, b in zip(values, values[1:]):
            assert b <= a + 1e-15


def test_index_outside_range_rejected():
    cfg = cfg_of(100, 5)
    with pytest.raises(ValueError):
        lr_schedule(-1, cfg)
    with pytest.raises(ValueError):
        lr_schedule(101, cfg)


def test_default_warmup_is_five_percent_floored_at_one():
    assert default_warmup(160) == 8
    assert default_warmup(1000) == 50
    assert default_warmup(3) == 1


def test_config_invariants():
    with pytest.raises(ValueError):
        TrainerConfig(base_lr=0.0, total_batches=10)
    with pytest.raises(ValueError):
        TrainerConfig(total_batches=10, warmup_batches=10)
    with pytest.raises(ValueError):
        TrainerConfig(total_batches=10, split=(0.7, 0.2))
    with pytest.raises(ValueError):
        TrainerConfig(total_batches=10, split=(1.2, -0.2))
    cfg = TrainerConfig(total_batches=10)
    assert cfg.batch_size == 100 and cfg.weight_decay == 2e-4 and cfg.base_lr == 5e-4
