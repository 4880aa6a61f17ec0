import numpy as np
import pytest
from scipy import stats as sstats

from dungeonrl.env import RoomGenParams, ActorSpec, Faction
from dungeonrl.rewards import (
    DEFAULT_PHASES,
    CurriculumPhase,
    ScheduleError,
    phase_boundaries,
    phase_for_step,
    sample_gen_params,
    step_reward,
)

from conftest import default_gen_params


# ---------------------------------------------------------------------------
# reward


def test_reward_legal_step():
    assert step_reward(legal=True, won=False) == pytest.approx(-0.01, abs=1e-9)


def test_reward_impossible_move():
    assert step_reward(legal=False, won=False) == pytest.approx(-0.11, abs=1e-9)


def test_reward_win_full_hp():
    assert step_reward(legal=True, won=True, normalized_hp=1.0) == \
        pytest.approx(9.99, abs=1e-9)


def test_reward_win_scales_with_hp():
    for hp in range(21):
        expected = -0.01 + 10.0 * (hp / 20)
        assert step_reward(True, True, hp / 20) == pytest.approx(expected, abs=1e-9)


def test_reward_value_set_is_closed():
    values = {step_reward(legal, won, hp / 20)
              for legal in (True, False) for won in (True, False)
              for hp in range(21)}
    for v in values:
        in_base = abs(v - (-0.01)) < 1e-9 or abs(v - (-0.11)) < 1e-9
        in_win = any(abs(v - (-0.01 + 10 * h / 20)) < 1e-9 for h in range(21)) or \
            any(abs(v - (-0.11 + 10 * h / 20)) < 1e-9 for h in range(21))
        assert in_base or in_win


def test_episode_return_bounds():
    best = step_reward(True, True, 1.0)
    assert best == pytest.approx(9.99, abs=1e-9)
    worst_100 = 100 * step_reward(False, False)
    assert worst_100 == pytest.approx(-11.0, abs=1e-9)


# ---------------------------------------------------------------------------
# phases


def test_shipped_phases_match_published_table():
    rows = [(p.agent_hp, p.enemy_hp, p.loot_fraction) for p in DEFAULT_PHASES]
    assert rows == [
        (20, 1, 0.20),
        ((5, 20), 10, 0.20),
        ((5, 20), (10, 20), 0.20),
        ((5, 20), (10, 20), (0.10, 0.20)),
        ((5, 20), (10, 20), (0.05, 0.20)),
    ]
    assert sum(p.duration_fraction for p in DEFAULT_PHASES) == pytest.approx(1.0)


def test_phase_for_step_endpoints():
    total = 100_000
    assert phase_for_step(DEFAULT_PHASES, 0, total) is DEFAULT_PHASES[0]
    assert phase_for_step(DEFAULT_PHASES, total - 1, total) is DEFAULT_PHASES[-1]


def test_phase_boundaries_cumulative_arithmetic():
    total = 100_000
    # default fractions 0.10/0.15/0.20/0.25/0.30
    assert phase_boundaries(DEFAULT_PHASES, total) == \
        [10_000, 25_000, 45_000, 70_000, 100_000]
    assert phase_for_step(DEFAULT_PHASES, 24_999, total) is DEFAULT_PHASES[1]
    assert phase_for_step(DEFAULT_PHASES, 25_000, total) is DEFAULT_PHASES[2]


def test_phase_lookup_is_monotone():
    total = 7_777  # awkward total to stress the rounding
    last = 0
    for step in range(total):
        index = DEFAULT_PHASES.index(phase_for_step(DEFAULT_PHASES, step, total))
        assert index >= last
        last = index
    assert last == len(DEFAULT_PHASES) - 1


def test_phase_for_step_validates_inputs():
    with pytest.raises(ValueError):
        phase_for_step(DEFAULT_PHASES, -1, 100)
    with pytest.raises(ValueError):
        phase_for_step(DEFAULT_PHASES, 100, 100)
    broken = (CurriculumPhase(20, 1, 0.2, 0.5), CurriculumPhase(20, 1, 0.2, 0.4))
    with pytest.raises(ScheduleError):
        phase_for_step(broken, 0, 100)


# ---------------------------------------------------------------------------
# sampling generation parameters


def test_phase1_sampling_is_constant():
    rng = np.random.default_rng(0)
    base = default_gen_params()
    for _ in range(50):
        gen = sample_gen_params(DEFAULT_PHASES[0], rng, base)
        assert gen.actors[0].hp == 20
        assert gen.actors[1].hp == 1
        assert gen.loot_fraction == 0.20


def test_phase2_agent_hp_uniform():
    rng = np.random.default_rng(1)
    base = default_gen_params()
    counts = {}
    for _ in range(10_000):
        hp = sample_gen_params(DEFAULT_PHASES[1], rng, base).actors[0].hp
        counts[hp] = counts.get(hp, 0) + 1
    assert sorted(counts) == list(range(5, 21))
    _, p = sstats.chisquare([counts[k] for k in sorted(counts)])
    assert p > 0.01


def test_phase5_loot_fraction_in_range():
    rng = np.random.default_rng(2)
    base = default_gen_params()
    draws = [sample_gen_params(DEFAULT_PHASES[4], rng, base).loot_fraction
             for _ in range(500)]
    assert all(0.05 <= f <= 0.20 for f in draws)
    assert max(draws) - min(draws) > 0.10  # actually spans the interval


def test_sample_passes_base_fields_through():
    rng = np.random.default_rng(3)
    base = default_gen_params(width=(6, 8), obstacle_fraction=0.05,
                              random_equipment=True)
    gen = sample_gen_params(DEFAULT_PHASES[2], rng, base)
    assert gen.width == (6, 8)
    assert gen.obstacle_fraction == 0.05
    assert gen.random_equipment is True
    assert gen.actors[0].atk == base.actors[0].atk


def test_sample_requires_two_actor_specs():
    rng = np.random.default_rng(4)
    base = default_gen_params()
    bad = RoomGenParams(actors=(ActorSpec(Faction.NPC, 1, 1, 1),))
    with pytest.raises(ValueError):
        sample_gen_params(DEFAULT_PHASES[0], rng, bad)
