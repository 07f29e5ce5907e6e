"""환경 생성기와 데이터셋 테스트"""
import numpy as np
import pytest
from pydantic import ValidationError

from agents.mdp_core import episodic_state_marginal, success_posterior
from envs.datasets import (
    check_inputs_match,
    collect,
    load_dataset,
    load_successes,
    sample_success_examples,
    save_dataset,
    save_successes,
    violate_assumption_sampler,
)
from envs.generators import (
    load_mdp,
    make_env,
    random_mdp_spec,
    region_states,
    save_mdp,
    two_region_grid_spec,
)
from schemas.data_models import (
    EnvKind,
    EnvSpec,
    Policy,
    SuccessExampleSet,
    TabularMDP,
    Trajectory,
    TransitionDataset,
)
from schemas.errors import InvariantViolation


# ============================================================================
# 환경 생성
# ============================================================================

def test_chain_spec_builds_chain2(chain2):
    assert (chain2.num_states, chain2.num_actions) == (2, 1)
    assert chain2.transition[0, 0, 1] == 1.0
    assert chain2.transition[1, 0, 1] == 1.0
    np.testing.assert_array_equal(chain2.success_prob, [0.0, 1.0])
    np.testing.assert_array_equal(chain2.initial_dist, [1.0, 0.0])


def test_random_dirichlet_is_deterministic():
    spec = EnvSpec(kind=EnvKind.RANDOM_DIRICHLET, num_states=6, num_actions=3, seed=7)
    first, second = make_env(spec), make_env(spec)
    np.testing.assert_array_equal(first.transition, second.transition)
    np.testing.assert_array_equal(first.success_prob, second.success_prob)


def test_two_region_grid():
    spec = two_region_grid_spec()
    mdp = make_env(spec)
    assert (mdp.num_states, mdp.num_actions) == (121, 4)
    regions = region_states(spec)
    assert [len(r) for r in regions] == [4, 4]
    expected = np.zeros(121)
    expected[regions[0] + regions[1]] = 1.0
    np.testing.assert_array_equal(mdp.success_prob, expected)


def test_grid_walls_keep_agent_in_place():
    mdp = make_env(EnvSpec(kind=EnvKind.GRID2D, width=3, height=3, start=(0, 0)))
    assert mdp.transition[0, 0, 0] == 1.0
    assert mdp.transition[0, 2, 0] == 1.0
    assert mdp.transition[0, 3, 1] == 1.0
    assert mdp.transition[0, 1, 3] == 1.0


def test_noise_mixes_in_uniform_action():
    mdp = make_env(EnvSpec(kind=EnvKind.CHAIN, length=3, chain_actions=2, noise=0.2))
    np.testing.assert_allclose(mdp.transition[1, 0], [0.1, 0.0, 0.9])


def test_random_specs_stay_small():
    for seed in range(20):
        spec = random_mdp_spec(seed, max_states=6, max_actions=3)
        assert 2 <= spec.num_states <= 6
        assert 1 <= spec.num_actions <= 3


def test_delayed_success_corridors():
    from agents.mdp_core import control_objective
    from schemas.data_models import TaskSpec

    mdp = make_env(EnvSpec(kind=EnvKind.DELAYED_SUCCESS, length=3))
    assert (mdp.num_states, mdp.num_actions) == (7, 2)
    assert mdp.transition[0, 1, 1] == 1.0
    assert mdp.transition[0, 0, 4] == 1.0
    np.testing.assert_array_equal(mdp.transition[3, :, 3], [1.0, 1.0])
    np.testing.assert_array_equal(mdp.transition[6, :, 6], [1.0, 1.0])
    np.testing.assert_array_equal(mdp.success_prob, [0, 0, 0, 1, 0, 0, 0])

    task = TaskSpec(gamma=0.9)
    assert control_objective(mdp, task, Policy.deterministic([1] * 7, 2)) == pytest.approx(0.9 ** 3)
    assert control_objective(mdp, task, Policy.deterministic([0] * 7, 2)) == 0.0


def test_cells_outside_grid_rejected():
    with pytest.raises(ValueError):
        EnvSpec(kind=EnvKind.GRID2D, width=3, height=3, regions=[[(3, 0)]])


# ============================================================================
# 수집
# ============================================================================

def test_collect_same_seed_is_identical(random_mdp):
    pi = Policy.uniform(random_mdp.num_states, random_mdp.num_actions)
    first = collect(random_mdp, pi, 500, episode_len=30, seed=4)
    second = collect(random_mdp, pi, 500, episode_len=30, seed=4)
    assert first.model_dump_json() == second.model_dump_json()


def test_deterministic_rollouts_repeat(chain2):
    data = collect(chain2, Policy.uniform(2, 1), 30, episode_len=5, seed=2)
    assert len(data.trajectories) == 6
    assert all(t.states == [0, 1, 1, 1, 1, 1] for t in data.trajectories)


def test_empirical_marginal_matches_exact_episodic_marginal(chain2):
    pi = Policy.uniform(2, 1)
    data = collect(chain2, pi, 100_000, seed=0)
    exact = episodic_state_marginal(chain2, pi, 151)
    assert np.abs(data.state_marginal() - exact).sum() < 0.01


def test_episode_length_must_be_positive(chain2):
    with pytest.raises(InvariantViolation):
        collect(chain2, Policy.uniform(2, 1), 10, episode_len=0)


def test_lookahead_stays_inside_trajectory():
    data = TransitionDataset(
        num_states=4,
        num_actions=1,
        trajectories=[Trajectory(states=[0, 1, 2, 3], actions=[0, 0, 0])],
    )
    states, valid = data.lookahead_states(2)
    np.testing.assert_array_equal(states, [2, 3, 0])
    np.testing.assert_array_equal(valid, [True, True, False])


# ============================================================================
# 성공 예시 샘플링
# ============================================================================

def _two_state(success_prob):
    return TabularMDP(
        num_states=2,
        num_actions=1,
        transition=[[[0.5, 0.5]], [[0.5, 0.5]]],
        initial_dist=[0.5, 0.5],
        success_prob=success_prob,
    )


def test_point_success_probability_gives_single_state(chain2):
    successes = sample_success_examples(chain2, np.array([0.7, 0.3]), 50, seed=0)
    assert set(successes.examples) == {1}
    assert successes.prior == pytest.approx(0.3)


def test_zero_success_mass_is_an_error(chain2):
    with pytest.raises(InvariantViolation) as excinfo:
        sample_success_examples(chain2, np.array([1.0, 0.0]), 10)
    assert excinfo.value.invariant == "success mass positive"


def test_sampled_distribution_follows_product():
    successes = sample_success_examples(_two_state([0.5, 1.0]), np.array([0.8, 0.2]), 20000, seed=3)
    np.testing.assert_allclose(successes.dist, [2 / 3, 1 / 3], atol=0.02)
    assert successes.prior == pytest.approx(0.6)


def test_posterior_recovers_success_probability():
    mdp = make_env(EnvSpec(kind=EnvKind.RANDOM_DIRICHLET, num_states=4, num_actions=2, seed=12))
    marginal = np.full(4, 0.25)
    successes = sample_success_examples(mdp, marginal, 100_000, seed=12)
    posterior = success_posterior(successes, marginal)
    np.testing.assert_allclose(posterior.values, mdp.success_prob, atol=0.02)


def test_user_marginal_on_one_region():
    spec = two_region_grid_spec(size=7)
    mdp = make_env(spec)
    top, _ = region_states(spec)
    user = np.zeros(mdp.num_states)
    user[top] = 1.0 / len(top)
    successes = violate_assumption_sampler(mdp, user, 200, seed=1)
    assert set(successes.examples) <= set(top)


def test_skewed_user_marginal_splits_examples():
    spec = two_region_grid_spec(size=7)
    mdp = make_env(spec)
    top, bottom = region_states(spec)
    user = np.zeros(mdp.num_states)
    user[top] = 0.9 / len(top)
    user[bottom] = 0.1 / len(bottom)
    successes = violate_assumption_sampler(mdp, user, 20000, seed=2)
    assert successes.dist[top].sum() == pytest.approx(0.9, abs=0.02)


# ============================================================================
# 파일 입출력
# ============================================================================

def test_dataset_file_round_trip(tmp_path, random_mdp):
    spec = random_mdp_spec(3, max_states=5)
    data = collect(random_mdp, Policy.uniform(random_mdp.num_states, random_mdp.num_actions), 100,
                   episode_len=30, seed=1, env_spec=spec)
    path = save_dataset(data, tmp_path / "data.jsonl")
    assert path.read_text(encoding="utf-8").splitlines()[0].startswith('{"header"')
    loaded = load_dataset(path)
    assert loaded.trajectories == data.trajectories
    assert loaded.env_spec == spec
    assert loaded.seed == 1


def test_mdp_and_successes_files(tmp_path, chain2, chain2_successes):
    loaded = load_mdp(save_mdp(chain2, tmp_path / "env.json"))
    np.testing.assert_array_equal(loaded.transition, chain2.transition)
    again = load_successes(save_successes(chain2_successes, tmp_path / "successes.json"))
    assert again.examples == chain2_successes.examples
    assert again.prior == chain2_successes.prior


def test_missing_files_are_invariant_violations(tmp_path):
    for loader in (load_mdp, load_dataset, load_successes):
        with pytest.raises(InvariantViolation):
            loader(tmp_path / "missing.json")


def test_out_of_range_ids_are_rejected():
    with pytest.raises(ValidationError, match="success examples are state ids"):
        SuccessExampleSet(examples=[5], dist=[0.0, 1.0], prior=0.5)
    with pytest.raises(ValidationError, match="dataset states < num_states"):
        TransitionDataset(num_states=2, num_actions=1, trajectories=[Trajectory(states=[0, 7], actions=[0])])
    with pytest.raises(ValidationError, match="dataset actions < num_actions"):
        TransitionDataset(num_states=2, num_actions=1, trajectories=[Trajectory(states=[0, 1], actions=[2])])
    with pytest.raises(ValidationError, match="trajectory ids are non-negative"):
        Trajectory(states=[-1, 0], actions=[0])


def test_inputs_must_match_env_sizes(chain2, chain2_data, chain2_successes):
    check_inputs_match(chain2, chain2_data, chain2_successes)
    three = SuccessExampleSet.from_examples([2], num_states=3, prior=0.5)
    with pytest.raises(InvariantViolation) as excinfo:
        check_inputs_match(chain2, successes=three)
    assert excinfo.value.invariant == "success examples match env sizes"
    wide = TransitionDataset(num_states=2, num_actions=2, trajectories=[Trajectory(states=[0, 1], actions=[1])])
    with pytest.raises(InvariantViolation) as excinfo:
        check_inputs_match(chain2, data=wide)
    assert excinfo.value.invariant == "dataset matches env sizes"
