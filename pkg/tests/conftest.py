"""공용 픽스처"""
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from envs.datasets import collect, sample_success_examples  # noqa: E402
from envs.generators import make_env, random_mdp_spec  # noqa: E402
from schemas import data_models  # noqa: E402
from schemas.data_models import EnvKind, EnvSpec, Policy, TaskSpec  # noqa: E402


@pytest.fixture(autouse=True)
def _reset_tolerances():
    """설정 로드가 바꾼 전역 허용 오차를 테스트마다 되돌린다"""
    yield
    data_models.STOCHASTIC_TOL = 1e-12
    data_models.RESIDUAL_TOL = 1e-9


@pytest.fixture
def chain2():
    """상태 {0, 1}, 행동 하나, 0→1, 1→1, p_e = [0, 1]"""
    return make_env(EnvSpec(kind=EnvKind.CHAIN, length=2))


@pytest.fixture
def half():
    return TaskSpec(gamma=0.5)


@pytest.fixture
def chain2_data(chain2):
    """길이 2 에피소드 → 상태 주변분포 [0.5, 0.5]"""
    return collect(chain2, Policy.uniform(2, 1), num_steps=1000, episode_len=2, seed=0)


@pytest.fixture
def chain2_successes(chain2, chain2_data):
    return sample_success_examples(chain2, chain2_data.state_marginal(), count=200, seed=0)


@pytest.fixture
def random_mdp():
    return make_env(random_mdp_spec(seed=3, max_states=5))


@pytest.fixture
def random_policy(random_mdp):
    rng = np.random.default_rng(3)
    return Policy(probs=rng.dirichlet(np.ones(random_mdp.num_actions), size=random_mdp.num_states))
