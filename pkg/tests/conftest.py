from __future__ import annotations

import pytest

from morphevo.config import RunConfig
from morphevo.evolution import run
from morphevo.morphology import HEAD, CENTER, END, MID, JointSpec, Limb, LimbParams, Morphology
from morphevo.mutation import sample_initial_morphology
from morphevo.rng import Stream

X_JOINT = JointSpec(("x",), ((-30, 30),), (150,))
XY_JOINT = JointSpec(("x", "y"), ((-30, 30), (0, 90)), (150, 300))


def limb(id, parent=HEAD, attachment=CENTER, length=0.2, density=500, theta=0, phi=180,
         joint=X_JOINT, mirror=None) -> Limb:
    return Limb(id, parent, attachment, LimbParams(length, density, theta, phi), joint, mirror)


def body(*limbs, head_density=500, density=500) -> Morphology:
    return Morphology(head_density, density if limbs else None, tuple(sorted(limbs, key=lambda l: l.id)))


def pair(a, b, theta, parent=HEAD, attachment=CENTER, **kw):
    """Mirrored twins ``a``/``b`` at azimuth ``theta`` and its mirror."""
    return (
        limb(a, parent, attachment, theta=theta, mirror=b, **kw),
        limb(b, parent, attachment, theta=(360 - theta) % 360, mirror=a, **kw),
    )


def tripod() -> Morphology:
    """Two splayed legs plus a rear leg; stands on three feet."""
    return body(
        *pair(0, 1, 45, phi=135, length=0.4),
        limb(2, theta=180, phi=135, length=0.4),
    )


def random_morphologies(n: int, seed: int = 0, limb_range=(1, 10)) -> list[Morphology]:
    rng = Stream(seed)
    return [sample_initial_morphology(rng, limb_range) for _ in range(n)]


@pytest.fixture(scope="session")
def toy_config() -> RunConfig:
    return RunConfig(population_size=8, max_evaluations=40, run_seed=11, checkpoint_interval=10)


@pytest.fixture(scope="session")
def toy_log(toy_config, tmp_path_factory):
    d = tmp_path_factory.mktemp("toy")
    return run(toy_config, log_path=d / "run.jsonl", checkpoint_path=d / "checkpoint.json"), d


@pytest.fixture(scope="session")
def desk_log(tmp_path_factory):
    d = tmp_path_factory.mktemp("desk")
    cfg = RunConfig.desk(run_seed=5, max_evaluations=256, workers=4)
    return run(cfg, log_path=d / "run.jsonl", checkpoint_path=d / "checkpoint.json"), d


__all__ = ["CENTER", "END", "HEAD", "MID", "X_JOINT", "XY_JOINT", "body", "limb", "pair", "tripod"]
