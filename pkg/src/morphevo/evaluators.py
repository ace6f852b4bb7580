"""Fitness evaluators: the lifetime-learning contract and a surrogate for it.

An evaluator maps ``(morphology, seed, env)`` to a learning curve, a
forward-progress channel, total energy, and an optional dynamic-stability
flag. It must be deterministic in its inputs and safe to call from several
threads on distinct inputs.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

from . import geometry
from .constants import ITERATION_BUDGET
from .metrics import LearningCurve
from .morphology import Morphology


class EvaluationError(RuntimeError):
    """An evaluation could not produce a result (worker crash, timeout, ...)."""


@dataclass(frozen=True)
class Evaluation:
    curve: LearningCurve
    energy: float
    dynamically_stable: bool | None = None


@runtime_checkable
class FitnessEvaluator(Protocol):
    name: str

    def evaluate(self, morphology: Morphology, seed: int, env: str) -> Evaluation: ...


@dataclass(frozen=True)
class SurrogateFeatures:
    stability_margin: float  # metres, negative when the COM falls outside support
    coverage: float
    limb_count: int
    cost: float  # total gear per kg


@dataclass
class SurrogateParams:
    """Constants of the surrogate learner.

    asymptote = base[env] * sigmoid(a_s * margin + a_c * coverage - a_n * |n - n_opt| + bias)
    time constant = tau0 / (1 + b_s * max(margin, 0) + b_q / (cost / cost_ref))
    """

    base: dict = field(default_factory=lambda: {"FT": 3000.0, "VT": 1500.0, "MVT": 1500.0})
    a_stability: float = 20.0
    a_coverage: float = 4.0
    a_limbs: float = 0.3
    limb_optimum: int = 6
    bias: float = 0.0
    tau0: float = 2_000_000.0
    b_stability: float = 20.0
    b_cost: float = 1.0
    cost_ref: float = 100.0
    kappa: float = 1e-3
    asymptote_noise: float = 0.02  # fraction of base
    curve_noise: float = 0.01  # fraction of base
    samples: int = 64
    budget: int = ITERATION_BUDGET

    @classmethod
    def from_dict(cls, d: dict | None) -> SurrogateParams:
        d = dict(d or {})
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown surrogate parameter(s): {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


class SurrogateEvaluator:
    """Analytic stand-in for lifetime learning.

    Stable, space-filling bodies near the preferred limb count reach higher
    asymptotes; stable and cheap-to-actuate bodies learn faster. The curve
    is a saturating exponential sampled at ``samples`` evenly spaced
    iterations, with seeded noise on the asymptote and on each sample.
    """

    name = "surrogate"

    def __init__(self, params: SurrogateParams | dict | None = None):
        if not isinstance(params, SurrogateParams):
            params = SurrogateParams.from_dict(params)
        self.params = params

    def features(self, m: Morphology) -> SurrogateFeatures:
        poses = geometry.limb_poses(m)
        stab = geometry.passive_stability(m, poses)
        desc = geometry.descriptors(m, poses)
        gears = sum(sum(limb.joint.gears) for limb in m.limbs)
        return SurrogateFeatures(stab.margin, desc["coverage"], len(m), gears / desc["mass"])

    def asymptote(self, f: SurrogateFeatures, env: str) -> float:
        p = self.params
        x = (
            p.a_stability * f.stability_margin
            + p.a_coverage * f.coverage
            - p.a_limbs * abs(f.limb_count - p.limb_optimum)
            + p.bias
        )
        return p.base[env] * _sigmoid(x)

    def time_constant(self, f: SurrogateFeatures) -> float:
        p = self.params
        relative_cost = max(f.cost / p.cost_ref, 1e-9)
        return p.tau0 / (1.0 + p.b_stability * max(f.stability_margin, 0.0) + p.b_cost / relative_cost)

    def evaluate(self, morphology: Morphology, seed: int, env: str) -> Evaluation:
        p = self.params
        f = self.features(morphology)
        rng = np.random.default_rng(seed)
        base = p.base[env]
        target = self.asymptote(f, env) + base * p.asymptote_noise * rng.standard_normal()
        tau = self.time_constant(f)
        t = p.budget * (np.arange(p.samples) + 1) / p.samples
        its = np.rint(t).astype(np.int64)
        clean = target * (1.0 - np.exp(-its / tau))
        noisy = clean + base * p.curve_noise * rng.standard_normal(p.samples)
        curve = LearningCurve(
            tuple(int(i) for i in its),
            tuple(float(r) for r in noisy),
            int(p.budget),
            tuple(float(r) for r in clean),
        )
        energy = p.kappa * f.cost * p.budget
        return Evaluation(curve, float(energy), f.stability_margin > 0.0)


class FlakyEvaluator:
    """Wraps an evaluator and fails a seeded fraction of calls (fault injection)."""

    def __init__(self, inner: FitnessEvaluator, failure_rate: float = 0.1):
        self.inner = inner
        self.failure_rate = failure_rate
        self.name = f"flaky-{inner.name}"

    def evaluate(self, morphology: Morphology, seed: int, env: str) -> Evaluation:
        if np.random.default_rng([seed, 0xF1A]).random() < self.failure_rate:
            raise EvaluationError(f"injected failure for seed {seed}")
        return self.inner.evaluate(morphology, seed, env)


EVALUATORS = {"surrogate": SurrogateEvaluator}


def make_evaluator(name: str, params: dict | None = None) -> FitnessEvaluator:
    if name.startswith("flaky-"):
        params = dict(params or {})
        rate = params.pop("failure_rate", 0.1)
        return FlakyEvaluator(make_evaluator(name[len("flaky-"):], params), rate)
    try:
        cls = EVALUATORS[name]
    except KeyError:
        raise ValueError(f"unknown evaluator {name!r}; known: {sorted(EVALUATORS)}") from None
    return cls(params)
