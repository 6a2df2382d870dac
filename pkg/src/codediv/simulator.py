"""Synthetic policy-gradient simulator for group-sampling objectives.

A prompt is modeled as a finite set of implementation templates with fixed
correctness and a fixed template-to-template similarity matrix; the policy
is a categorical distribution over templates (softmax of logits). Each
training step samples a group of templates, scores it with the rewards
module, and applies the exact score-function gradient of the categorical
log-likelihood. That strips away everything about real RLVR except credit
assignment, which is the mechanism under study: correctness-only credit
concentrates the policy on one template family and drains group diversity,
a combined correctness+diversity objective keeps several correct families
alive, and diversity alone walks away from correctness.

Traces record, per step: analytic pass@1, Monte-Carlo pass@k estimates
(the finite-budget estimator applied to sampled evaluation groups, matching
how a real evaluation pipeline measures it), Monte-Carlo expected group
diversity, the analytic policy entropy, and the logits.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import rewards
from .metrics import pass_at_k
from .similarity import SimMatrix

SIM_OBJECTIVES = ("base", "passk_loo", "pkpo", "combined", "diversity_only", "entropy")

# Defaults validated against the directional acceptance run (20 seeds):
# see tests/test_acceptance.py.
DEFAULT_LAMBDA_DIV = 2.0
DEFAULT_STEPS = 400
DEFAULT_LR = 0.15
DEFAULT_GROUP_SIZE = 8


@dataclass(frozen=True)
class TemplateWorld:
    """Fixed implementation templates standing in for a prompt's solutions."""

    correct: np.ndarray  # (T,) bool
    similarity: np.ndarray  # (T, T) in [0, 1], symmetric, unit diagonal

    def __post_init__(self):
        correct = np.asarray(self.correct, dtype=bool)
        sim = np.asarray(self.similarity, dtype=np.float64)
        object.__setattr__(self, "correct", correct)
        object.__setattr__(self, "similarity", sim)
        t = len(correct)
        if sim.shape != (t, t):
            raise ValueError("similarity must be (T, T) for T templates")
        if not np.allclose(sim, sim.T):
            raise ValueError("similarity must be symmetric")
        if not np.allclose(np.diag(sim), 1.0):
            raise ValueError("similarity must have a unit diagonal")
        if sim.min() < 0.0 or sim.max() > 1.0:
            raise ValueError("similarity values must lie in [0, 1]")
        if correct.all() or not correct.any():
            raise ValueError("world needs at least one correct and one incorrect template")

    @property
    def n_templates(self) -> int:
        return len(self.correct)


def family_world(families=6, per_family=2, correct_families=3, within=0.9, cross=0.1) -> TemplateWorld:
    """Templates partitioned into families: near-duplicates within a family,
    mostly dissimilar across families, correctness assigned per family."""
    if not 0 < correct_families < families:
        raise ValueError("correct_families must leave at least one incorrect family")
    t = families * per_family
    family = np.repeat(np.arange(families), per_family)
    sim = np.where(family[:, None] == family[None, :], within, cross)
    np.fill_diagonal(sim, 1.0)
    correct = family < correct_families
    return TemplateWorld(correct=correct, similarity=sim)


def default_world() -> TemplateWorld:
    return family_world()


@dataclass(frozen=True)
class CategoricalPolicy:
    logits: np.ndarray
    temperature: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "logits", np.asarray(self.logits, dtype=np.float64))
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    def probs(self) -> np.ndarray:
        z = self.logits / self.temperature
        z = z - z.max()
        e = np.exp(z)
        return e / e.sum()

    def entropy(self) -> float:
        p = self.probs()
        nz = p[p > 0]
        return float(-(nz * np.log(nz)).sum())


def initial_policy(world: TemplateWorld, correct_bonus=1.0, temperature=1.0) -> CategoricalPolicy:
    """Pretrained-model stand-in: correct templates start with a logit bonus,
    so the initial policy already prefers (but is not locked to) correct code."""
    logits = np.where(world.correct, correct_bonus, 0.0)
    return CategoricalPolicy(logits=logits, temperature=temperature)


@dataclass(frozen=True)
class StepParams:
    group_size: int = DEFAULT_GROUP_SIZE
    lr: float = DEFAULT_LR
    k: int | None = None  # pkpo subset size; defaults to the group size
    lambda_div: float = DEFAULT_LAMBDA_DIV
    entropy_beta: float = 0.05

    def __post_init__(self):
        # Diversity-based objectives need group_size >= 3; that constraint
        # lives in the rewards module and propagates from there.
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")


def sample_group(policy: CategoricalPolicy, world: TemplateWorld, n: int, rng):
    """Draw n i.i.d. templates; read correctness and similarity off the world."""
    probs = policy.probs()
    draws = rng.choice(world.n_templates, size=n, p=probs)
    outcome = rewards.GroupOutcome.from_flags(world.correct[draws])
    matrix = SimMatrix(world.similarity[np.ix_(draws, draws)])
    return draws, outcome, matrix


def _entropy_gradient(probs: np.ndarray, temperature: float) -> np.ndarray:
    log_p = np.log(np.clip(probs, 1e-300, None))
    entropy = float(-(probs * log_p).sum())
    return -probs * (log_p + entropy) / temperature


def _policy_gradient(probs: np.ndarray, draws, advantages, temperature: float) -> np.ndarray:
    """sum_i A_i * grad_theta log pi(t_i) for a categorical softmax policy.

    The per-draw score function is (onehot(t_i) - pi)/temperature, so the
    result is linear in the advantages."""
    grad = np.zeros_like(probs)
    np.add.at(grad, draws, advantages)
    grad -= float(np.sum(advantages)) * probs
    return grad / temperature


def step(policy: CategoricalPolicy, world: TemplateWorld, objective: str, params: StepParams, rng) -> CategoricalPolicy:
    """One policy-gradient update from one sampled group.

    theta <- theta + lr * sum_i A_i * grad log pi(t_i). The entropy
    objective adds beta times the analytic entropy gradient to the same
    update.
    """
    if objective not in SIM_OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    draws, outcome, matrix = sample_group(policy, world, params.group_size, rng)
    vec = rewards.advantages(
        objective,
        outcome=outcome,
        matrix=matrix,
        k=params.k if params.k is not None else params.group_size,
        lambda_div=params.lambda_div,
    )
    probs = policy.probs()
    grad = _policy_gradient(probs, draws, vec.a, policy.temperature)
    if objective == "entropy":
        grad += params.entropy_beta * _entropy_gradient(probs, policy.temperature)
    return CategoricalPolicy(logits=policy.logits + params.lr * grad, temperature=policy.temperature)


@dataclass(frozen=True)
class EvalSettings:
    groups: int = 1000  # Monte-Carlo groups per evaluation
    n: int = 50  # samples per evaluation group (the estimator's n)
    k_list: tuple = (1, 10)

    def __post_init__(self):
        if self.groups < 1000:
            raise ValueError("evaluation needs >= 1000 Monte-Carlo groups")


@dataclass(frozen=True)
class TraceStep:
    step: int
    pass_at: dict  # k -> estimate
    jdiv: float
    entropy: float
    logits: tuple


@dataclass
class TrainingTrace:
    objective: str
    seed: int
    records: list = field(default_factory=list)

    def final(self) -> TraceStep:
        return self.records[-1]

    def initial(self) -> TraceStep:
        return self.records[0]

    def to_jsonl_lines(self):
        for r in self.records:
            yield json.dumps(
                {
                    "step": r.step,
                    "pass_at": {str(k): v for k, v in sorted(r.pass_at.items())},
                    "jdiv": r.jdiv,
                    "entropy": r.entropy,
                    "logits": list(r.logits),
                },
                sort_keys=True,
            )


def _evaluate(policy: CategoricalPolicy, world: TemplateWorld, group_size: int, eval_cfg: EvalSettings, rng) -> dict:
    probs = policy.probs()
    pass_values = {}
    m_per_group = None
    eval_n = max(eval_cfg.n, max(eval_cfg.k_list))
    for k in sorted(eval_cfg.k_list):
        if k == 1:
            pass_values[1] = float(probs[world.correct].sum())  # analytic
            continue
        if m_per_group is None:
            draws = rng.choice(world.n_templates, size=(eval_cfg.groups, eval_n), p=probs)
            m_per_group = world.correct[draws].sum(axis=1)
        table = np.array([pass_at_k(eval_n, m, k).value for m in range(eval_n + 1)])
        pass_values[k] = float(table[m_per_group].mean())
    # Expected group diversity over freshly sampled training-size groups.
    jdraws = rng.choice(world.n_templates, size=(eval_cfg.groups, group_size), p=probs)
    sims = world.similarity[jdraws[:, :, None], jdraws[:, None, :]]
    iu = np.triu_indices(group_size, k=1)
    jdiv_value = float((1.0 - sims[:, iu[0], iu[1]].mean(axis=1)).mean())
    return {
        "pass_at": pass_values,
        "jdiv": jdiv_value,
        "entropy": policy.entropy(),
    }


def run(
    world: TemplateWorld,
    objective: str,
    *,
    steps: int = DEFAULT_STEPS,
    seed: int = 0,
    params: StepParams | None = None,
    init_correct_bonus: float = 1.0,
    temperature: float = 1.0,
    eval_settings: EvalSettings | None = None,
) -> TrainingTrace:
    """Train one policy and trace metrics at step 0 and after every update.

    Deterministic for a fixed seed. The training and evaluation streams are
    split so every objective sees identical draws under the same seed.
    """
    if objective not in SIM_OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    params = params or StepParams()
    if params.group_size < 2:
        raise ValueError("run needs group_size >= 2 to trace group diversity")
    eval_cfg = eval_settings or EvalSettings()
    train_ss, eval_ss = np.random.SeedSequence(seed).spawn(2)
    train_rng = np.random.default_rng(train_ss)

    policy = initial_policy(world, correct_bonus=init_correct_bonus, temperature=temperature)
    trace = TrainingTrace(objective=objective, seed=seed)

    def record(step_idx, pol):
        # Every evaluation replays the same draw stream, so estimates are a
        # pure function of the policy: an lr=0 run traces constant records
        # and paired objectives share evaluation noise.
        metrics = _evaluate(pol, world, params.group_size, eval_cfg, np.random.default_rng(eval_ss))
        trace.records.append(
            TraceStep(
                step=step_idx,
                pass_at=metrics["pass_at"],
                jdiv=metrics["jdiv"],
                entropy=metrics["entropy"],
                logits=tuple(float(x) for x in pol.logits),
            )
        )

    record(0, policy)
    for t in range(1, steps + 1):
        policy = step(policy, world, objective, params, train_rng)
        record(t, policy)
    return trace


@dataclass
class SimulationConfig:
    """Declarative multi-run simulation: a world, objectives, seeds."""

    world: TemplateWorld
    objectives: list  # of (name, StepParams)
    seeds: list
    steps: int
    init_correct_bonus: float
    temperature: float
    eval_settings: EvalSettings

    @classmethod
    def from_dict(cls, raw: dict) -> "SimulationConfig":
        def fail(name, why):
            raise ValueError(f"invalid config field {name!r}: {why}")

        world_raw = raw.get("world", "default")
        if world_raw == "default":
            world = default_world()
        elif isinstance(world_raw, dict) and "similarity" in world_raw:
            try:
                world = TemplateWorld(
                    correct=world_raw["correct"], similarity=world_raw["similarity"]
                )
            except (KeyError, ValueError) as err:
                fail("world", err)
        elif isinstance(world_raw, dict):
            try:
                world = family_world(**world_raw)
            except (TypeError, ValueError) as err:
                fail("world", err)
        else:
            fail("world", "expected 'default' or an object")

        objectives = []
        raw_objectives = raw.get("objectives")
        if not isinstance(raw_objectives, list) or not raw_objectives:
            fail("objectives", "expected a non-empty list")
        base_params = {
            "group_size": raw.get("group_size", DEFAULT_GROUP_SIZE),
            "lr": raw.get("lr", DEFAULT_LR),
            "k": raw.get("k"),
            "lambda_div": raw.get("lambda_div", DEFAULT_LAMBDA_DIV),
            "entropy_beta": raw.get("entropy_beta", 0.05),
        }
        for entry in raw_objectives:
            if isinstance(entry, str):
                entry = {"name": entry}
            if not isinstance(entry, dict) or "name" not in entry:
                fail("objectives", "each entry needs a 'name'")
            name = entry["name"]
            if name not in SIM_OBJECTIVES:
                fail("objectives", f"unknown objective {name!r}")
            merged = dict(base_params)
            for key in ("group_size", "lr", "k", "lambda_div", "entropy_beta"):
                if key in entry:
                    merged[key] = entry[key]
            try:
                objectives.append((name, StepParams(**merged)))
            except (TypeError, ValueError) as err:
                fail("objectives", err)

        seeds = raw.get("seeds", [0])
        if not isinstance(seeds, list) or not all(isinstance(s, int) for s in seeds):
            fail("seeds", "expected a list of integers")
        steps = raw.get("steps", DEFAULT_STEPS)
        if not isinstance(steps, int) or steps < 0:
            fail("steps", "expected a non-negative integer")

        eval_raw = raw.get("eval", {})
        if not isinstance(eval_raw, dict):
            fail("eval", "expected an object")
        try:
            eval_settings = EvalSettings(
                groups=eval_raw.get("groups", 1000),
                n=eval_raw.get("n", 50),
                k_list=tuple(eval_raw.get("k_list", (1, 10))),
            )
        except (TypeError, ValueError) as err:
            fail("eval", err)

        return cls(
            world=world,
            objectives=objectives,
            seeds=seeds,
            steps=steps,
            init_correct_bonus=raw.get("init_correct_bonus", 1.0),
            temperature=raw.get("temperature", 1.0),
            eval_settings=eval_settings,
        )

    def runs(self):
        """All (objective_name, params, seed) cells in deterministic order."""
        for name, params in self.objectives:
            for seed in self.seeds:
                yield name, params, seed
