"""Active-set minimization: prune reference objects whose relations carry
redundant or spurious information.

A root reference transplants the placed object's relative observation from
every training scene into every other; references whose densities collapse
on cross-scene transplants (relative to the self-transplant) are the
informative ones, and a stochastic greedy assembly collects a small set
that covers most rejections at low mean entropy.

Differential entropies of tight relations are negative at tabletop scale,
which breaks the raw formulas (sampling weights, the admission score, and
the final objective all assume positive values). All entropy terms are
therefore mapped through the per-dimension entropy power exp(H/k), a
strictly increasing positive transform; a set's mean entropy becomes the
geometric mean of its members' powers, which is exp of the mean
per-dimension entropy and preserves the paper's orderings in every regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientScenes, MissingObject
from .pairwise import entropy
from .placement import PlacementModel, forward_log_density_at
from .scene import SceneState
from .se3 import Pose, compose, invert

_SAMPLING_SHIFT = 1.0


@dataclass(frozen=True)
class MinimizationParams:
    """Knobs of the assembly procedure.

    ``alpha`` is the rejection threshold on density ratios;
    ``pool_driver`` scales the entropy-weighted prefilter pool (3x its
    value, defaulting to the number of training scenes); ``restarts``
    controls how many independent assemblies compete.
    """

    alpha: float = 0.1
    pool_driver: int | None = None
    restarts: int = 16
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError("alpha must be in [0, 1)")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class AugmentedSample:
    """One transplanted observation with every reference's forward density."""

    source_scene: int
    target_scene: int
    root: str
    transplanted_pose: Pose
    log_densities: dict[str, float] = field(repr=False)

    @property
    def densities(self) -> dict[str, float]:
        return {ref: math.exp(v) if np.isfinite(v) else 0.0 for ref, v in self.log_densities.items()}


def augment_observations(
    train_scenes: list[SceneState], model: PlacementModel, root: str
) -> list[AugmentedSample]:
    """Transplant the placed object through the root relation across all
    ordered scene pairs (including self-pairs) and evaluate every
    reference's forward density at the transplanted pose."""
    if len(train_scenes) < 2:
        raise InsufficientScenes("augmentation needs at least 2 scenes")
    if root not in {r.reference for r in model.relations}:
        raise MissingObject(f"root {root!r} has no relation in the model")

    placed = model.placed_object
    rel_from_root = [
        compose(invert(s.get(root).pose), s.get(placed).pose) for s in train_scenes
    ]
    pairs = []
    transplanted = []
    for k, rel in enumerate(rel_from_root):
        for j, scene in enumerate(train_scenes):
            pairs.append((k, j))
            transplanted.append(compose(scene.get(root).pose, rel))
    quats = np.stack([p.quat for p in transplanted])
    trans = np.stack([p.trans for p in transplanted])

    # evaluate each reference on all transplants at once; maps and reference
    # poses vary per target scene, so group rows by j
    by_ref: dict[str, np.ndarray] = {}
    rows_of_j = {j: [i for i, (_, jj) in enumerate(pairs) if jj == j] for j in range(len(train_scenes))}
    for relation in model.relations:
        logd = np.empty(len(pairs))
        for j, scene in enumerate(train_scenes):
            rows = rows_of_j[j]
            ref_obj = scene.get(relation.reference)
            logd[rows] = forward_log_density_at(relation.forward, ref_obj, quats[rows], trans[rows])
        by_ref[relation.reference] = logd

    return [
        AugmentedSample(
            source_scene=k,
            target_scene=j,
            root=root,
            transplanted_pose=transplanted[i],
            log_densities={ref: float(by_ref[ref][i]) for ref in by_ref},
        )
        for i, (k, j) in enumerate(pairs)
    ]


def rejection_set(samples: list[AugmentedSample], reference: str, alpha: float) -> set[tuple[int, int]]:
    """Scene pairs whose transplanted density falls below alpha times the
    self-transplant density. The ratio test runs in log space."""
    if alpha <= 0.0:
        return set()
    log_alpha = math.log(alpha)
    self_log = {
        s.source_scene: s.log_densities[reference]
        for s in samples
        if s.source_scene == s.target_scene
    }
    rejected = set()
    for s in samples:
        if s.log_densities[reference] - self_log[s.source_scene] < log_alpha:
            rejected.add((s.source_scene, s.target_scene))
    return rejected


def _entropy_power(model: PlacementModel) -> dict[str, float]:
    out = {}
    for rel in model.relations:
        g = rel.forward.gaussian
        out[rel.reference] = math.exp(entropy(g) / g.dim)
    return out


def _sampling_weights(model: PlacementModel) -> dict[str, float]:
    """Root/prefilter weights increasing in entropy but only mildly skewed.

    Shifted per-dimension entropies keep loose relations preferred (they
    make productive transplant roots) without starving the tight ones:
    under an exponential transform informative roots would almost never be
    drawn and the final pick could only ever see junk-rooted assemblies.
    """
    h = {}
    for rel in model.relations:
        g = rel.forward.gaussian
        h[rel.reference] = entropy(g) / g.dim
    lo, hi = min(h.values()), max(h.values())
    spread = hi - lo
    if spread < 1e-12:
        return {ref: 1.0 for ref in h}
    return {ref: (v - lo) + _SAMPLING_SHIFT * spread for ref, v in h.items()}


@dataclass(frozen=True)
class AssemblyRestart:
    """Outcome of one stochastic assembly, for diagnostics and tests."""

    active_set: frozenset[str]
    objective: float
    mean_power: float
    covered: int


def _weighted_choice(rng: np.random.Generator, items: list[str], weights: dict[str, float]) -> str:
    w = np.array([weights[i] for i in items], dtype=float)
    return str(rng.choice(items, p=w / w.sum()))


def assemble_with_diagnostics(
    model: PlacementModel, train_scenes: list[SceneState], params: MinimizationParams
) -> tuple[PlacementModel, list[AssemblyRestart]]:
    """Run all restarts and return the minimized model plus per-restart data."""
    references = [r.reference for r in model.relations]
    if len(references) == 1:
        only = AssemblyRestart(frozenset(references), 0.0, 0.0, 0)
        return model.with_active_set(frozenset(references)), [only]

    n_scenes = len(train_scenes)
    if n_scenes < 2:
        raise InsufficientScenes("minimization needs at least 2 training scenes")
    k_hat = n_scenes * n_scenes - n_scenes
    power = _entropy_power(model)
    sampling = _sampling_weights(model)
    driver = params.pool_driver if params.pool_driver is not None else n_scenes
    pool_size = min(len(references), 3 * driver)

    restarts: list[AssemblyRestart] = []
    for r_idx in range(params.restarts):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=params.seed, spawn_key=(r_idx,)))
        if pool_size < len(references):
            w = np.array([sampling[ref] for ref in references])
            pool = [str(x) for x in rng.choice(references, size=pool_size, replace=False, p=w / w.sum())]
        else:
            pool = list(references)

        root = _weighted_choice(rng, pool, sampling)
        samples = augment_observations(train_scenes, model, root)
        rejections = {ref: rejection_set(samples, ref, params.alpha) for ref in pool}

        def geo_mean(members: list[str]) -> float:
            return float(np.exp(np.mean([math.log(power[o]) for o in members])))

        active = [root]
        covered = set(rejections[root])
        while True:
            candidates = [ref for ref in pool if ref not in active]
            gains = {ref: len(rejections[ref] - covered) for ref in candidates}
            total_gain = sum(gains.values())
            if not candidates or total_gain == 0:
                break
            pick = _weighted_choice(rng, candidates, {c: float(gains[c]) for c in candidates})
            mean_old = geo_mean(active)
            mean_new = geo_mean(active + [pick])
            denom = (k_hat - len(covered)) * (mean_old - mean_new)
            score = gains[pick] * mean_old / denom if denom > 0 else 0.0
            if score > rng.uniform():
                active.append(pick)
                covered |= rejections[pick]
            else:
                break

        mean_power = geo_mean(active)
        objective = (1.0 - len(covered) / k_hat) * mean_power
        restarts.append(AssemblyRestart(frozenset(active), objective, mean_power, len(covered)))

    # lowest objective wins; full-coverage assemblies all score 0, so the mean
    # entropy power breaks the tie, then the restart index
    best_idx = min(range(len(restarts)), key=lambda i: (restarts[i].objective, restarts[i].mean_power, i))
    return model.with_active_set(restarts[best_idx].active_set), restarts


def assemble_active_set(
    model: PlacementModel, train_scenes: list[SceneState], params: MinimizationParams
) -> PlacementModel:
    """Minimize the model's active reference set; relations are retained,
    only the active set shrinks. Deterministic given the seed."""
    minimized, _ = assemble_with_diagnostics(model, train_scenes, params)
    return minimized
