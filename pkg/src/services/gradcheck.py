"""
Seeded verification harness: finite-difference gradient checks and
oracle equivalence of the vectorized GAT passes.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.config import settings
from src.core.exceptions import ConfigurationError
from src.schemas.reports import GradcheckDocument, OracleCase, OracleDocument
from src.services.geometry import DetectedObject, image_diagonal, pairwise_geometry_features, sinusoidal_embed
from src.services.graph import GraphVariant, RelationGraph, build_implicit, build_semantic, build_spatial
from src.services.implicit_gat import ImplicitGatParams, implicit_backward, implicit_forward
from src.services.numerics import finite_diff_check
from src.services.oracle import implicit_reference, typed_reference
from src.services.param_store import init_implicit, init_typed
from src.services.typed_gat import TypedGatParams, typed_backward, typed_forward

logger = logging.getLogger(__name__)

IMAGE_SIZE = 100.0
KINK_NUDGE = 1e-3
KINK_ATTEMPTS = 100
SEMANTIC_EDGE_RATE = 0.4
ORACLE_TOLERANCE = 1e-12
FEATURE_SCALE = 0.5


@dataclass(frozen=True)
class Instance:
    graph_kind: str
    X: np.ndarray
    objects: Tuple[DetectedObject, ...]
    graph: RelationGraph
    params: object
    upstream: np.ndarray


def random_objects(rng: np.random.Generator, n: int) -> Tuple[DetectedObject, ...]:
    centers = rng.uniform(0.0, IMAGE_SIZE, size=(n, 2))
    sizes = rng.uniform(5.0, 40.0, size=(n, 2))
    return tuple(DetectedObject(cx, cy, w, h) for (cx, cy), (w, h) in zip(centers, sizes))


def random_semantic_predictions(rng: np.random.Generator, n: int) -> List[Tuple[int, int, np.ndarray]]:
    classes = settings.SEMANTIC_CLASSES
    predictions = []
    for i in range(n):
        for j in range(n):
            if i == j or rng.uniform() >= SEMANTIC_EDGE_RATE:
                continue
            probs = 0.05 * rng.dirichlet(np.ones(classes))
            probs[rng.integers(1, classes)] += 0.95
            predictions.append((i, j, probs))
    return predictions


def _min_gate_margin(objects, g: RelationGraph, p: ImplicitGatParams) -> float:
    embedded = sinusoidal_embed(pairwise_geometry_features(objects), p.d_g)
    logits = embedded @ p.W_bG[0]
    return float(np.abs(logits[g.adjacency()]).min()) if g.n > 1 else np.inf


def _away_from_kinks(rng, objects, g: RelationGraph, p: ImplicitGatParams, margin: float) -> ImplicitGatParams:
    for _ in range(KINK_ATTEMPTS):
        if _min_gate_margin(objects, g, p) >= margin:
            return p
        logger.warning(f"Gate logit within {margin} of the ReLU kink, perturbing W_bG")
        nudge = rng.uniform(-KINK_NUDGE, KINK_NUDGE, p.W_bG.shape)
        p = ImplicitGatParams(W=p.W, W_K=p.W_K, W_Q=p.W_Q, W_bG=p.W_bG + nudge)
    raise ConfigurationError("could not move gate logits away from the ReLU kink")


def _randomize_offsets(rng: np.random.Generator, p: TypedGatParams) -> TypedGatParams:
    return TypedGatParams(
        W_dir=p.W_dir,
        Wv_dir=p.Wv_dir,
        W_K=p.W_K,
        b_lab={label: rng.normal(0.0, 0.1, value.shape) for label, value in p.b_lab.items()},
        c_lab={label: float(rng.normal(0.0, 0.1)) for label in p.c_lab},
    )


def make_instance(
    graph_kind: str,
    seed: int,
    n: int,
    d: int,
    d_g: int,
    kink_margin: Optional[float] = None,
) -> Instance:
    """Random boxes, features, parameters and upstream gradient for one graph kind"""
    if kink_margin is None:
        kink_margin = settings.GRADCHECK_KINK_MARGIN
    rng = np.random.default_rng(seed)
    objects = random_objects(rng, n)
    X = FEATURE_SCALE * rng.normal(size=(n, d))

    if graph_kind == "imp":
        graph = build_implicit(n)
        params = _away_from_kinks(rng, objects, graph, init_implicit(rng, d, d_g), kink_margin)
    elif graph_kind == "spa":
        graph = build_spatial(objects, image_diagonal(IMAGE_SIZE, IMAGE_SIZE))
        params = _randomize_offsets(rng, init_typed(rng, d, GraphVariant.SPATIAL))
    elif graph_kind == "sem":
        graph = build_semantic(n, random_semantic_predictions(rng, n))
        params = _randomize_offsets(rng, init_typed(rng, d, GraphVariant.SEMANTIC))
    else:
        raise ConfigurationError(f"unknown graph kind '{graph_kind}'")

    upstream = rng.normal(size=(n, d))
    return Instance(graph_kind, X, objects, graph, params, upstream)


def _loss_and_gradients(instance: Instance, direction_mode: Optional[str]):
    """Loss L = sum(v* * R) as a function of a parameter mapping, plus its analytic gradients"""
    R = instance.upstream
    if instance.graph_kind == "imp":
        def loss(arrays: Dict[str, np.ndarray]) -> float:
            p = ImplicitGatParams.from_arrays(arrays)
            v_star, _ = implicit_forward(arrays["V"], instance.objects, instance.graph, p)
            return float((v_star.features * R).sum())

        analytic = implicit_backward(instance.X, instance.objects, instance.graph, instance.params, R)
    else:
        def loss(arrays: Dict[str, np.ndarray]) -> float:
            p = TypedGatParams.from_arrays(arrays)
            v_star, _ = typed_forward(arrays["V"], instance.graph, p, direction_mode=direction_mode)
            return float((v_star.features * R).sum())

        analytic = typed_backward(instance.X, instance.graph, instance.params, R, direction_mode=direction_mode)

    arrays = dict(instance.params.to_arrays())
    arrays["V"] = instance.X
    return loss, arrays, analytic


def run_gradcheck(
    graph_kind: str,
    seed: Optional[int] = None,
    n: int = 5,
    d: int = 16,
    d_g: int = 16,
    step: Optional[float] = None,
    tolerance: Optional[float] = None,
    inject_fault: bool = False,
    direction_mode: Optional[str] = None,
) -> GradcheckDocument:
    seed = settings.SEED if seed is None else seed
    step = settings.GRADCHECK_STEP if step is None else step
    tolerance = settings.GRADCHECK_TOLERANCE if tolerance is None else tolerance

    instance = make_instance(graph_kind, seed, n, d, d_g)
    loss, arrays, analytic = _loss_and_gradients(instance, direction_mode)
    if inject_fault:
        logger.warning("Fault injection: analytic gradients doubled")
        analytic = {name: 2.0 * grad for name, grad in analytic.items()}

    reports = finite_diff_check(loss, arrays, analytic, step=step)
    passed = all(r.valid and r.max_relative_error < tolerance for r in reports)
    logger.info(f"Gradient check on {graph_kind} graph (seed {seed}): {'passed' if passed else 'FAILED'}")
    return GradcheckDocument(
        graph=graph_kind,
        seed=seed,
        n=n,
        d=d,
        d_g=d_g,
        step=step,
        tolerance=tolerance,
        fault_injected=inject_fault,
        passed=passed,
        reports=reports,
    )


def oracle_case(
    graph_kind: str, seed: int, n: int, d: int, d_g: int = 16, direction_mode: Optional[str] = None
) -> OracleCase:
    instance = make_instance(graph_kind, seed, n, d, d_g)
    if graph_kind == "imp":
        fast, attention = implicit_forward(instance.X, instance.objects, instance.graph, instance.params)
        slow, weights = implicit_reference(instance.X, instance.objects, instance.graph, instance.params)
    else:
        fast, attention = typed_forward(instance.X, instance.graph, instance.params, direction_mode=direction_mode)
        slow, weights = typed_reference(instance.X, instance.graph, instance.params, direction_mode=direction_mode)
    error = max(
        float(np.abs(fast.features - slow).max(initial=0.0)),
        float(np.abs(attention.weights - weights).max(initial=0.0)),
    )
    return OracleCase(graph=graph_kind, seed=seed, n=n, d=d, max_abs_error=error)


def run_oracle_suite(
    instances: int = 100,
    seed: Optional[int] = None,
    max_n: int = 10,
    max_d: int = 16,
    tolerance: float = ORACLE_TOLERANCE,
    kinds: Optional[List[str]] = None,
) -> OracleDocument:
    """Seeded random instances per graph kind, sizes drawn from 1..max_n and 1..max_d"""
    seed = settings.SEED if seed is None else seed
    kinds = kinds or list(settings.GRAPH_KINDS)
    sizes = np.random.default_rng(seed)
    cases = []
    for k in range(instances):
        n = int(sizes.integers(1, max_n + 1))
        d = int(sizes.integers(1, max_d + 1))
        for kind in kinds:
            cases.append(oracle_case(kind, seed + k, n, d))
    passed = all(case.max_abs_error <= tolerance for case in cases)
    logger.info(f"Oracle equivalence over {len(cases)} cases: {'passed' if passed else 'FAILED'}")
    return OracleDocument(tolerance=tolerance, passed=passed, cases=cases)
