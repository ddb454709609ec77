"""
Late fusion of per-stream word distributions and the (alpha, beta) grid sweep
"""
import logging
import math
import shlex
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from src.core.config import settings
from src.core.exceptions import ConfigurationError, DomainError, InputError
from src.schemas.reports import SweepCell, SweepDocument

logger = logging.getLogger(__name__)

DISTRIBUTION_TOLERANCE = 1e-9
WEIGHT_TOLERANCE = 1e-12
GRID_DECIMALS = 12

# CIDEr of the fused captioner over the 0.1 lattice, keyed by (alpha, beta)
REFERENCE_SCORES: Dict[tuple, float] = {}
_REFERENCE_ROWS = {
    0.1: [104.8, 104.9, 105.9, 106.0, 106.2, 105.7, 105.6, 105.3],
    0.2: [105.1, 105.7, 106.3, 106.4, 106.4, 106.0, 106.1],
    0.3: [105.9, 105.6, 107.02, 106.8, 106.5, 106.2],
    0.4: [106.1, 106.9, 107.0, 106.9, 106.7],
    0.5: [105.9, 106.8, 106.9, 106.7],
    0.6: [105.6, 106.8, 106.5],
    0.7: [106.0, 106.1],
    0.8: [105.8],
}
for _alpha, _row in _REFERENCE_ROWS.items():
    for _b, _score in enumerate(_row, start=1):
        REFERENCE_SCORES[(_alpha, round(0.1 * _b, 1))] = _score


@dataclass(frozen=True)
class WordDistribution:
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise InputError(f"word distribution must be a non-empty vector, got shape {probs.shape}")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise InputError("word distribution has negative or non-finite entries")
        if abs(probs.sum() - 1.0) > DISTRIBUTION_TOLERANCE:
            raise InputError(f"word distribution sums to {probs.sum():.12g}, not 1")
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class FusionWeights:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise DomainError("fusion weights must be finite")
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta >= 1:
            raise DomainError(
                f"fusion weights need alpha, beta >= 0 and alpha + beta < 1, got {self.alpha}, {self.beta}"
            )

    @property
    def implicit_weight(self) -> float:
        return 1.0 - self.alpha - self.beta

    @classmethod
    def default(cls) -> "FusionWeights":
        return cls(settings.FUSION_ALPHA, settings.FUSION_BETA)


def _as_distribution(value) -> WordDistribution:
    return value if isinstance(value, WordDistribution) else WordDistribution(value)


def fuse_streams(distributions: Sequence, weights: Sequence[float]) -> WordDistribution:
    """Convex combination of stream distributions.

    The last stream is the anchor: out = p_last + sum_k w_k (p_k - p_last),
    so identical inputs come back unchanged.
    """
    dists = [_as_distribution(p) for p in distributions]
    weights = [float(w) for w in weights]
    if not dists or len(dists) != len(weights):
        raise DomainError(f"{len(dists)} distributions for {len(weights)} weights")
    if any(d.size != dists[0].size for d in dists):
        raise DomainError(f"distribution sizes differ: {[d.size for d in dists]}")
    if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > WEIGHT_TOLERANCE:
        raise DomainError(f"stream weights must be non-negative and sum to 1, got {weights}")

    anchor = dists[-1].probs
    out = anchor.copy()
    for dist, w in zip(dists[:-1], weights[:-1]):
        out = out + w * (dist.probs - anchor)
    return WordDistribution(np.maximum(out, 0.0))


def fuse(p_spa, p_sem, p_imp, weights: Optional[FusionWeights] = None) -> WordDistribution:
    """alpha p_spa + beta p_sem + (1 - alpha - beta) p_imp"""
    weights = weights or FusionWeights.default()
    return fuse_streams([p_spa, p_sem, p_imp], [weights.alpha, weights.beta, weights.implicit_weight])


Scorer = Callable[[FusionWeights], float]


def constant_scorer(weights: FusionWeights) -> float:
    return 1.0


def peaked_scorer(weights: FusionWeights) -> float:
    return -((weights.alpha - 0.3) ** 2 + (weights.beta - 0.3) ** 2)


def reference_scorer(weights: FusionWeights) -> float:
    key = (round(weights.alpha, 1), round(weights.beta, 1))
    if abs(key[0] - weights.alpha) > 1e-9 or abs(key[1] - weights.beta) > 1e-9 or key not in REFERENCE_SCORES:
        raise DomainError(f"no reference score at alpha={weights.alpha}, beta={weights.beta}")
    return REFERENCE_SCORES[key]


BUILTIN_SCORERS: Dict[str, Scorer] = {
    "constant": constant_scorer,
    "peaked": peaked_scorer,
    "reference": reference_scorer,
}


def command_scorer(command: str, timeout: Optional[float] = None) -> Scorer:
    """Scorer backed by an external program: `command alpha beta` prints one float"""
    argv = shlex.split(command)
    if not argv:
        raise DomainError("empty scorer command")

    def score(weights: FusionWeights) -> float:
        result = subprocess.run(
            argv + [repr(weights.alpha), repr(weights.beta)],
            capture_output=True,
            text=True,
            timeout=timeout,
        )
        if result.returncode != 0:
            raise RuntimeError(f"scorer exited with {result.returncode}: {result.stderr.strip()}")
        return float(result.stdout.strip())

    return score


def grid_extent(step: float) -> int:
    """Largest index M with at least one valid cell in row M"""
    if not 0 < step < 1:
        raise DomainError(f"sweep step must lie in (0, 1), got {step}")
    m = 0
    while (m + 2) * step < 1 - WEIGHT_TOLERANCE:
        m += 1
    return m


def _evaluate(scorer: Scorer, alpha: float, beta: float) -> SweepCell:
    try:
        score = float(scorer(FusionWeights(alpha, beta)))
    except Exception as e:
        logger.warning(f"Scorer failed at alpha={alpha}, beta={beta}: {e}")
        return SweepCell(alpha=alpha, beta=beta, valid=True, error=str(e) or type(e).__name__)
    if not math.isfinite(score):
        return SweepCell(alpha=alpha, beta=beta, valid=True, error="non-finite score")
    return SweepCell(alpha=alpha, beta=beta, valid=True, score=score)


def sweep(
    scorer: Scorer,
    step: Optional[float] = None,
    workers: Optional[int] = None,
    scorer_name: str = "custom",
) -> SweepDocument:
    """Score every valid (alpha, beta) cell of the grid; cells ordered by (alpha, beta)"""
    step = settings.SWEEP_STEP if step is None else step
    workers = settings.SWEEP_WORKERS if workers is None else workers
    if workers < 1:
        raise ConfigurationError(f"sweep needs at least one worker, got {workers}")
    m = grid_extent(step)
    values = [round(a * step, GRID_DECIMALS) for a in range(1, m + 1)]

    positions = []
    for a in range(1, m + 1):
        for b in range(1, m + 1):
            positions.append((a, b, (a + b) * step < 1 - WEIGHT_TOLERANCE))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            (a, b): pool.submit(_evaluate, scorer, values[a - 1], values[b - 1])
            for a, b, valid in positions
            if valid
        }
        cells: List[SweepCell] = []
        for a, b, valid in positions:
            if valid:
                cells.append(futures[(a, b)].result())
            else:
                cells.append(SweepCell(alpha=values[a - 1], beta=values[b - 1], valid=False))

    scored = [cell for cell in cells if cell.score is not None]
    best = max(scored, key=lambda cell: cell.score) if scored else None
    logger.info(f"Swept {len(futures)} valid cells at step {step} with scorer '{scorer_name}'")
    return SweepDocument(step=step, scorer=scorer_name, alphas=values, betas=values, cells=cells, best=best)


def render_table(document: SweepDocument) -> str:
    """Rows alpha, columns beta; '-' for invalid cells, 'ERR' for failed scorer calls"""
    lookup = {(cell.alpha, cell.beta): cell for cell in document.cells}
    header = ["a\\b"] + [f"{b:g}" for b in document.betas]
    rows = [header]
    for alpha in document.alphas:
        row = [f"{alpha:g}"]
        for beta in document.betas:
            cell = lookup[(alpha, beta)]
            if not cell.valid:
                row.append("-")
            elif cell.score is None:
                row.append("ERR")
            else:
                row.append(f"{cell.score:.4g}")
        rows.append(row)
    width = max(len(text) for row in rows for text in row)
    lines = ["  ".join(text.rjust(width) for text in row) for row in rows]
    if document.best is not None:
        lines.append(f"best: alpha={document.best.alpha:g} beta={document.best.beta:g} score={document.best.score:g}")
    return "\n".join(lines) + "\n"
