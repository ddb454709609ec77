"""
Dense matrix primitives, stable softmax and finite-difference gradient checks
"""
import logging
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from src.core.config import settings
from src.core.exceptions import DomainError, EmptySupportError, ShapeError
from src.schemas.reports import GradReport

logger = logging.getLogger(__name__)

Matrix = np.ndarray

RELATIVE_ERROR_FLOOR = 1e-8


def as_matrix(values, name: str = "matrix") -> Matrix:
    """Coerce to a 2-d float64 C-ordered array"""
    m = np.ascontiguousarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-dimensional, got shape {m.shape}")
    return m


def matmul(a: Matrix, b: Matrix) -> Matrix:
    a, b = as_matrix(a, "left operand"), as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError.mismatch("matmul", a.shape, b.shape)
    return a @ b


def stable_softmax(logits, mask=None) -> np.ndarray:
    """Softmax of a vector computed with max-subtraction.

    Masked-out entries (mask False) come back as exact zeros.
    """
    x = np.asarray(logits, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"stable_softmax expects a vector, got shape {x.shape}")
    if mask is None:
        keep = np.ones(x.shape, dtype=bool)
    else:
        keep = np.asarray(mask, dtype=bool)
        if keep.shape != x.shape:
            raise ShapeError.mismatch("stable_softmax mask", x.shape, keep.shape)
    if x.size == 0 or not keep.any():
        raise EmptySupportError("softmax support is empty")

    out = np.zeros_like(x)
    shifted = x[keep] - x[keep].max()
    e = np.exp(shifted)
    out[keep] = e / e.sum()
    return out


def softmax_rows(scores: Matrix, mask: Optional[np.ndarray] = None) -> Matrix:
    """Row-wise stable softmax; every row must keep at least one entry"""
    s = np.asarray(scores, dtype=np.float64)
    keep = np.ones(s.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not keep.any(axis=-1).all():
        raise EmptySupportError("softmax row with empty support")
    masked = np.where(keep, s, -np.inf)
    shifted = masked - masked.max(axis=-1, keepdims=True)
    e = np.where(keep, np.exp(shifted), 0.0)
    return e / e.sum(axis=-1, keepdims=True)


def layer_norm(x: Matrix, gain: np.ndarray, bias: np.ndarray, eps: Optional[float] = None) -> Matrix:
    if eps is None:
        eps = settings.LAYER_NORM_EPSILON
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + eps) * gain + bias


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    denominator = np.maximum(np.abs(analytic) + np.abs(numeric), RELATIVE_ERROR_FLOOR)
    return np.abs(analytic - numeric) / denominator


def finite_diff_check(
    f: Callable[[Dict[str, np.ndarray]], float],
    params: Mapping[str, np.ndarray],
    analytic_grads: Mapping[str, np.ndarray],
    step: Optional[float] = None,
) -> List[GradReport]:
    """Compare analytic gradients against central differences.

    ``f`` receives a full parameter mapping and returns a scalar. Each entry of
    each parameter is perturbed by +/- step in turn while the others hold.
    """
    if step is None:
        step = settings.GRADCHECK_STEP
    if step <= 0:
        raise DomainError(f"finite difference step must be positive, got {step}")

    working = {name: np.array(value, dtype=np.float64, copy=True) for name, value in params.items()}
    reports: List[GradReport] = []

    for name in params:
        value = working[name]
        analytic = np.asarray(analytic_grads[name], dtype=np.float64)
        if analytic.shape != value.shape:
            raise ShapeError.mismatch(f"gradient for {name}", value.shape, analytic.shape)

        numeric = np.zeros_like(value)
        valid = True
        flat = value.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + step
            f_plus = f(working)
            flat[idx] = original - step
            f_minus = f(working)
            flat[idx] = original
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                valid = False
                break
            numeric.reshape(-1)[idx] = (f_plus - f_minus) / (2.0 * step)

        if not valid or value.size == 0:
            if not valid:
                logger.warning(f"Non-finite evaluation while checking {name}")
            reports.append(
                GradReport(
                    parameter_name=name,
                    max_relative_error=0.0 if valid else None,
                    worst_index=[],
                    valid=valid,
                )
            )
            continue

        errors = relative_error(analytic, numeric)
        worst = int(np.argmax(errors))
        reports.append(
            GradReport(
                parameter_name=name,
                max_relative_error=float(errors.reshape(-1)[worst]),
                worst_index=[int(i) for i in np.unravel_index(worst, value.shape)],
                valid=True,
            )
        )
    return reports
