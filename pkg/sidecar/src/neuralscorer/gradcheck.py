"""Central finite-difference verification of the analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np


@dataclass(frozen=True)
class GradCheckResult:
    per_group: dict[str, float]
    max_relative_error: float


def grad_check(
    params: dict[str, np.ndarray],
    loss_and_grads: Callable[[], tuple[float, dict[str, np.ndarray]]],
    eps: float = 1e-5,
    include: Iterable[str] | None = None,
) -> GradCheckResult:
    """Compare analytic grads against (f(x+eps)-f(x-eps))/2eps, coordinatewise.

    The relative error is reported per parameter group as
    ||g_analytic - g_numeric|| / max(||g_analytic||, ||g_numeric||); the group
    maximum is the headline number.  Raises on non-finite analytic gradients.
    """
    loss0, analytic = loss_and_grads()
    if not np.isfinite(loss0):
        raise FloatingPointError("non-finite loss")
    names = list(include) if include is not None else sorted(params)
    per_group: dict[str, float] = {}
    for name in names:
        tensor = params[name]
        ga = analytic.get(name)
        if ga is None:
            ga = np.zeros_like(tensor)
        if not np.all(np.isfinite(ga)):
            raise FloatingPointError(f"non-finite analytic gradient in {name}")
        gn = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        gn_flat = gn.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            plus, _ = loss_and_grads()
            flat[i] = original - eps
            minus, _ = loss_and_grads()
            flat[i] = original
            gn_flat[i] = (plus - minus) / (2 * eps)
        num = np.linalg.norm(ga - gn)
        den = max(np.linalg.norm(ga), np.linalg.norm(gn))
        # Both sides at rounding-noise level means a genuinely zero gradient
        # (e.g. a shared bias under a shift-invariant listwise loss).
        per_group[name] = float(num / den) if den > 1e-8 else 0.0
    return GradCheckResult(per_group=per_group, max_relative_error=max(per_group.values()))
