"""Class-weighted masked binary cross entropy over phrase tokens.

For per-token logits z with binary labels y and mask m:

    L = -sum_k m_k * [ y_k * log f(z_k) + lambda * (1 - y_k) * log(1 - f(z_k)) ]

where f is the sigmoid and lambda down-weights the (majority) negative
class. Only tokens inside labeled phrases carry mask 1; with lambda = 1
this is exactly masked binary cross entropy with sum reduction.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F


def token_salience_loss(
    logits: torch.Tensor,
    labels: torch.Tensor,
    mask: torch.Tensor,
    lambda_neg: float,
) -> torch.Tensor:
    """Summed weighted BCE over masked-in tokens; shapes must broadcast.

    Uses logsigmoid for numerical stability: log(1 - f(z)) = logsigmoid(-z).
    """
    if not 0.0 < lambda_neg <= 1.0:
        raise ValueError(f"lambda_neg must be in (0, 1], got {lambda_neg}")
    labels = labels.to(logits.dtype)
    mask = mask.to(logits.dtype)
    positive = labels * F.logsigmoid(logits)
    negative = lambda_neg * (1.0 - labels) * F.logsigmoid(-logits)
    return -((positive + negative) * mask).sum()
