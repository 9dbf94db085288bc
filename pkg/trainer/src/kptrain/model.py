"""Transformer encoder token classifier over hashed subword chunks.

Long inputs are handled by non-overlapping inference windows, so a
document of any length gets one logit per subword regardless of the
attention span. Sinusoidal positions keep the module free of learned
length limits.
"""

from __future__ import annotations

import math

import torch
from torch import nn


class SinusoidalPositions(nn.Module):
    def __init__(self, d_model: int, max_len: int = 8192):
        super().__init__()
        position = torch.arange(max_len).unsqueeze(1)
        div = torch.exp(torch.arange(0, d_model, 2) * (-math.log(10000.0) / d_model))
        table = torch.zeros(max_len, d_model)
        table[:, 0::2] = torch.sin(position * div)
        table[:, 1::2] = torch.cos(position * div)
        self.register_buffer("table", table, persistent=False)

    def forward(self, length: int) -> torch.Tensor:
        return self.table[:length]


class TokenClassifier(nn.Module):
    def __init__(
        self,
        vocab_size: int = 4096,
        d_model: int = 64,
        nhead: int = 4,
        layers: int = 2,
        ff_dim: int = 128,
        dropout: float = 0.0,
        seed: int = 0,
    ):
        super().__init__()
        torch.manual_seed(seed)
        self.vocab_size = vocab_size
        self.embed = nn.Embedding(vocab_size, d_model)
        self.positions = SinusoidalPositions(d_model)
        encoder_layer = nn.TransformerEncoderLayer(
            d_model=d_model,
            nhead=nhead,
            dim_feedforward=ff_dim,
            dropout=dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(encoder_layer, num_layers=layers)
        self.head = nn.Linear(d_model, 1)

    def forward(self, ids: torch.Tensor, pad_mask: torch.Tensor | None = None) -> torch.Tensor:
        """ids: (batch, length) int64; pad_mask: (batch, length) bool where
        True marks padding. Returns per-token logits (batch, length)."""
        x = self.embed(ids) + self.positions(ids.shape[1])
        encoded = self.encoder(x, src_key_padding_mask=pad_mask)
        return self.head(encoded).squeeze(-1)

    @torch.no_grad()
    def score_sequence(self, ids: list[int], window: int = 512) -> list[float]:
        """Per-subword logits for one document, windowed for long inputs."""
        self.eval()
        out: list[float] = []
        for lo in range(0, len(ids), window):
            chunk = torch.tensor([ids[lo : lo + window]], dtype=torch.long)
            out.extend(self.forward(chunk)[0].tolist())
        return out
