"""Label alignment from phrase character spans onto subwords."""

from __future__ import annotations

from typing import Sequence

from .subwords import Subword


def align_labels(
    record: dict, subwords: Sequence[Subword]
) -> tuple[list[int], list[int]]:
    """Per-subword binary labels and a loss mask for one training record.

    A subword overlapping a labeled phrase span by at least one character
    inherits that span's label; a subword touching several spans takes
    the one with the larger overlap (earlier span on ties). Subwords
    outside every phrase are masked out of the loss.
    """
    phrases = record.get("phrases", [])
    labels = [0] * len(subwords)
    mask = [0] * len(subwords)
    for k, sub in enumerate(subwords):
        best_overlap = 0
        best_label = 0
        for ph in phrases:
            overlap = min(sub.end, ph["end"]) - max(sub.start, ph["start"])
            if overlap > best_overlap:
                best_overlap = overlap
                best_label = int(ph["label"])
        if best_overlap > 0:
            mask[k] = 1
            labels[k] = best_label
    return labels, mask
