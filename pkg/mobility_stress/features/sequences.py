"""Label-sequence helpers for the day-to-day regularity metrics."""

from __future__ import annotations

from typing import Hashable, List, Sequence, TypeVar

Label = TypeVar("Label", bound=Hashable)


def collapse_runs(labels: Sequence[Label]) -> List[Label]:
    """Drop consecutive repeats: [a, a, b, a] -> [a, b, a]."""
    collapsed: List[Label] = []
    for label in labels:
        if not collapsed or collapsed[-1] != label:
            collapsed.append(label)
    return collapsed


def edit_distance(a: Sequence[Label], b: Sequence[Label]) -> int:
    """Levenshtein distance between the run-collapsed forms of `a` and `b`.

    Insertions, deletions and substitutions each cost one. The distance is 0
    iff the collapsed sequences are equal and at most the longer length.

    Examples:
        edit_distance([], [1, 2, 3]) == 3
        edit_distance([1, 1, 2], [1, 2]) == 0
        edit_distance([1, 2, 3], [1, 3]) == 1
    """
    a = collapse_runs(a)
    b = collapse_runs(b)
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)

    # two rolling rows of the (len(a)+1) x (len(b)+1) table
    previous = list(range(len(b) + 1))
    for i, item_a in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, item_b in enumerate(b, start=1):
            cost = 0 if item_a == item_b else 1
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + cost,
            )
        previous = current
    return previous[-1]
