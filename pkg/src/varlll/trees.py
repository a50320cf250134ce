"""Labelled ordered rooted trees."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache


@dataclass(frozen=True)
class ValidTree:
    label: int
    children: tuple["ValidTree", ...] = ()

    def preorder(self) -> list[int]:
        out = []
        stack = [self]
        while stack:
            node = stack.pop()
            out.append(node.label)
            stack.extend(reversed(node.children))
        return out

    def size(self) -> int:
        return len(self.preorder())

    def satisfies(self, neighborhoods) -> bool:
        """Children are neighbours of their parent, with strictly increasing labels."""
        stack = [self]
        while stack:
            node = stack.pop()
            ls = [c.label for c in node.children]
            if any(a >= b for a, b in zip(ls, ls[1:])):
                return False
            if any(l not in neighborhoods[node.label] for l in ls):
                return False
            stack.extend(node.children)
        return True


# a shape is the tuple of its children's shapes


@lru_cache(maxsize=None)
def plane_trees(size: int) -> tuple[tuple, ...]:
    """All ordered (plane) rooted tree shapes with ``size`` nodes."""
    if size < 1:
        return ()
    return plane_forests(size - 1)


@lru_cache(maxsize=None)
def plane_forests(size: int) -> tuple[tuple, ...]:
    if size == 0:
        return ((),)
    out = []
    for first in range(1, size + 1):
        for t in plane_trees(first):
            for rest in plane_forests(size - first):
                out.append((t,) + rest)
    return tuple(out)
