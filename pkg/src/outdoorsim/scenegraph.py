from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mathutil import quat_identity, quat_mul, quat_rotate


@dataclass
class SceneNode:
    id: str
    parent: str | None = None
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=quat_identity)
    scale: np.ndarray = field(default_factory=lambda: np.ones(3))
    bounds_min: np.ndarray = field(default_factory=lambda: np.zeros(3))
    bounds_max: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.translation = np.asarray(self.translation, dtype=float)
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.scale = np.asarray(self.scale, dtype=float) * np.ones(3)
        self.bounds_min = np.asarray(self.bounds_min, dtype=float)
        self.bounds_max = np.asarray(self.bounds_max, dtype=float)
        if np.any(self.scale <= 0):
            raise ValueError(f"node {self.id!r}: scale components must be > 0")
        if np.any(self.bounds_min > self.bounds_max):
            raise ValueError(f"node {self.id!r}: inverted bounding box")


class SceneGraph:
    """Tree of nodes with local transforms; parents must exist before children."""

    def __init__(self):
        self.nodes: dict[str, SceneNode] = {}

    def add(self, node: SceneNode) -> SceneNode:
        if node.id in self.nodes:
            raise ValueError(f"duplicate node id {node.id!r}")
        if node.parent is not None and node.parent not in self.nodes:
            raise ValueError(f"node {node.id!r}: unknown parent {node.parent!r}")
        self.nodes[node.id] = node
        return node

    def reparent(self, node_id: str, parent: str | None) -> None:
        p = parent
        while p is not None:
            if p == node_id:
                raise ValueError(f"reparenting {node_id!r} under {parent!r} would create a cycle")
            p = self.nodes[p].parent
        self.nodes[node_id].parent = parent

    def world_transform(self, node_id: str):
        """(translation, rotation, scale) of a node in world space."""
        chain = []
        n = self.nodes[node_id]
        while n is not None:
            chain.append(n)
            n = self.nodes[n.parent] if n.parent is not None else None
        t, q, s = np.zeros(3), quat_identity(), np.ones(3)
        for n in reversed(chain):
            t = t + quat_rotate(q, s * n.translation)
            q = quat_mul(q, n.rotation)
            s = s * n.scale
        return t, q, s

    def world_bounds(self, node_id: str):
        """Axis-aligned world box of the node's local box."""
        t, q, s = self.world_transform(node_id)
        n = self.nodes[node_id]
        lo, hi = n.bounds_min, n.bounds_max
        corners = np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
        w = quat_rotate(q, corners * s) + t
        return w.min(axis=0), w.max(axis=0)

    def node_containing(self, point) -> str | None:
        """Deepest node whose world box contains ``point`` (ties: first inserted)."""
        best, best_depth = None, -1
        p = np.asarray(point, dtype=float)
        for nid in self.nodes:
            lo, hi = self.world_bounds(nid)
            if np.all(p >= lo) and np.all(p <= hi):
                depth, n = 0, self.nodes[nid]
                while n.parent is not None:
                    depth += 1
                    n = self.nodes[n.parent]
                if depth > best_depth:
                    best, best_depth = nid, depth
        return best
