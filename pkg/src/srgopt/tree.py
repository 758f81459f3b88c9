"""Augmented red-black tree used as a dynamic weighted sampler.

Stores one (weight, index) entry per component. Ordering is by the
composite key ``(weight, index)`` so duplicate weights (common when the
table starts at zero) remain totally ordered. Each node carries the size
and the weight-sum of its subtree, which makes rank / prefix-sum queries
and their two inverses run in O(log n).

All query results are phrased in *decreasing* weight order: rank 1 is the
largest composite key. Node ``v`` conceptually owns the half-open interval
``[prefix(v) - v.key, prefix(v))`` where ``prefix(v)`` is the sum of all
keys >= v's composite key; ``select_sum`` inverts that map. Zero-weight
nodes own empty intervals and are never selected.

Single-writer: concurrent mutation is not supported.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SamplerTree"]

RED = True
BLACK = False


class _Node:
    __slots__ = ("key", "value", "red", "size", "sum", "parent", "left", "right")

    def __init__(self, key, value, red, parent, nil):
        self.key = key
        self.value = value
        self.red = red
        self.size = 1
        self.sum = key
        self.parent = parent
        self.left = nil
        self.right = nil


class SamplerTree:
    """Balanced tree over n non-negative weights keyed by component index.

    ``visits`` counts nodes touched by tree operations (a cursor move or a
    local size/sum recomputation each count one); it exists to verify the
    O(log n) contract without relying on wall clocks.
    """

    def __init__(self, keys):
        keys = np.asarray(keys, dtype=float)
        if keys.ndim != 1 or keys.size < 1:
            raise ValueError("need a 1-d array of at least one key")
        if not np.all(np.isfinite(keys)) or np.any(keys < 0):
            raise ValueError("keys must be finite and non-negative")
        self.n = int(keys.size)
        nil = _Node(0.0, -1, BLACK, None, None)
        nil.size = 0
        nil.sum = 0.0
        nil.parent = nil
        nil.left = nil
        nil.right = nil
        self.nil = nil
        self._index: list[_Node] = [nil] * self.n
        self.visits = 0
        self._bulk_build(keys)

    # -- construction ---------------------------------------------------

    def _bulk_build(self, keys):
        # Midpoint splitting of the ascending composite order gives a tree
        # whose levels are all full except the deepest; coloring only that
        # deepest level red yields a valid red-black coloring.
        n = int(keys.size)
        order = np.lexsort((np.arange(n), keys))
        sorted_keys = keys[order]
        red_depth = n.bit_length() - 1 if n > 1 else -1
        self.root = self._build_range(
            sorted_keys.tolist(), order.tolist(), 0, n, 0, red_depth, self.nil
        )

    def _build_range(self, skeys, svals, lo, hi, depth, red_depth, parent):
        if lo >= hi:
            return self.nil
        mid = (lo + hi) // 2
        node = _Node(skeys[mid], svals[mid], depth == red_depth, parent, self.nil)
        self._index[node.value] = node
        node.left = self._build_range(skeys, svals, lo, mid, depth + 1, red_depth, node)
        node.right = self._build_range(skeys, svals, mid + 1, hi, depth + 1, red_depth, node)
        node.size = node.left.size + node.right.size + 1
        node.sum = node.left.sum + node.right.sum + node.key
        return node

    def rebuild(self):
        """Rebuild from scratch, resetting any accumulated float drift."""
        self._bulk_build(self.keys())

    # -- accessors ------------------------------------------------------

    def __len__(self):
        return self.n

    def key(self, i):
        return self._node(i).key

    def keys(self):
        """Current weights as an array indexed by component."""
        return np.array([node.key for node in self._index])

    def total(self):
        return self.root.sum

    def _node(self, i):
        if not 0 <= i < self.n:
            raise IndexError(f"component index {i} out of range [0, {self.n})")
        return self._index[i]

    # -- queries (decreasing composite-key order) ------------------------

    def rank(self, i):
        """1-based position of component i in decreasing key order."""
        v = self._node(i)
        r = v.right.size + 1
        visits = 1
        p = v.parent
        while p is not self.nil:
            if v is p.left:
                r += p.right.size + 1
            v = p
            p = v.parent
            visits += 1
        self.visits += visits
        return r

    def partial_sum(self, i):
        """Sum of all keys >= component i's composite key (inclusive)."""
        v = self._node(i)
        s = v.right.sum + v.key
        visits = 1
        p = v.parent
        while p is not self.nil:
            if v is p.left:
                s += p.right.sum + p.key
            v = p
            p = v.parent
            visits += 1
        self.visits += visits
        return s

    def select_rank(self, r):
        """Component index holding the r-th largest key (inverse of rank)."""
        if not 1 <= r <= self.n:
            raise ValueError(f"rank {r} out of range [1, {self.n}]")
        v = self.root
        visits = 0
        while v is not self.nil:
            visits += 1
            k = v.right.size + 1
            if r == k:
                self.visits += visits
                return v.value
            if r < k:
                v = v.right
            else:
                r -= k
                v = v.left
        raise AssertionError("size fields inconsistent")  # pragma: no cover

    def select_sum(self, s):
        """Component whose prefix-sum interval contains s, 0 <= s < total."""
        total = self.root.sum
        if not 0.0 <= s < total:
            raise ValueError(f"s={s!r} outside [0, {total})")
        v = self.root
        visits = 0
        fallback = None
        while v is not self.nil:
            visits += 1
            rs = v.right.sum
            if s < rs:
                v = v.right
            elif s < rs + v.key:
                self.visits += visits
                return v.value
            else:
                # interval of v ended at or before s; remember the nearest
                # positive-key node in case rounding pushes s off the end
                if v.key > 0.0:
                    fallback = v
                s -= rs + v.key
                v = v.left
        self.visits += visits
        if fallback is not None:
            return fallback.value
        raise AssertionError("sum fields inconsistent")  # pragma: no cover

    # -- update ----------------------------------------------------------

    def update_key(self, i, new_key):
        """Replace component i's weight, rebalancing in O(log n)."""
        new_key = float(new_key)
        if not np.isfinite(new_key) or new_key < 0.0:
            raise ValueError(f"key must be finite and non-negative, got {new_key!r}")
        node = self._node(i)
        if node.key == new_key:
            return
        self._delete(node)
        self._insert(new_key, i)

    def _insert(self, key, value):
        nil = self.nil
        parent = nil
        v = self.root
        visits = 0
        while v is not nil:
            visits += 1
            parent = v
            if key < v.key or (key == v.key and value < v.value):
                v = v.left
            else:
                v = v.right
        node = _Node(key, value, RED, parent, nil)
        if parent is nil:
            self.root = node
        elif key < parent.key or (key == parent.key and value < parent.value):
            parent.left = node
        else:
            parent.right = node
        self._index[value] = node
        visits += self._refresh_upward(parent)
        visits += self._insert_fixup(node)
        self.visits += visits

    def _delete(self, z):
        nil = self.nil
        visits = 0
        y = z
        y_red = y.red
        if z.left is nil:
            x = z.right
            self._transplant(z, x)
            refresh_from = x.parent
        elif z.right is nil:
            x = z.left
            self._transplant(z, x)
            refresh_from = x.parent
        else:
            y = z.right
            while y.left is not nil:
                y = y.left
                visits += 1
            y_red = y.red
            x = y.right
            if y.parent is z:
                x.parent = y  # nil's parent is read by the fixup
                refresh_from = y
            else:
                refresh_from = y.parent
                self._transplant(y, x)
                y.right = z.right
                y.right.parent = y
            self._transplant(z, y)
            y.left = z.left
            y.left.parent = y
            y.red = z.red
        # restore size/sum along the changed spine before fixup rotations
        # read child attributes
        visits += self._refresh_upward(refresh_from)
        if not y_red:
            visits += self._delete_fixup(x)
        self.visits += visits

    # -- internal maintenance ---------------------------------------------

    def _refresh(self, v):
        v.size = v.left.size + v.right.size + 1
        v.sum = v.left.sum + v.right.sum + v.key

    def _refresh_upward(self, v):
        visits = 0
        nil = self.nil
        while v is not nil:
            self._refresh(v)
            v = v.parent
            visits += 1
        return visits

    def _transplant(self, u, v):
        if u.parent is self.nil:
            self.root = v
        elif u is u.parent.left:
            u.parent.left = v
        else:
            u.parent.right = v
        v.parent = u.parent

    def _rotate_left(self, x):
        y = x.right
        x.right = y.left
        if y.left is not self.nil:
            y.left.parent = x
        y.parent = x.parent
        if x.parent is self.nil:
            self.root = y
        elif x is x.parent.left:
            x.parent.left = y
        else:
            x.parent.right = y
        y.left = x
        x.parent = y
        self._refresh(x)
        self._refresh(y)

    def _rotate_right(self, y):
        x = y.left
        y.left = x.right
        if x.right is not self.nil:
            x.right.parent = y
        x.parent = y.parent
        if y.parent is self.nil:
            self.root = x
        elif y is y.parent.right:
            y.parent.right = x
        else:
            y.parent.left = x
        x.right = y
        y.parent = x
        self._refresh(y)
        self._refresh(x)

    def _insert_fixup(self, z):
        visits = 0
        while z.parent.red:
            visits += 1
            if z.parent is z.parent.parent.left:
                y = z.parent.parent.right
                if y.red:
                    z.parent.red = BLACK
                    y.red = BLACK
                    z.parent.parent.red = RED
                    z = z.parent.parent
                else:
                    if z is z.parent.right:
                        z = z.parent
                        self._rotate_left(z)
                        visits += 2
                    z.parent.red = BLACK
                    z.parent.parent.red = RED
                    self._rotate_right(z.parent.parent)
                    visits += 2
            else:
                y = z.parent.parent.left
                if y.red:
                    z.parent.red = BLACK
                    y.red = BLACK
                    z.parent.parent.red = RED
                    z = z.parent.parent
                else:
                    if z is z.parent.left:
                        z = z.parent
                        self._rotate_right(z)
                        visits += 2
                    z.parent.red = BLACK
                    z.parent.parent.red = RED
                    self._rotate_left(z.parent.parent)
                    visits += 2
        self.root.red = BLACK
        return visits

    def _delete_fixup(self, x):
        visits = 0
        while x is not self.root and not x.red:
            visits += 1
            if x is x.parent.left:
                w = x.parent.right
                if w.red:
                    w.red = BLACK
                    x.parent.red = RED
                    self._rotate_left(x.parent)
                    visits += 2
                    w = x.parent.right
                if not w.left.red and not w.right.red:
                    w.red = RED
                    x = x.parent
                else:
                    if not w.right.red:
                        w.left.red = BLACK
                        w.red = RED
                        self._rotate_right(w)
                        visits += 2
                        w = x.parent.right
                    w.red = x.parent.red
                    x.parent.red = BLACK
                    w.right.red = BLACK
                    self._rotate_left(x.parent)
                    visits += 2
                    x = self.root
            else:
                w = x.parent.left
                if w.red:
                    w.red = BLACK
                    x.parent.red = RED
                    self._rotate_right(x.parent)
                    visits += 2
                    w = x.parent.left
                if not w.right.red and not w.left.red:
                    w.red = RED
                    x = x.parent
                else:
                    if not w.left.red:
                        w.right.red = BLACK
                        w.red = RED
                        self._rotate_left(w)
                        visits += 2
                        w = x.parent.left
                    w.red = x.parent.red
                    x.parent.red = BLACK
                    w.left.red = BLACK
                    self._rotate_right(x.parent)
                    visits += 2
                    x = self.root
        x.red = BLACK
        return visits

    # -- verification / debugging -----------------------------------------

    def validate(self):
        """Check every structural invariant; raise ValueError on violation."""
        nil = self.nil
        if self.root.red:
            raise ValueError("root is red")
        if nil.size != 0 or nil.sum != 0.0 or nil.red:
            raise ValueError("nil sentinel corrupted")
        seen = [False] * self.n

        def walk(v):
            if v is nil:
                return 0, 0
            if not 0 <= v.value < self.n or seen[v.value]:
                raise ValueError(f"bad or duplicate component index {v.value}")
            seen[v.value] = True
            if not np.isfinite(v.key) or v.key < 0.0:
                raise ValueError(f"invalid key {v.key!r}")
            if v.red and (v.left.red or v.right.red):
                raise ValueError("red node has a red child")
            for child in (v.left, v.right):
                if child is not nil and child.parent is not v:
                    raise ValueError("broken parent pointer")
            if v.left is not nil and not (
                (v.left.key, v.left.value) < (v.key, v.value)
            ):
                raise ValueError("left child violates composite order")
            if v.right is not nil and not (
                (v.key, v.value) < (v.right.key, v.right.value)
            ):
                raise ValueError("right child violates composite order")
            lbh, lsize = walk(v.left)
            rbh, rsize = walk(v.right)
            if lbh != rbh:
                raise ValueError("black heights differ")
            if v.size != lsize + rsize + 1:
                raise ValueError("size field inconsistent")
            fresh = v.left.sum + v.right.sum + v.key
            if abs(v.sum - fresh) > 1e-9 * max(1.0, abs(fresh)):
                raise ValueError(f"sum field drifted: {v.sum} vs {fresh}")
            return lbh + (0 if v.red else 1), v.size

        _, size = walk(self.root)
        if size != self.n:
            raise ValueError(f"tree holds {size} nodes, expected {self.n}")
        for i, node in enumerate(self._index):
            if node.value != i:
                raise ValueError(f"index array entry {i} points at node {node.value}")

    def to_dot(self):
        """DOT-format dump of the tree, for documentation and debugging."""
        lines = ["digraph sampler_tree {", "  node [shape=record];"]
        stack = [self.root]
        while stack:
            v = stack.pop()
            if v is self.nil:
                continue
            color = "red" if v.red else "black"
            lines.append(
                f'  n{id(v)} [label="{{i={v.value}|k={v.key:g}|'
                f'sz={v.size}|sum={v.sum:g}}}" color={color}];'
            )
            for child in (v.left, v.right):
                if child is not self.nil:
                    lines.append(f"  n{id(v)} -> n{id(child)};")
                    stack.append(child)
        lines.append("}")
        return "\n".join(lines)
