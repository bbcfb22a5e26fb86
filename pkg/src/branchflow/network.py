"""Transport networks: rooted trees of weighted flow edges.

A network routes mass from a single source vertex (the root) out to target
vertices.  Every non-root vertex has at most one parent, so edges are keyed by
their child vertex: the edge [parent(u), u] carries weight(u) units of mass
toward u.  Vertex ids are stable and never reused.  Transient forest states
(vertices disconnected from the root) are representable; validate_structure
reports them, and optimization steps restore a single tree before returning.

The transport cost with concavity exponent alpha in (0, 1] is
cost = sum over edges of weight**alpha * length.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import mass_tolerance, merge_tolerance
from .errors import InvariantViolation
from .measures import AtomicMeasure, diameter


@dataclass
class BalanceReport:
    """Per-vertex flow residuals against a source/target measure pair.

    residual(v) = inflow(v) - outflow(v) + supply(v) - demand(v); zero
    everywhere when the network transports the source onto the targets.
    Target atoms with no vertex at their position are listed in `missing`.
    """

    residuals: dict[int, float] = field(default_factory=dict)
    missing: list[tuple[tuple[float, ...], float]] = field(default_factory=list)

    def max_abs(self) -> float:
        worst = 0.0
        for r in self.residuals.values():
            worst = max(worst, abs(r))
        for _, r in self.missing:
            worst = max(worst, abs(r))
        return worst

    def is_balanced(self, tol: float) -> bool:
        return self.max_abs() <= tol


class TransportNetwork:
    def __init__(self, root_point, source_mass: float):
        root_point = np.asarray(root_point, dtype=float)
        self.dimension = int(root_point.shape[0])
        self.source_mass = float(source_mass)
        self._points: dict[int, np.ndarray] = {}
        self._parent: dict[int, int] = {}
        self._weight: dict[int, float] = {}
        self._children: dict[int, set[int]] = {}
        self._terminal: set[int] = set()
        self._next_id = 0
        self.root = self._new_vertex(root_point)

    # ---------------- structure editing ----------------

    def _new_vertex(self, point: np.ndarray) -> int:
        vid = self._next_id
        self._next_id += 1
        self._points[vid] = np.array(point, dtype=float)
        self._children[vid] = set()
        return vid

    def add_vertex(self, point, terminal: bool = False,
                   vid: int | None = None) -> int:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dimension,):
            raise ValueError(f"point must have dimension {self.dimension}")
        if vid is None:
            vid = self._new_vertex(point)
        else:
            vid = int(vid)
            if vid in self._points:
                raise ValueError(f"vertex id {vid} already exists")
            self._points[vid] = np.array(point, dtype=float)
            self._children[vid] = set()
            self._next_id = max(self._next_id, vid + 1)
        if terminal:
            self._terminal.add(vid)
        return vid

    def add_edge(self, parent: int, child: int, weight: float) -> None:
        if parent not in self._points or child not in self._points:
            raise KeyError("unknown vertex")
        if child == self.root:
            raise InvariantViolation("the root cannot receive an edge", network=self)
        if child in self._parent:
            raise InvariantViolation(f"vertex {child} already has a parent", network=self)
        if self.is_descendant(parent, child):
            raise InvariantViolation(f"edge {parent}->{child} would close a cycle", network=self)
        self._parent[child] = parent
        self._weight[child] = float(weight)
        self._children[parent].add(child)

    def remove_edge(self, child: int) -> None:
        parent = self._parent.pop(child)
        self._weight.pop(child)
        self._children[parent].discard(child)

    def set_weight(self, child: int, weight: float) -> None:
        if child not in self._parent:
            raise KeyError(f"vertex {child} has no parent edge")
        self._weight[child] = float(weight)

    def reparent(self, child: int, new_parent: int, weight: float | None = None) -> None:
        if weight is None:
            weight = self._weight[child]
        self.remove_edge(child)
        self.add_edge(new_parent, child, weight)

    def remove_vertex(self, vid: int) -> None:
        if vid == self.root:
            raise InvariantViolation("cannot remove the root", network=self)
        if self._children[vid] or vid in self._parent:
            raise InvariantViolation(f"vertex {vid} is not isolated", network=self)
        del self._points[vid]
        del self._children[vid]
        self._terminal.discard(vid)

    # ---------------- queries ----------------

    def has_vertex(self, vid: int) -> bool:
        return vid in self._points

    def vertices(self) -> list[int]:
        return sorted(self._points)

    def point(self, vid: int) -> np.ndarray:
        return self._points[vid]

    def parent(self, vid: int) -> int | None:
        return self._parent.get(vid)

    def children(self, vid: int) -> list[int]:
        return sorted(self._children[vid])

    def is_terminal(self, vid: int) -> bool:
        return vid in self._terminal

    def terminals(self) -> list[int]:
        return sorted(self._terminal)

    def degree(self, vid: int) -> int:
        return len(self._children[vid]) + (1 if vid in self._parent else 0)

    def edges(self) -> list[tuple[int, int, float]]:
        """(parent, child, weight) triples sorted by child id."""
        return [(self._parent[c], c, self._weight[c]) for c in sorted(self._parent)]

    def n_vertices(self) -> int:
        return len(self._points)

    def n_edges(self) -> int:
        return len(self._parent)

    def edge_length(self, child: int) -> float:
        d = self._points[child] - self._points[self._parent[child]]
        return float(np.sqrt(np.dot(d, d)))

    def edge_mass(self, vid: int) -> float:
        """Mass flowing into vid: its parent-edge weight, or the full source
        mass at the root."""
        if vid == self.root:
            return self.source_mass
        return self._weight[vid]

    def is_descendant(self, v: int, u: int) -> bool:
        """True iff v lies in the subtree rooted at u (v == u counts)."""
        cur: int | None = v
        while cur is not None:
            if cur == u:
                return True
            cur = self._parent.get(cur)
        return False

    def path_to_root(self, vid: int) -> list[int]:
        """Vertices from the root down to vid, inclusive."""
        path = [vid]
        cur = vid
        while cur in self._parent:
            cur = self._parent[cur]
            path.append(cur)
        if path[-1] != self.root:
            raise InvariantViolation(f"vertex {vid} is not connected to the root", network=self)
        path.reverse()
        return path

    def subtree(self, vid: int) -> list[int]:
        """All vertices below vid (inclusive), depth first, deterministic."""
        out = []
        stack = [vid]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(sorted(self._children[v], reverse=True))
        return out

    def bfs_order(self) -> list[int]:
        """Breadth-first vertex order from the root, children by ascending id."""
        order = [self.root]
        queue = [self.root]
        while queue:
            nxt = []
            for v in queue:
                for c in self.children(v):
                    order.append(c)
                    nxt.append(c)
            queue = nxt
        return order

    def points_array(self) -> tuple[list[int], np.ndarray]:
        ids = self.vertices()
        return ids, np.array([self._points[v] for v in ids])

    def bbox_diameter(self) -> float:
        _, pts = self.points_array()
        return diameter(pts)

    def copy(self) -> "TransportNetwork":
        dup = TransportNetwork.__new__(TransportNetwork)
        dup.dimension = self.dimension
        dup.source_mass = self.source_mass
        dup._points = {v: p.copy() for v, p in self._points.items()}
        dup._parent = dict(self._parent)
        dup._weight = dict(self._weight)
        dup._children = {v: set(s) for v, s in self._children.items()}
        dup._terminal = set(self._terminal)
        dup._next_id = self._next_id
        dup.root = self.root
        return dup

    def restore_from(self, other: "TransportNetwork") -> None:
        """Overwrite this network's state with a snapshot taken via copy()."""
        self.dimension = other.dimension
        self.source_mass = other.source_mass
        self._points = {v: p.copy() for v, p in other._points.items()}
        self._parent = dict(other._parent)
        self._weight = dict(other._weight)
        self._children = {v: set(s) for v, s in other._children.items()}
        self._terminal = set(other._terminal)
        self._next_id = other._next_id
        self.root = other.root

    # ---------------- cost and balance ----------------

    def cost_m_alpha(self, alpha: float) -> float:
        total = 0.0
        for child in self._parent:
            total += self._weight[child] ** alpha * self.edge_length(child)
        return total

    def check_balance(self, source: AtomicMeasure, targets: AtomicMeasure) -> BalanceReport:
        """Flow residual at every vertex, matching atoms to vertices by
        exact position.  The source must sit at the root."""
        supply: dict[int, float] = {}
        demand: dict[int, float] = {}
        pos_index: dict[tuple, int] = {}
        for vid in self.vertices():
            key = tuple(self._points[vid].tolist())
            if key not in pos_index:
                pos_index[key] = vid
            elif vid in self._terminal and pos_index[key] not in self._terminal:
                pos_index[key] = vid

        report = BalanceReport()
        for pt, mass in source.atoms():
            key = tuple(np.asarray(pt, dtype=float).tolist())
            vid = pos_index.get(key)
            if vid is None:
                report.missing.append((key, mass))
            else:
                supply[vid] = supply.get(vid, 0.0) + mass
        for pt, mass in targets.atoms():
            key = tuple(np.asarray(pt, dtype=float).tolist())
            vid = pos_index.get(key)
            if vid is None:
                report.missing.append((key, -mass))
            else:
                demand[vid] = demand.get(vid, 0.0) + mass

        for vid in self.vertices():
            inflow = self._weight.get(vid, 0.0) if vid != self.root else 0.0
            outflow = sum(self._weight[c] for c in self._children[vid])
            res = inflow - outflow + supply.get(vid, 0.0) - demand.get(vid, 0.0)
            report.residuals[vid] = res
        return report

    # ---------------- structural validation ----------------

    def validate_structure(self) -> list[str]:
        problems = []
        for child, parent in self._parent.items():
            if parent not in self._points:
                problems.append(f"edge {parent}->{child} references a missing parent")
            if child not in self._children.get(parent, set()):
                problems.append(f"child index missing entry {parent}->{child}")
        for child, w in self._weight.items():
            if w <= 0:
                problems.append(f"edge into {child} has nonpositive weight {w}")
        # cycle scan: walk up from every vertex with a step budget
        n = len(self._points)
        for v in self._points:
            cur = v
            steps = 0
            while cur in self._parent:
                cur = self._parent[cur]
                steps += 1
                if steps > n:
                    problems.append(f"cycle reachable from vertex {v}")
                    break
        for v in self._points:
            if v == self.root or v in self._parent:
                continue
            if v in self._terminal:
                problems.append(f"terminal vertex {v} is disconnected from the root")
            elif self._children[v]:
                problems.append(f"vertex {v} is disconnected from the root")
            else:
                problems.append(f"isolated vertex {v}")
        return problems

    # ---------------- canonical form ----------------

    def canonicalize(self, collapse_passthrough: bool = False,
                     eps_merge: float | None = None) -> None:
        """Normalize in place: drop negligible edges, merge coincident
        vertices, remove isolated helpers, optionally splice out exact
        pass-through vertices.  Idempotent."""
        eps_w = mass_tolerance(self.source_mass)
        if eps_merge is None:
            eps_merge = merge_tolerance(self.bbox_diameter())

        changed = True
        while changed:
            changed = False
            # 1. prune negligible edges
            for child in sorted(self._parent):
                if self._weight[child] <= eps_w:
                    self.remove_edge(child)
                    changed = True
            # 2. merge coincident vertices (parent-child contraction or
            #    sibling merge; anything else cannot stay a tree)
            if self._merge_coincident(eps_merge):
                changed = True
            # 3. drop isolated non-root, non-terminal vertices
            for vid in self.vertices():
                if vid == self.root or vid in self._terminal:
                    continue
                if vid not in self._parent and not self._children[vid]:
                    self.remove_vertex(vid)
                    changed = True

        if collapse_passthrough:
            again = True
            while again:
                again = False
                for vid in self.vertices():
                    if vid == self.root or vid in self._terminal:
                        continue
                    if vid not in self._parent or len(self._children[vid]) != 1:
                        continue
                    (child,) = self._children[vid]
                    if abs(self._weight[vid] - self._weight[child]) > eps_w:
                        continue
                    parent = self._parent[vid]
                    # exact in reals by the triangle inequality; the check
                    # only skips ulp-level rounding reversals
                    direct = float(np.linalg.norm(self._points[parent] - self._points[child]))
                    if direct > self.edge_length(vid) + self.edge_length(child):
                        continue
                    w = self._weight[child]
                    self.remove_edge(child)
                    self.remove_edge(vid)
                    self.remove_vertex(vid)
                    self.add_edge(parent, child, w)
                    again = True

    def _merge_coincident(self, eps_merge: float) -> bool:
        if eps_merge <= 0 or self.n_vertices() < 2:
            return False
        merged_any = False
        while True:
            did = False
            for u, v in self._coincident_pairs(eps_merge):
                if u not in self._points or v not in self._points:
                    continue
                action = self._classify_merge(u, v)
                if action == "skip":
                    continue
                if action == "detour":
                    # coincident endpoints of a folded path: the flow out and
                    # back is pure waste, so lift the lower vertex to its
                    # coincident ancestor; the pair becomes parent-child and
                    # contracts on the next rescan.
                    if self.is_descendant(v, u):
                        self._contract_detour(u, v)
                    else:
                        self._contract_detour(v, u)
                else:
                    self._merge_pair(u, v)
                did = True
                break  # structure changed: rescan
            if not did:
                return merged_any
            merged_any = True

    def _coincident_pairs(self, eps: float) -> list[tuple[int, int]]:
        ids, pts = self.points_array()
        n = len(ids)
        out = []
        for i in range(n):
            d = pts[i + 1:] - pts[i]
            dist = np.sqrt(np.sum(d * d, axis=1))
            for off in np.nonzero(dist < eps)[0]:
                out.append((ids[i], ids[i + 1 + int(off)]))
        return out

    def _classify_merge(self, u: int, v: int) -> str:
        if u in self._terminal and v in self._terminal:
            return "skip"  # distinct target atoms stay distinct
        if self._parent.get(v) == u or self._parent.get(u) == v:
            return "merge"
        pu, pv = self._parent.get(u), self._parent.get(v)
        if pu is not None and pu == pv:
            return "merge"
        if self.is_descendant(v, u) or self.is_descendant(u, v):
            return "detour"  # folded path: reroute, then contract
        if pu is None or pv is None:
            return "merge"  # one side is parentless: adoption is safe
        return "skip"  # independent branches that merely cross

    def _merge_pair(self, u: int, v: int) -> None:
        """Merge two coincident vertices, keeping root or terminal identity."""
        def rank(x: int) -> int:
            if x == self.root:
                return 2
            if x in self._terminal:
                return 1
            return 0

        keep, gone = (u, v) if (rank(u), -u) >= (rank(v), -v) else (v, u)
        p_keep = self._parent.get(keep)
        p_gone = self._parent.get(gone)
        if p_gone == keep:
            # gone hangs directly below keep: contract the zero-length edge
            self.remove_edge(gone)
        elif p_keep == gone:
            # keep hangs below gone: lift keep into gone's place
            self.remove_edge(keep)
            if p_gone is not None:
                w = self._weight[gone]
                self.remove_edge(gone)
                self.add_edge(p_gone, keep, w)
        elif p_gone is not None and p_gone == p_keep:
            # siblings under one parent: fold the parallel edge weights
            self._weight[keep] += self._weight[gone]
            self.remove_edge(gone)
        elif p_gone is None:
            pass  # parentless helper: only its children move over
        elif p_keep is None and keep != self.root:
            w = self._weight[gone]
            self.remove_edge(gone)
            self.add_edge(p_gone, keep, w)
        else:
            raise InvariantViolation(
                f"merging vertices {u} and {v} would break the tree structure",
                network=self)
        for child in sorted(self._children[gone]):
            w = self._weight[child]
            self.remove_edge(child)
            self.add_edge(keep, child, w)
        self.remove_vertex(gone)

    def _contract_detour(self, anc: int, desc: int) -> None:
        """Reroute ``desc`` directly under its coincident ancestor ``anc``.

        The flow feeding ``desc`` travelled out along the path
        anc -> ... -> desc and geometrically back to the same point, so it
        can be peeled off every intermediate edge without touching any
        other branch.  Edges drained to zero are removed by the calling
        fixpoint's prune step.
        """
        w = self._weight[desc]
        cur = self._parent[desc]
        while cur != anc:
            self.set_weight(cur, max(self._weight[cur] - w, 0.0))
            cur = self._parent[cur]
        self.remove_edge(desc)
        self.add_edge(anc, desc, w)
