"""Global improvement: move whole subtrees to better attachment points.

The marginal value of routing through a vertex is captured by the potential

    potential(u, t) = sum over edges e on the root path of u of
                      len(e) * (w(e)**a - (w(e) - t)**a),

the exact cost change of deleting t units of flow along that path (t may be
negative, meaning flow is added).  For a vertex u carrying m = edge_mass(u),
S = potential(u, m) is what the network currently pays to bring m to u, and
sigma = S / m**a is the search radius: a new parent v can only pay off when
|v - u| <= sigma.

For each candidate v outside u's subtree, removing m along the old path and
re-inserting it along v's path costs

    T(v) = c(v) + |v - u| * m**a,
    c(v) = sum over v's root path of len(e) * ((w~(e) + m)**a - w~(e)**a),

where w~ is the edge weight after the removal (shared ancestors cancel).
Reattaching u under the minimizer v* strictly lowers the total cost by
S - T(v*) whenever that is positive; the rewiring applies exactly that edit.
The full pipeline alternates construction, local sweeps, midpoint edge
subdivision (which plants candidate attachment points), and reparent passes
until a round stops paying.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import OptimizeConfig, cost_tolerance, mass_tolerance
from .construct import build_small, build_star, build_subdivision
from .errors import InputError
from .measures import AtomicMeasure, diameter
from .network import TransportNetwork
from .optimize_local import local_sweep

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PotentialQuery:
    vertex: int
    t: float
    value: float


@dataclass(frozen=True)
class ReparentProposal:
    child: int
    new_parent: int
    gain: float
    sigma: float
    c_values: dict[int, float] = field(default_factory=dict)


def potential(net: TransportNetwork, u: int, t: float, alpha: float) -> float:
    """Cost released by removing t units of flow along u's root path."""
    m_u = net.edge_mass(u)
    if abs(t) > m_u * (1.0 + 1e-12):
        raise ValueError(f"|t| = {abs(t)} exceeds the flow {m_u} into vertex {u}")
    total = 0.0
    for vid in net.path_to_root(u)[1:]:
        w = net.edge_mass(vid)
        reduced = max(w - t, 0.0)
        total += net.edge_length(vid) * (w ** alpha - reduced ** alpha)
    return total


def shift_mass(net: TransportNetwork, t: float, u: int) -> TransportNetwork:
    """Copy of the network with t units removed along u's root path.

    Edges whose weight drops to (or below) the balance tolerance disappear;
    the result then carries the source measure minus t at the root plus t
    at u."""
    out = net.copy()
    path = out.path_to_root(u)[1:]
    eps_w = mass_tolerance(out.source_mass)
    for vid in path:
        out.set_weight(vid, out.edge_mass(vid) - t)
    for vid in path:
        if out.parent(vid) is not None and out.edge_mass(vid) <= eps_w:
            out.remove_edge(vid)
    return out


def subdivide_long_edges(net: TransportNetwork, config: OptimizeConfig) -> list[int]:
    """Split every edge much longer than the mean at its midpoint.

    The midpoints are pass-through vertices that cost nothing but give the
    reparent pass attachment points along long corridors.  Returns the new
    vertex ids; the vertex budget caps how many splits happen.
    """
    edges = net.edges()
    if not edges:
        return []
    lengths = [net.edge_length(child) for _, child, _ in edges]
    mean = sum(lengths) / len(lengths)
    threshold = config.subdivide_factor * mean
    cap = config.max_vertices
    if cap is None:
        cap = 20 * max(1, len(net.terminals()))
    created: list[int] = []
    for (parent, child, w), length in zip(edges, lengths):
        if length <= threshold:
            continue
        if net.n_vertices() >= cap:
            break
        mid = (net.point(parent) + net.point(child)) / 2.0
        vid = net.add_vertex(mid)
        net.remove_edge(child)
        net.add_edge(parent, vid, w)
        net.add_edge(vid, child, w)
        created.append(vid)
    return created


def _extra_costs(net: TransportNetwork, u: int, alpha: float) -> dict[int, float]:
    """c(v) for every vertex reachable from the root: the extra cost of
    re-inserting edge_mass(u) along v's root path after removing it along
    u's root path."""
    m_u = net.edge_mass(u)
    on_path = set(net.path_to_root(u)[1:])
    c: dict[int, float] = {net.root: 0.0}
    queue = [net.root]
    while queue:
        nxt = []
        for v in queue:
            base = c[v]
            for child in net.children(v):
                w = net.edge_mass(child)
                w_res = max(w - m_u, 0.0) if child in on_path else w
                c[child] = base + net.edge_length(child) * (
                    (w_res + m_u) ** alpha - w_res ** alpha)
                nxt.append(child)
        queue = nxt
    return c


def candidate_parents(net: TransportNetwork, u: int, alpha: float) -> tuple[float, list[int]]:
    """Search radius sigma and the vertices inside it outside u's subtree."""
    m_u = net.edge_mass(u)
    s_val = potential(net, u, m_u, alpha)
    sigma = s_val / m_u ** alpha
    blocked = set(net.subtree(u))
    pu = net.point(u)
    out = []
    for v in net.vertices():
        if v in blocked:
            continue
        if float(np.linalg.norm(net.point(v) - pu)) <= sigma * (1.0 + 1e-12):
            out.append(v)
    parent = net.parent(u)
    if parent is not None and parent not in out:
        out.append(parent)
        out.sort()
    return sigma, out


def predicted_gain(net: TransportNetwork, u: int, v: int, alpha: float) -> float:
    """S - T(v): the exact cost drop of reattaching u below v."""
    if net.is_descendant(v, u):
        raise ValueError(f"vertex {v} lies inside the subtree of {u}")
    m_u = net.edge_mass(u)
    s_val = potential(net, u, m_u, alpha)
    c = _extra_costs(net, u, alpha)
    t_val = c[v] + float(np.linalg.norm(net.point(v) - net.point(u))) * m_u ** alpha
    return s_val - t_val


def evaluate_reparent(net: TransportNetwork, u: int, alpha: float,
                      eps_improve: float) -> ReparentProposal | None:
    """Best new parent for u, or None when nothing beats the current one."""
    if u == net.root or net.parent(u) is None:
        return None
    m_u = net.edge_mass(u)
    ma = m_u ** alpha
    s_val = potential(net, u, m_u, alpha)
    sigma = s_val / ma
    blocked = set(net.subtree(u))
    parent = net.parent(u)
    c_all = _extra_costs(net, u, alpha)
    pu = net.point(u)

    best_v = None
    best_t = math.inf
    c_values: dict[int, float] = {}
    for v in net.vertices():
        if v in blocked or v == parent:
            continue
        if v not in c_all:
            continue  # unreachable from the root; not a valid attachment
        dist = float(np.linalg.norm(net.point(v) - pu))
        if dist > sigma * (1.0 + 1e-12):
            continue
        c_values[v] = c_all[v]
        t_val = c_all[v] + dist * ma
        if t_val < best_t:
            best_t = t_val
            best_v = v
    if best_v is None or s_val - best_t <= eps_improve:
        return None
    return ReparentProposal(child=u, new_parent=best_v, gain=s_val - best_t,
                            sigma=sigma, c_values=c_values)


def rewire(net: TransportNetwork, u: int, new_parent: int) -> None:
    """Reattach u (and its subtree) below new_parent, shifting edge weights:
    edge_mass(u) leaves the old root path and joins the new one.  Edges that
    drop to zero disappear, along with helpers they leave isolated."""
    m_u = net.edge_mass(u)
    minus = net.path_to_root(u)[1:]
    plus = net.path_to_root(new_parent)[1:]
    net.remove_edge(u)
    delta: dict[int, float] = {}
    for vid in minus:
        if vid != u:
            delta[vid] = delta.get(vid, 0.0) - m_u
    for vid in plus:
        delta[vid] = delta.get(vid, 0.0) + m_u
    eps_w = mass_tolerance(net.source_mass)
    dead = []
    for vid in sorted(delta):
        dw = delta[vid]
        if dw == 0.0:
            continue
        w = net.edge_mass(vid) + dw
        if w <= eps_w:
            dead.append(vid)
        else:
            net.set_weight(vid, w)
    for vid in dead:
        net.remove_edge(vid)
    net.add_edge(new_parent, u, m_u)
    # drop helpers stranded by the dead chain
    stale = True
    while stale:
        stale = False
        for vid in net.vertices():
            if vid == net.root or net.is_terminal(vid):
                continue
            if net.parent(vid) is None and not net.children(vid):
                net.remove_vertex(vid)
                stale = True


def reparent_pass(net: TransportNetwork, alpha: float, eps_improve: float,
                  trace: list | None = None) -> bool:
    """One breadth-first pass of evaluate-and-apply over all vertices.

    Every applied move is re-checked by direct cost recomputation and rolled
    back if it does not deliver; returns whether any move stuck."""
    accepted = False
    for u in net.bfs_order():
        if not net.has_vertex(u) or u == net.root or net.parent(u) is None:
            continue
        proposal = evaluate_reparent(net, u, alpha, eps_improve)
        if proposal is None:
            continue
        snapshot = net.copy()
        cost_before = net.cost_m_alpha(alpha)
        rewire(net, u, proposal.new_parent)
        cost_after = net.cost_m_alpha(alpha)
        if cost_before - cost_after <= eps_improve:
            logger.warning(
                "reparent of %d under %d predicted %.3e but delivered %.3e; rolled back",
                u, proposal.new_parent, proposal.gain, cost_before - cost_after)
            net.restore_from(snapshot)
            continue
        if trace is not None:
            trace.append(("reparent", u, cost_before, cost_after))
        accepted = True
    return accepted


_INITIALIZERS = {
    "subdivision": build_subdivision,
    "star": build_star,
    "small": build_small,
}


def global_optimize(source: AtomicMeasure, targets: AtomicMeasure, alpha: float,
                    config: OptimizeConfig | None = None, trace: list | None = None,
                    observer=None) -> TransportNetwork:
    """Full pipeline: construct, then loop local sweeps, edge subdivision and
    reparent passes until a round stops paying; finish canonical.

    At alpha = 1 branching never pays, so the loop skips subdivision and
    reparenting and the local sweeps flatten everything onto the source.
    """
    if config is None:
        config = OptimizeConfig()
    config.validate()
    if source.n != 1:
        raise InputError("the source must be a single atom")
    if not (0.0 < alpha <= 1.0):
        raise InputError(f"alpha must lie in (0, 1], got {alpha}")

    src_point = source.points[0]
    src_mass = source.total_mass()
    build = _INITIALIZERS[config.initializer]
    net = build(src_point, src_mass, targets, alpha)

    all_points = np.vstack([source.points, targets.points])
    eps_improve = cost_tolerance(diameter(all_points), src_mass, alpha)

    def notify(stage: str) -> None:
        if observer is not None:
            observer(stage, net)

    notify("init")
    cost = net.cost_m_alpha(alpha)
    if trace is not None:
        trace.append(("init", None, cost, cost))

    for _ in range(config.max_rounds):
        round_snapshot = net.copy()
        round_start = cost
        local_sweep(net, alpha, config, eps_improve=eps_improve, trace=trace,
                    on_sweep=lambda n: notify("local_sweep"))
        if alpha != 1.0:
            subdivide_long_edges(net, config)
            notify("subdivide")
            reparent_pass(net, alpha, eps_improve, trace=trace)
            notify("reparent")
        cost = net.cost_m_alpha(alpha)
        improvement = round_start - cost
        if improvement <= 0.0:
            net.restore_from(round_snapshot)
            cost = round_start
            notify("round")
            if trace is not None:
                trace.append(("round", None, round_start, cost))
            break
        notify("round")
        if trace is not None:
            trace.append(("round", None, round_start, cost))
        if improvement <= config.rel_tol * max(abs(round_start), 1e-300):
            break

    net.canonicalize(collapse_passthrough=True)
    notify("final")
    if trace is not None:
        trace.append(("final", None, cost, net.cost_m_alpha(alpha)))
    return net
