"""Local improvement: rebuild the one-vertex star around each vertex.

For a non-root vertex u with children, the edges touching u form a small
transport problem of their own: mass edge_mass(u) enters from parent(u) and
must reach the children (plus whatever u itself consumes, when u is a
target that passes flow onward).  Rebuilding that sub-problem from scratch
with the greedy small-case constructor and splicing the result back in when
it is strictly cheaper relocates junctions and dissolves useless ones.
Sweeping all vertices until a full sweep stops paying drives the network to
a local minimum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import OptimizeConfig, cost_tolerance, mass_tolerance
from .construct import _Active, _greedy_small
from .measures import AtomicMeasure
from .network import TransportNetwork


@dataclass(frozen=True)
class VertexStar:
    center: int
    mu_p: AtomicMeasure  # the inflow, one atom at the parent's position
    mu_c: AtomicMeasure  # children masses, plus mass consumed at the center
    old_cost: float


def star_cost(net: TransportNetwork, u: int, alpha: float) -> float:
    """Cost of the edges touching u from above and below."""
    total = net.edge_mass(u) ** alpha * net.edge_length(u)
    for child in net.children(u):
        total += net.edge_mass(child) ** alpha * net.edge_length(child)
    return total


def _star_pool(net: TransportNetwork, u: int) -> list[tuple[int, np.ndarray, float]] | None:
    """Vertices the rebuilt star must reach: children, plus u itself when it
    consumes mass as a target.  None when u's star should not be touched."""
    m_u = net.edge_mass(u)
    pool = [(child, net.point(child).copy(), net.edge_mass(child))
            for child in net.children(u)]
    consumed = m_u - sum(m for _, _, m in pool)
    if net.is_terminal(u):
        if consumed <= 0.0:
            return None  # corrupt flow-through target; leave it alone
        pool.append((u, net.point(u).copy(), consumed))
    elif abs(consumed) > mass_tolerance(net.source_mass):
        return None  # helper vertex leaking flow: refuse to touch it
    return pool


def extract_star(net: TransportNetwork, u: int, alpha: float) -> VertexStar | None:
    """The local sub-problem around u, or None when u is the root, a leaf,
    or disconnected."""
    if u == net.root or not net.children(u) or net.parent(u) is None:
        return None
    pool = _star_pool(net, u)
    if pool is None:
        return None
    mu_p = AtomicMeasure([net.point(net.parent(u)).copy()], [net.edge_mass(u)])
    mu_c = AtomicMeasure.from_atoms([(pt, m) for _, pt, m in pool])
    return VertexStar(center=u, mu_p=mu_p, mu_c=mu_c, old_cost=star_cost(net, u, alpha))


def improve_vertex(net: TransportNetwork, u: int, alpha: float,
                   eps_improve: float, trace: list | None = None) -> bool:
    """Rebuild u's star and splice the result in when strictly cheaper.

    Acceptance is judged by direct recomputation of the full network cost,
    so every accepted move lowers the true cost by more than eps_improve;
    a candidate that fails that check is rolled back.
    """
    if u == net.root or not net.children(u) or net.parent(u) is None:
        return False
    pool_spec = _star_pool(net, u)
    if pool_spec is None:
        return False
    parent = net.parent(u)
    m_u = net.edge_mass(u)
    p_point = net.point(parent)

    # score the candidate star on a scratch network first
    scratch = TransportNetwork(p_point, m_u)
    scratch_pool = [_Active(scratch.add_vertex(pt, terminal=True), pt, m)
                    for _, pt, m in pool_spec]
    _greedy_small(scratch, scratch.root, m_u, scratch_pool, alpha)
    if star_cost(net, u, alpha) - scratch.cost_m_alpha(alpha) <= eps_improve:
        return False

    snapshot = net.copy()
    cost_before = net.cost_m_alpha(alpha)

    net.remove_edge(u)
    for child in list(net.children(u)):
        net.remove_edge(child)
    if not net.is_terminal(u):
        net.remove_vertex(u)
    live_pool = [_Active(vid, pt, m) for vid, pt, m in pool_spec]
    _greedy_small(net, parent, m_u, live_pool, alpha)

    cost_after = net.cost_m_alpha(alpha)
    if cost_before - cost_after <= eps_improve:
        net.restore_from(snapshot)
        return False
    if trace is not None:
        trace.append(("local", u, cost_before, cost_after))
    return True


def local_sweep(net: TransportNetwork, alpha: float, config: OptimizeConfig | None = None,
                eps_improve: float | None = None, trace: list | None = None,
                on_sweep=None) -> float:
    """Sweep improve_vertex over the tree until a full pass stops paying.

    Returns the final cost.  Sweeps visit vertices in breadth-first order
    from the root; vertices spliced away mid-sweep are skipped.
    """
    if config is None:
        config = OptimizeConfig()
    if eps_improve is None:
        eps_improve = cost_tolerance(net.bbox_diameter(), net.source_mass, alpha)
    cost = net.cost_m_alpha(alpha)
    for _ in range(config.max_local_sweeps):
        improved = False
        for u in net.bfs_order():
            if not net.has_vertex(u):
                continue
            if improve_vertex(net, u, alpha, eps_improve, trace=trace):
                improved = True
        new_cost = net.cost_m_alpha(alpha)
        if on_sweep is not None:
            on_sweep(net)
        stalled = cost - new_cost <= config.rel_tol * max(abs(cost), 1e-300)
        cost = new_cost
        if not improved or stalled:
            break
    return cost
