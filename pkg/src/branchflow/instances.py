"""Problem instances: parsing, synthetic generators, and network JSON.

An instance is one single-atom source plus an atomic target measure and a
concavity exponent alpha.  Instances arrive either as explicit atom lists
(JSON or CSV) or as a generator spec (kind, count, region) expanded with a
seeded PCG64 stream so that synthetic point clouds are reproducible.

Network serialization is a flat JSON document
    {alpha, vertices: [{id, coords}], edges: [{from, to, weight}], cost}
written with sorted keys and fixed separators, so identical networks always
produce identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .config import mass_tolerance
from .errors import InputError
from .measures import AtomicMeasure
from .network import TransportNetwork

GENERATORS = ("uniform-square", "circle", "disk-random", "disk-uniform")

DEFAULT_SEED = 0


@dataclass(frozen=True)
class Instance:
    alpha: float
    source_point: np.ndarray
    source_mass: float
    targets: AtomicMeasure
    seed: int | None = None

    def source_measure(self) -> AtomicMeasure:
        return AtomicMeasure([self.source_point], [self.source_mass])

    def validate(self) -> None:
        if not (0.0 < self.alpha <= 1.0):
            raise InputError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not np.all(np.isfinite(self.source_point)):
            raise InputError(f"source point is not finite: {self.source_point}")
        if not (np.isfinite(self.source_mass) and self.source_mass > 0):
            raise InputError(f"source mass must be positive, got {self.source_mass}")
        if self.targets.dimension != self.source_point.shape[0]:
            raise InputError(
                f"source has dimension {self.source_point.shape[0]} but targets "
                f"have dimension {self.targets.dimension}")
        for v in self.targets.validate():
            raise InputError(f"target atom {v.index}: {v.kind} ({v.detail})")
        gap = abs(self.targets.total_mass() - self.source_mass)
        if gap > mass_tolerance(self.source_mass):
            raise InputError(
                f"target masses sum to {self.targets.total_mass()!r} but the "
                f"source supplies {self.source_mass!r}")


# ---------------- synthetic point generators ----------------

def _rng(seed: int | None) -> np.random.Generator:
    # PCG64 is pinned (not default_rng) so documented streams stay stable.
    return np.random.Generator(np.random.PCG64(DEFAULT_SEED if seed is None else seed))


def generate_points(kind: str, count: int, region: dict | None,
                    seed: int | None) -> np.ndarray:
    """Expand a generator spec into an (n, d) coordinate array.

    uniform-square: i.i.d. uniform draws from an axis-aligned box
                    {"low": [...], "high": [...]}, default unit square.
    circle:         count points equally spaced on a circle (no randomness),
                    {"center": [...], "radius": r}, default unit circle.
    disk-random:    uniform area draws from a disk via r = R*sqrt(u).
    disk-uniform:   deterministic sunflower layout (golden-angle spiral).
    """
    if kind not in GENERATORS:
        raise InputError(f"unknown generator kind {kind!r}; expected one of {GENERATORS}")
    if count < 1:
        raise InputError(f"generator count must be >= 1, got {count}")
    region = dict(region or {})

    if kind == "uniform-square":
        low = np.asarray(region.pop("low", (0.0, 0.0)), dtype=float)
        high = np.asarray(region.pop("high", (1.0, 1.0)), dtype=float)
        if region:
            raise InputError(f"unexpected region keys {sorted(region)} for {kind}")
        if low.shape != high.shape or low.ndim != 1 or low.shape[0] < 2:
            raise InputError("uniform-square region needs matching low/high vectors, d >= 2")
        if not np.all(high > low):
            raise InputError("uniform-square region must satisfy high > low componentwise")
        u = _rng(seed).uniform(size=(count, low.shape[0]))
        return low + u * (high - low)

    center = np.asarray(region.pop("center", (0.0, 0.0)), dtype=float)
    radius = float(region.pop("radius", 1.0))
    if region:
        raise InputError(f"unexpected region keys {sorted(region)} for {kind}")
    if center.shape != (2,):
        raise InputError(f"{kind} generator is planar; center must have 2 coordinates")
    if not (np.isfinite(radius) and radius > 0):
        raise InputError(f"{kind} radius must be positive, got {radius}")

    if kind == "circle":
        theta = 2.0 * np.pi * np.arange(count) / count
        return center + radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)

    if kind == "disk-random":
        gen = _rng(seed)
        r = radius * np.sqrt(gen.uniform(size=count))
        theta = 2.0 * np.pi * gen.uniform(size=count)
        return center + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)

    # disk-uniform: sunflower arrangement, radius scaled so area density is even
    i = np.arange(count, dtype=float)
    golden = np.pi * (3.0 - np.sqrt(5.0))
    r = radius * np.sqrt((i + 0.5) / count)
    theta = golden * i
    return center + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


# ---------------- instance parsing ----------------

def parse_instance(data: bytes | str, fmt: str, alpha: float | None = None,
                   seed: int | None = None) -> Instance:
    """Parse an instance document; `alpha`/`seed` arguments override the file.

    JSON schema: {"alpha": a, "seed": s, "source": {"point": [...], "mass": m},
    and either "targets": [{"point": [...], "mass": m}, ...] or
    "generator": {"kind": k, "count": n, "region": {...}}}.  Generated targets
    share the source mass equally.

    CSV schema: header x,y[,z...],mass; the first data row is the source;
    alpha must be supplied by the caller.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    if fmt == "json":
        inst = _parse_json(data, alpha, seed)
    elif fmt == "csv":
        inst = _parse_csv(data, alpha, seed)
    else:
        raise InputError(f"unknown instance format {fmt!r}; expected json or csv")
    inst.validate()
    return inst


def _parse_json(text: str, alpha: float | None, seed: int | None) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError("instance document must be a JSON object")

    if alpha is None:
        alpha = doc.get("alpha")
        if alpha is None:
            raise InputError("alpha missing: set it in the document or pass --alpha")
    if seed is None:
        seed = doc.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise InputError(f"seed must be an integer, got {seed!r}")

    src = doc.get("source")
    if not isinstance(src, dict) or "point" not in src or "mass" not in src:
        raise InputError('source must be an object {"point": [...], "mass": m}')
    source_point = _point(src["point"], "source.point")
    source_mass = _mass(src["mass"], "source.mass")

    has_targets = "targets" in doc
    has_generator = "generator" in doc
    if has_targets == has_generator:
        raise InputError('exactly one of "targets" or "generator" is required')

    if has_targets:
        rows = doc["targets"]
        if not isinstance(rows, list) or not rows:
            raise InputError("targets must be a non-empty list")
        pts, ms = [], []
        for i, row in enumerate(rows):
            if not isinstance(row, dict) or "point" not in row or "mass" not in row:
                raise InputError(f'targets[{i}] must be {{"point": [...], "mass": m}}')
            pts.append(_point(row["point"], f"targets[{i}].point"))
            ms.append(_mass(row["mass"], f"targets[{i}].mass"))
        if len({p.shape[0] for p in pts}) != 1:
            raise InputError("target points must share one dimension")
        targets = AtomicMeasure(np.stack(pts), np.array(ms))
    else:
        spec = doc["generator"]
        if not isinstance(spec, dict) or "kind" not in spec or "count" not in spec:
            raise InputError('generator must be {"kind": k, "count": n, "region": {...}}')
        count = spec["count"]
        if not isinstance(count, int):
            raise InputError(f"generator count must be an integer, got {count!r}")
        pts = generate_points(spec["kind"], count, spec.get("region"), seed)
        targets = AtomicMeasure(pts, np.full(count, source_mass / count))

    return Instance(float(alpha), source_point, source_mass, targets,
                    seed=seed)


def _parse_csv(text: str, alpha: float | None, seed: int | None) -> Instance:
    if alpha is None:
        raise InputError("alpha must be passed explicitly for csv input")
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if len(rows) < 3:
        raise InputError("csv needs a header, a source row, and at least one target row")
    header = [c.strip().lower() for c in rows[0]]
    if len(header) < 3 or header[0] != "x" or header[1] != "y" or header[-1] != "mass":
        raise InputError(f"csv header must be x,y[,z...],mass, got {rows[0]}")
    width = len(header)

    def parse_row(row: list[str], lineno: int) -> tuple[np.ndarray, float]:
        if len(row) != width:
            raise InputError(f"csv line {lineno}: expected {width} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise InputError(f"csv line {lineno}: {exc}") from None
        return np.array(vals[:-1]), vals[-1]

    source_point, source_mass = parse_row(rows[1], 2)
    pts, ms = [], []
    for i, row in enumerate(rows[2:], start=3):
        p, m = parse_row(row, i)
        pts.append(p)
        ms.append(m)
    targets = AtomicMeasure(np.stack(pts), np.array(ms))
    return Instance(float(alpha), source_point, source_mass, targets, seed=seed)


def _point(val, where: str) -> np.ndarray:
    arr = np.asarray(val, dtype=float)
    if arr.ndim != 1 or arr.shape[0] < 2:
        raise InputError(f"{where} must be a coordinate list with d >= 2")
    return arr


def _mass(val, where: str) -> float:
    try:
        m = float(val)
    except (TypeError, ValueError):
        raise InputError(f"{where} must be a number, got {val!r}") from None
    if not (np.isfinite(m) and m > 0):
        raise InputError(f"{where} must be positive and finite, got {m}")
    return m


# ---------------- network JSON ----------------

def export_network(net: TransportNetwork, alpha: float) -> bytes:
    doc = {
        "alpha": alpha,
        "cost": net.cost_m_alpha(alpha),
        "vertices": [
            {"id": v, "coords": [float(c) for c in net.point(v)]}
            for v in net.vertices()
        ],
        "edges": [
            {"from": p, "to": c, "weight": w} for p, c, w in net.edges()
        ],
    }
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")


def import_network(data: bytes | str) -> tuple[TransportNetwork, float]:
    """Rebuild a network from export_network bytes (test plumbing).

    The root is the unique vertex with no incoming edge and must carry id 0,
    as every export from this package does.  Childless vertices are marked
    terminal; the schema does not record flow-through target identity.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed network JSON: {exc}") from None
    try:
        alpha = float(doc["alpha"])
        vertices = {int(v["id"]): np.asarray(v["coords"], dtype=float)
                    for v in doc["vertices"]}
        edges = [(int(e["from"]), int(e["to"]), float(e["weight"]))
                 for e in doc["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed network document: {exc}") from None

    has_parent = {c for _, c, _ in edges}
    has_child = {p for p, _, _ in edges}
    roots = [v for v in sorted(vertices) if v not in has_parent]
    if len(roots) != 1 or roots[0] != 0:
        raise InputError(f"network must have the single parentless root 0, found {roots}")
    source_mass = sum(w for p, _, w in edges if p == 0)
    if source_mass <= 0:
        raise InputError("root has no outgoing flow")

    net = TransportNetwork(vertices[0], source_mass)
    for vid in sorted(vertices):
        if vid != 0:
            net.add_vertex(vertices[vid], terminal=vid not in has_child, vid=vid)
    for p, c, w in sorted(edges, key=lambda e: e[1]):
        net.add_edge(p, c, w)
    return net, alpha
