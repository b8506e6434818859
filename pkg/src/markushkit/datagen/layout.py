"""Deterministic 2D coordinates for Markush backbones.

Rings are regular polygons fused edge-on-edge, chains grow in a 120 degree
zig-zag, and overlapping atoms are pushed apart by a short, fixed-budget
relaxation. Coordinates are in bond-length units with y pointing up.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from ..chemgraph import BondOrder, MolecularGraph
from ..cxsmiles import MarkushStructure
from .augment import ring_cycles

RELAX_ITERATIONS = 80
MIN_SEPARATION = 0.7


def _unit(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)])


def _angle(v: np.ndarray) -> float:
    return math.atan2(v[1], v[0])


def _wrap(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


class _Placer:
    def __init__(self, graph: MolecularGraph, cycles: list[list[int]]):
        self.graph = graph
        self.cycles = cycles
        self.pos: dict[int, np.ndarray] = {}
        self.cycles_of: dict[int, list[list[int]]] = {}
        for c in cycles:
            for a in c:
                self.cycles_of.setdefault(a, []).append(c)

    def placed_neighbors(self, u: int) -> list[int]:
        return [v for v, _ in self.graph.neighbors(u) if v in self.pos]

    def clearance(self, p: np.ndarray, ignore: set[int] = frozenset()) -> float:
        others = [q for k, q in self.pos.items() if k not in ignore]
        if not others:
            return math.inf
        return float(np.min(np.linalg.norm(np.array(others) - p, axis=1)))

    def place_ring(self, cyc: list[int], origin: np.ndarray | None = None) -> list[int]:
        n = len(cyc)
        radius = 1.0 / (2 * math.sin(math.pi / n))
        apothem = radius * math.cos(math.pi / n)
        step = 2 * math.pi / n
        done = [k for k, a in enumerate(cyc) if a in self.pos]
        pair = next(((k, (k + 1) % n) for k in done if (k + 1) % n in done), None)
        if pair is not None:
            k0, k1 = pair
            pa, pb = self.pos[cyc[k0]], self.pos[cyc[k1]]
            mid = (pa + pb) / 2
            e = pb - pa
            perp = np.array([-e[1], e[0]]) / (np.linalg.norm(e) or 1.0)
            ignore = {cyc[k0], cyc[k1]}
            sides = [mid + perp * apothem, mid - perp * apothem]
            center = sides[0] if self.clearance(sides[0], ignore) >= self.clearance(sides[1], ignore) \
                else sides[1]
            t0 = _angle(pa - center)
            sign = 1.0 if _wrap(_angle(pb - center) - t0) > 0 else -1.0
        elif done:
            k0 = done[0]
            pa = self.pos[cyc[k0]]
            nbrs = self.placed_neighbors(cyc[k0])
            d = np.zeros(2)
            for v in nbrs:
                w = pa - self.pos[v]
                d += w / (np.linalg.norm(w) or 1.0)
            if np.linalg.norm(d) < 1e-9:
                d = np.array([0.0, 1.0]) if not nbrs else np.array([-d[1], d[0]]) + 1e-3
            d /= np.linalg.norm(d)
            center = pa + d * radius
            t0 = _angle(pa - center)
            sign = 1.0
        else:
            k0 = 0
            center = origin if origin is not None else np.zeros(2)
            t0 = -math.pi / 2 - (math.pi / n if n % 2 == 0 else 0.0)
            sign = 1.0
        new = []
        for k, a in enumerate(cyc):
            if a not in self.pos:
                self.pos[a] = center + radius * _unit(t0 + sign * step * (k - k0))
                new.append(a)
        return new

    def place_branches(self, u: int, new: list[int]) -> None:
        pu = self.pos[u]
        existing = sorted(_angle(self.pos[v] - pu) for v in self.placed_neighbors(u))
        k = len(new)
        if not existing:
            angles = [math.radians(-30) + 2 * math.pi * j / k for j in range(k)]
        elif len(existing) == 1:
            phi = existing[0]
            linear = any(self.graph.bond_order(u, v) == BondOrder.TRIPLE
                         for v in new + self.placed_neighbors(u))
            if k == 1 and linear:
                angles = [phi + math.pi]
            elif k == 1:
                cands = [phi + 2 * math.pi / 3, phi - 2 * math.pi / 3]
                parent = self.placed_neighbors(u)[0]
                grand = [g for g in self.placed_neighbors(parent) if g != u]
                if grand:
                    trend = self.pos[parent] - self.pos[grand[0]]
                    cands.sort(key=lambda a: abs(_wrap(a - _angle(trend))))
                best = cands[0]
                if self.clearance(pu + _unit(best), {u}) < MIN_SEPARATION:
                    best = max(cands, key=lambda a: self.clearance(pu + _unit(a), {u}))
                angles = [best]
            else:
                angles = [phi + 2 * math.pi * j / (k + 1) for j in range(1, k + 1)]
        else:
            gaps = []
            for j, a in enumerate(existing):
                b = existing[(j + 1) % len(existing)]
                gap = (b - a) % (2 * math.pi) or 2 * math.pi
                gaps.append((gap, a))
            gap, start = max(gaps, key=lambda g: (round(g[0], 9), -g[1]))
            angles = [start + gap * j / (k + 1) for j in range(1, k + 1)]
            if k == 1:
                # crowded centres (ring fusions): take the roomiest direction
                mean = sum(_unit(a) for a in existing)
                cands = [a + g / 2 for g, a in gaps]
                if np.linalg.norm(mean) > 1e-6:
                    cands.insert(0, _angle(-mean))
                angles = [max(cands, key=lambda a: self.clearance(pu + _unit(a), {u}) - 1e-6 * cands.index(a))]
        for v, a in zip(new, angles):
            self.pos[v] = pu + _unit(a)

    def run(self, component: list[int]) -> None:
        comp = set(component)
        if self.cycles:
            # largest ring first; ties keep ring_cycles order
            first = max(self.cycles, key=len)
            queue = deque(self.place_ring(first))
        else:
            ends = [a for a in component if self.graph.degree(a) <= 1]
            start = ends[0] if ends else component[0]
            self.pos[start] = np.zeros(2)
            queue = deque([start])
        while queue:
            u = queue.popleft()
            pending = [c for c in self.cycles_of.get(u, []) if any(a not in self.pos for a in c)]
            while pending:
                pending.sort(key=lambda c: (-sum(a in self.pos for a in c), len(c)))
                queue.extend(self.place_ring(pending[0]))
                pending = [c for c in pending if any(a not in self.pos for a in c)]
            new = [v for v, _ in self.graph.neighbors(u) if v not in self.pos and v in comp]
            if new:
                self.place_branches(u, new)
                queue.extend(new)


def relax(coords: np.ndarray, bonds: list[tuple[int, int]],
          iterations: int = RELAX_ITERATIONS) -> np.ndarray:
    """Push apart non-bonded atoms closer than MIN_SEPARATION.

    Bonded pairs and atoms two bonds apart are held at their starting
    distances, which keeps rings and bond angles close to their templates.
    """
    xy = coords.astype(float).copy()
    n = len(xy)
    if n < 2:
        return xy
    adj = [set() for _ in range(n)]
    for a, b in bonds:
        adj[a].add(b)
        adj[b].add(a)
    pairs = {(min(a, b), max(a, b)) for a, b in bonds}
    for u in range(n):
        for v in adj[u]:
            for w in adj[v]:
                if w != u:
                    pairs.add((min(u, w), max(u, w)))
    near = np.zeros((n, n), dtype=bool)
    for a, b in pairs:
        near[a, b] = near[b, a] = True
    np.fill_diagonal(near, True)
    pairs = sorted(pairs)
    ia = np.array([a for a, _ in pairs], dtype=int)
    ib = np.array([b for _, b in pairs], dtype=int)
    rest = np.linalg.norm(xy[ib] - xy[ia], axis=1) if pairs else np.zeros(0)
    idx = np.arange(n)
    nudge = np.stack([np.cos(idx - idx[:, None]), np.sin(idx - idx[:, None])], -1)
    for _ in range(iterations):
        diff = xy[:, None, :] - xy[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        close = (dist < MIN_SEPARATION) & ~near
        if not close.any():
            break
        safe = np.where(dist < 1e-6, 1.0, dist)
        # coincident atoms get a fixed, index-dependent direction
        direction = np.where((dist < 1e-6)[..., None], nudge, diff / safe[..., None])
        push = np.where(close, (MIN_SEPARATION - dist) * 0.5, 0.0)
        move = (direction * push[..., None]).sum(axis=1)
        if len(ia):
            v = xy[ib] - xy[ia]
            length = np.linalg.norm(v, axis=1)
            corr = ((length - rest) / np.where(length < 1e-9, 1.0, length))[:, None] * v * 0.3
            np.add.at(move, ia, corr)
            np.add.at(move, ib, -corr)
        xy += move
    return xy


def overlap_penalty(xy: np.ndarray, near: np.ndarray, limit: float = 0.9) -> float:
    dist = np.linalg.norm(xy[:, None, :] - xy[None, :, :], axis=-1)
    return float(np.where(near, 0.0, np.clip(limit - dist, 0.0, None)).sum() / 2)


def untangle(xy: np.ndarray, graph: MolecularGraph, passes: int = 5) -> np.ndarray:
    """Mirror or swing subtrees about acyclic bonds while that reduces overlaps."""
    n = len(xy)
    if n < 4:
        return xy
    xy = xy.copy()
    near = np.eye(n, dtype=bool)
    for b in graph.bonds:
        near[b.a, b.b] = near[b.b, b.a] = True
    ring = graph.ring_bonds
    bridges = [(b.a, b.b) for b in graph.bonds if (b.a, b.b) not in ring]
    sides = []
    for a, b in bridges:
        seen = {b}
        stack = [b]
        while stack:
            u = stack.pop()
            for v, _ in graph.neighbors(u):
                if v not in seen and not (u == b and v == a):
                    seen.add(v)
                    stack.append(v)
        comp_size = len(next(c for c in graph.components() if a in c))
        side = sorted(seen) if len(seen) <= comp_size - len(seen) else sorted(
            set(next(c for c in graph.components() if a in c)) - seen)
        sides.append((a, b, side))
    best = overlap_penalty(xy, near)
    for _ in range(passes):
        improved = False
        for a, b, side in sides:
            if best <= 0:
                return xy
            p, q = xy[a], xy[b]
            d = q - p
            norm = np.linalg.norm(d)
            if norm < 1e-9 or len(side) < 2:
                continue
            d = d / norm
            rel = xy[side] - p
            along = rel @ d
            mirrored = xy.copy()
            mirrored[side] = p + 2 * along[:, None] * d[None, :] - rel
            trials = [mirrored]
            for theta in (math.pi / 3, -math.pi / 3):
                c, s_ = math.cos(theta), math.sin(theta)
                rot = np.array([[c, -s_], [s_, c]])
                turned = xy.copy()
                turned[side] = p + rel @ rot.T
                trials.append(turned)
            for trial in trials:
                score = overlap_penalty(trial, near)
                if score < best - 1e-9:
                    xy, best, improved = trial, score, True
                    break
        if not improved:
            break
    return xy


def layout_markush(ms: MarkushStructure) -> np.ndarray:
    """(n_atoms, 2) coordinates; position-variation fragments sit beside their ring."""
    graph = ms.graph
    n = len(graph.atoms)
    if n == 0:
        return np.zeros((0, 2))
    cycles = ring_cycles(graph)
    comps = graph.components()
    anchored: dict[int, int] = {}
    for k, pv in enumerate(ms.position_variations):
        for ci, comp in enumerate(comps):
            if pv.endpoint_atom in comp and not set(pv.candidate_atoms) & set(comp):
                anchored.setdefault(ci, k)

    coords: dict[int, np.ndarray] = {}
    right_edge = None
    for ci, comp in enumerate(comps):
        if ci in anchored:
            continue
        sub = _Placer(graph, [c for c in cycles if set(c) <= set(comp)])
        sub.run(comp)
        pts = np.array([sub.pos[a] for a in comp])
        if right_edge is not None:
            shift = np.array([right_edge + 1.5 - pts[:, 0].min(), -pts[:, 1].mean()])
            pts = pts + shift
        right_edge = pts[:, 0].max()
        coords.update({a: p for a, p in zip(comp, pts)})

    for ci, k in sorted(anchored.items(), key=lambda t: t[1]):
        comp = comps[ci]
        pv = ms.position_variations[k]
        cands = [a for a in pv.candidate_atoms if a in coords]
        sub = _Placer(graph, [c for c in cycles if set(c) <= set(comp)])
        end = pv.endpoint_atom
        sub.pos[end] = np.zeros(2)
        queue = deque([end])
        while queue:
            u = queue.popleft()
            for c in sub.cycles_of.get(u, []):
                if any(a not in sub.pos for a in c):
                    queue.extend(sub.place_ring(c))
            new = [v for v, _ in graph.neighbors(u) if v not in sub.pos]
            if new:
                sub.place_branches(u, new)
                queue.extend(new)
        local = {a: sub.pos[a] for a in comp}
        if not cands or not coords:
            base = np.array([(right_edge or 0.0) + 1.5, 0.0])
            coords.update({a: p + base for a, p in local.items()})
            right_edge = max(p[0] for p in coords.values())
            continue
        center = np.mean([coords[a] for a in cands], axis=0)
        ring_r = max(float(np.linalg.norm(coords[a] - center)) for a in cands)
        body = np.mean(list(coords.values()), axis=0)
        radial = center - body
        base_angle = _angle(radial) if np.linalg.norm(radial) > 1e-6 else math.pi / 2
        spread = np.mean([local[a] for a in comp], axis=0) - local[end]
        frag_angle = _angle(spread) if np.linalg.norm(spread) > 1e-6 else 0.0
        others = np.array(list(coords.values()))
        best = None
        for j in range(12):
            theta = base_angle + (1 if j % 2 else -1) * math.pi / 6 * ((j + 1) // 2)
            rot = theta - frag_angle
            c, s = math.cos(rot), math.sin(rot)
            anchor = center + _unit(theta) * (ring_r + 1.0)
            pts = {a: anchor + np.array([c * p[0] - s * p[1], s * p[0] + c * p[1]])
                   for a, p in local.items()}
            arr = np.array(list(pts.values()))
            gap = float(np.min(np.linalg.norm(arr[:, None] - others[None], axis=-1)))
            if best is None or gap > best[0] + 1e-9:
                best = (gap, pts)
            if gap >= 0.9:
                break
        coords.update(best[1])

    xy = untangle(np.array([coords[i] for i in range(n)]), graph)
    return relax(xy, [(b.a, b.b) for b in graph.bonds])
