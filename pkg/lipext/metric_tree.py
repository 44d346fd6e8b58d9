"""
Arbres métriques finis : points sur les arêtes, distances géodésiques exactes,
minimisation exacte sur les intersections de boules, extension et transport
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .config import DEFAULT_TOLERANCES
from .exceptions import InfeasibleError, LipschitzError, PreconditionError
from .metric_core import ExtensionResult, PartialMap, lip_constant, pair_violation, sup_distance


@dataclass(frozen=True)
class TreePoint:
    """
    Point d'un arbre : arête et abscisse depuis son extrémité de plus petit indice

    Un sommet est représenté sur son arête incidente de plus petit identifiant.
    """

    edge: int
    offset: float
    tree: Optional["WeightedTree"] = field(default=None, compare=False, repr=False)


class WeightedTree:
    """
    Arbre fini pondéré

    Args:
        vertices: Nombre de sommets
        edges: Arêtes (u, v, longueur > 0)
    """

    def __init__(self, vertices: int, edges: Sequence[Sequence[float]]):
        self.vertices = int(vertices)
        if self.vertices < 2:
            raise ValueError("Un arbre doit avoir au moins 2 sommets")
        if len(edges) != self.vertices - 1:
            raise ValueError(
                f"{len(edges)} arêtes pour {self.vertices} sommets (attendu {self.vertices - 1})"
            )

        ends, lengths = [], []
        for u, v, length in edges:
            u, v, length = int(u), int(v), float(length)
            if u == v or not (0 <= u < self.vertices and 0 <= v < self.vertices):
                raise ValueError(f"Arête invalide ({u}, {v})")
            if not np.isfinite(length) or length <= 0:
                raise ValueError(f"Longueur d'arête invalide: {length}")
            ends.append((min(u, v), max(u, v)))
            lengths.append(length)

        self.edges = np.array(ends, dtype=int)
        self.lengths = np.array(lengths, dtype=float)
        self._edge_id: Dict[Tuple[int, int], int] = {}
        for e, (u, v) in enumerate(ends):
            if (u, v) in self._edge_id:
                raise ValueError(f"Arête répétée ({u}, {v})")
            self._edge_id[(u, v)] = e

        graph = csr_matrix(
            (self.lengths, (self.edges[:, 0], self.edges[:, 1])),
            shape=(self.vertices, self.vertices),
        )
        self.vertex_dist, self._pred = shortest_path(
            graph, directed=False, return_predecessors=True
        )
        if not np.all(np.isfinite(self.vertex_dist)):
            raise ValueError("Arbre non connexe")

        self._lowest_edge = np.full(self.vertices, -1)
        for e in range(len(ends) - 1, -1, -1):
            self._lowest_edge[self.edges[e]] = e

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, WeightedTree)
            and self.vertices == other.vertices
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.lengths, other.lengths)
        )

    def __hash__(self) -> int:
        return hash((self.vertices, self.edges.tobytes(), self.lengths.tobytes()))

    def __repr__(self) -> str:
        return f"WeightedTree({self.vertices} sommets)"

    @property
    def edge_count(self) -> int:
        return len(self.lengths)

    def vertex_point(self, v: int) -> TreePoint:
        """Forme canonique du sommet v"""
        e = int(self._lowest_edge[v])
        offset = 0.0 if self.edges[e, 0] == v else float(self.lengths[e])
        return TreePoint(e, offset, self)

    def point(self, edge: int, offset: float) -> TreePoint:
        """Point canonique à l'abscisse offset sur l'arête edge"""
        edge = int(edge)
        if not 0 <= edge < self.edge_count:
            raise ValueError(f"Arête {edge} hors de l'arbre")
        offset = float(offset)
        length = self.lengths[edge]
        if not (0 <= offset <= length) or not np.isfinite(offset):
            raise ValueError(f"Abscisse {offset} hors de [0, {length}]")
        if offset == 0:
            return self.vertex_point(int(self.edges[edge, 0]))
        if offset == length:
            return self.vertex_point(int(self.edges[edge, 1]))
        return TreePoint(edge, offset, self)

    def _check(self, p: TreePoint):
        if p.tree is not None and p.tree is not self and p.tree != self:
            raise ValueError("Points issus d'arbres différents")
        if not 0 <= p.edge < self.edge_count or not 0 <= p.offset <= self.lengths[p.edge]:
            raise ValueError(f"Point {p} hors de l'arbre")

    def vertex_distances(self, p: TreePoint) -> np.ndarray:
        """Distances de p à tous les sommets"""
        self._check(p)
        u, v = self.edges[p.edge]
        t, length = p.offset, self.lengths[p.edge]
        return np.minimum(t + self.vertex_dist[u], length - t + self.vertex_dist[v])

    def distance(self, p: TreePoint, q: TreePoint) -> float:
        self._check(q)
        if p.edge == q.edge:
            self._check(p)
            return abs(p.offset - q.offset)
        dv = self.vertex_distances(p)
        u, v = self.edges[q.edge]
        return float(min(q.offset + dv[u], self.lengths[q.edge] - q.offset + dv[v]))

    def describe(self) -> dict:
        return {
            "kind": "tree",
            "vertices": self.vertices,
            "edges": [
                [int(u), int(v), float(length)]
                for (u, v), length in zip(self.edges, self.lengths)
            ],
        }

    def _vertex_path(self, x: int, y: int) -> List[int]:
        path = [y]
        while path[-1] != x:
            path.append(int(self._pred[x, path[-1]]))
        return path[::-1]


def tree_distance(p: TreePoint, q: TreePoint, tree: Optional[WeightedTree] = None) -> float:
    """
    Longueur exacte de la géodésique entre p et q

    Raises:
        ValueError: points issus d'arbres différents
    """
    if p.tree is not None and q.tree is not None and p.tree is not q.tree and p.tree != q.tree:
        raise ValueError("Points issus d'arbres différents")
    tree = tree or p.tree or q.tree
    if tree is None:
        raise ValueError("Arbre inconnu")
    return tree.distance(p, q)


class TreeSpace:
    """Cible arborescente (interface commune avec EuclideanSpace/SupNormSpace)"""

    kind = "tree"

    def __init__(self, tree: WeightedTree):
        self.tree = tree

    def __eq__(self, other) -> bool:
        return isinstance(other, TreeSpace) and self.tree == other.tree

    def __hash__(self) -> int:
        return hash(self.tree)

    def __repr__(self) -> str:
        return f"TreeSpace({self.tree!r})"

    def validate_point(self, p) -> TreePoint:
        if isinstance(p, TreePoint):
            self.tree._check(p)
            return self.tree.point(p.edge, p.offset)
        edge, offset = p
        return self.tree.point(edge, offset)

    def as_values(self, values) -> List[TreePoint]:
        return [self.validate_point(p) for p in values]

    def subset(self, values, indices) -> List[TreePoint]:
        return [values[int(i)] for i in np.asarray(indices).reshape(-1)]

    def stack(self, points) -> List[TreePoint]:
        return list(points)

    def distance(self, p, q) -> float:
        return self.tree.distance(p, q)

    def cross_distances(self, P, Q) -> np.ndarray:
        out = np.empty((len(P), len(Q)))
        for i, p in enumerate(P):
            dv = self.tree.vertex_distances(p)
            for j, q in enumerate(Q):
                if p.edge == q.edge:
                    out[i, j] = abs(p.offset - q.offset)
                else:
                    u, v = self.tree.edges[q.edge]
                    out[i, j] = min(
                        q.offset + dv[u], self.tree.lengths[q.edge] - q.offset + dv[v]
                    )
        return out

    def rowwise_distances(self, P, Q) -> np.ndarray:
        return np.array([self.tree.distance(p, q) for p, q in zip(P, Q)])

    def describe(self) -> dict:
        return self.tree.describe()

    def point_to_json(self, p: TreePoint) -> list:
        return [int(p.edge), float(p.offset)]

    def point_from_json(self, obj) -> TreePoint:
        return self.validate_point(obj)


def _edge_profiles(
    tree: WeightedTree, centers: Sequence[TreePoint], radii: np.ndarray, e: int
) -> Tuple[float, float]:
    """
    Sur l'arête e, max_j(d(p_t, c_j) - r_j) = max(t + Imax, Jmax - t)
    """
    u, v = tree.edges[e]
    length = tree.lengths[e]
    I, J = -np.inf, -np.inf
    for c, r in zip(centers, radii):
        if c.edge == e:
            I = max(I, -c.offset - r)
            J = max(J, c.offset - r)
            continue
        dv = tree.vertex_distances(c)
        a, b = dv[u], dv[v]
        if a <= b:
            I = max(I, a - r)
        else:
            J = max(J, length + b - r)
    return I, J


def _excess(t: float, I: float, J: float) -> float:
    return max(t + I, J - t)


def minimize_ball_excess(
    tree: WeightedTree, centers: Sequence[TreePoint], radii
) -> Tuple[TreePoint, float]:
    """
    Minimiseur exact de h(p) = max_j(d(p, c_j) - r_j) sur l'arbre

    Returns:
        (point canonique, min h); égalités départagées par arête puis abscisse
    """
    radii = np.asarray(radii, dtype=float).reshape(-1)
    if len(centers) == 0:
        raise ValueError("Liste de centres vide")
    best_point, best_value = None, np.inf
    for e in range(tree.edge_count):
        length = tree.lengths[e]
        I, J = _edge_profiles(tree, centers, radii, e)
        if I == -np.inf:
            t = length
        elif J == -np.inf:
            t = 0.0
        else:
            t = min(max((J - I) / 2, 0.0), length)
        value = _excess(t, I, J)
        if value < best_value:
            best_point, best_value = (e, t), value
    return tree.point(*best_point), float(best_value)


def _pairwise_tree_test(
    tree: WeightedTree, centers: Sequence[TreePoint], radii: np.ndarray, tol: float = 0.0
) -> Optional[Tuple[int, int]]:
    space = TreeSpace(tree)
    D = space.cross_distances(centers, centers)
    gap = D - (radii[:, None] + radii[None, :])
    bad = np.argwhere(np.triu(gap > tol, 1))
    return None if bad.size == 0 else (int(bad[0][0]), int(bad[0][1]))


def tree_ball_intersection(
    centers: Sequence[TreePoint], radii, tree: Optional[WeightedTree] = None
) -> Optional[TreePoint]:
    """
    Point commun à des boules fermées de l'arbre

    Args:
        centers: Centres
        radii: Rayons
        tree: Arbre (déduit des centres par défaut)

    Returns:
        Minimiseur exact de h si min h ≤ 0, sinon None

    Raises:
        InfeasibleError: désaccord avec le test par paires au-delà de 1e-12
    """
    tree = tree or centers[0].tree
    radii = np.asarray(radii, dtype=float).reshape(-1)
    point, value = minimize_ball_excess(tree, centers, radii)
    pair = _pairwise_tree_test(tree, centers, radii)

    tol = DEFAULT_TOLERANCES["pairwise_tol"]
    if (value <= 0) != (pair is None):
        residual = value if pair is None else (
            tree.distance(centers[pair[0]], centers[pair[1]]) - radii[pair[0]] - radii[pair[1]]
        )
        if residual > tol:
            raise InfeasibleError(
                f"Désaccord minimisation / test par paires ({residual:.3e})", pair=pair
            )
    return point if value <= 0 else None


def nearest_feasible_point(
    centers: Sequence[TreePoint],
    radii,
    anchor: TreePoint,
    tree: Optional[WeightedTree] = None,
) -> Optional[TreePoint]:
    """
    Point de ⋂ B(c_j, r_j) le plus proche de anchor (exact, arête par arête)

    Returns:
        Point canonique ou None si l'intersection est vide
    """
    tree = tree or anchor.tree
    radii = np.asarray(radii, dtype=float).reshape(-1)
    anchor_dv = tree.vertex_distances(anchor)
    best_point, best_value = None, np.inf

    for e in range(tree.edge_count):
        u, v = tree.edges[e]
        length = tree.lengths[e]
        I, J = _edge_profiles(tree, centers, radii, e)
        lo, hi = max(J, 0.0), min(-I, length)
        if lo > hi:
            continue
        if anchor.edge == e:
            t = min(max(anchor.offset, lo), hi)
            value = abs(t - anchor.offset)
        elif anchor_dv[u] <= anchor_dv[v]:
            t, value = lo, lo + anchor_dv[u]
        else:
            t, value = hi, length - hi + anchor_dv[v]
        if value < best_value:
            best_point, best_value = (e, t), value

    return None if best_point is None else tree.point(*best_point)


def tree_interpolate(p: TreePoint, q: TreePoint, t: float, tree: Optional[WeightedTree] = None) -> TreePoint:
    """
    Point à la fraction t ∈ [0, 1] de la géodésique de p vers q
    """
    tree = tree or p.tree or q.tree
    t = min(max(float(t), 0.0), 1.0)
    if p.edge == q.edge:
        return tree.point(p.edge, p.offset + (q.offset - p.offset) * t)

    total = tree.distance(p, q)
    target = t * total

    # extrémités de sortie de p et d'entrée dans l'arête de q
    up, vp = tree.edges[p.edge]
    uq, vq = tree.edges[q.edge]
    exits = [(up, p.offset), (vp, tree.lengths[p.edge] - p.offset)]
    entries = [(uq, q.offset), (vq, tree.lengths[q.edge] - q.offset)]
    x, y = min(
        ((a, b) for a in exits for b in entries),
        key=lambda ab: ab[0][1] + tree.vertex_dist[ab[0][0], ab[1][0]] + ab[1][1],
    )

    # segments orientés (arête, abscisse de départ, abscisse d'arrivée)
    segments = [(p.edge, p.offset, 0.0 if x[0] == up else tree.lengths[p.edge])]
    path = tree._vertex_path(int(x[0]), int(y[0]))
    for w1, w2 in zip(path[:-1], path[1:]):
        e = tree._edge_id[(min(w1, w2), max(w1, w2))]
        start = 0.0 if tree.edges[e, 0] == w1 else tree.lengths[e]
        segments.append((e, start, tree.lengths[e] - start))
    segments.append((q.edge, 0.0 if y[0] == uq else tree.lengths[q.edge], q.offset))

    walked = 0.0
    for e, start, end in segments:
        span = abs(end - start)
        if walked + span >= target:
            step = target - walked
            offset = start + step if end >= start else start - step
            return tree.point(e, min(max(offset, 0.0), tree.lengths[e]))
        walked += span
    return tree.point(q.edge, q.offset)


def four_point_slack(p, q, r, s, tree: Optional[WeightedTree] = None) -> float:
    """
    Condition des quatre points : deuxième plus grande somme moins la plus grande (≈ 0)
    """
    tree = tree or p.tree
    d = tree.distance
    sums = sorted([d(p, q) + d(r, s), d(p, r) + d(q, s), d(p, s) + d(q, r)])
    return sums[1] - sums[2]


def random_tree(rng: np.random.Generator, vertices: int) -> WeightedTree:
    """Arbre aléatoire : le sommet i se rattache à un sommet j < i, longueurs U[0.1, 1]"""
    edges = [
        (int(rng.integers(0, i)), i, float(rng.uniform(0.1, 1.0)))
        for i in range(1, vertices)
    ]
    return WeightedTree(vertices, edges)


def random_tree_point(rng: np.random.Generator, tree: WeightedTree) -> TreePoint:
    e = int(rng.integers(0, tree.edge_count))
    return tree.point(e, float(rng.uniform(0.0, tree.lengths[e])))


def _check_tree(f: PartialMap):
    if not isinstance(f.target, TreeSpace):
        raise TypeError("Cible arborescente requise")


def _order(f: PartialMap, order) -> np.ndarray:
    free = np.setdiff1d(np.arange(f.source.n), f.domain)
    if order is None:
        return free
    order = np.asarray(order, dtype=int).reshape(-1)
    if order.size != free.size or not np.array_equal(np.sort(order), free):
        raise ValueError("L'ordre doit être une permutation de X∖A")
    return order


def lipschitz_extend_tree(f: PartialMap, L: float, order=None) -> ExtensionResult:
    """
    Extension L-lipschitzienne d'une application vers un arbre

    Args:
        f: Application partielle à valeurs dans un arbre
        L: Constante visée (≥ Lip(f, A))
        order: Permutation de X∖A (ordre croissant par défaut)

    Returns:
        ExtensionResult (details: excess, plus grand min h rencontré)
    """
    _check_tree(f)
    lip = lip_constant(f)
    if lip > L * (1 + DEFAULT_TOLERANCES["lip_slack"]):
        raise LipschitzError(f"Lip(f, A) = {lip:.6g} > L = {L:.6g}")

    tree = f.target.tree
    slack = DEFAULT_TOLERANCES["box_slack"]
    values: List[Optional[TreePoint]] = [None] * f.source.n
    for a, value in zip(f.domain, f.values):
        values[a] = value

    worst = -np.inf
    for x in _order(f, order):
        idx = [i for i, v in enumerate(values) if v is not None]
        centers = [values[i] for i in idx]
        radii = L * f.source.dist[x, idx]
        point, value = minimize_ball_excess(tree, centers, radii)
        if value > slack:
            pair = _pairwise_tree_test(tree, centers, radii)
            pair = None if pair is None else (idx[pair[0]], idx[pair[1]])
            raise InfeasibleError(
                f"Intersection vide au point {int(x)} (min h = {value:.3e})",
                step=int(x),
                pair=pair,
            )
        values[x] = point
        worst = max(worst, value)

    result = ExtensionResult.build(f.source, f.target, values, max(worst, 0.0))
    result.details["excess"] = float(worst) if np.isfinite(worst) else 0.0
    return result


def transport_extension_tree(
    f: PartialMap, f_ext: ExtensionResult, g: PartialMap, order=None
) -> ExtensionResult:
    """
    Extension non expansive g' de g vers un arbre avec d∞(f', g') ≤ d∞(f, g)

    Args:
        f: Application non expansive sur A
        f_ext: Extension non expansive de f
        g: Application non expansive sur le même A
        order: Permutation de X∖A

    Returns:
        ExtensionResult de g' (details: r)
    """
    _check_tree(f)
    if not np.array_equal(f.domain, g.domain):
        raise ValueError("f et g doivent avoir le même domaine")
    if any(f_ext.values[a] != v for a, v in zip(f.domain, f.values)):
        raise PreconditionError("f_ext ne prolonge pas f")
    lip_slack = DEFAULT_TOLERANCES["lip_slack"]
    if f_ext.lip_achieved > 1 + lip_slack:
        raise LipschitzError(f"f_ext non expansive requise (Lip = {f_ext.lip_achieved:.6g})")
    if lip_constant(g) > 1 + lip_slack:
        raise LipschitzError("g non expansive requise")

    tree = f.target.tree
    slack = DEFAULT_TOLERANCES["box_slack"]
    r = sup_distance(f, g)
    values: List[Optional[TreePoint]] = [None] * f.source.n
    for a, value in zip(g.domain, g.values):
        values[a] = value

    for x in _order(g, order):
        idx = [i for i, v in enumerate(values) if v is not None]
        centers = [values[i] for i in idx] + [f_ext.values[x]]
        radii = np.append(f.source.dist[x, idx], r)
        point = nearest_feasible_point(centers, radii + slack, f_ext.values[x], tree)
        if point is None:
            pair = _pairwise_tree_test(tree, centers, radii)
            raise InfeasibleError(
                f"Intersection vide au point {int(x)}, paire {pair}", step=int(x), pair=pair
            )
        values[x] = point

    full = PartialMap(f.source, np.arange(f.source.n), values, f.target)
    result = ExtensionResult.build(f.source, f.target, values, pair_violation(full, 1.0))
    result.details["r"] = r
    return result
