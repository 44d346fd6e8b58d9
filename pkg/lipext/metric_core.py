"""
Abstractions communes d'espaces métriques : validation de distances,
constantes de Lipschitz, distance uniforme, distance de Hausdorff et
métrique produit
"""

from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .config import DEFAULT_TOLERANCES
from .exceptions import LipschitzError, MetricError


class _VectorSpace:
    """Base des cibles vectorielles R^m (euclidienne ou norme sup)"""

    kind = ""
    _metric = ""

    def __init__(self, dim: int):
        if int(dim) < 1:
            raise ValueError(f"Dimension invalide: {dim}")
        self.dim = int(dim)

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.dim == other.dim

    def __hash__(self) -> int:
        return hash((self.kind, self.dim))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.dim})"

    def validate_point(self, p) -> np.ndarray:
        """Convertit un point en vecteur flottant de dimension dim"""
        arr = np.asarray(p, dtype=float).reshape(-1)
        if arr.shape != (self.dim,):
            raise ValueError(
                f"Point de dimension {arr.size} pour une cible de dimension {self.dim}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("Coordonnées non finies")
        return arr

    def as_values(self, values) -> np.ndarray:
        """Convertit une liste de points en tableau (k, dim)"""
        arr = np.asarray(values, dtype=float)
        if arr.ndim == 1 and self.dim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise ValueError(
                f"Valeurs de forme {arr.shape} incompatibles avec {self!r}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("Valeurs non finies")
        return arr

    def subset(self, values, indices) -> np.ndarray:
        return np.asarray(values)[np.asarray(indices, dtype=int)]

    def stack(self, points: Sequence) -> np.ndarray:
        return np.vstack([np.asarray(p, dtype=float) for p in points])

    def distance(self, p, q) -> float:
        return float(self.cross_distances(np.atleast_2d(p), np.atleast_2d(q))[0, 0])

    def cross_distances(self, P, Q) -> np.ndarray:
        return cdist(np.asarray(P, dtype=float), np.asarray(Q, dtype=float), self._metric)

    def rowwise_distances(self, P, Q) -> np.ndarray:
        diff = np.asarray(P, dtype=float) - np.asarray(Q, dtype=float)
        if self._metric == "chebyshev":
            return np.max(np.abs(diff), axis=1)
        return np.linalg.norm(diff, axis=1)

    def describe(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}

    def point_to_json(self, p) -> list:
        return [float(c) for c in np.asarray(p).reshape(-1)]

    def point_from_json(self, obj) -> np.ndarray:
        return self.validate_point(obj)


class EuclideanSpace(_VectorSpace):
    """Cible euclidienne R^m"""

    kind = "euclidean"
    _metric = "euclidean"


class SupNormSpace(_VectorSpace):
    """Cible hyperconvexe l∞^m (distance = plus grand écart de coordonnées)"""

    kind = "supnorm"
    _metric = "chebyshev"


@dataclass
class FiniteMetricSpace:
    """
    Espace source fini : n points et leur table de distances complète

    Args:
        dist: Table n×n des distances
        points: Coordonnées euclidiennes éventuelles des points
    """

    dist: np.ndarray
    points: Optional[np.ndarray] = None

    def __post_init__(self):
        self.dist = np.asarray(self.dist, dtype=float)
        if self.dist.ndim != 2 or self.dist.shape[0] != self.dist.shape[1]:
            raise MetricError(f"Table de distances non carrée: {self.dist.shape}")
        if self.points is not None:
            self.points = np.asarray(self.points, dtype=float)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @classmethod
    def from_points(cls, points) -> "FiniteMetricSpace":
        """Construit l'espace induit par des points euclidiens"""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        return cls(cdist(pts, pts, "euclidean"), points=pts)


@dataclass
class PartialMap:
    """
    Application définie sur une partie A de l'espace source

    Args:
        source: Espace source X
        domain: Indices de A (distincts, dans [0, n))
        values: Une valeur cible par indice de A
        target: Espace cible
    """

    source: FiniteMetricSpace
    domain: np.ndarray
    values: Any
    target: Any

    def __post_init__(self):
        self.domain = np.asarray(self.domain, dtype=int).reshape(-1)
        if self.domain.size == 0:
            raise ValueError("Le domaine A doit être non vide")
        if np.unique(self.domain).size != self.domain.size:
            raise ValueError("Indices de domaine répétés")
        if self.domain.min() < 0 or self.domain.max() >= self.source.n:
            raise ValueError(f"Indices de domaine hors de [0, {self.source.n})")
        self.values = self.target.as_values(self.values)
        if len(self.values) != self.domain.size:
            raise ValueError(
                f"{len(self.values)} valeurs pour un domaine de taille {self.domain.size}"
            )

    def position(self, index: int) -> int:
        """Position d'un indice source dans le domaine"""
        hits = np.flatnonzero(self.domain == index)
        if hits.size == 0:
            raise KeyError(f"Indice {index} hors du domaine")
        return int(hits[0])

    def value_at(self, index: int):
        return self.values[self.position(index)]

    def restrict(self, indices) -> "PartialMap":
        """Restriction à un sous-ensemble B du domaine"""
        positions = [self.position(int(i)) for i in np.asarray(indices).reshape(-1)]
        return PartialMap(
            self.source,
            np.asarray(indices, dtype=int).reshape(-1),
            self.target.subset(self.values, positions),
            self.target,
        )

    @property
    def is_total(self) -> bool:
        return self.domain.size == self.source.n


@dataclass
class ExtensionResult:
    """
    Application totale sur X accompagnée de ses certificats

    Args:
        source: Espace source X
        target: Espace cible
        values: Une valeur cible par indice source
        lip_achieved: Constante de Lipschitz de l'application totale
        max_constraint_violation: Pire résidu de contrainte rencontré
    """

    source: FiniteMetricSpace
    target: Any
    values: Any
    lip_achieved: float = 0.0
    max_constraint_violation: float = 0.0
    details: dict = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        source: FiniteMetricSpace,
        target,
        values,
        max_constraint_violation: float = 0.0,
        **details,
    ) -> "ExtensionResult":
        """Construit le résultat et calcule lip_achieved par lip_constant"""
        values = target.as_values(values)
        full = PartialMap(source, np.arange(source.n), values, target)
        return cls(
            source,
            target,
            full.values,
            lip_constant(full),
            max(0.0, float(max_constraint_violation)),
            dict(details),
        )

    @property
    def domain(self) -> np.ndarray:
        return np.arange(self.source.n)

    def as_partial_map(self) -> PartialMap:
        return PartialMap(self.source, self.domain, self.values, self.target)

    def restrict(self, indices) -> PartialMap:
        indices = np.asarray(indices, dtype=int).reshape(-1)
        return PartialMap(
            self.source, indices, self.target.subset(self.values, indices), self.target
        )


def find_metric_violations(table, rel_tol: Optional[float] = None) -> List[Tuple]:
    """
    Liste les violations des axiomes de métrique

    Args:
        table: Table n×n de réels finis
        rel_tol: Tolérance relative sur l'inégalité triangulaire

    Returns:
        Liste de tuples ("diagonal", i), ("negative", i, j),
        ("symmetry", i, j) ou ("triangle", i, j, k)
    """
    if rel_tol is None:
        rel_tol = DEFAULT_TOLERANCES["metric_rel_tol"]

    D = np.asarray(table, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise MetricError(f"Table de distances non carrée: {D.shape}")
    if np.isnan(D).any():
        raise MetricError("Table de distances contenant des NaN")
    if not np.all(np.isfinite(D)):
        raise MetricError("Table de distances contenant des valeurs infinies")

    violations: List[Tuple] = []
    violations += [("diagonal", int(i)) for i in np.flatnonzero(np.diag(D) != 0)]
    violations += [("negative", int(i), int(j)) for i, j in np.argwhere(D < 0)]

    asym = np.abs(D - D.T) > rel_tol * np.maximum(np.abs(D), np.abs(D.T))
    violations += [("symmetry", int(i), int(j)) for i, j in np.argwhere(np.triu(asym, 1))]

    # excess[i, j, k] = d(i,k) - d(i,j) - d(j,k)
    lhs = D[:, None, :]
    rhs = D[:, :, None] + D[None, :, :]
    excess = lhs - rhs
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    violations += [
        ("triangle", int(i), int(j), int(k))
        for i, j, k in np.argwhere(excess > rel_tol * scale)
    ]
    return violations


def validate_metric(table, rel_tol: Optional[float] = None) -> FiniteMetricSpace:
    """
    Valide une table de distances et construit l'espace source

    Args:
        table: Table n×n
        rel_tol: Tolérance relative sur l'inégalité triangulaire

    Returns:
        FiniteMetricSpace si les trois axiomes sont satisfaits

    Raises:
        MetricError: table non carrée, NaN, ou violations (attribut violations)
    """
    violations = find_metric_violations(table, rel_tol)
    if violations:
        raise MetricError(
            f"{len(violations)} violation(s) des axiomes de métrique", violations
        )
    return FiniteMetricSpace(np.asarray(table, dtype=float))


def _pair_tables(f: PartialMap, B=None) -> Tuple[np.ndarray, np.ndarray]:
    if B is None:
        B = f.domain
    B = np.asarray(B, dtype=int).reshape(-1)
    positions = [f.position(int(i)) for i in B]
    values = f.target.subset(f.values, positions)
    return f.source.dist[np.ix_(B, B)], f.target.cross_distances(values, values)


def lip_constant(f: PartialMap, B=None) -> float:
    """
    Plus petite constante de Lipschitz de f sur B ⊆ A

    Args:
        f: Application partielle
        B: Sous-ensemble du domaine (par défaut tout A)

    Returns:
        max sur les paires de B de d_Y(f(x),f(y)) / d_X(x,y), 0 si |B| = 1

    Raises:
        LipschitzError: deux points source confondus avec des valeurs distinctes
    """
    DX, DY = _pair_tables(f, B)
    iu, ju = np.triu_indices(DX.shape[0], 1)
    if iu.size == 0:
        return 0.0
    dx, dy = DX[iu, ju], DY[iu, ju]

    clash = (dx == 0) & (dy > 0)
    if clash.any():
        k = int(np.flatnonzero(clash)[0])
        dom = f.domain if B is None else np.asarray(B, dtype=int).reshape(-1)
        pair = (int(dom[iu[k]]), int(dom[ju[k]]))
        raise LipschitzError(
            f"Points source confondus {pair} avec des valeurs différentes", pair
        )

    positive = dx > 0
    if not positive.any():
        return 0.0
    return float(np.max(dy[positive] / dx[positive]))


def pair_violation(f: PartialMap, L: float) -> float:
    """Plus grand résidu d_Y(f(x),f(y)) - L·d_X(x,y) sur les paires (≥ 0)"""
    DX, DY = _pair_tables(f)
    iu, ju = np.triu_indices(DX.shape[0], 1)
    if iu.size == 0:
        return 0.0
    return max(0.0, float(np.max(DY[iu, ju] - L * DX[iu, ju])))


def sup_distance(f, g) -> float:
    """
    Distance uniforme entre deux applications de même domaine

    Args:
        f: PartialMap ou ExtensionResult
        g: Application de même domaine et même cible

    Returns:
        max sur le domaine de d_Y(f(x), g(x))
    """
    if f.target != g.target:
        raise ValueError("Cibles différentes")
    if not np.array_equal(np.asarray(f.domain), np.asarray(g.domain)):
        raise ValueError("Domaines différents")
    return float(np.max(f.target.rowwise_distances(f.values, g.values)))


def hausdorff(P, Q, target=None) -> float:
    """
    Distance de Pompeiu-Hausdorff entre deux ensembles finis de points

    Args:
        P: Premier ensemble (non vide)
        Q: Second ensemble (non vide)
        target: Espace cible (euclidien par défaut; tableau 1D = points réels)

    Returns:
        max(sup_p dist(p,Q), sup_q dist(q,P))
    """
    if len(P) == 0 or len(Q) == 0:
        raise ValueError("Ensemble vide")
    if target is None:
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        if P.ndim == 1:
            P, Q = P.reshape(-1, 1), Q.reshape(-1, 1)
        target = EuclideanSpace(P.shape[1])
    C = target.cross_distances(P, Q)
    return float(max(C.min(axis=1).max(), C.min(axis=0).max()))


def product_distance(
    space: FiniteMetricSpace, x1: int, a1, x2: int, a2
) -> float:
    """
    Distance produit sqrt(d_X(x1,x2)² + |a1 - a2|²) sur X × R²

    Args:
        space: Espace source
        x1, x2: Indices source
        a1, a2: Points du plan
    """
    gap = np.linalg.norm(np.asarray(a1, dtype=float) - np.asarray(a2, dtype=float))
    return float(np.hypot(space.dist[x1, x2], gap))


def product_space(
    space: FiniteMetricSpace, nodes: Sequence[Tuple[int, Sequence[float]]]
) -> FiniteMetricSpace:
    """
    Espace produit restreint aux noeuds (indice source, point du plan)

    Args:
        space: Espace source X
        nodes: Liste de couples (x, a) avec a ∈ R²

    Returns:
        FiniteMetricSpace muni de la distance produit
    """
    idx = np.array([x for x, _ in nodes], dtype=int)
    plane = np.array([np.asarray(a, dtype=float) for _, a in nodes]).reshape(len(nodes), -1)
    return FiniteMetricSpace(
        np.hypot(space.dist[np.ix_(idx, idx)], cdist(plane, plane, "euclidean"))
    )
