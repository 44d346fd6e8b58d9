"""
Cible hyperconvexe ℓ∞^m : enveloppes de McShane-Whitney, opérateur du milieu,
enveloppe admissible, intersections de boules et constructions gloutonnes
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_TOLERANCES
from .exceptions import InfeasibleError, LipschitzError, PreconditionError
from .metric_core import (
    ExtensionResult,
    PartialMap,
    SupNormSpace,
    lip_constant,
    pair_violation,
    sup_distance,
)


@dataclass
class Box:
    """
    Pavé fermé [lower, upper] de R^m; un pavé vide est marqué par is_empty

    Args:
        lower: Bornes inférieures
        upper: Bornes supérieures
        is_empty: Pavé vide (les bornes sont alors sans signification)
    """

    lower: np.ndarray
    upper: np.ndarray
    is_empty: bool = False

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if self.lower.shape != self.upper.shape:
            raise ValueError("Bornes de dimensions différentes")
        if not self.is_empty and np.any(self.lower > self.upper):
            raise ValueError("Bornes inversées: utiliser Box.empty")

    @classmethod
    def empty(cls, dim: int) -> "Box":
        return cls(np.full(dim, np.nan), np.full(dim, np.nan), is_empty=True)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def circumradius(self) -> float:
        """Rayon du plus petit cube contenant le pavé"""
        if self.is_empty:
            return float("nan")
        return float(np.max(self.upper - self.lower)) / 2

    def contains(self, p, tol: float = 0.0) -> bool:
        if self.is_empty:
            return False
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def clamp(self, p) -> np.ndarray:
        """Point du pavé le plus proche de p (identité sur le pavé)"""
        if self.is_empty:
            raise InfeasibleError("Projection sur un pavé vide")
        return np.clip(np.asarray(p, dtype=float), self.lower, self.upper)

    def intersect(self, other: "Box") -> "Box":
        if self.is_empty or other.is_empty:
            return Box.empty(self.dim)
        lower = np.maximum(self.lower, other.lower)
        upper = np.minimum(self.upper, other.upper)
        if np.any(lower > upper):
            return Box.empty(self.dim)
        return Box(lower, upper)


def _check_supnorm(f: PartialMap):
    if not isinstance(f.target, SupNormSpace):
        raise TypeError("Cible ℓ∞^m requise")


def _check_lip(f: PartialMap, L: float, label: str = "f"):
    lip = lip_constant(f)
    if lip > L * (1 + DEFAULT_TOLERANCES["lip_slack"]):
        raise LipschitzError(f"Lip({label}, A) = {lip:.6g} > L = {L:.6g}")


def _envelope_tables(f: PartialMap, L: float) -> Tuple[np.ndarray, np.ndarray]:
    D = f.source.dist[:, f.domain]
    F = np.asarray(f.values)
    lower = np.max(F[None, :, :] - L * D[:, :, None], axis=1)
    upper = np.min(F[None, :, :] + L * D[:, :, None], axis=1)
    # les enveloppes se pincent exactement sur A
    lower[f.domain] = F
    upper[f.domain] = F
    return lower, upper


def envelopes(f: PartialMap, L: float, x: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Enveloppes inférieure et supérieure coordonnée par coordonnée au point x

    Args:
        f: Application partielle vers ℓ∞^m
        L: Constante de Lipschitz (≥ Lip(f, A))
        x: Indice source

    Returns:
        (lower, upper) avec lower_i = max_a(f_i(a) - L·d(x,a)), upper_i = min_a(f_i(a) + L·d(x,a))
    """
    _check_supnorm(f)
    _check_lip(f, L)
    lower, upper = _envelope_tables(f, L)
    return lower[x], upper[x]


def lower_extension(f: PartialMap, L: float) -> ExtensionResult:
    """Plus petite extension L-lipschitzienne (coordonnée par coordonnée)"""
    _check_supnorm(f)
    _check_lip(f, L)
    lower, _ = _envelope_tables(f, L)
    return ExtensionResult.build(f.source, f.target, lower)


def upper_extension(f: PartialMap, L: float) -> ExtensionResult:
    """Plus grande extension L-lipschitzienne (coordonnée par coordonnée)"""
    _check_supnorm(f)
    _check_lip(f, L)
    _, upper = _envelope_tables(f, L)
    return ExtensionResult.build(f.source, f.target, upper)


def midpoint_operator(f: PartialMap, L: float) -> ExtensionResult:
    """
    Extension par le milieu des deux enveloppes

    Args:
        f: Application partielle vers ℓ∞^m
        L: Constante de Lipschitz (≥ Lip(f, A))

    Returns:
        ExtensionResult L-lipschitzien qui coïncide avec f sur A
    """
    _check_supnorm(f)
    _check_lip(f, L)
    lower, upper = _envelope_tables(f, L)
    values = (lower + upper) / 2
    values[f.domain] = f.values
    return ExtensionResult.build(f.source, f.target, values)


def admissible_hull(values) -> Box:
    """
    Enveloppe admissible cov : intersection des boules contenant l'ensemble

    Dans ℓ∞^m les boules sont des cubes, et cov est le pavé englobant.
    """
    V = np.asarray(values, dtype=float)
    if V.ndim == 1:
        V = V.reshape(1, -1)
    if V.shape[0] == 0:
        raise ValueError("Ensemble vide")
    return Box(V.min(axis=0), V.max(axis=0))


def clamped_operator(f: PartialMap, L: float) -> ExtensionResult:
    """
    Opérateur du milieu ramené dans cov(f(A)) coordonnée par coordonnée

    Args:
        f: Application partielle vers ℓ∞^m
        L: Constante de Lipschitz (≥ Lip(f, A))

    Returns:
        ExtensionResult à valeurs dans cov(f(A)) (details: hull)
    """
    mid = midpoint_operator(f, L)
    box = admissible_hull(f.values)
    values = np.clip(mid.values, box.lower, box.upper)
    values[f.domain] = f.values
    result = ExtensionResult.build(f.source, f.target, values)
    result.details["hull"] = box
    return result


def pairwise_radius_test(centers, radii, tol: float = 0.0) -> Optional[Tuple[int, int]]:
    """
    Test d'hyperconvexité : première paire (i, j) avec |c_i - c_j|∞ > r_i + r_j + tol

    Returns:
        Paire fautive ou None
    """
    C = np.asarray(centers, dtype=float)
    r = np.asarray(radii, dtype=float).reshape(-1)
    gap = np.max(np.abs(C[:, None, :] - C[None, :, :]), axis=2) - (r[:, None] + r[None, :])
    bad = np.argwhere(np.triu(gap > tol, 1))
    if bad.size == 0:
        return None
    return int(bad[0][0]), int(bad[0][1])


def _raw_intersection(C: np.ndarray, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return np.max(C - r[:, None], axis=0), np.min(C + r[:, None], axis=0)


def ball_intersection(centers, radii) -> Box:
    """
    Intersection de cubes B∞(c_i, r_i), recoupée avec le test par paires

    Args:
        centers: Centres (k × m)
        radii: Rayons (k)

    Returns:
        Box (vide si l'intersection l'est)

    Raises:
        InfeasibleError: désaccord entre les deux calculs au-delà de 1e-12
    """
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    r = np.asarray(radii, dtype=float).reshape(-1)
    if np.any(r < 0):
        raise ValueError("Rayon négatif")
    lower, upper = _raw_intersection(C, r)
    inverted = float(np.max(lower - upper))
    pair = pairwise_radius_test(C, r)

    if (inverted <= 0) != (pair is None):
        tol = DEFAULT_TOLERANCES["pairwise_tol"]
        residual = inverted if pair is None else float(
            np.max(np.abs(C[pair[0]] - C[pair[1]])) - r[pair[0]] - r[pair[1]]
        )
        if residual > tol:
            raise InfeasibleError(
                f"Désaccord intersection / test par paires ({residual:.3e})", pair=pair
            )

    if inverted > 0:
        return Box.empty(C.shape[1])
    return Box(lower, upper)


def _greedy_boxes(
    f: PartialMap,
    anchors: List[np.ndarray],
    anchor_radii: Sequence[float],
    pick_anchor: np.ndarray,
    order,
    hull: Optional[Box],
) -> np.ndarray:
    """
    Induction finie sur X∖A : à chaque étape, pavé des boules autour des valeurs
    déjà affectées et des ancres, puis projection de l'ancre de choix
    """
    n = f.source.n
    free = np.setdiff1d(np.arange(n), f.domain)
    if order is None:
        order = free
    else:
        order = np.asarray(order, dtype=int).reshape(-1)
        if order.size != free.size or not np.array_equal(np.sort(order), free):
            raise ValueError("L'ordre doit être une permutation de X∖A")

    slack = DEFAULT_TOLERANCES["box_slack"]
    values = np.zeros((n, f.target.dim))
    values[f.domain] = f.values
    assigned = np.zeros(n, dtype=bool)
    assigned[f.domain] = True

    for step, x in enumerate(order):
        idx = np.flatnonzero(assigned)
        C = np.vstack([values[idx]] + [a[x][None, :] for a in anchors])
        r = np.concatenate([f.source.dist[x, idx], np.asarray(anchor_radii, dtype=float)])
        lower, upper = _raw_intersection(C, r + slack)
        box = Box.empty(C.shape[1]) if np.any(lower > upper) else Box(lower, upper)
        if hull is not None:
            box = box.intersect(hull)
        if box.is_empty:
            pair = pairwise_radius_test(C, r)
            raise InfeasibleError(
                f"Pavé vide à l'étape {step} (point {int(x)}), paire {pair}",
                step=int(x),
                pair=pair,
            )
        values[x] = box.clamp(pick_anchor[x])
        assigned[x] = True
    return values


def _check_extends(f: PartialMap, ext: ExtensionResult, label: str):
    if not np.allclose(ext.values[f.domain], f.values, rtol=0, atol=1e-12):
        raise PreconditionError(f"{label} ne prolonge pas f")


def transport_extension(
    f: PartialMap,
    f_ext: ExtensionResult,
    g: PartialMap,
    order=None,
    hull_constrained: bool = False,
) -> ExtensionResult:
    """
    Extension non expansive g' de g avec d∞(f', g') ≤ d∞(f, g)

    Args:
        f: Application non expansive sur A
        f_ext: Extension non expansive de f
        g: Application non expansive sur le même A
        order: Permutation de X∖A (ordre croissant par défaut)
        hull_constrained: Ajoute cov(g(A)) à chaque pavé

    Returns:
        ExtensionResult de g' (details: r)
    """
    _check_supnorm(f)
    if not np.array_equal(f.domain, g.domain):
        raise ValueError("f et g doivent avoir le même domaine")
    _check_extends(f, f_ext, "f_ext")
    slack = DEFAULT_TOLERANCES["lip_slack"]
    if f_ext.lip_achieved > 1 + slack:
        raise LipschitzError(f"f_ext non expansive requise (Lip = {f_ext.lip_achieved:.6g})")
    _check_lip(g, 1.0, "g")

    r = sup_distance(f, g)
    hull = admissible_hull(g.values) if hull_constrained else None
    values = _greedy_boxes(g, [f_ext.values], [r], f_ext.values, order, hull)

    full = PartialMap(f.source, np.arange(f.source.n), values, f.target)
    result = ExtensionResult.build(f.source, f.target, values, pair_violation(full, 1.0))
    result.details["r"] = r
    return result


def external_intersection(
    f: PartialMap,
    family: Sequence[Tuple[ExtensionResult, float]],
    witnesses: Sequence[ExtensionResult],
    order=None,
    hull_constrained: bool = False,
) -> ExtensionResult:
    """
    Extension non expansive de f dans ⋂_α B∞(f_α, r_α)

    Args:
        f: Application non expansive sur A
        family: Couples (f_α application totale non expansive, r_α)
        witnesses: Extension non expansive de f à moins de r_α de f_α, pour chaque α
        order: Permutation de X∖A
        hull_constrained: Ajoute cov(f(A)) à chaque pavé

    Returns:
        ExtensionResult avec d∞(sortie, f_α) ≤ r_α pour tout α
    """
    _check_supnorm(f)
    if len(family) == 0:
        raise PreconditionError("Famille vide")
    if len(witnesses) != len(family):
        raise PreconditionError("Un témoin par membre de la famille est requis")
    _check_lip(f, 1.0)

    lip_slack = DEFAULT_TOLERANCES["lip_slack"]
    witness_slack = DEFAULT_TOLERANCES["witness_slack"]
    maps = [m for m, _ in family]
    radii = [float(r) for _, r in family]

    for a, (m, r, w) in enumerate(zip(maps, radii, witnesses)):
        if r < 0:
            raise PreconditionError(f"Rayon négatif pour le membre {a}")
        if m.lip_achieved > 1 + lip_slack:
            raise PreconditionError(f"Membre {a} non expansif requis")
        _check_extends(f, w, f"Témoin {a}")
        if w.lip_achieved > 1 + lip_slack:
            raise PreconditionError(f"Témoin {a} non expansif requis")
        gap = sup_distance(m, w)
        if gap > r + witness_slack:
            raise PreconditionError(
                f"d∞(f_{a}, témoin) = {gap:.6g} > r_{a} = {r:.6g}"
            )
    for a in range(len(maps)):
        for b in range(a + 1, len(maps)):
            if sup_distance(maps[a], maps[b]) > radii[a] + radii[b] + witness_slack:
                raise PreconditionError(f"Membres {a} et {b} trop éloignés")

    centroid = np.mean([m.values for m in maps], axis=0)
    hull = admissible_hull(f.values) if hull_constrained else None
    values = _greedy_boxes(f, [m.values for m in maps], radii, centroid, order, hull)

    full = PartialMap(f.source, np.arange(f.source.n), values, f.target)
    result = ExtensionResult.build(f.source, f.target, values, pair_violation(full, 1.0))
    result.details["family_distances"] = [
        float(np.max(np.max(np.abs(values - m.values), axis=1))) for m in maps
    ]
    return result
