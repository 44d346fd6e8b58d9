"""
Cibles euclidiennes : extension de Kirszbraun point par point et séquentielle,
transports de semi-continuité, projection sur une enveloppe convexe et
vérificateurs d'inégalités
"""

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from .config import DEFAULT_TOLERANCES
from .exceptions import ConfigError, LipschitzError, PreconditionError, SolverError
from .metric_core import (
    EuclideanSpace,
    ExtensionResult,
    FiniteMetricSpace,
    PartialMap,
    lip_constant,
    product_space,
    sup_distance,
)


@dataclass
class BallConstraint:
    """Boule fermée B(center, radius) de R^m"""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(-1)
        self.radius = float(self.radius)
        if self.radius < 0:
            raise ValueError(f"Rayon négatif: {self.radius}")


@dataclass
class HullVertexSet:
    """Ensemble fini de sommets dont l'enveloppe convexe est co(C)"""

    vertices: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        if self.vertices.ndim == 1:
            self.vertices = self.vertices.reshape(-1, 1)
        if self.vertices.shape[0] == 0:
            raise ValueError("Ensemble de sommets vide")

    def __len__(self) -> int:
        return self.vertices.shape[0]


@dataclass
class EuclideanInstance:
    """
    Instance euclidienne : X ⊂ R^n, A ⊆ X et f : A → R^m

    Args:
        source_points: Points de X (|X| × n)
        A: Indices de A dans X
        f_values: Valeurs de f (|A| × m)
    """

    source_points: np.ndarray
    A: np.ndarray
    f_values: np.ndarray

    def __post_init__(self):
        self.source_points = np.asarray(self.source_points, dtype=float)
        if self.source_points.ndim == 1:
            self.source_points = self.source_points.reshape(-1, 1)
        self.A = np.asarray(self.A, dtype=int).reshape(-1)
        self.f_values = np.asarray(self.f_values, dtype=float)
        if self.f_values.ndim == 1:
            self.f_values = self.f_values.reshape(-1, 1)

    @property
    def space(self) -> FiniteMetricSpace:
        return FiniteMetricSpace.from_points(self.source_points)

    @property
    def target(self) -> EuclideanSpace:
        return EuclideanSpace(self.f_values.shape[1])

    def partial_map(self) -> PartialMap:
        return PartialMap(self.space, self.A, self.f_values, self.target)


@dataclass
class SlackReport:
    """
    Écarts (membre de droite - membre de gauche) d'une inégalité sur une série d'essais

    Args:
        tag: Étiquette de l'inégalité
        slacks: Écart par essai
        tolerance: Écart négatif admis
        witnesses: Données d'entrée par essai (optionnel)
    """

    tag: str
    slacks: np.ndarray
    tolerance: float = 1e-9
    witnesses: Optional[list] = field(default=None, repr=False)

    def __post_init__(self):
        self.slacks = np.asarray(self.slacks, dtype=float).reshape(-1)

    @property
    def min_slack(self) -> float:
        return float(self.slacks.min()) if self.slacks.size else 0.0

    @property
    def passed(self) -> bool:
        return self.min_slack >= -self.tolerance

    @property
    def witness(self):
        """Essai le plus défavorable si l'écart minimal passe sous -tolerance"""
        if self.passed:
            return None
        worst = int(np.argmin(self.slacks))
        if self.witnesses is None:
            return worst
        return worst, self.witnesses[worst]


class PsiConstants(NamedTuple):
    z: np.ndarray
    M: float
    lip_f: float
    s: Optional[float]
    k: Optional[int]
    pair: Optional[Tuple[int, int]]
    delta: float


def _tol(tol: Optional[float]) -> float:
    return DEFAULT_TOLERANCES["solver_tol"] if tol is None else float(tol)


def _max_iter(max_iter: Optional[int]) -> int:
    return DEFAULT_TOLERANCES["max_iter"] if max_iter is None else int(max_iter)


def _minimax_value(y: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(y - centers, axis=1) - radii))


def _solve_minimax(
    centers: np.ndarray, radii: np.ndarray, tol: float, max_iter: int
) -> Tuple[np.ndarray, float]:
    """
    Minimise V(y) = max_i(|y - c_i| - r_i) sous forme épigraphe :
    min t sous |y - c_i| - r_i ≤ t, résolu par SLSQP depuis la moyenne des centres

    Returns:
        (y, V(y)); V(y) > tol signale des boules sans point commun

    Raises:
        SolverError: plafond d'itérations atteint avant convergence
    """
    y0 = centers.mean(axis=0)
    v0 = _minimax_value(y0, centers, radii)
    if centers.shape[0] == 1:
        return y0, v0

    m = centers.shape[1]
    objective_grad = np.zeros(m + 1)
    objective_grad[m] = 1.0

    def gaps(z):
        return z[m] + radii - np.linalg.norm(z[:m] - centers, axis=1)

    def gaps_jac(z):
        diff = z[:m] - centers
        norms = np.linalg.norm(diff, axis=1, keepdims=True)
        unit = np.divide(diff, norms, out=np.zeros_like(diff), where=norms > 0)
        return np.hstack([-unit, np.ones((centers.shape[0], 1))])

    res = minimize(
        lambda z: z[m],
        np.append(y0, v0),
        jac=lambda z: objective_grad,
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": gaps, "jac": gaps_jac}],
        options={"maxiter": max(int(max_iter), 1), "ftol": tol**2},
    )
    y = np.asarray(res.x[:m], dtype=float)
    value = _minimax_value(y, centers, radii)
    if not value < v0:
        y, value = y0, v0
    if res.status == 9 and value > tol:
        raise SolverError(
            f"Plafond de {max_iter} itérations atteint (V = {value:.3e} > {tol:.1e})",
            residual=value,
        )
    return y, value


def extend_point(
    constraints: Sequence[BallConstraint],
    L: float,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    return_value: bool = False,
) -> Union[np.ndarray, Tuple[np.ndarray, float]]:
    """
    Point y de R^m minimisant V(y) = max_i(|y - c_i| - L·r_i)

    Args:
        constraints: Boules (centre f(a), rayon d_X(x, a))
        L: Constante de Lipschitz visée
        tol: Précision visée sur V
        max_iter: Plafond d'itérations
        return_value: Renvoie aussi V(y)

    Returns:
        Point y (et V(y) si return_value). Sous l'hypothèse de Kirszbraun
        V(y) ≤ tol; sinon V(y) > 0 mesure l'incompatibilité des boules

    Raises:
        SolverError: plafond atteint avant convergence
    """
    if len(constraints) == 0:
        raise ValueError("Liste de contraintes vide")
    if L <= 0:
        raise ValueError(f"L doit être > 0 (reçu {L})")
    centers = np.vstack([c.center for c in constraints])
    radii = L * np.array([c.radius for c in constraints])
    y, value = _solve_minimax(centers, radii, _tol(tol), _max_iter(max_iter))
    return (y, value) if return_value else y


def _resolve_order(n: int, fixed: np.ndarray, order) -> np.ndarray:
    free = np.setdiff1d(np.arange(n), fixed)
    if order is None:
        return free
    order = np.asarray(order, dtype=int).reshape(-1)
    if order.size != free.size or not np.array_equal(np.sort(order), free):
        raise ValueError("L'ordre doit être une permutation de X∖A")
    return order


def _sequential_extend(
    dist: np.ndarray,
    fixed: np.ndarray,
    fixed_values: np.ndarray,
    L: float,
    order: np.ndarray,
    tol: float,
    max_iter: int,
    report: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, List[float]]:
    """
    Affecte les noeuds de order un par un sur une table de distances quelconque

    Returns:
        Valeurs complètes et résidu V de chaque étape
    """
    values = np.zeros((dist.shape[0], fixed_values.shape[1]))
    values[fixed] = fixed_values
    assigned = np.zeros(dist.shape[0], dtype=bool)
    assigned[fixed] = True

    residuals = []
    for x in order:
        idx = np.flatnonzero(assigned)
        try:
            y, value = _solve_minimax(values[idx], L * dist[x, idx], tol, max_iter)
        except SolverError as e:
            point = int(x) if report is None else int(report[x])
            raise SolverError(
                f"Échec de l'affectation du point {point}: {e}", point, e.residual
            )
        values[x] = y
        assigned[x] = True
        residuals.append(max(0.0, value))
    return values, residuals


def kirszbraun_extend(
    inst: Union[EuclideanInstance, PartialMap],
    L: float,
    order=None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> ExtensionResult:
    """
    Extension L-lipschitzienne séquentielle de f à tout X

    Args:
        inst: Instance euclidienne ou application partielle à cible euclidienne
        L: Constante de Lipschitz visée
        order: Permutation de X∖A (ordre croissant par défaut)
        tol: Résidu admis par étape
        max_iter: Plafond d'itérations par étape

    Returns:
        ExtensionResult (details: residuals, order)
    """
    f = inst.partial_map() if isinstance(inst, EuclideanInstance) else inst
    if not isinstance(f.target, EuclideanSpace):
        raise TypeError("kirszbraun_extend requiert une cible euclidienne")

    lip = lip_constant(f)
    if lip > L * (1 + DEFAULT_TOLERANCES["lip_slack"]):
        raise LipschitzError(f"Lip(f, A) = {lip:.6g} > L = {L:.6g}")

    tol, max_iter = _tol(tol), _max_iter(max_iter)
    order = _resolve_order(f.source.n, f.domain, order)
    values, residuals = _sequential_extend(
        f.source.dist, f.domain, f.values, L, order, tol, max_iter
    )
    return ExtensionResult.build(
        f.source,
        f.target,
        values,
        max(residuals, default=0.0),
        residuals=residuals,
        order=order.tolist(),
    )


def phi_delta(
    f_full: ExtensionResult, domain, eps: float
) -> Tuple[np.ndarray, float, float]:
    """
    Constantes du transport de Φ : z = f(min A), M = max(1, sup |z - f|), δ = ε²/(8M)
    """
    domain = np.asarray(domain, dtype=int).reshape(-1)
    z = f_full.values[int(domain.min())]
    M = max(1.0, float(np.max(np.linalg.norm(f_full.values - z, axis=1))))
    return z, M, eps**2 / (8 * M)


def _check_eps(eps: float):
    if not 0 < eps < 1:
        raise ValueError(f"ε doit être dans ]0, 1[ (reçu {eps})")


def _check_same_source(f_full: ExtensionResult, g: PartialMap):
    if g.source is not f_full.source and not np.array_equal(
        g.source.dist, f_full.source.dist
    ):
        raise ValueError("f et g n'ont pas le même espace source")
    if g.target != f_full.target:
        raise ValueError("f et g n'ont pas la même cible")


def _product_extend(
    f_full: ExtensionResult,
    sheet_values: np.ndarray,
    g: PartialMap,
    height: float,
    L: float,
    order,
    tol: float,
    max_iter: int,
) -> Tuple[np.ndarray, List[float]]:
    """
    Étend h (sheet_values sur X × {(0,0)}, g sur A × {(0,height)}) à la seconde nappe
    """
    n = f_full.source.n
    nodes = [(x, (0.0, 0.0)) for x in range(n)] + [(x, (0.0, height)) for x in range(n)]
    dist = product_space(f_full.source, nodes).dist

    fixed = np.concatenate([np.arange(n), n + g.domain])
    fixed_values = np.vstack([sheet_values, g.values])

    lip_h = lip_constant(
        PartialMap(
            FiniteMetricSpace(dist), fixed, fixed_values, f_full.target
        )
    )
    if lip_h > L * (1 + DEFAULT_TOLERANCES["lip_slack"]):
        raise PreconditionError(
            f"Application produit non {L:.6g}-lipschitzienne (Lip = {lip_h:.6g})"
        )

    order = n + _resolve_order(n, g.domain, order)
    report = np.concatenate([np.arange(n), np.arange(n)])
    values, residuals = _sequential_extend(
        dist, fixed, fixed_values, L, order, tol, max_iter, report
    )
    return values[n:], residuals


def transport_phi(
    f_full: ExtensionResult,
    g: PartialMap,
    eps: float,
    tol: Optional[float] = None,
    order=None,
    max_iter: Optional[int] = None,
) -> ExtensionResult:
    """
    Extension non expansive g' de g à distance uniforme ≤ ε de f

    Args:
        f_full: Application non expansive sur X
        g: Application non expansive sur A, à moins de δ = ε²/(8M) de f|A
        eps: ε dans ]0, 1[
        tol: Résidu admis par étape
        order: Permutation de X∖A

    Returns:
        ExtensionResult de g' (details: delta, M)
    """
    _check_eps(eps)
    _check_same_source(f_full, g)
    slack = DEFAULT_TOLERANCES["lip_slack"]
    if f_full.lip_achieved > 1 + slack:
        raise LipschitzError(f"f non expansive requise (Lip = {f_full.lip_achieved:.6g})")
    if lip_constant(g) > 1 + slack:
        raise LipschitzError("g non expansive requise")

    z, M, delta = phi_delta(f_full, g.domain, eps)
    gap = sup_distance(f_full.restrict(g.domain), g)
    if not gap < delta:
        raise PreconditionError(
            f"d∞(f|A, g) = {gap:.6g} ≥ δ = {delta:.6g}"
        )

    values, residuals = _product_extend(
        f_full, f_full.values, g, eps, 1.0, order, _tol(tol), _max_iter(max_iter)
    )
    return ExtensionResult.build(
        f_full.source,
        f_full.target,
        values,
        max(residuals, default=0.0),
        delta=delta,
        M=M,
    )


def psi_constants(f_full: ExtensionResult, domain, eps: float) -> PsiConstants:
    """
    Constantes du transport de Ψ : z, M, s = 1 - 2^-k, paire témoin et δ

    Pour f constante, δ = ε et s, k, pair valent None.
    """
    _check_eps(eps)
    domain = np.sort(np.asarray(domain, dtype=int).reshape(-1))
    z = f_full.values[int(domain[0])]
    M = max(1.0, float(np.max(np.linalg.norm(f_full.values - z, axis=1))))
    lip_f = f_full.lip_achieved
    if lip_f == 0:
        return PsiConstants(z, M, 0.0, None, None, None, eps)

    bound = eps**2 / (32 * M * (4 * M + 1))
    k = 1
    while 2.0**-k / (1 - 2.0**-k) ** 2 >= bound:
        k += 1
    s = 1 - 2.0**-k

    DX = f_full.source.dist[np.ix_(domain, domain)]
    vals = f_full.values[domain]
    DY = f_full.target.cross_distances(vals, vals)
    iu, ju = np.triu_indices(domain.size, 1)
    if iu.size == 0:
        raise PreconditionError("Lip(f, A) = Lip(f, X) > 0 exige |A| ≥ 2")
    dx, dy = DX[iu, ju], DY[iu, ju]
    ratios = np.divide(dy, dx, out=np.zeros_like(dy), where=dx > 0)
    best = int(np.argmax(ratios))
    i, j = iu[best], ju[best]
    pair = (int(domain[i]), int(domain[j]))

    delta = min(
        (DY[i, j] - s * lip_f * DX[i, j]) / 2,
        eps**2 * s**2 / (32 * (4 * M + 1)),
    )
    if delta <= 0:
        # Lip(f, A) < s·Lip(f, X): l'égalité des constantes n'est pas assez précise pour cet ε
        raise ConfigError(
            f"ε = {eps:g} trop petit: δ = {delta:.3e} ≤ 0 "
            f"(Lip(f, A) = {ratios[best]:.17g}, s·Lip(f, X) = {s * lip_f:.17g})"
        )
    return PsiConstants(z, M, lip_f, s, k, pair, float(delta))


def project_to_ball(p, center, radius: float) -> np.ndarray:
    """Projection métrique sur la boule fermée B(center, radius)"""
    p = np.asarray(p, dtype=float)
    center = np.asarray(center, dtype=float)
    gap = float(np.linalg.norm(p - center))
    if gap <= radius:
        return p.copy()
    return center + (p - center) * (radius / gap)


def transport_psi(
    f_full: ExtensionResult,
    g: PartialMap,
    eps: float,
    tol: Optional[float] = None,
    order=None,
    max_iter: Optional[int] = None,
) -> ExtensionResult:
    """
    Extension g' de g avec Lip(g', X) = Lip(g, A) et d∞(f, g') ≤ ε

    Args:
        f_full: Application lipschitzienne sur X avec Lip(f, A) = Lip(f, X)
        g: Application lipschitzienne sur A, à moins de δ de f|A
        eps: ε dans ]0, 1[
        tol: Résidu admis par étape
        order: Permutation de X∖A

    Returns:
        ExtensionResult de g' (details: branch, delta, s)
    """
    _check_eps(eps)
    _check_same_source(f_full, g)
    tol, max_iter = _tol(tol), _max_iter(max_iter)
    # f_full sort souvent d'un solveur: égalité vérifiée à la précision d'audit
    slack = DEFAULT_TOLERANCES["audit"]

    lip_fa = lip_constant(f_full.restrict(g.domain))
    if abs(lip_fa - f_full.lip_achieved) > slack * max(1.0, f_full.lip_achieved):
        raise PreconditionError(
            f"Lip(f, A) = {lip_fa:.6g} ≠ Lip(f, X) = {f_full.lip_achieved:.6g}"
        )

    const = psi_constants(f_full, g.domain, eps)
    gap = sup_distance(f_full.restrict(g.domain), g)
    if not gap < const.delta:
        raise PreconditionError(f"d∞(f|A, g) = {gap:.6g} ≥ δ = {const.delta:.6g}")

    lip_g = lip_constant(g)
    n = f_full.source.n

    if const.lip_f == 0:
        y = f_full.values[0]
        if lip_g == 0:
            g1 = np.tile(g.values[0], (n, 1))
            residuals = [0.0]
        else:
            ext = kirszbraun_extend(g, lip_g, order, tol, max_iter)
            g1, residuals = ext.values, [ext.max_constraint_violation]
        values = np.vstack([project_to_ball(v, y, eps) for v in g1])
        values[g.domain] = g.values
        return ExtensionResult.build(
            f_full.source,
            f_full.target,
            values,
            max(residuals),
            branch="constant",
            delta=const.delta,
        )

    if lip_g <= 2 * const.lip_f:
        eta = eps / (4 * const.lip_f)
        sheet = (1 - const.s) * const.z + const.s * f_full.values
        values, residuals = _product_extend(
            f_full, sheet, g, eta, lip_g, order, tol, max_iter
        )
        return ExtensionResult.build(
            f_full.source,
            f_full.target,
            values,
            max(residuals, default=0.0),
            branch="product",
            delta=const.delta,
            s=const.s,
            eta=eta,
        )

    # Ã : points à distance ≥ 2δ/Lip(g, A) de A, où g̃ recopie f
    dist_to_a = f_full.source.dist[:, g.domain].min(axis=1)
    far = np.flatnonzero(dist_to_a >= 2 * const.delta / lip_g)
    domain = np.concatenate([g.domain, far])
    g_tilde = PartialMap(
        f_full.source, domain, np.vstack([g.values, f_full.values[far]]), g.target
    )
    if order is not None:
        order = np.asarray(order, dtype=int).reshape(-1)
        order = order[~np.isin(order, far)]
    ext = kirszbraun_extend(g_tilde, lip_g, order, tol, max_iter)
    ext.details.update(
        branch="set", delta=const.delta, s=const.s, far=far.tolist()
    )
    return ext


def _vertices(hull: Union[HullVertexSet, np.ndarray]) -> np.ndarray:
    return hull.vertices if isinstance(hull, HullVertexSet) else HullVertexSet(hull).vertices


def _affine_minimizer(Q: np.ndarray) -> np.ndarray:
    """Poids (de somme 1) du point de norme minimale de l'enveloppe affine des lignes de Q"""
    k = Q.shape[0]
    K = np.zeros((k + 1, k + 1))
    K[0, 1:] = 1.0
    K[1:, 0] = 1.0
    K[1:, 1:] = Q @ Q.T
    rhs = np.zeros(k + 1)
    rhs[0] = 1.0
    alpha = np.linalg.lstsq(K, rhs, rcond=None)[0][1:]
    return alpha / alpha.sum()


def _min_norm_weights(
    P: np.ndarray, tol: float, max_iter: int
) -> Tuple[np.ndarray, List[int], np.ndarray]:
    """
    Point de norme minimale de co(P) (algorithme de Wolfe), depuis les poids uniformes

    Returns:
        (x, indices du support, poids convexes du support)
    """
    S = list(range(P.shape[0]))
    lam = np.full(len(S), 1.0 / len(S))
    scale = float(np.max(np.einsum("ij,ij->i", P, P)))
    # écart de dualité: |x - x*|² ≤ 2·gap
    stop = min(tol**2 / 2, 1e-12 * scale)
    added = None

    for _ in range(max_iter):
        alpha = _affine_minimizer(P[S])
        if not np.all(alpha > 0):
            # cycle mineur: recul vers alpha jusqu'à annuler un poids
            neg = alpha <= 0
            denom = lam[neg] - alpha[neg]
            ratio = np.divide(lam[neg], denom, out=np.zeros_like(denom), where=denom > 0)
            theta = float(ratio.min())
            lam = theta * alpha + (1 - theta) * lam
            drop = np.flatnonzero(neg & (lam <= 1e-15))
            if drop.size == 0:
                drop = np.array([int(np.argmin(lam))])
            keep = np.setdiff1d(np.arange(len(S)), drop)
            if added is not None and S[-1] == added and theta == 0 and (len(S) - 1) in drop:
                # le sommet ajouté est rejeté aussitôt: x est optimal
                S = [S[i] for i in keep]
                lam = lam[keep] / lam[keep].sum()
                return lam @ P[S], S, lam
            S = [S[i] for i in keep]
            lam = np.maximum(lam[keep], 0.0)
            lam = lam / lam.sum()
            continue

        lam = alpha
        x = lam @ P[S]
        dots = P @ x
        j = int(np.argmin(dots))
        if x @ x - dots[j] <= stop or j in S:
            return x, S, lam
        S.append(j)
        lam = np.append(lam, 0.0)
        added = j

    raise SolverError(f"Projection sur l'enveloppe: plafond de {max_iter} itérations atteint")


def min_norm_projection(
    p,
    hull: Union[HullVertexSet, np.ndarray],
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> np.ndarray:
    """
    Point de co(sommets) le plus proche de p

    Args:
        p: Point de R^m
        hull: Sommets de l'enveloppe
        tol: Précision en distance
        max_iter: Plafond d'itérations

    Returns:
        Projection de p (p lui-même s'il est dans l'enveloppe à tol près)
    """
    V = _vertices(hull)
    p = np.asarray(p, dtype=float).reshape(-1)
    if len(V) == 1:
        return V[0].copy()
    tol = _tol(tol)
    x, S, lam = _min_norm_weights(V - p, tol, _max_iter(max_iter))
    if float(np.linalg.norm(x)) <= tol:
        return p.copy()
    return lam @ V[S]


def hull_distance(
    p, hull, tol: Optional[float] = None, max_iter: Optional[int] = None
) -> float:
    """Distance de p à co(sommets) : norme du point de norme minimale de co(sommets - p)"""
    V = _vertices(hull)
    p = np.asarray(p, dtype=float).reshape(-1)
    if len(V) == 1:
        return float(np.linalg.norm(p - V[0]))
    if np.any(np.all(V == p, axis=1)):
        return 0.0
    x, _, _ = _min_norm_weights(V - p, _tol(tol), _max_iter(max_iter))
    return float(np.linalg.norm(x))


def hull_hausdorff(
    V1: Union[HullVertexSet, np.ndarray],
    V2: Union[HullVertexSet, np.ndarray],
    tol: Optional[float] = None,
) -> float:
    """
    Distance de Hausdorff entre co(V1) et co(V2), atteinte aux sommets

    Returns:
        max(max_v dist(v, co V2), max_w dist(w, co V1))
    """
    V1 = V1 if isinstance(V1, HullVertexSet) else HullVertexSet(V1)
    V2 = V2 if isinstance(V2, HullVertexSet) else HullVertexSet(V2)
    one = max(hull_distance(v, V2, tol) for v in V1.vertices)
    two = max(hull_distance(w, V1, tol) for w in V2.vertices)
    return max(one, two)


def alpha_c_compose(
    ext: ExtensionResult,
    hull: Union[HullVertexSet, np.ndarray],
    tol: Optional[float] = None,
) -> ExtensionResult:
    """
    Compose une extension avec la projection sur co(g(A))

    Args:
        ext: Extension de g
        hull: Sommets g(A)
        tol: Précision de la projection

    Returns:
        ExtensionResult à valeurs dans co(g(A)) (details: hull_distance)
    """
    hull = hull if isinstance(hull, HullVertexSet) else HullVertexSet(hull)
    values = np.array(ext.values, dtype=float, copy=True)
    for x, v in enumerate(values):
        # les sommets eux-mêmes sont leurs propres projections
        if np.any(np.all(hull.vertices == v, axis=1)):
            continue
        values[x] = min_norm_projection(v, hull, tol)

    result = ExtensionResult.build(
        ext.source, ext.target, values, ext.max_constraint_violation
    )
    result.details["hull_distance"] = max(hull_distance(v, hull, tol) for v in values)
    return result


def beta_c_compose(
    ext: ExtensionResult, g: PartialMap, tol: Optional[float] = None
) -> ExtensionResult:
    """
    Variante lipschitzienne de alpha_c_compose : certifie Lip(sortie) = Lip(g, A)

    Args:
        ext: Extension de g avec Lip(ext) = Lip(g, A)
        g: Application sur A
        tol: Précision de la projection
    """
    result = alpha_c_compose(ext, HullVertexSet(g.values), tol)
    result.details["lip_domain"] = lip_constant(g)
    return result


def transport_phi_c(
    f_full: ExtensionResult,
    g: PartialMap,
    eps: float,
    tol: Optional[float] = None,
    order=None,
) -> ExtensionResult:
    """
    Transport de Φ contraint aux enveloppes : g' = P_co(g(A)) ∘ g₁, g₁ issu de transport_phi(ε/3)

    Args:
        f_full: Application non expansive sur X à valeurs dans co(f(A))
        g: Application non expansive sur A
        eps: ε dans ]0, 1[

    Returns:
        ExtensionResult à valeurs dans co(g(A)), à distance ≤ ε de f
    """
    _check_eps(eps)
    tol = _tol(tol)
    _check_inside_hull(f_full, g.domain, tol)
    _, _, delta = phi_delta(f_full, g.domain, eps / 3)
    gap = sup_distance(f_full.restrict(g.domain), g)
    if not gap < min(delta, eps / 3):
        raise PreconditionError(f"d∞(f|A, g) = {gap:.6g} ≥ δ = {min(delta, eps / 3):.6g}")

    g1 = transport_phi(f_full, g, eps / 3, tol, order)
    result = alpha_c_compose(g1, HullVertexSet(g.values), tol)
    result.details.update(delta=min(delta, eps / 3), inner=g1)
    return result


def _check_inside_hull(f_full: ExtensionResult, domain, tol: float):
    hull_f = HullVertexSet(f_full.values[domain])
    outside = max(hull_distance(v, hull_f, tol) for v in f_full.values)
    if outside > 10 * tol:
        raise PreconditionError(f"f(X) sort de co(f(A)) de {outside:.3e}")


def transport_psi_c(
    f_full: ExtensionResult,
    g: PartialMap,
    eps: float,
    tol: Optional[float] = None,
    order=None,
    max_iter: Optional[int] = None,
) -> ExtensionResult:
    """
    Transport de Ψ contraint aux enveloppes : g' = P_co(g(A)) ∘ g₁, g₁ issu de transport_psi(ε/3)

    Args:
        f_full: Application lipschitzienne sur X à valeurs dans co(f(A)),
            avec Lip(f, A) = Lip(f, X)
        g: Application lipschitzienne sur A, à moins de δ(ε/3) de f|A
        eps: ε dans ]0, 1[
        tol: Précision des projections et résidu admis par étape
        order: Permutation de X∖A

    Returns:
        ExtensionResult à valeurs dans co(g(A)) avec Lip(g', X) = Lip(g, A)
        (details: branch, delta, lip_domain, hull_distance, inner)
    """
    _check_eps(eps)
    tol = _tol(tol)
    _check_inside_hull(f_full, g.domain, tol)
    const = psi_constants(f_full, g.domain, eps / 3)
    gap = sup_distance(f_full.restrict(g.domain), g)
    if not gap < min(const.delta, eps / 3):
        raise PreconditionError(
            f"d∞(f|A, g) = {gap:.6g} ≥ δ = {min(const.delta, eps / 3):.6g}"
        )

    g1 = transport_psi(f_full, g, eps / 3, tol, order, max_iter)
    result = beta_c_compose(g1, g, tol)
    result.details.update(
        branch=g1.details["branch"], delta=min(const.delta, eps / 3), inner=g1
    )
    return result


def reshetnyak_slack(x, y, u, v) -> Union[float, np.ndarray]:
    """
    d(x,v)² + d(y,u)² + 2·d(x,u)·d(y,v) - d(x,y)² - d(u,v)²

    Accepte des lots de quadruplets (dernier axe = coordonnées).
    """
    x, y, u, v = (np.asarray(t, dtype=float) for t in (x, y, u, v))

    def d(a, b):
        return np.linalg.norm(a - b, axis=-1)

    slack = d(x, v) ** 2 + d(y, u) ** 2 + 2 * d(x, u) * d(y, v) - d(x, y) ** 2 - d(u, v) ** 2
    return float(slack) if np.ndim(slack) == 0 else slack


def projection_stability_slack(
    V1,
    V2,
    z,
    r1: float,
    x,
    r2: float,
    tol: Optional[float] = None,
) -> float:
    """
    2(r1 + r2)·H(co V1, co V2) - |P_co V1(x) - P_co V2(x)|²

    Raises:
        PreconditionError: sommets hors de B(z, r1) ou x hors de B(z, r2)
    """
    V1 = V1 if isinstance(V1, HullVertexSet) else HullVertexSet(V1)
    V2 = V2 if isinstance(V2, HullVertexSet) else HullVertexSet(V2)
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    reach = max(
        np.linalg.norm(V1.vertices - z, axis=1).max(),
        np.linalg.norm(V2.vertices - z, axis=1).max(),
    )
    if reach > r1 * (1 + 1e-12):
        raise PreconditionError(f"Enveloppes hors de B(z, r1): {reach:.6g} > {r1:.6g}")
    if np.linalg.norm(x - z) > r2 * (1 + 1e-12):
        raise PreconditionError("x hors de B(z, r2)")

    gap = min_norm_projection(x, V1, tol) - min_norm_projection(x, V2, tol)
    return 2 * (r1 + r2) * hull_hausdorff(V1, V2, tol) - float(gap @ gap)
