"""
Exceptions du laboratoire d'extensions lipschitziennes
"""

from typing import List, Optional, Sequence, Tuple


class LipextError(Exception):
    """Racine de toutes les erreurs du package"""


class ConfigError(LipextError, ValueError):
    """Configuration d'expérience invalide ou étiquette inconnue"""


class MetricError(LipextError, ValueError):
    """
    Table de distances invalide

    Args:
        message: Description de l'erreur
        violations: Triplets (i, j, k) ou paires (i, j) violant un axiome
    """

    def __init__(self, message: str, violations: Optional[Sequence[Tuple]] = None):
        super().__init__(message)
        self.violations: List[Tuple] = list(violations or [])


class LipschitzError(LipextError, ValueError):
    """Constante de Lipschitz infinie ou précondition de Lipschitz violée"""

    def __init__(self, message: str, pair: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.pair = pair


class PreconditionError(LipextError, ValueError):
    """Précondition quantitative non satisfaite (δ, confinement, famille...)"""


class SolverError(LipextError, RuntimeError):
    """
    Échec d'un solveur itératif

    Args:
        message: Description de l'erreur
        point_index: Indice source du point en cours d'affectation
        residual: Dernier résidu atteint
    """

    def __init__(
        self,
        message: str,
        point_index: Optional[int] = None,
        residual: Optional[float] = None,
    ):
        super().__init__(message)
        self.point_index = point_index
        self.residual = residual


class InfeasibleError(LipextError, RuntimeError):
    """
    Intersection de boules vide pendant une induction gloutonne

    Args:
        message: Description de l'erreur
        step: Rang de l'étape (ou indice source) concernée
        pair: Paire de boules qui viole le test d'hyperconvexité
    """

    def __init__(
        self,
        message: str,
        step: Optional[int] = None,
        pair: Optional[Tuple[int, int]] = None,
    ):
        super().__init__(message)
        self.step = step
        self.pair = pair
