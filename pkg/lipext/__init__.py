"""
Laboratoire d'extensions lipschitziennes : Kirszbraun euclidien, cibles
hyperconvexes ℓ∞^m, arbres métriques et transports de semi-continuité
"""

__version__ = "1.0.0"
__author__ = "Lipext Team"

# Imports conditionnels pour éviter les erreurs si les dépendances ne sont pas installées
try:
    from .exceptions import (
        ConfigError,
        InfeasibleError,
        LipextError,
        LipschitzError,
        MetricError,
        PreconditionError,
        SolverError,
    )
    from .metric_core import (
        EuclideanSpace,
        ExtensionResult,
        FiniteMetricSpace,
        PartialMap,
        SupNormSpace,
        hausdorff,
        lip_constant,
        sup_distance,
        validate_metric,
    )
    from .euclid_kirszbraun import (
        BallConstraint,
        EuclideanInstance,
        HullVertexSet,
        alpha_c_compose,
        extend_point,
        kirszbraun_extend,
        min_norm_projection,
        transport_phi,
        transport_psi,
        transport_psi_c,
    )
    from .supnorm_hyperconvex import (
        Box,
        ball_intersection,
        clamped_operator,
        external_intersection,
        midpoint_operator,
        transport_extension,
    )
    from .metric_tree import (
        TreePoint,
        TreeSpace,
        WeightedTree,
        lipschitz_extend_tree,
        tree_ball_intersection,
        tree_distance,
        transport_extension_tree,
    )
    from .config import ExperimentConfig
    from .experiments import run_experiment

    __all__ = [
        "ConfigError",
        "InfeasibleError",
        "LipextError",
        "LipschitzError",
        "MetricError",
        "PreconditionError",
        "SolverError",
        "EuclideanSpace",
        "ExtensionResult",
        "FiniteMetricSpace",
        "PartialMap",
        "SupNormSpace",
        "hausdorff",
        "lip_constant",
        "sup_distance",
        "validate_metric",
        "BallConstraint",
        "EuclideanInstance",
        "HullVertexSet",
        "alpha_c_compose",
        "extend_point",
        "kirszbraun_extend",
        "min_norm_projection",
        "transport_phi",
        "transport_psi",
        "transport_psi_c",
        "Box",
        "ball_intersection",
        "clamped_operator",
        "external_intersection",
        "midpoint_operator",
        "transport_extension",
        "TreePoint",
        "TreeSpace",
        "WeightedTree",
        "lipschitz_extend_tree",
        "tree_ball_intersection",
        "tree_distance",
        "transport_extension_tree",
        "ExperimentConfig",
        "run_experiment",
    ]
except ImportError as e:
    print(f"⚠️  Certaines dépendances ne sont pas installées: {e}")
    print("📦 Installez les dépendances avec: pip install -r requirements.txt")
    __all__ = []
