"""
Configuration des tolérances par défaut, catalogue des expériences
et chargement des fichiers de configuration
"""

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from .exceptions import ConfigError

# Tolérances numériques par défaut
DEFAULT_TOLERANCES = {
    "solver_tol": 1e-7,
    "max_iter": 100_000,
    "metric_rel_tol": 1e-12,
    "lip_slack": 1e-9,
    "witness_slack": 1e-9,
    "box_slack": 1e-13,
    "pairwise_tol": 1e-12,
    "audit": 1e-6,
}

# Catalogue des expériences (une entrée par étiquette)
EXPERIMENTS = {
    "kirszbraun": {
        "description": "Extension de Kirszbraun séquentielle (cible euclidienne)",
        "contract": "résidu V ≤ 1e-6 à chaque étape, Lip(f') ≤ 1 + 1e-6",
        "kind": "euclidean",
        "defaults": {"trials": 500, "n_points": 10, "n_domain": 5, "source_dim": 3, "target_dim": 3},
        "tolerances": {"audit": 1e-6},
    },
    "tree_extension": {
        "description": "Extension lipschitzienne vers un arbre métrique",
        "contract": "extension exacte sur A, Lip(f') ≤ L + 1e-9",
        "kind": "tree",
        "defaults": {"trials": 200, "n_points": 8, "n_domain": 4, "source_dim": 2},
        "tolerances": {"audit": 1e-9},
    },
    "phi_lsc": {
        "description": "Transport de semi-continuité inférieure de Φ (produit X × R²)",
        "contract": "g'|A = g, Lip(g') ≤ 1 + 1e-6, d∞(f, g') ≤ ε + 1e-6",
        "kind": "euclidean",
        "defaults": {"trials": 500, "n_points": 8, "n_domain": 4, "source_dim": 2, "target_dim": 2, "eps": [0.1, 0.4]},
        "tolerances": {"audit": 1e-6},
    },
    "psi_lsc": {
        "description": "Transport de semi-continuité inférieure de Ψ (deux branches)",
        "contract": "Lip(g') = Lip(g, A) à 1e-6 relatif près, d∞(f, g') ≤ ε + 1e-6",
        "kind": "euclidean",
        "defaults": {"trials": 400, "n_points": 8, "n_domain": 4, "source_dim": 2, "target_dim": 2, "eps": [0.4]},
        "tolerances": {"audit": 1e-6},
    },
    "reshetnyak": {
        "description": "Inégalité quadrilatère de Reshetnyak dans R³",
        "contract": "écart ≥ -1e-12, égalité pour x=u, y=v",
        "kind": "euclidean",
        "defaults": {"trials": 100_000, "target_dim": 3},
        "tolerances": {"audit": 1e-12},
    },
    "projection_stability": {
        "description": "Stabilité de la projection sur des enveloppes convexes",
        "contract": "2(r1 + r2)·H(co V1, co V2) - |P1 x - P2 x|² ≥ -1e-9",
        "kind": "euclidean",
        "defaults": {"trials": 1000, "n_domain": 5, "target_dim": 3},
        "tolerances": {"audit": 1e-9},
    },
    "hull_contraction": {
        "description": "Contraction de Hausdorff par passage aux enveloppes convexes",
        "contract": "H(co V1, co V2) ≤ H(V1, V2) + 1e-9",
        "kind": "euclidean",
        "defaults": {"trials": 10_000, "n_domain": 5, "target_dim": 2},
        "tolerances": {"audit": 1e-9},
    },
    "alpha_c": {
        "description": "Composition avec la projection sur co(g(A))",
        "contract": "confinement ≤ 1e-7, Lip non croissant, valeurs sur A préservées",
        "kind": "euclidean",
        "defaults": {"trials": 500, "n_points": 8, "n_domain": 4, "source_dim": 2, "target_dim": 2, "eps": [0.4]},
        "tolerances": {"audit": 1e-7, "chain": 1e-6},
        "chain_trials": 100,
    },
    "psi_c_lsc": {
        "description": "Transport de Ψ contraint aux enveloppes : P_co(g(A)) ∘ Ψ(g) à ε/3",
        "contract": "confinement ≤ 1e-6, Lip(g') = Lip(g, A) à 1e-6 relatif près, d∞(f, g') ≤ ε + 1e-6",
        "kind": "euclidean",
        "defaults": {"trials": 200, "n_points": 8, "n_domain": 4, "source_dim": 2, "target_dim": 2, "eps": [0.4]},
        "tolerances": {"audit": 1e-6},
    },
    "midpoint_nonexp": {
        "description": "Non-expansivité de l'opérateur du milieu dans ℓ∞^m",
        "contract": "d∞(α(f), α(g)) ≤ d∞(f, g) + 1e-12",
        "kind": "supnorm",
        "defaults": {"trials": 1000, "n_points": 8, "n_domain": 4, "source_dim": 2, "target_dim": 3},
        "tolerances": {"audit": 1e-12},
    },
    "clamped_hull": {
        "description": "Opérateur tronqué dans l'enveloppe admissible cov(f(A))",
        "contract": "confinement exact, extension et Lip exacts",
        "kind": "supnorm",
        "defaults": {"trials": 1000, "n_points": 8, "n_domain": 4, "source_dim": 2, "target_dim": 3},
        "tolerances": {"audit": 1e-12},
    },
    "transport_supnorm": {
        "description": "Transport glouton non expansif dans ℓ∞^m",
        "contract": "d∞(f', g') ≤ d∞(f, g) + 1e-12, g = f reproduit f'",
        "kind": "supnorm",
        "defaults": {"trials": 500, "n_points": 6, "n_domain": 3, "source_dim": 2, "target_dim": 2, "perturbation": 0.3},
        "tolerances": {"audit": 1e-12},
    },
    "transport_tree": {
        "description": "Transport glouton non expansif vers un arbre métrique",
        "contract": "d∞(f', g') ≤ d∞(f, g) + 1e-12, g = f reproduit f'",
        "kind": "tree",
        "defaults": {"trials": 500, "n_points": 8, "n_domain": 4, "source_dim": 2, "perturbation": 0.25},
        "tolerances": {"audit": 1e-12},
    },
    "external_intersection": {
        "description": "Hyperconvexité externe de Φ(f) dans ℓ∞^m",
        "contract": "d∞(sortie, f_α) ≤ r_α + 1e-9 pour chaque membre de la famille",
        "kind": "supnorm",
        "defaults": {"trials": 200, "n_points": 6, "n_domain": 3, "source_dim": 2, "target_dim": 2},
        "tolerances": {"audit": 1e-9},
    },
    "continuity_sweep": {
        "description": "Module de continuité empirique de l'opérateur de Kirszbraun séquentiel",
        "contract": "mesure seule (aucun critère de réussite)",
        "kind": "euclidean",
        "defaults": {"trials": 50, "n_points": 8, "n_domain": 4, "source_dim": 2, "target_dim": 2, "eps": [0.1, 0.01, 0.001]},
        "tolerances": {"audit": 1e-6},
    },
}

# Autres noms acceptés pour certaines étiquettes
EXPERIMENT_ALIASES = {
    "lemma_41": "reshetnyak",
    "lemma_42": "projection_stability",
    "lemma_43": "hull_contraction",
}

INSTANCE_KINDS = ("euclidean", "supnorm", "tree")
ORDERS = ("ascending", "descending", "shuffled")


@dataclass
class ExperimentConfig:
    """
    Paramètres d'une campagne d'essais

    Args:
        experiment: Étiquette d'expérience (clé de EXPERIMENTS)
        trials: Nombre d'essais
        seed: Graine maîtresse (entier 64 bits)
        source_dim: Dimension n de l'espace source euclidien
        target_dim: Dimension m de la cible
        n_points: Taille de X
        n_domain: Taille de A
        eps: Valeurs de ε testées
        lip_target: Constante L visée par le générateur
        tree_vertices: Nombre de sommets des arbres cibles
        perturbation: Amplitude des perturbations des transports
        order: Ordre d'affectation de X∖A
        tolerances: Surcharges de tolérances
        output: Chemin du CSV de sortie
    """

    experiment: str = "kirszbraun"
    trials: int = 10
    seed: int = 0
    source_dim: int = 2
    target_dim: int = 2
    n_points: int = 8
    n_domain: int = 4
    eps: List[float] = field(default_factory=lambda: [0.4])
    lip_target: float = 1.0
    tree_vertices: int = 6
    perturbation: float = 0.3
    order: str = "ascending"
    tolerances: Dict[str, float] = field(default_factory=dict)
    output: Optional[str] = None

    def __post_init__(self):
        self.experiment = EXPERIMENT_ALIASES.get(self.experiment, self.experiment)
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"Expérience inconnue: {self.experiment}")
        for name in ("trials", "source_dim", "target_dim", "n_points", "n_domain", "tree_vertices"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} doit être ≥ 1 (reçu {getattr(self, name)})")
        if self.tree_vertices < 2:
            raise ConfigError("Un arbre cible doit avoir au moins 2 sommets")
        if self.n_domain > self.n_points:
            raise ConfigError(f"|A| = {self.n_domain} > |X| = {self.n_points}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"Graine hors de [0, 2^64): {self.seed}")
        self.eps = [float(e) for e in self.eps]
        if not self.eps or any(not 0 < e < 1 for e in self.eps):
            raise ConfigError(f"Valeurs de ε hors de ]0, 1[: {self.eps}")
        if self.lip_target <= 0:
            raise ConfigError(f"L doit être > 0 (reçu {self.lip_target})")
        if self.perturbation < 0:
            raise ConfigError("Amplitude de perturbation négative")
        if self.order not in ORDERS:
            raise ConfigError(f"Ordre inconnu: {self.order} (valeurs: {', '.join(ORDERS)})")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES) - {"chain"}
        if unknown:
            raise ConfigError(f"Tolérances inconnues: {sorted(unknown)}")

    @classmethod
    def for_experiment(cls, tag: str, **overrides) -> "ExperimentConfig":
        """Configuration par défaut d'une expérience, avec surcharges"""
        params = dict(get_experiment(tag)["defaults"])
        params.update(overrides)
        return cls(experiment=tag, **params)

    def tolerance(self, name: str) -> float:
        """Tolérance effective: surcharge, puis expérience, puis défaut global"""
        if name in self.tolerances:
            return float(self.tolerances[name])
        per_experiment = EXPERIMENTS[self.experiment].get("tolerances", {})
        if name in per_experiment:
            return float(per_experiment[name])
        return float(DEFAULT_TOLERANCES[name])

    def to_dict(self) -> dict:
        return asdict(self)


def get_experiment(tag: str) -> dict:
    """
    Récupère une expérience du catalogue

    Args:
        tag: Étiquette de l'expérience (ou alias de EXPERIMENT_ALIASES)

    Returns:
        Dictionnaire de l'expérience

    Raises:
        ConfigError: étiquette inconnue
    """
    tag = EXPERIMENT_ALIASES.get(tag, tag)
    if tag not in EXPERIMENTS:
        raise ConfigError(
            f"Expérience inconnue: {tag} (disponibles: {', '.join(EXPERIMENTS)})"
        )
    return EXPERIMENTS[tag]


def list_available_experiments():
    """Affiche toutes les expériences disponibles"""
    print("\n🎯 EXPÉRIENCES DISPONIBLES")
    print("=" * 40)

    for tag, data in EXPERIMENTS.items():
        print(f"\n📋 {tag}")
        print(f"   {data['description']}")
        print(f"   Cible: {data['kind']}")
        print(f"   Contrat: {data['contract']}")

    print("\n🔁 Alias")
    for alias, tag in EXPERIMENT_ALIASES.items():
        print(f"   {alias} → {tag}")


def load_config(path: str, experiment: Optional[str] = None) -> ExperimentConfig:
    """
    Charge une configuration depuis un fichier JSON

    Args:
        path: Chemin du fichier
        experiment: Étiquette imposée (prioritaire sur celle du fichier)

    Returns:
        ExperimentConfig validée
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Fichier de configuration introuvable: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Configuration JSON invalide ({path}): {e}")

    if not isinstance(data, dict):
        raise ConfigError("La configuration doit être un objet JSON")

    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Champs inconnus dans {path}: {sorted(unknown)}")

    if experiment is not None:
        # les valeurs par défaut de l'expérience complètent le fichier
        params = dict(get_experiment(experiment)["defaults"])
        params.update({k: v for k, v in data.items() if k != "experiment"})
        return ExperimentConfig(experiment=experiment, **params)
    return ExperimentConfig(**data)


def save_config(config: ExperimentConfig, path: str):
    """Sauvegarde une configuration au format JSON"""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config.to_dict(), f, indent=2, ensure_ascii=False)


def resolve_threads() -> int:
    """
    Nombre de workers joblib d'après LIPEXT_THREADS (0 ou absent = auto)

    Returns:
        n_jobs pour joblib.Parallel
    """
    raw = os.environ.get("LIPEXT_THREADS", "0").strip() or "0"
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"LIPEXT_THREADS invalide: {raw}")
    if threads < 0:
        raise ConfigError(f"LIPEXT_THREADS doit être ≥ 0 (reçu {threads})")
    return -1 if threads == 0 else threads
