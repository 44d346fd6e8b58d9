"""
Format des fichiers d'instance, générateur déterministe et graines par essai
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.spatial.distance import cdist

from .config import INSTANCE_KINDS, ExperimentConfig
from .exceptions import ConfigError, LipschitzError, MetricError
from .metric_core import (
    EuclideanSpace,
    FiniteMetricSpace,
    PartialMap,
    SupNormSpace,
    find_metric_violations,
    lip_constant,
    validate_metric,
)
from .metric_tree import TreeSpace, WeightedTree, random_tree, random_tree_point, tree_interpolate

FIELD_ORDER = ("kind", "seed", "trial", "lip_target", "n", "dist", "points", "target", "A", "values")


def trial_seed(seed: int, trial: int, salt: str = "") -> int:
    """Graine 64 bits dérivée de (graine maîtresse, essai) par hachage"""
    digest = hashlib.sha256(f"{int(seed)}:{int(trial)}:{salt}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def trial_rng(seed: int, trial: int, salt: str = "") -> np.random.Generator:
    return np.random.default_rng(trial_seed(seed, trial, salt))


def array_digest(*arrays) -> str:
    """Empreinte courte de tableaux numériques"""
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(np.asarray(a, dtype=float)).tobytes())
    return h.hexdigest()[:16]


def target_from_description(desc: Dict[str, Any]):
    """Construit l'espace cible décrit dans un fichier d'instance"""
    kind = desc.get("kind")
    if kind == "euclidean":
        return EuclideanSpace(int(desc["dim"]))
    if kind == "supnorm":
        return SupNormSpace(int(desc["dim"]))
    if kind == "tree":
        return TreeSpace(WeightedTree(int(desc["vertices"]), desc["edges"]))
    raise ValueError(f"Type de cible inconnu: {kind}")


@dataclass
class Instance:
    """
    Instance d'extension : espace source, application partielle et métadonnées

    Args:
        f: Application partielle (porte l'espace source et la cible)
        kind: euclidean | supnorm | tree
        seed: Graine maîtresse ayant servi à la génération
        trial: Indice d'essai
        lip_target: Constante L visée
        points: Coordonnées des points source
    """

    f: PartialMap
    kind: str
    seed: Optional[int] = None
    trial: Optional[int] = None
    lip_target: float = 1.0
    points: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def space(self) -> FiniteMetricSpace:
        return self.f.source

    @property
    def target(self):
        return self.f.target

    def to_document(self) -> Dict[str, Any]:
        doc = {
            "kind": self.kind,
            "seed": self.seed,
            "trial": self.trial,
            "lip_target": float(self.lip_target),
            "n": int(self.space.n),
            "dist": self.space.dist.tolist(),
            "points": None if self.points is None else np.asarray(self.points).tolist(),
            "target": self.target.describe(),
            "A": [int(a) for a in self.f.domain],
            "values": [self.target.point_to_json(v) for v in self.f.values],
        }
        return {k: doc[k] for k in FIELD_ORDER if doc[k] is not None}

    def to_text(self) -> str:
        return _dump(self.to_document()) + "\n"

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    @classmethod
    def from_document(cls, doc: Dict[str, Any], validate: bool = True) -> "Instance":
        missing = [k for k in ("n", "dist", "target", "A", "values") if k not in doc]
        if missing:
            raise ValueError(f"Champs manquants: {missing}")
        dist = np.asarray(doc["dist"], dtype=float)
        if dist.shape != (int(doc["n"]), int(doc["n"])):
            raise MetricError(f"Table de distances de forme {dist.shape} pour n = {doc['n']}")
        space = validate_metric(dist) if validate else FiniteMetricSpace(dist)
        points = doc.get("points")
        if points is not None:
            space.points = np.asarray(points, dtype=float)
        target = target_from_description(doc["target"])
        values = [target.point_from_json(v) for v in doc["values"]]
        f = PartialMap(space, doc["A"], values, target)
        return cls(
            f,
            doc.get("kind", target.kind),
            doc.get("seed"),
            doc.get("trial"),
            float(doc.get("lip_target", 1.0)),
            space.points,
        )


def _number(x) -> str:
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not np.isfinite(x):
        raise ValueError("Valeur non finie dans une instance")
    text = format(x, ".17g")
    if "e" not in text and "." not in text:
        text += ".0"
    return text


def _dump(obj, indent: int = 0) -> str:
    """Sérialisation JSON déterministe, réels à 17 chiffres significatifs"""
    pad = "  " * indent
    if isinstance(obj, dict):
        items = [
            f'{pad}  {json.dumps(k)}: {_dump(v, indent + 1).lstrip()}' for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (list, tuple, dict)) for v in obj):
            return "[" + ", ".join(_number(v) if not isinstance(v, str) else json.dumps(v) for v in obj) + "]"
        rows = [f"{pad}  {_dump(v, indent + 1).lstrip()}" for v in obj]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    return _number(obj)


def save_instance(instance: Instance, path: str) -> str:
    """Écrit une instance et retourne son chemin"""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(instance.to_text())
    return path


def load_instance(path: str, validate: bool = True) -> Instance:
    """
    Lit un fichier d'instance

    Raises:
        MetricError: table de distances invalide
        ValueError: champs manquants ou mal formés
    """
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return Instance.from_document(doc, validate)


def check_instance(path: str) -> Dict[str, Any]:
    """
    Contrôle métrique et lipschitzien d'un fichier d'instance

    Returns:
        Dictionnaire: metric_ok, violations, lip, lip_target, lip_ok
    """
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    violations = find_metric_violations(doc["dist"])
    report: Dict[str, Any] = {
        "metric_ok": not violations,
        "violations": violations,
        "lip": None,
        "lip_target": float(doc.get("lip_target", 1.0)),
        "lip_ok": False,
    }
    if violations:
        return report
    instance = Instance.from_document(doc, validate=False)
    try:
        report["lip"] = lip_constant(instance.f)
    except LipschitzError as e:
        report["error"] = str(e)
        return report
    report["lip_ok"] = report["lip"] <= report["lip_target"] * (1 + 1e-9)
    return report


def _rescale_vectors(values: np.ndarray, space: FiniteMetricSpace, A: np.ndarray, target, L: float) -> np.ndarray:
    f = PartialMap(space, A, values, target)
    lip = lip_constant(f)
    if lip <= L:
        return values
    centroid = values.mean(axis=0)
    return centroid + (values - centroid) * (L / lip)


def _rescale_tree(values: List, space: FiniteMetricSpace, A: np.ndarray, target: TreeSpace, L: float) -> List:
    f = PartialMap(space, A, values, target)
    lip = lip_constant(f)
    if lip <= L:
        return values
    anchor = values[0]
    return [tree_interpolate(anchor, v, L / lip, target.tree) for v in values]


def generate_instance(
    config: ExperimentConfig,
    kind: str,
    trial: int = 0,
    lip_target: Optional[float] = None,
) -> Instance:
    """
    Instance aléatoire déterministe pour (config.seed, trial)

    Args:
        config: Configuration (tailles, dimensions, graine)
        kind: euclidean | supnorm | tree
        trial: Indice d'essai
        lip_target: Constante L visée (config.lip_target par défaut)

    Returns:
        Instance avec Lip(f, A) ≤ L
    """
    if kind not in INSTANCE_KINDS:
        raise ConfigError(f"Type d'instance inconnu: {kind} (valeurs: {', '.join(INSTANCE_KINDS)})")
    L = float(config.lip_target if lip_target is None else lip_target)
    rng = trial_rng(config.seed, trial)

    points = rng.uniform(0.0, 1.0, size=(config.n_points, config.source_dim))
    space = FiniteMetricSpace(cdist(points, points, "euclidean"), points=points)
    A = np.sort(rng.choice(config.n_points, size=config.n_domain, replace=False))

    if kind == "tree":
        target = TreeSpace(random_tree(rng, config.tree_vertices))
        values = [random_tree_point(rng, target.tree) for _ in A]
        values = _rescale_tree(values, space, A, target, L)
    else:
        target = EuclideanSpace(config.target_dim) if kind == "euclidean" else SupNormSpace(config.target_dim)
        values = rng.uniform(0.0, 1.0, size=(config.n_domain, config.target_dim))
        values = _rescale_vectors(values, space, A, target, L)

    f = PartialMap(space, A, values, target)
    return Instance(f, kind, int(config.seed), int(trial), L, points)
