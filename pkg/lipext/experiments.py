"""
Expériences numériques : un essai par instance aléatoire, mesures d'écarts,
exécution parallèle reproductible et export CSV
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from .config import DEFAULT_TOLERANCES, ExperimentConfig, get_experiment, resolve_threads
from .euclid_kirszbraun import (
    EuclideanInstance,
    HullVertexSet,
    SlackReport,
    alpha_c_compose,
    beta_c_compose,
    hull_hausdorff,
    kirszbraun_extend,
    phi_delta,
    projection_stability_slack,
    psi_constants,
    reshetnyak_slack,
    transport_phi,
    transport_phi_c,
    transport_psi,
    transport_psi_c,
)
from .exceptions import LipextError
from .instances import Instance, array_digest, generate_instance, trial_rng
from .metric_core import (
    ExtensionResult,
    PartialMap,
    hausdorff,
    lip_constant,
    sup_distance,
)
from .metric_tree import (
    four_point_slack,
    lipschitz_extend_tree,
    random_tree_point,
    transport_extension_tree,
    tree_interpolate,
)
from .supnorm_hyperconvex import (
    admissible_hull,
    clamped_operator,
    external_intersection,
    lower_extension,
    midpoint_operator,
    transport_extension,
    upper_extension,
)

CSV_HEADER = ["experiment", "trial", "digest", "quantity", "value", "pass"]


@dataclass
class Measurement:
    """
    Quantité mesurée lors d'un essai

    Args:
        name: Nom de la quantité
        value: Écart (membre de droite - membre de gauche) ou valeur informative
        tol: Écart négatif admis; None pour une quantité informative
    """

    name: str
    value: float
    tol: Optional[float] = None

    @property
    def informational(self) -> bool:
        return self.tol is None

    @property
    def passed(self) -> bool:
        return self.tol is None or self.value >= -self.tol


@dataclass
class TrialRecord:
    """Résultat d'un essai : étiquette, indice, empreinte d'instance et mesures"""

    experiment: str
    trial: int
    digest: str
    measurements: List[Measurement] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.measurements)

    def add(self, name: str, value: float, tol: Optional[float] = None):
        # -0.0 + 0.0 = 0.0: pas de zéro négatif dans le CSV
        self.measurements.append(Measurement(name, float(value) + 0.0, tol))


@dataclass
class ExperimentReport:
    """Ensemble des essais d'une expérience et résumé"""

    config: ExperimentConfig
    records: List[TrialRecord]

    @property
    def audited(self) -> List[Measurement]:
        return [m for r in self.records for m in r.measurements if not m.informational]

    @property
    def min_slack(self) -> float:
        values = [m.value for m in self.audited]
        return min(values) if values else 0.0

    @property
    def max_violation(self) -> float:
        return max([0.0] + [-m.value for m in self.audited])

    @property
    def pass_rate(self) -> float:
        if not self.records:
            return 1.0
        return sum(r.passed for r in self.records) / len(self.records)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def slack_reports(self) -> Dict[str, SlackReport]:
        """Écarts de chaque quantité auditée, avec l'essai le plus défavorable pour témoin"""
        grouped: Dict[str, tuple] = {}
        for r in self.records:
            for m in r.measurements:
                if m.informational:
                    continue
                slacks, trials, tol = grouped.setdefault(m.name, ([], [], m.tol))
                slacks.append(m.value)
                trials.append(r.trial)
        return {
            name: SlackReport(name, slacks, tol, trials)
            for name, (slacks, trials, tol) in grouped.items()
        }


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_csv(report: ExperimentReport, path: str) -> str:
    """Écrit le CSV long (une quantité par ligne) puis les lignes de résumé"""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    tag = report.config.experiment
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in report.records:
            for m in record.measurements:
                writer.writerow(
                    [tag, record.trial, record.digest, m.name, _fmt(m.value), int(m.passed)]
                )
        flag = int(report.passed)
        for name, value in (
            ("min_slack", report.min_slack),
            ("max_violation", report.max_violation),
            ("pass_rate", report.pass_rate),
        ):
            writer.writerow([tag, "summary", "", name, _fmt(value), flag])
    return path


# Outils communs aux essais


def _order(config: ExperimentConfig, rng: np.random.Generator, n: int, domain) -> Optional[np.ndarray]:
    free = np.setdiff1d(np.arange(n), domain)
    if config.order == "ascending":
        return None
    if config.order == "descending":
        return free[::-1]
    return rng.permutation(free)


def _unit_rows(rng: np.random.Generator, k: int, m: int) -> np.ndarray:
    u = rng.normal(size=(k, m))
    norms = np.linalg.norm(u, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return u / norms


def _perturb_until(f: PartialMap, directions: np.ndarray, size: float, lip_max: float, halvings: int = 60):
    """
    g = f + size·directions, size divisé par deux tant que Lip(g) > lip_max

    Un dépassement résiduel (au plus lip_slack relatif) est résorbé par
    contraction des valeurs vers leur barycentre.

    Returns:
        (g, size effectivement appliqué)
    """
    for _ in range(halvings):
        values = f.values + size * directions
        lip = lip_constant(PartialMap(f.source, f.domain, values, f.target))
        if lip <= lip_max * (1 + DEFAULT_TOLERANCES["lip_slack"]):
            if lip > lip_max:
                centroid = values.mean(axis=0)
                values = centroid + (values - centroid) * (lip_max / lip)
            return PartialMap(f.source, f.domain, values, f.target), size
        size /= 2
    return PartialMap(f.source, f.domain, f.values.copy(), f.target), 0.0


def _extension_error(ext: ExtensionResult, f: PartialMap) -> float:
    values = ext.restrict(f.domain).values
    return float(np.max(f.target.rowwise_distances(values, f.values)))


def _euclidean(config: ExperimentConfig, trial: int, lip_target: Optional[float] = None) -> Instance:
    return generate_instance(config, "euclidean", trial, lip_target)


# Essais par expérience


def trial_kirszbraun(config: ExperimentConfig, trial: int) -> TrialRecord:
    inst = _euclidean(config, trial)
    rng = trial_rng(config.seed, trial, "order")
    L = config.lip_target
    tol = config.tolerance("audit")
    ext = kirszbraun_extend(
        inst.f, L, _order(config, rng, inst.space.n, inst.f.domain), config.tolerance("solver_tol")
    )

    record = TrialRecord(config.experiment, trial, inst.digest)
    residuals = ext.details["residuals"]
    record.add("max_residual", -max(residuals, default=0.0), tol)
    record.add("lip_slack", L - ext.lip_achieved, tol * L)
    record.add("extension_error", -_extension_error(ext, inst.f), 0.0)
    record.add("lip_achieved", ext.lip_achieved)
    return record


def trial_tree_extension(config: ExperimentConfig, trial: int) -> TrialRecord:
    inst = generate_instance(config, "tree", trial)
    rng = trial_rng(config.seed, trial, "order")
    L = config.lip_target
    tol = config.tolerance("audit")
    ext = lipschitz_extend_tree(inst.f, L, _order(config, rng, inst.space.n, inst.f.domain))

    record = TrialRecord(config.experiment, trial, inst.digest)
    record.add("lip_slack", L - ext.lip_achieved, tol * L)
    record.add("extension_error", -_extension_error(ext, inst.f), 0.0)

    tree = inst.target.tree
    quads = [[random_tree_point(rng, tree) for _ in range(4)] for _ in range(20)]
    record.add("four_point", min(four_point_slack(*q, tree) for q in quads), 1e-12)
    return record


def trial_phi_lsc(config: ExperimentConfig, trial: int) -> TrialRecord:
    inst = _euclidean(config, trial, lip_target=0.8)
    rng = trial_rng(config.seed, trial, "perturbation")
    tol = config.tolerance("audit")
    solver_tol = config.tolerance("solver_tol")
    f = inst.f
    f_full = kirszbraun_extend(f, 1.0, tol=solver_tol)
    order = _order(config, rng, inst.space.n, f.domain)

    record = TrialRecord(config.experiment, trial, inst.digest)
    for eps in config.eps:
        _, M, delta = phi_delta(f_full, f.domain, eps)
        directions = _unit_rows(rng, len(f.domain), f.target.dim)
        g, size = _perturb_until(f_full.restrict(f.domain), directions, 0.9 * delta, 1.0)
        out = transport_phi(f_full, g, eps, solver_tol, order)

        record.add(f"extension_error@{eps:g}", -_extension_error(out, g), 0.0)
        record.add(f"lip_slack@{eps:g}", 1.0 - out.lip_achieved, tol)
        record.add(f"eps_slack@{eps:g}", eps - sup_distance(f_full, out), tol)
        record.add(f"delta@{eps:g}", delta)
        record.add(f"perturbation@{eps:g}", size)
    return record


def _psi_branch_two_instance(config: ExperimentConfig, inst: Instance, rng: np.random.Generator, eps: float):
    """
    Ajoute un point b proche de a0 = min A avec f(b) = f(a0), puis écarte g(a0) et g(b)
    de ±0.9δ pour forcer Lip(g, A) > 2·Lip(f, X)
    """
    f = inst.f
    points = inst.points
    a0 = int(f.domain[0])
    w = _unit_rows(rng, 1, points.shape[1])[0]
    u = _unit_rows(rng, 1, f.target.dim)[0]

    f_full = kirszbraun_extend(f, lip_constant(f), tol=config.tolerance("solver_tol"))
    const = psi_constants(f_full, f.domain, eps)
    rho = 0.5 * const.delta / const.lip_f

    for _ in range(60):
        X = np.vstack([points, points[a0] + rho * w])
        b = X.shape[0] - 1
        domain = np.append(f.domain, b)
        values = np.vstack([f.values, f.values[0]])
        inst_b = EuclideanInstance(X, domain, values)
        f_b = inst_b.partial_map()
        f_full = kirszbraun_extend(f_b, lip_constant(f_b), tol=config.tolerance("solver_tol"))
        const = psi_constants(f_full, domain, eps)
        if const.lip_f > 0 and rho < 0.9 * const.delta / const.lip_f:
            break
        rho /= 2

    g_values = f_full.values[domain].copy()
    g_values[0] = g_values[0] - 0.9 * const.delta * u
    g_values[-1] = g_values[-1] + 0.9 * const.delta * u
    g = PartialMap(f_full.source, domain, g_values, f_full.target)
    return f_full, g, const


def trial_psi_lsc(config: ExperimentConfig, trial: int) -> TrialRecord:
    inst = _euclidean(config, trial)
    rng = trial_rng(config.seed, trial, "perturbation")
    tol = config.tolerance("audit")
    solver_tol = config.tolerance("solver_tol")
    expected = "product" if trial % 2 == 0 else "set"

    record = TrialRecord(config.experiment, trial, inst.digest)
    for eps in config.eps:
        if expected == "product":
            f = inst.f
            f_full = kirszbraun_extend(f, lip_constant(f), tol=solver_tol)
            const = psi_constants(f_full, f.domain, eps)
            directions = _unit_rows(rng, len(f.domain), f.target.dim)
            g, _ = _perturb_until(
                f_full.restrict(f.domain), directions, 0.9 * const.delta, 2 * const.lip_f
            )
        else:
            f_full, g, const = _psi_branch_two_instance(config, inst, rng, eps)

        out = transport_psi(f_full, g, eps, solver_tol)
        lip_g = lip_constant(g)
        branch = out.details["branch"]

        record.add(f"branch_match@{eps:g}", 0.0 if branch == expected else -1.0, 0.0)
        record.add(f"extension_error@{eps:g}", -_extension_error(out, g), 0.0)
        record.add(
            f"lip_rel_slack@{eps:g}",
            -abs(out.lip_achieved - lip_g) / max(lip_g, 1e-300),
            tol,
        )
        record.add(f"eps_slack@{eps:g}", eps - sup_distance(f_full, out), tol)
        record.add(f"delta@{eps:g}", const.delta)
        if branch == "set":
            far = set(out.details["far"])
            near = [x for x in range(out.source.n) if x not in far]
            gaps = f_full.target.rowwise_distances(f_full.values[near], out.values[near])
            record.add(f"near_bound_slack@{eps:g}", 4 * const.delta - float(np.max(gaps)), tol)
    return record


RESHETNYAK_CHUNK = 1000


def block_reshetnyak(config: ExperimentConfig, start: int, stop: int) -> List[TrialRecord]:
    """
    Essais start..stop-1 de l'audit de Reshetnyak, calculés par lots

    Les quadruplets sont tirés par paquets alignés de RESHETNYAK_CHUNK essais,
    un générateur par paquet: l'essai k ne dépend que de (graine, k).
    """
    m = config.target_dim
    tol = config.tolerance("audit")
    records = []
    for chunk in range(start // RESHETNYAK_CHUNK, (stop - 1) // RESHETNYAK_CHUNK + 1):
        first = chunk * RESHETNYAK_CHUNK
        quads = trial_rng(config.seed, chunk, "reshetnyak").uniform(
            -1.0, 1.0, size=(RESHETNYAK_CHUNK, 4, m)
        )
        lo, hi = max(start, first), min(stop, first + RESHETNYAK_CHUNK)
        batch = quads[lo - first : hi - first]
        x, y, u, v = (batch[:, i] for i in range(4))
        slacks = reshetnyak_slack(x, y, u, v)
        equality = reshetnyak_slack(x, y, x, y)
        for k in range(hi - lo):
            record = TrialRecord(config.experiment, lo + k, array_digest(batch[k]))
            record.add("slack", slacks[k], tol)
            record.add("equality_gap", -abs(equality[k]), tol)
            records.append(record)
    return records


def trial_reshetnyak(config: ExperimentConfig, trial: int) -> TrialRecord:
    return block_reshetnyak(config, trial, trial + 1)[0]


def _ball_points(rng: np.random.Generator, z: np.ndarray, radius: float, k: int) -> np.ndarray:
    m = z.size
    directions = _unit_rows(rng, k, m)
    scale = radius * rng.uniform(0.0, 1.0, size=(k, 1)) ** (1.0 / m)
    return z + directions * scale


def _into_ball(P: np.ndarray, z: np.ndarray, radius: float) -> np.ndarray:
    gaps = np.linalg.norm(P - z, axis=1, keepdims=True)
    return z + (P - z) * np.minimum(1.0, radius / np.maximum(gaps, 1e-300))


def trial_projection_stability(config: ExperimentConfig, trial: int) -> TrialRecord:
    rng = trial_rng(config.seed, trial)
    m, k = config.target_dim, config.n_domain
    z = rng.uniform(-1.0, 1.0, size=m)
    r1, r2 = 1.0, 2.0
    V1 = _ball_points(rng, z, r1, k)
    if trial % 2 == 0:
        V2 = _into_ball(V1 + 0.1 * rng.uniform(-1.0, 1.0, size=V1.shape), z, r1)
    else:
        V2 = _ball_points(rng, z, r1, k)
    x = _ball_points(rng, z, r2, 1)[0]

    solver_tol = config.tolerance("solver_tol")
    record = TrialRecord(config.experiment, trial, array_digest(V1, V2, z, x))
    record.add(
        "slack",
        projection_stability_slack(V1, V2, z, r1, x, r2, solver_tol),
        config.tolerance("audit"),
    )
    record.add("hull_hausdorff", hull_hausdorff(V1, V2, solver_tol))
    return record


def trial_hull_contraction(config: ExperimentConfig, trial: int) -> TrialRecord:
    rng = trial_rng(config.seed, trial)
    k1 = int(rng.integers(1, config.n_domain + 1))
    k2 = int(rng.integers(1, config.n_domain + 1))
    V1 = rng.uniform(0.0, 1.0, size=(k1, config.target_dim))
    V2 = rng.uniform(0.0, 1.0, size=(k2, config.target_dim))

    record = TrialRecord(config.experiment, trial, array_digest(V1, V2))
    hull = hull_hausdorff(V1, V2, config.tolerance("solver_tol"))
    record.add("slack", hausdorff(V1, V2) - hull, config.tolerance("audit"))
    record.add("hull_hausdorff", hull)
    return record


def trial_alpha_c(config: ExperimentConfig, trial: int) -> TrialRecord:
    inst = _euclidean(config, trial, lip_target=min(config.lip_target, 0.8))
    rng = trial_rng(config.seed, trial, "perturbation")
    solver_tol = config.tolerance("solver_tol")
    tol = config.tolerance("audit")
    chain_tol = config.tolerance("chain")
    f = inst.f

    ext = kirszbraun_extend(f, 1.0, _order(config, rng, inst.space.n, f.domain), solver_tol)
    out = alpha_c_compose(ext, HullVertexSet(f.values), solver_tol)

    record = TrialRecord(config.experiment, trial, inst.digest)
    record.add("hull_distance", -out.details["hull_distance"], tol)
    record.add("lip_nonincrease", ext.lip_achieved - out.lip_achieved, chain_tol)
    record.add("extension_error", -_extension_error(out, f), 0.0)

    if trial < get_experiment(config.experiment).get("chain_trials", 0):
        eps = config.eps[0]
        _, _, delta = phi_delta(out, f.domain, eps / 3)
        delta = min(delta, eps / 3)
        directions = _unit_rows(rng, len(f.domain), f.target.dim)
        g, _ = _perturb_until(out.restrict(f.domain), directions, 0.9 * delta, 1.0)
        chained = transport_phi_c(out, g, eps, solver_tol)
        record.add("chain_eps_slack", eps - sup_distance(out, chained), chain_tol)
        record.add("chain_hull_distance", -chained.details["hull_distance"], chain_tol)
        record.add("chain_extension_error", -_extension_error(chained, g), 0.0)
    return record


def trial_psi_c_lsc(config: ExperimentConfig, trial: int) -> TrialRecord:
    inst = _euclidean(config, trial)
    rng = trial_rng(config.seed, trial, "perturbation")
    solver_tol = config.tolerance("solver_tol")
    tol = config.tolerance("audit")
    f = inst.f
    order = _order(config, rng, inst.space.n, f.domain)
    # f_full à valeurs dans co(f(A)) avec Lip(f, X) = Lip(f, A)
    f_full = beta_c_compose(kirszbraun_extend(f, lip_constant(f), tol=solver_tol), f, solver_tol)

    record = TrialRecord(config.experiment, trial, inst.digest)
    for eps in config.eps:
        const = psi_constants(f_full, f.domain, eps / 3)
        delta = min(const.delta, eps / 3)
        directions = _unit_rows(rng, len(f.domain), f.target.dim)
        g, _ = _perturb_until(f_full.restrict(f.domain), directions, 0.9 * delta, 2 * const.lip_f)
        out = transport_psi_c(f_full, g, eps, solver_tol, order)
        lip_g = out.details["lip_domain"]

        record.add(f"hull_distance@{eps:g}", -out.details["hull_distance"], tol)
        record.add(
            f"lip_rel_slack@{eps:g}",
            -abs(out.lip_achieved - lip_g) / max(lip_g, 1e-300),
            tol,
        )
        record.add(f"eps_slack@{eps:g}", eps - sup_distance(f_full, out), tol)
        record.add(f"extension_error@{eps:g}", -_extension_error(out, g), 0.0)
        record.add(f"delta@{eps:g}", delta)
    return record


def _supnorm_pair(config: ExperimentConfig, trial: int, size: float):
    inst = generate_instance(config, "supnorm", trial, lip_target=1.0)
    rng = trial_rng(config.seed, trial, "perturbation")
    f = inst.f
    directions = rng.uniform(-1.0, 1.0, size=f.values.shape)
    g, _ = _perturb_until(f, directions, size, 1.0)
    return inst, f, g, rng


def trial_midpoint_nonexp(config: ExperimentConfig, trial: int) -> TrialRecord:
    inst, f, g, _ = _supnorm_pair(config, trial, 0.2)
    tol = config.tolerance("audit")
    out_f = midpoint_operator(f, 1.0)
    out_g = midpoint_operator(g, 1.0)
    # f et g sortent d'un redimensionnement: Lip = 1 à l'arrondi près
    bound = max(1.0, lip_constant(f), lip_constant(g))

    record = TrialRecord(config.experiment, trial, inst.digest)
    record.add("nonexp_slack", sup_distance(f, g) - sup_distance(out_f, out_g), tol)
    record.add("lip_slack", bound - max(out_f.lip_achieved, out_g.lip_achieved), tol)
    record.add(
        "extension_error",
        -max(_extension_error(out_f, f), _extension_error(out_g, g)),
        0.0,
    )
    return record


def trial_clamped_hull(config: ExperimentConfig, trial: int) -> TrialRecord:
    inst, f, g, _ = _supnorm_pair(config, trial, 0.2)
    tol = config.tolerance("audit")
    out = clamped_operator(f, 1.0)
    box = admissible_hull(f.values)
    outside = np.maximum(box.lower - out.values, out.values - box.upper).max()

    record = TrialRecord(config.experiment, trial, inst.digest)
    record.add("hull_violation", -max(0.0, float(outside)), 0.0)
    record.add("lip_slack", 1.0 - out.lip_achieved, tol)
    record.add("extension_error", -_extension_error(out, f), 0.0)

    gap = sup_distance(f, g)
    if gap > 0:
        record.add("operator_expansion", sup_distance(out, clamped_operator(g, 1.0)) / gap)
    return record


def trial_transport_supnorm(config: ExperimentConfig, trial: int) -> TrialRecord:
    inst, f, g, rng = _supnorm_pair(config, trial, config.perturbation)
    tol = config.tolerance("audit")
    lip_tol = 1e-9
    order = _order(config, rng, inst.space.n, f.domain)
    f_ext = midpoint_operator(f, 1.0)
    out = transport_extension(f, f_ext, g, order)
    same = transport_extension(f, f_ext, f, order)

    record = TrialRecord(config.experiment, trial, inst.digest)
    record.add("distance_slack", sup_distance(f, g) - sup_distance(f_ext, out), tol)
    record.add("lip_slack", max(1.0, lip_constant(g)) - out.lip_achieved, lip_tol)
    record.add("extension_error", -_extension_error(out, g), 0.0)
    record.add("identity_error", -float(np.max(np.abs(same.values - f_ext.values))), 0.0)

    f_ext_c = clamped_operator(f, 1.0)
    out_c = transport_extension(f, f_ext_c, g, order, hull_constrained=True)
    box = admissible_hull(g.values)
    outside = np.maximum(box.lower - out_c.values, out_c.values - box.upper).max()
    record.add("hull_distance_slack", sup_distance(f, g) - sup_distance(f_ext_c, out_c), tol)
    record.add("hull_violation", -max(0.0, float(outside)), 0.0)
    return record


def trial_transport_tree(config: ExperimentConfig, trial: int) -> TrialRecord:
    inst = generate_instance(config, "tree", trial, lip_target=1.0)
    rng = trial_rng(config.seed, trial, "perturbation")
    tol = config.tolerance("audit")
    f = inst.f
    tree = f.target.tree
    f_ext = lipschitz_extend_tree(f, 1.0)

    goals = [random_tree_point(rng, tree) for _ in f.domain]
    size = config.perturbation
    for _ in range(60):
        moved = []
        for p, q in zip(f.values, goals):
            d = tree.distance(p, q)
            moved.append(p if d == 0 else tree_interpolate(p, q, min(1.0, size / d), tree))
        g = PartialMap(f.source, f.domain, moved, f.target)
        if lip_constant(g) <= 1.0 + DEFAULT_TOLERANCES["lip_slack"]:
            break
        size /= 2
    else:
        g = PartialMap(f.source, f.domain, list(f.values), f.target)

    order = _order(config, rng, inst.space.n, f.domain)
    out = transport_extension_tree(f, f_ext, g, order)
    same = transport_extension_tree(f, f_ext, f, order)
    mismatches = sum(a != b for a, b in zip(same.values, f_ext.values))

    record = TrialRecord(config.experiment, trial, inst.digest)
    record.add("distance_slack", sup_distance(f, g) - sup_distance(f_ext, out), tol)
    record.add("lip_slack", 1.0 - out.lip_achieved, 1e-9)
    record.add("extension_error", -_extension_error(out, g), 0.0)
    record.add("identity_error", -float(mismatches), 0.0)
    return record


def trial_external_intersection(config: ExperimentConfig, trial: int) -> TrialRecord:
    inst = generate_instance(config, "supnorm", trial, lip_target=1.0)
    rng = trial_rng(config.seed, trial, "family")
    tol = config.tolerance("audit")
    f = inst.f

    witnesses = [midpoint_operator(f, 1.0), lower_extension(f, 1.0), upper_extension(f, 1.0)]
    spread = max(sup_distance(a, b) for a in witnesses for b in witnesses)
    family = []
    for w in witnesses:
        shift = rng.uniform(-0.3, 0.3, size=f.target.dim)
        member = ExtensionResult.build(f.source, f.target, w.values + shift)
        family.append((member, float(np.max(np.abs(shift))) + spread / 2))

    order = _order(config, rng, inst.space.n, f.domain)
    out = external_intersection(f, family, witnesses, order)

    record = TrialRecord(config.experiment, trial, inst.digest)
    for a, (member, r) in enumerate(family):
        record.add(f"family_slack_{a}", r - sup_distance(out, member), tol)
    record.add("lip_slack", 1.0 - out.lip_achieved, 1e-9)
    record.add("extension_error", -_extension_error(out, f), 0.0)
    return record


def trial_continuity_sweep(config: ExperimentConfig, trial: int) -> TrialRecord:
    inst = _euclidean(config, trial, lip_target=min(config.lip_target, 0.8))
    rng = trial_rng(config.seed, trial, "perturbation")
    solver_tol = config.tolerance("solver_tol")
    f = inst.f
    base = kirszbraun_extend(f, 1.0, tol=solver_tol)

    record = TrialRecord(config.experiment, trial, inst.digest)
    record.add("lip_slack", 1.0 - base.lip_achieved, config.tolerance("audit"))
    directions = _unit_rows(rng, len(f.domain), f.target.dim)
    for size in config.eps:
        g, applied = _perturb_until(f, directions, size, 1.0)
        moved = kirszbraun_extend(g, 1.0, tol=solver_tol)
        distance = sup_distance(base, moved)
        record.add(f"distance@{size:g}", distance)
        if applied > 0:
            record.add(f"modulus@{size:g}", distance / sup_distance(f, g))

    free = np.setdiff1d(np.arange(inst.space.n), f.domain)
    reversed_ext = kirszbraun_extend(f, 1.0, free[::-1], solver_tol)
    record.add("order_gap", sup_distance(base, reversed_ext))
    return record


TRIALS: Dict[str, Callable[[ExperimentConfig, int], TrialRecord]] = {
    "kirszbraun": trial_kirszbraun,
    "tree_extension": trial_tree_extension,
    "phi_lsc": trial_phi_lsc,
    "psi_lsc": trial_psi_lsc,
    "reshetnyak": trial_reshetnyak,
    "projection_stability": trial_projection_stability,
    "hull_contraction": trial_hull_contraction,
    "alpha_c": trial_alpha_c,
    "psi_c_lsc": trial_psi_c_lsc,
    "midpoint_nonexp": trial_midpoint_nonexp,
    "clamped_hull": trial_clamped_hull,
    "transport_supnorm": trial_transport_supnorm,
    "transport_tree": trial_transport_tree,
    "external_intersection": trial_external_intersection,
    "continuity_sweep": trial_continuity_sweep,
}


def _run_trial(config: ExperimentConfig, trial: int) -> TrialRecord:
    try:
        return TRIALS[config.experiment](config, trial)
    except LipextError as e:
        # l'essai compte comme échoué, la campagne continue
        record = TrialRecord(config.experiment, trial, "")
        record.add(f"error:{type(e).__name__}", -1.0, 0.0)
        return record


# Expériences dont les essais se calculent par lots
BLOCK_TRIALS: Dict[str, Callable[[ExperimentConfig, int, int], List[TrialRecord]]] = {
    "reshetnyak": block_reshetnyak,
}


def _run_block(config: ExperimentConfig, start: int, stop: int) -> List[TrialRecord]:
    if config.experiment in BLOCK_TRIALS:
        return BLOCK_TRIALS[config.experiment](config, start, stop)
    return [_run_trial(config, k) for k in range(start, stop)]


def run_experiment(
    config: ExperimentConfig,
    n_jobs: Optional[int] = None,
    quiet: bool = False,
) -> ExperimentReport:
    """
    Exécute tous les essais d'une expérience

    Args:
        config: Configuration validée
        n_jobs: Workers joblib (LIPEXT_THREADS par défaut)
        quiet: Supprime affichage et barre de progression

    Returns:
        ExperimentReport (CSV écrit si config.output est renseigné)
    """
    get_experiment(config.experiment)
    if n_jobs is None:
        n_jobs = resolve_threads()

    # découpage en blocs: l'ordre des résultats ne dépend pas du parallélisme
    block = max(1, min(1000, config.trials // 64))
    bounds = [(s, min(s + block, config.trials)) for s in range(0, config.trials, block)]

    if not quiet:
        print(f"🔬 Expérience {config.experiment}: {config.trials} essais (graine {config.seed})")

    blocks = Parallel(n_jobs=n_jobs, return_as="generator")(
        delayed(_run_block)(config, s, e) for s, e in bounds
    )
    records: List[TrialRecord] = []
    with tqdm(total=config.trials, desc=config.experiment, unit="essai", disable=quiet) as bar:
        for chunk in blocks:
            records.extend(chunk)
            bar.update(len(chunk))

    report = ExperimentReport(config, records)
    if config.output:
        write_csv(report, config.output)

    if not quiet:
        status = "✅" if report.passed else "❌"
        print(
            f"{status} Taux de réussite {report.pass_rate:.4f} | "
            f"écart minimal {report.min_slack:.3e} | violation maximale {report.max_violation:.3e}"
        )
        if config.output:
            print(f"📊 Résultats: {config.output}")
        if not report.passed:
            failed = [r.trial for r in report.records if not r.passed]
            print(f"⚠️  {len(failed)} essai(s) en échec, premiers: {failed[:10]}")
            for name, slacks in report.slack_reports().items():
                if not slacks.passed:
                    _, worst = slacks.witness
                    print(f"   ❌ {name}: écart minimal {slacks.min_slack:.3e} (essai {worst})")
    return report


def sweep_summary(report: ExperimentReport) -> Dict[str, float]:
    """Moyenne de chaque quantité informative sur l'ensemble des essais"""
    sums: Dict[str, List[float]] = {}
    for r in report.records:
        for m in r.measurements:
            if m.informational and math.isfinite(m.value):
                sums.setdefault(m.name, []).append(m.value)
    return {name: float(np.mean(values)) for name, values in sums.items()}
