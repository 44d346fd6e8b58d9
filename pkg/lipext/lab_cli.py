"""
Interface en ligne de commande du laboratoire : génération d'instances,
exécution des expériences, contrôle de fichiers et catalogue
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .config import (
    EXPERIMENTS,
    EXPERIMENT_ALIASES,
    INSTANCE_KINDS,
    ORDERS,
    ExperimentConfig,
    list_available_experiments,
    load_config,
)
from .exceptions import LipextError
from .experiments import run_experiment
from .instances import check_instance, generate_instance, save_instance

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2


def _build_config(args, experiment: str) -> ExperimentConfig:
    """Configuration issue du fichier --config puis des options explicites"""
    if args.config:
        config = load_config(args.config, experiment)
    else:
        config = ExperimentConfig.for_experiment(experiment)

    overrides = {}
    for name in ("trials", "seed", "order"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "eps", None):
        overrides["eps"] = args.eps
    if not overrides:
        return config
    params = config.to_dict()
    params.update(overrides)
    return ExperimentConfig(**params)


def cmd_gen(args) -> int:
    config = _build_config(args, args.experiment)
    instance = generate_instance(config, args.kind, args.trial)
    out = args.out or f"instance_{args.kind}_{config.seed}_{args.trial}.json"
    save_instance(instance, out)
    if not args.quiet:
        print(f"✅ Instance {args.kind} écrite: {out}")
        print(f"   📊 |X| = {instance.space.n}, |A| = {len(instance.f.domain)}, empreinte {instance.digest}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _build_config(args, args.experiment)
    config.output = args.out or config.output
    report = run_experiment(config, quiet=args.quiet)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_check(args) -> int:
    if not Path(args.instance).exists():
        raise LipextError(f"Fichier d'instance introuvable: {args.instance}")
    report = check_instance(args.instance)
    if not args.quiet:
        if report["metric_ok"]:
            print("✅ Table de distances: métrique valide")
        else:
            print(f"❌ Table de distances: {len(report['violations'])} violation(s)")
            for v in report["violations"][:10]:
                print(f"   ⚠️  {v}")
        if report.get("error"):
            print(f"❌ {report['error']}")
        elif report["lip"] is not None:
            status = "✅" if report["lip_ok"] else "❌"
            print(f"{status} Lip(f, A) = {report['lip']:.17g} (L = {report['lip_target']:g})")
    return EXIT_OK if report["metric_ok"] and report["lip_ok"] else EXIT_FAILED


def cmd_list(args) -> int:
    list_available_experiments()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lipext",
        description="Laboratoire d'extensions lipschitziennes et de leurs transports",
    )
    parser.add_argument("--quiet", action="store_true", help="Pas d'affichage ni de barre de progression")

    # --quiet accepté aussi après la sous-commande, sans écraser la valeur globale
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="Pas d'affichage ni de barre de progression")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="Générer une instance aléatoire")
    gen.add_argument("kind", choices=INSTANCE_KINDS)
    gen.add_argument("--config", help="Fichier de configuration JSON")
    gen.add_argument("--experiment", default="kirszbraun", choices=list(EXPERIMENTS) + list(EXPERIMENT_ALIASES))
    gen.add_argument("--seed", type=int)
    gen.add_argument("--trial", type=int, default=0, help="Indice d'essai à régénérer")
    gen.add_argument("--out", help="Chemin du fichier d'instance")
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", parents=[common], help="Exécuter une expérience")
    run.add_argument("experiment", help="Étiquette d'expérience (voir 'list')")
    run.add_argument("--config", help="Fichier de configuration JSON")
    run.add_argument("--out", help="Chemin du CSV de résultats")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--eps", type=float, nargs="+")
    run.add_argument("--order", choices=ORDERS)
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", parents=[common], help="Contrôler un fichier d'instance")
    check.add_argument("instance")
    check.set_defaults(func=cmd_check)

    lst = sub.add_parser("list", parents=[common], help="Lister les expériences disponibles")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Point d'entrée de la commande lipext

    Returns:
        0 si tout passe, 1 si un essai ou un contrôle échoue, 2 en cas d'erreur
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("\n⏹️  Exécution interrompue par l'utilisateur")
        return EXIT_ERROR
    except LipextError as e:
        print(f"❌ Erreur: {e}")
        return EXIT_ERROR
    except (OSError, ValueError) as e:
        print(f"❌ Erreur: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
