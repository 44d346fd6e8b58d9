"""
Exemple d'utilisation du laboratoire d'extensions lipschitziennes en mode programmé
"""

from lipext import ExperimentConfig, run_experiment


def example_basic_usage():
    """Exemple d'utilisation basique : une campagne avec sortie CSV"""

    # Configuration manuelle (alternative à la ligne de commande)
    config = ExperimentConfig.for_experiment(
        "kirszbraun",
        trials=200,
        seed=2024,
        order="shuffled",
        output="/path/to/results/kirszbraun.csv",
    )

    try:
        report = run_experiment(config, n_jobs=4)
        print("Campagne terminée!")
        print(f"Taux de réussite: {report.pass_rate:.4f}")

    except Exception as e:
        print(f"Erreur: {e}")


def example_extension_only():
    """Exemple pour prolonger une application partielle donnée"""

    import numpy as np

    from lipext.euclid_kirszbraun import EuclideanInstance, kirszbraun_extend

    # Points de X (dans R²), A = trois premiers points, f à valeurs dans R²
    points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.4, 0.4], [1.0, 1.0]])
    values = np.array([[0.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    inst = EuclideanInstance(points, [0, 1, 2], values)

    ext = kirszbraun_extend(inst, 1.0)

    print("Valeurs prolongées:")
    for x, value in enumerate(ext.values):
        print(f"  {x}: {value}")
    print(f"Lip(f', X) = {ext.lip_achieved:.6f}")


def example_tree_transport():
    """Exemple de transport d'extension vers un arbre métrique"""

    from lipext.instances import generate_instance, save_instance
    from lipext.metric_tree import lipschitz_extend_tree, transport_extension_tree

    # Instance aléatoire reproductible (graine, essai)
    config = ExperimentConfig.for_experiment("transport_tree", seed=7)
    inst = generate_instance(config, "tree", trial=0, lip_target=1.0)
    save_instance(inst, "/path/to/instances/tree_7_0.json")

    f_ext = lipschitz_extend_tree(inst.f, 1.0)

    # g = f : le transport restitue f_ext
    g_ext = transport_extension_tree(inst.f, f_ext, inst.f)

    print(f"Arbre: {inst.target.tree}")
    print(f"Points identiques: {list(f_ext.values) == list(g_ext.values)}")


if __name__ == "__main__":
    print("Exemples d'utilisation du laboratoire d'extensions lipschitziennes")
    print("=" * 60)

    # Décommenter l'exemple souhaité
    # example_basic_usage()
    # example_extension_only()
    # example_tree_transport()

    print("Modifiez le script pour exécuter l'exemple souhaité")
