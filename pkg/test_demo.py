"""
Test and demonstration script for the Lipschitz extension lab
"""

import os
import tempfile

import numpy as np

from lipext.config import EXPERIMENTS, ExperimentConfig
from lipext.euclid_kirszbraun import EuclideanInstance, kirszbraun_extend, phi_delta, transport_phi
from lipext.experiments import run_experiment, sweep_summary
from lipext.instances import generate_instance
from lipext.metric_core import FiniteMetricSpace, PartialMap, SupNormSpace, lip_constant, sup_distance
from lipext.metric_tree import lipschitz_extend_tree
from lipext.supnorm_hyperconvex import clamped_operator, midpoint_operator


def create_test_instance(n_points: int = 7, seed: int = 42) -> EuclideanInstance:
    """
    Creates a small planar instance with a nonexpansive map on half the points

    Args:
        n_points: Size of X
        seed: Random seed
    """
    print(f"Creating test instance: {n_points} points in the plane")
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.0, 1.0, size=(n_points, 2))

    # A = first half, f = rotation by 90° scaled by 0.8
    A = np.arange(n_points // 2 + 1)
    rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
    values = 0.8 * points[A] @ rotation.T

    print(f"   Instance created: |X| = {n_points}, |A| = {len(A)}")
    return EuclideanInstance(points, A, values)


def build_extension():
    inst = create_test_instance()
    return inst, kirszbraun_extend(inst, 1.0)


def test_kirszbraun_extension():
    """
    Test the sequential Kirszbraun extension
    """
    print("\nTEST KIRSZBRAUN EXTENSION")
    print("=" * 50)

    inst, ext = build_extension()

    print(f"   Lip(f, A)     = {lip_constant(inst.partial_map()):.6f}")
    print(f"   Lip(f', X)    = {ext.lip_achieved:.6f}")
    print(f"   max residual  = {ext.max_constraint_violation:.3e}")

    assert ext.lip_achieved <= 1.0 + 1e-6
    np.testing.assert_array_equal(ext.values[inst.A], inst.f_values)


def test_phi_transport():
    """
    Test the lower semicontinuity transport on a small perturbation
    """
    print("\nTEST TRANSPORT Φ")
    print("=" * 45)

    inst, ext = build_extension()
    eps = 0.4
    _, _, delta = phi_delta(ext, inst.A, eps)
    rng = np.random.default_rng(0)
    g = PartialMap(ext.source, inst.A, inst.f_values + rng.uniform(-1, 1, inst.f_values.shape) * delta / 4, ext.target)
    if lip_constant(g) > 1.0:
        g = inst.partial_map()

    out = transport_phi(ext, g, eps)
    print(f"   δ             = {delta:.3e}")
    print(f"   d∞(f, g')     = {sup_distance(ext, out):.6f} (ε = {eps})")
    print(f"   Lip(g', X)    = {out.lip_achieved:.6f}")

    assert sup_distance(ext, out) <= eps + 1e-6
    assert out.lip_achieved <= 1.0 + 1e-6


def test_supnorm_operators():
    """
    Test the midpoint and clamped operators on a line with two anchored points
    """
    print("\nTEST SUP-NORM OPERATORS")
    print("=" * 45)

    space = FiniteMetricSpace.from_points(np.array([[0.0], [1.0], [0.5], [2.0]]))
    f = PartialMap(space, [0, 1], [[0.0, 0.0], [0.1, -0.1]], SupNormSpace(2))
    mid, clamped = midpoint_operator(f, 2.0), clamped_operator(f, 2.0)

    print(f"   Lip midpoint  = {mid.lip_achieved:.6f}")
    print(f"   Lip clamped   = {clamped.lip_achieved:.6f}")
    print(f"   hull          = {clamped.details['hull']}")

    assert mid.lip_achieved <= 2.0 + 1e-12
    assert clamped.details["hull"].contains(clamped.values[-1])


def test_tree_extension():
    """
    Test the extension into a random metric tree
    """
    print("\nTEST TREE EXTENSION")
    print("=" * 45)

    inst = generate_instance(ExperimentConfig.for_experiment("tree_extension", seed=3), "tree")
    out = lipschitz_extend_tree(inst.f, 1.0)

    print(f"   tree          = {inst.target.tree}")
    print(f"   Lip(f', X)    = {out.lip_achieved:.6f}")
    assert out.lip_achieved <= 1.0 + 1e-9


def demo_campaign():
    """
    Demonstration of a short experiment campaign with CSV output
    """
    print("\nEXPERIMENT CAMPAIGN DEMONSTRATION")
    print("=" * 40)

    try:
        with tempfile.TemporaryDirectory() as temp_dir:
            output = os.path.join(temp_dir, "continuity_sweep.csv")
            config = ExperimentConfig.for_experiment("continuity_sweep", trials=20, output=output)
            report = run_experiment(config, n_jobs=1)

            print("\nMean informational quantities:")
            for name, value in sweep_summary(report).items():
                print(f"   {name:20s}: {value:.4f}")

            print("\nCSV CONTENT (first lines):")
            print("-" * 25)
            with open(output, "r", encoding="utf-8") as f:
                for line in f.readlines()[:8]:
                    print(line.rstrip())

        print("\nDEMONSTRATION COMPLETED SUCCESSFULLY!")
        print("All modules are working correctly")

    except Exception as e:
        print(f"\nERROR DURING DEMONSTRATION: {e}")
        import traceback

        traceback.print_exc()


def show_available_experiments():
    """
    Display the experiments and the contract each one audits
    """
    print("\nAVAILABLE EXPERIMENTS")
    print("=" * 40)

    for tag, info in EXPERIMENTS.items():
        print(f"\n{tag} - {info['description']}")
        print(f"   Target:   {info['kind']}")
        print(f"   Contract: {info['contract']}")


if __name__ == "__main__":
    print("LIPSCHITZ EXTENSION LAB TEST AND DEMONSTRATION")
    print("=" * 65)

    show_available_experiments()

    test_kirszbraun_extension()
    test_phi_transport()
    test_supnorm_operators()
    test_tree_extension()

    demo_campaign()
