"""toruslab: numerical experiments with non-resonant torus homeomorphisms.

The library constructs circle homeomorphisms (rigid rotations and Denjoy
counterexamples), assembles torus skew products over them, and verifies
structural dynamics numerically: rotation vectors, chain transitivity with
at most two jumps, weak transitivity, essentiality of box domains, capture
diameters, and ball-return perturbations of fiber families.
"""

from .boxes import BoxDomain, cell_of_point
from .chain import (ChainReport, TransitionGraph, build_transition_graph,
                    chain_path, chain_transitivity_report)
from .circle import (CircleLift, GOLDEN_ROTATION, QuadraticIrrational,
                     RotationEstimate, SILVER_ROTATION, compose_rotation,
                     continued_fraction, inverse_eval, lift_eval,
                     near_rational, rationally_independent, rigid_lift,
                     rotation_number)
from .denjoy import DenjoyMap, DenjoySpec, GapLocation, build_denjoy, gap_locate
from .errors import BudgetError
from .essential import (DOUBLY_ESSENTIAL, EssentialityResult, INESSENTIAL,
                        SIMPLY_ESSENTIAL, classify_essentiality,
                        compute_capture_diameter,
                        essential_intersection_check, forward_invariant_hull,
                        image_boxes)
from .omega import NonwanderingApprox, nonwandering_approx, weak_transitivity_check
from .perturb import (ReturnCheck, ReturnPerturbation,
                      build_return_perturbation, verify_return)
from .pseudo import (ChainBudgets, PseudoOrbit, ValidationReport,
                     make_pseudo_orbit, two_jump_pseudo_orbit,
                     validate_pseudo_orbit)
from .skew import (ConstantFiber, FiberFamily, Override,
                   RotationVectorEstimate, SkewProduct,
                   build_example_fiber_family, fiber_composition,
                   find_displacement_time, lift_distance, product_map,
                   rigid_translation, rotation_vector, skew_eval, torus_dist)

__version__ = "0.1.0"

__all__ = [
    "BoxDomain",
    "BudgetError",
    "ChainBudgets",
    "ChainReport",
    "CircleLift",
    "ConstantFiber",
    "DenjoyMap",
    "DenjoySpec",
    "DOUBLY_ESSENTIAL",
    "EssentialityResult",
    "FiberFamily",
    "GapLocation",
    "GOLDEN_ROTATION",
    "INESSENTIAL",
    "NonwanderingApprox",
    "Override",
    "PseudoOrbit",
    "QuadraticIrrational",
    "ReturnCheck",
    "ReturnPerturbation",
    "RotationEstimate",
    "RotationVectorEstimate",
    "SILVER_ROTATION",
    "SIMPLY_ESSENTIAL",
    "SkewProduct",
    "TransitionGraph",
    "ValidationReport",
    "build_denjoy",
    "build_example_fiber_family",
    "build_return_perturbation",
    "build_transition_graph",
    "cell_of_point",
    "chain_path",
    "chain_transitivity_report",
    "classify_essentiality",
    "compose_rotation",
    "compute_capture_diameter",
    "continued_fraction",
    "essential_intersection_check",
    "fiber_composition",
    "find_displacement_time",
    "forward_invariant_hull",
    "gap_locate",
    "image_boxes",
    "inverse_eval",
    "lift_distance",
    "lift_eval",
    "make_pseudo_orbit",
    "near_rational",
    "nonwandering_approx",
    "product_map",
    "rationally_independent",
    "rigid_lift",
    "rigid_translation",
    "rotation_number",
    "rotation_vector",
    "skew_eval",
    "torus_dist",
    "two_jump_pseudo_orbit",
    "validate_pseudo_orbit",
    "verify_return",
    "weak_transitivity_check",
    "__version__",
]
