"""Intrinsic dimension estimation from random connection graphs.

Two nested graphs connect design points closer than ``eps`` and ``2 eps``.
The ratio of their edge densities, estimated from a few sampled rows,
determines the intrinsic dimension through the doubling law ``2**d``.
"""
from rcdim.errors import RcdimError, SaturatedGraph
from rcdim.estimator import (
    CANONICAL, Correction, DimensionEstimate, EstimatorConfig, ScaleFunction, estimate_dimension,
    estimate_p1, explicit_dimension, implicit_dimension, sigma_hat,
)
from rcdim.experiment import ExperimentConfig, ReportRow, run_experiment
from rcdim.fileio import EdgeListGraphPair, edges_from_cloud, read_graph_pair, read_points, write_points
from rcdim.generators import (
    GeneratorSpec, anisotropic_gaussian, gaussian_iso, generate, helix, noisy_torus, sierpinski, swiss_roll,
    uniform_cube, uniform_sphere,
)
from rcdim.geometry import (
    EUCLIDEAN, Metric, PointCloud, compute_adjacency_rows, compute_degrees, correlation_integral,
    default_epsilon, kegl_dimension,
)
from rcdim.theory import DistributionSpec, doubling_curve, mc_probs, scaling_curve, theorem2_variance

__version__ = "0.1.0"
