"""Stabilization of unstable dynamical systems on their unstable manifold.

The package estimates the low-dimensional left unstable eigenspace of a
system's linearization from adjoint queries, builds latent models and policy
parametrizations on that subspace, and trains feedback policies that
stabilize the full system.  See the README for the command line interface.
"""

from .environments import (
    AllenCahn,
    Environment,
    EnvironmentSpec,
    LinearEnvironment,
    QueryCountingEnvironment,
    TodaLattice,
    TubularReactor,
    finite_difference_vjp_oracle,
    make_allen_cahn,
    make_environment,
    make_toda_lattice,
    make_toy2d,
    make_tubular_reactor,
    newton_steady_state,
)
from .linalg import (
    Spectrum,
    dense_eigendecompose,
    orthonormalize,
    pseudoinverse_transpose,
    solve_linear,
    spectral_radius,
    subspace_angles,
)
from .manifold import (
    LinearCoder,
    UnstableBasis,
    arnoldi_unstable_basis,
    pca_basis,
    unstable_coder,
)
from .rom import (
    LatentModel,
    assemble_rom_adjoint,
    assemble_rom_sysid,
    rom_as_environment,
    rom_step,
)
from .nets import AdamOptimizer, MlpNetwork
from .ddpg import (
    DdpgAgent,
    ReplayBuffer,
    load_checkpoint,
    save_blocks,
    save_checkpoint,
)
from .training import (
    EpisodeRecord,
    EvaluationResult,
    RewardSpec,
    TrainConfig,
    TrainResult,
    closed_loop_spectrum,
    default_blowup_threshold,
    evaluate_policy,
    latent_closed_loop_spectrum,
    lifted_policy_action,
    logmean,
    run_episode,
    train,
    training_observe,
    training_policy,
)
from .diagnostics import (
    SweepResult,
    angle_vs_epsilon,
    converged_pca_coder,
    detection_counts,
    gather_snapshots,
    pca_policy_sweep,
    samples_to_detect_instability,
)

__version__ = "0.1.0"
