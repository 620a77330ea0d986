"""prunebound: randomized magnitude pruning, sparse matrix sketching, and
compression-based generalization bound calculators, with Monte Carlo
verification of every closed form."""

from .bounds import (BoundBudget, BoundReport, SubgaussianParams, assemble_report,
                     baseline_bounds, bartlett_covering, compression_bound,
                     imp_bound, naive_bound, perturbation_bound,
                     pruning_error_bound, sketch_gen_bound, subgaussian_kappa)
from .closedform import (MomentSet, GammaBound, balls_bins_bound,
                         binomial_tail_via_beta, chi, delta_moments,
                         distributed_sparsity_bound, kappa_tau_probability,
                         latala_gamma)
from .linalg import gaussian_matrix, norm_2_1, spectral_norm
from .mnist import load_mnist_idx, make_synthetic_mnist
from .model_io import load_model, save_model
from .models import (Activation, Dataset, LayerSpec, ModelStack, accuracy,
                     empirical_margin_loss, forward, forward_intermediates,
                     margins, mlp_stack)
from .pruning import (DiscretizeParams, PruneOutcome, PruneParams, choose_rho,
                      discretize, estimate_psi, mbp_prune, sparsity_stats)
from .rng import RngHandle
from .sketching import (BipartiteEnsemble, SketchPair, default_degree,
                        draw_ensemble, identity_ensemble, make_distributed_sparse,
                        parameter_count, recover, sketch, sketch_dim)
from .training import init_mlp, train

__version__ = "0.1.0"
