"""Distributed least-squares and logistic solvers with a shared data pool.

A library plus experiment CLI covering the multi-block ADMM family (primal
and dual distributed, cyclic, order-permuted, double-sweep, and the
pool-reassembling DRAP variant), preconditioned conjugate gradient with
pool-sketched block preconditioners, reference solvers, seeded structure
generators, and a spectral engine that builds the solvers' linear
iteration matrices and verifies their convergence-rate formulas.
"""

from .admm import (NewtonConfig, SolverConfig, SolverRun, double_sweep_run,
                   drap_admm_run, drap_logistic_run, dual_cyclic_run,
                   dual_distributed_run, dual_rp_run,
                   primal_distributed_logistic_run, primal_distributed_run)
from .baselines import direct_ls, gradient_descent, newton_logistic
from .generators import (GenSpec, gen_equal_blocks, gen_paper_example,
                         gen_pcg_construction, gen_random, gen_two_dominant)
from .linalg import (Spectrum, cholesky_solve, eigenvalues_general,
                     frobenius_normalize, spd_condition_number, spectral_radius)
from .model import (BlockGrams, MetricReport, Objective, PartitionedDataset,
                    absolute_loss, block_grams, partition_rows,
                    relative_al_ratio)
from .pcg import (PcgTrace, Preconditioner, build_global_precond,
                  build_identity_precond, build_local_precond, pcg_run,
                  precond_condition_report)
from .sharing import (RoundAssembly, SharingPlan, allocate_pool_to_one_center,
                      assemble_round, build_pool)
from .spectral import (IterationMap, RateReport, bound_large_step,
                       bound_small_step_b2, bounds_small_step_general,
                       build_Mc, build_Md, build_Mgd, build_Mp,
                       cyclic_rate_root, cyclic_transition, gd_crossover,
                       rp_expected_map)
from .verify import verify_theory

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
