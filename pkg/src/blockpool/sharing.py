"""Meta data-sharing: the pre-fixed global pool and per-round reassembly.

A SharingPlan fixes, once, which rows enter the global pool (a uniform
sample without replacement over all rows).  Each solver round then draws a
fresh RoundAssembly: a permutation of the pool partitioned back to the
centers by contribution size, plus a permuted block-update order.  Round
streams are derived from (seed, round) counters so assemblies are
independent of execution order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyResidualBlock, PoolTooSmall
from .model import PartitionedDataset


@dataclass(frozen=True)
class SharingPlan:
    """Pool membership bookkeeping (indices only, never data values).

    pool           sorted global row indices in the pool (size m)
    contributed    per center: the center's pooled rows (r_i), ascending
    retained       per center: the center's rows that stay local (l_i)
    """

    alpha_percent: float
    pool: np.ndarray
    contributed: tuple
    retained: tuple

    @property
    def m(self):
        return int(self.pool.size)

    @property
    def b(self):
        return len(self.contributed)

    def to_json_dict(self):
        return {
            "alpha_percent": self.alpha_percent,
            "m": self.m,
            "pool": self.pool.tolist(),
            "contributed": [r.tolist() for r in self.contributed],
            "retained": [l.tolist() for l in self.retained],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_json_dict(), **kwargs)


@dataclass(frozen=True)
class RoundAssembly:
    """One round's reassignment of pooled rows and update order.

    assigned   per center: pool rows received this round (|assigned_i| = |r_i|)
    assembled  per center: retained rows followed by the received pool rows
    order      permutation of center ids giving the block-update order
    """

    round_index: int
    assigned: tuple
    assembled: tuple
    order: np.ndarray


def build_pool(ds, alpha_percent, seed=0, drap_mode=False):
    """Sample the global pool: m = floor(alpha% * n) rows without replacement.

    With ``drap_mode`` the pool must hold at least one row per center
    (m >= b), since the permuted reassembly otherwise has nothing to do.

    Raises
    ------
    PoolTooSmall
        In drap_mode when m < b.
    """
    if not 0.0 <= alpha_percent <= 100.0:
        raise ValueError(f"alpha_percent must be in [0, 100], got {alpha_percent!r}")
    n = ds.n
    m = int(np.floor(alpha_percent * n / 100.0))
    if drap_mode and m < ds.b:
        raise PoolTooSmall(f"pool of {m} rows cannot feed {ds.b} centers")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x9e3779b9]))
    pool = np.sort(rng.choice(n, size=m, replace=False)) if m else np.empty(0, dtype=np.intp)
    pool = pool.astype(np.intp)
    in_pool = np.zeros(n, dtype=bool)
    in_pool[pool] = True
    contributed, retained = [], []
    for ix in ds.blocks:
        mask = in_pool[ix]
        contributed.append(np.sort(ix[mask]))
        retained.append(np.sort(ix[~mask]))
    return SharingPlan(float(alpha_percent), pool, tuple(contributed), tuple(retained))


def assemble_round(plan, round_index, seed=0):
    """Fresh per-round permutations; deterministic in (plan, seed, round).

    The permuted pool is split back to centers in center order by |r_i|, so
    every center receives exactly as many rows as it contributed.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(round_index)]))
    sizes = [r.size for r in plan.contributed]
    if plan.m:
        sigma = plan.pool[rng.permutation(plan.m)]
        cuts = np.cumsum(sizes)[:-1]
        assigned = tuple(np.asarray(part, dtype=np.intp) for part in np.split(sigma, cuts))
    else:
        assigned = tuple(np.empty(0, dtype=np.intp) for _ in sizes)
    order = rng.permutation(plan.b)
    assembled = tuple(np.concatenate([plan.retained[i], assigned[i]]).astype(np.intp)
                      for i in range(plan.b))
    return RoundAssembly(int(round_index), assigned, assembled, order)


def allocate_pool_to_one_center(ds, plan, target):
    """New partition with the whole pool owned by one center.

    The target center keeps its local rows plus every pooled row; all other
    centers keep only their local rows.  With an empty pool the partition is
    unchanged.

    Raises
    ------
    EmptyResidualBlock
        If some other center would end up with no rows.
    """
    if not 0 <= target < ds.b:
        raise ValueError(f"target center {target} out of range")
    blocks = []
    for i in range(ds.b):
        if i == target:
            blocks.append(np.sort(np.concatenate([plan.retained[i], plan.pool])))
        else:
            if plan.retained[i].size == 0:
                raise EmptyResidualBlock(f"center {i} would lose all of its rows")
            blocks.append(plan.retained[i])
    return PartitionedDataset(ds.X, ds.y, tuple(blocks))
