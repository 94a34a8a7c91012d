"""Deterministic counter-based randomness for the simulation loop.

Every stochastic decision draws from its own Philox stream, keyed by
(master seed, purpose) with the round number and entity id placed in the
counter block. A decision's draw is a pure function of those four values,
so results do not depend on iteration order or thread count: the pick for
(round 7, session 42) is the same whether it is computed first or last.
"""

from __future__ import annotations

import numpy as np

# purpose tags; one per kind of stochastic decision
SEED_PICK = 1
ACCEPT = 2

_MASK64 = (1 << 64) - 1


def stream(master_seed: int, purpose: int, round_no: int, entity: int) -> np.random.Generator:
    """Fresh generator for one (purpose, round, entity) decision point."""
    key = [master_seed & _MASK64, purpose & _MASK64]
    counter = [0, 0, round_no & _MASK64, entity & _MASK64]
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def pick_index(master_seed: int, round_no: int, entity: int, n: int) -> int:
    """Uniform index into a length-n sequence (seed-track selection)."""
    gen = stream(master_seed, SEED_PICK, round_no, entity)
    return int(gen.integers(0, n))


def sample_positions(master_seed: int, round_no: int, entity: int, length: int, m: int) -> list[int]:
    """min(m, length) distinct positions out of range(length), ascending.

    Ascending order means accepted items keep their list order downstream.
    """
    take = min(m, length)
    if take <= 0:
        return []
    gen = stream(master_seed, ACCEPT, round_no, entity)
    return sorted(int(p) for p in gen.permutation(length)[:take])
