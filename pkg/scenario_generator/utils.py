import numpy as np


def child_seed(master_seed, replication):
    """64-bit seed of replication ``replication`` under ``master_seed``."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(replication),))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def fresh_seed():
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def subject_ids(n):
    width = len(str(n))
    return [f"s{i + 1:0{width}d}" for i in range(n)]
