"""Seed derivation: every random stream is bound to (master_seed, index)."""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(master_seed: int, *index: int) -> int:
    """Mix a master seed with a path of integer indices.

    ``derive_seed(s, b)`` is ``splitmix64(splitmix64(s) ^ b)``, iterated
    over each index; platform independent.
    """
    x = splitmix64(int(master_seed) & _MASK)
    for i in index:
        x = splitmix64(x ^ (int(i) & _MASK))
    return x

