import numpy as np
import pytest

# Two list-comprehension solutions that differ only by a consistent variable
# renaming: the canonical duplicate-implementation pair.
RENAMED_PAIR = (
    """def max_val(lst):
    numbers = [x for x in lst
               if isinstance(x, int)]
    return max(numbers)
""",
    """def max_val(het_list):
    numbers = [item for item in het_list
               if isinstance(item, int)]
    return max(numbers)
""",
)

# Same task solved with genuinely different control structure (explicit loop
# with a running maximum vs. a comprehension): similar surface, lower
# structural similarity than the renamed pair.
VARIANT_PAIR = (
    """def max_val(het_list):
    max_value = float('-inf')
    for item in het_list:
        if (isinstance(item, int) or (isinstance(item, str)
                and item.isdigit())):
            num = int(item)
            max_value = num if num > max_value else max_value
    return max_value
""",
    """def max_val(het_list):
    numbers = [
        int(item) for item in het_list
        if (isinstance(item, int) or (isinstance(item, str)
             and item.isdigit()))
    ]
    return max(numbers) if numbers else None
""",
)


def brute_force_tiles(a, b, min_match):
    """Independent greedy-tiling oracle: direct extension scan, no DP.

    Finds the longest common unmarked run by extending every position pair,
    keeping the first (smallest start_a, then start_b) maximal run.
    """
    a = [int(x) for x in a]
    b = [int(x) for x in b]
    used_a = [False] * len(a)
    used_b = [False] * len(b)
    tiles = []
    while True:
        best_len, best_i, best_j = 0, -1, -1
        for i in range(len(a)):
            for j in range(len(b)):
                length = 0
                while (
                    i + length < len(a)
                    and j + length < len(b)
                    and not used_a[i + length]
                    and not used_b[j + length]
                    and a[i + length] == b[j + length]
                ):
                    length += 1
                if length > best_len:
                    best_len, best_i, best_j = length, i, j
        if best_len < min_match:
            break
        tiles.append((best_i, best_j, best_len))
        for k in range(best_len):
            used_a[best_i + k] = True
            used_b[best_j + k] = True
    return tiles


def random_id_stream(rng, max_len=40, alphabet=8):
    n = int(rng.integers(0, max_len + 1))
    return np.asarray(rng.integers(0, alphabet, size=n), dtype=np.intc)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
