"""Independent brute-force oracles used to cross-check the implementation.

Nothing here imports the code paths it verifies: the version ordering is a
from-scratch rewrite of the documented scheme (character-walk tokenizer and
pairwise recursive comparison instead of sort keys), and the range filter
enumerates an explicit pool. Report recounts live next to their tests.
"""

PRERELEASE = ("snapshot", "alpha", "beta", "rc", "m", "pre")


def chunk_version(text):
    """Split into maximal digit/non-digit chunks, honoring . - _ separators."""
    chunks = []
    current = ""
    mode = None
    for ch in text.strip().lower():
        if ch in ".-_":
            if current:
                chunks.append(current)
            current, mode = "", None
            continue
        kind = "digit" if ch.isdigit() else "other"
        if mode in (None, kind):
            current += ch
            mode = kind
        else:
            chunks.append(current)
            current, mode = ch, kind
    if current:
        chunks.append(current)
    return chunks


def split_qualifier(chunks):
    if chunks and not chunks[-1].isdigit() and chunks[-1] in PRERELEASE:
        return chunks[:-1], (chunks[-1], 0)
    if (
        len(chunks) >= 2
        and chunks[-1].isdigit()
        and not chunks[-2].isdigit()
        and chunks[-2] in PRERELEASE
    ):
        return chunks[:-2], (chunks[-2], int(chunks[-1]))
    return chunks, None


def compare_chunks(x, y):
    x_digit, y_digit = x.isdigit(), y.isdigit()
    if x_digit and y_digit:
        xi, yi = int(x), int(y)
        return (xi > yi) - (xi < yi)
    if x_digit:
        return -1  # numbers sort below strings
    if y_digit:
        return 1
    return (x > y) - (x < y)


def oracle_compare(a, b):
    """Reference ordering: -1/0/1, same contract as the production comparison."""
    base_a, qual_a = split_qualifier(chunk_version(a))
    base_b, qual_b = split_qualifier(chunk_version(b))
    for i in range(max(len(base_a), len(base_b))):
        x = base_a[i] if i < len(base_a) else "0"
        y = base_b[i] if i < len(base_b) else "0"
        outcome = compare_chunks(x, y)
        if outcome:
            return outcome
    if qual_a is None and qual_b is None:
        return 0
    if qual_a is None:
        return 1  # unqualified releases sit above their prereleases
    if qual_b is None:
        return -1
    if qual_a[0] != qual_b[0]:
        return -1 if qual_a[0] < qual_b[0] else 1
    return (qual_a[1] > qual_b[1]) - (qual_a[1] < qual_b[1])


def oracle_holds(version, op, bound):
    outcome = oracle_compare(version, bound)
    return {
        "<": outcome < 0,
        "<=": outcome <= 0,
        ">": outcome > 0,
        ">=": outcome >= 0,
        "==": outcome == 0,
        "!=": outcome != 0,
    }[op]


def oracle_filter_pool(pool, constraints):
    """Versions of an explicitly enumerated pool satisfying every constraint."""
    matching = []
    for version in sorted(pool, key=_OracleKey):
        if all(oracle_holds(version, op, bound) for op, bound in constraints):
            matching.append(version)
    return matching


class _OracleKey:
    def __init__(self, version):
        self.version = version

    def __lt__(self, other):
        return oracle_compare(self.version, other.version) < 0


def oracle_max(pool):
    best = pool[0]
    for candidate in pool[1:]:
        if oracle_compare(candidate, best) > 0:
            best = candidate
    return best


def day_offset(start, n_days):
    """Deadline arithmetic oracle: whole days as 86400-second steps."""
    from datetime import timedelta

    return start + timedelta(seconds=86400 * n_days)
