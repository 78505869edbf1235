"""Compressed finite words (straight-line programs).

The steering construction concatenates powers of earlier words, so lengths grow
like ``2**(n*n/2)``.  Words are therefore kept as a DAG of three node kinds:

* :class:`Leaf`  -- an explicit tuple of integer symbols,
* :class:`Cat`   -- concatenation of child nodes,
* :class:`Pow`   -- a child node repeated ``count`` times.

Short results are materialized into leaves, so every word below
``EXPLICIT_LIMIT`` symbols is a plain :class:`Leaf` and can be handled by
brute force.  Everything else goes through :func:`fold`, which evaluates a
monoid homomorphism on the DAG with memoization and square-and-multiply for
powers.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import Counter

EXPLICIT_LIMIT = 4096
MATERIALIZE_LIMIT = 20_000_000

_MOD = (1 << 61) - 1
_BASES = (1_000_003, 911_382_323)


class Node:
    __slots__ = ("length", "_cache")

    def __init__(self, length):
        self.length = length
        self._cache = {}

    def __len__(self):
        return self.length


class Leaf(Node):
    __slots__ = ("symbols",)

    def __init__(self, symbols):
        super().__init__(len(symbols))
        self.symbols = tuple(symbols)

    def __repr__(self):
        return f"Leaf({self.symbols!r})"


class Cat(Node):
    __slots__ = ("parts", "offsets")

    def __init__(self, parts):
        offsets = []
        total = 0
        for p in parts:
            offsets.append(total)
            total += p.length
        super().__init__(total)
        self.parts = tuple(parts)
        self.offsets = tuple(offsets)

    def __repr__(self):
        return f"Cat(len={self.length}, parts={len(self.parts)})"


class Pow(Node):
    __slots__ = ("base", "count")

    def __init__(self, base, count):
        super().__init__(base.length * count)
        self.base = base
        self.count = count

    def __repr__(self):
        return f"Pow({self.base!r}, {self.count})"


EMPTY = Leaf(())


def leaf(symbols):
    return Leaf(tuple(int(s) for s in symbols))


def cat(*parts):
    flat = []
    for p in parts:
        if p.length == 0:
            continue
        if isinstance(p, Cat):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return EMPTY
    if len(flat) == 1:
        return flat[0]
    total = sum(p.length for p in flat)
    if total <= EXPLICIT_LIMIT:
        return Leaf(tuple(s for p in flat for s in materialize(p)))
    # merge runs of adjacent short leaves
    merged = []
    for p in flat:
        if (merged and isinstance(p, Leaf) and isinstance(merged[-1], Leaf)
                and merged[-1].length + p.length <= EXPLICIT_LIMIT):
            merged[-1] = Leaf(merged[-1].symbols + p.symbols)
        else:
            merged.append(p)
    if len(merged) == 1:
        return merged[0]
    return Cat(merged)


def power(node, count):
    if count < 0:
        raise ValueError("negative exponent")
    if count == 0 or node.length == 0:
        return EMPTY
    if count == 1:
        return node
    if node.length * count <= EXPLICIT_LIMIT:
        return Leaf(materialize(node) * count)
    if isinstance(node, Pow):
        return Pow(node.base, node.count * count)
    return Pow(node, count)


def materialize(node):
    """Return the word as a tuple of symbols."""
    if isinstance(node, Leaf):
        return node.symbols
    if node.length > MATERIALIZE_LIMIT:
        raise OverflowError(f"refusing to materialize a word of length {node.length}")
    cached = node._cache.get("explicit")
    if cached is not None:
        return cached
    if isinstance(node, Pow):
        out = materialize(node.base) * node.count
    else:
        out = tuple(s for p in node.parts for s in materialize(p))
    if node.length <= 1_000_000:
        node._cache["explicit"] = out
    return out


def symbol_at(node, i):
    if not 0 <= i < node.length:
        raise IndexError(i)
    while True:
        if isinstance(node, Leaf):
            return node.symbols[i]
        if isinstance(node, Pow):
            i %= node.base.length
            node = node.base
        else:
            j = bisect_right(node.offsets, i) - 1
            i -= node.offsets[j]
            node = node.parts[j]


def cut(node, a, b):
    """Sub-word ``node[a:b]`` as a node (shares structure with ``node``)."""
    if not 0 <= a <= b <= node.length:
        raise IndexError((a, b, node.length))
    if a == b:
        return EMPTY
    if a == 0 and b == node.length:
        return node
    if b - a <= EXPLICIT_LIMIT and isinstance(node, Leaf):
        return Leaf(node.symbols[a:b])
    if isinstance(node, Leaf):
        return Leaf(node.symbols[a:b])
    if isinstance(node, Pow):
        L = node.base.length
        ca, cb = a // L, (b - 1) // L
        if ca == cb:
            return cut(node.base, a - ca * L, b - ca * L)
        head = cut(node.base, a - ca * L, L)
        tail = cut(node.base, 0, b - cb * L)
        return cat(head, power(node.base, cb - ca - 1), tail)
    out = []
    j = bisect_right(node.offsets, a) - 1
    while j < len(node.parts) and node.offsets[j] < b:
        off = node.offsets[j]
        p = node.parts[j]
        lo = max(a, off) - off
        hi = min(b, off + p.length) - off
        out.append(cut(p, lo, hi))
        j += 1
    return cat(*out)


def periodic_cut(node, a, b):
    """Sub-word ``[a, b)`` of the periodic extension ``...www...`` (a, b any ints)."""
    L = node.length
    if b < a:
        raise IndexError((a, b))
    shift = (a // L) * L
    a -= shift
    b -= shift
    reps = -(-b // L)
    return cut(power(node, reps), a, b)


def rotate(node, s):
    s %= node.length
    if s == 0:
        return node
    return cat(cut(node, s, node.length), cut(node, 0, s))


def fold(node, key, leaf_fn, mul, identity):
    """Evaluate a monoid homomorphism on the DAG.

    ``leaf_fn`` maps a tuple of symbols to a monoid element, ``mul`` is the
    (associative) product.  Results are memoized on nodes under ``key``.
    """
    cache = node._cache
    if key in cache:
        return cache[key]
    if isinstance(node, Leaf):
        val = leaf_fn(node.symbols)
    elif isinstance(node, Pow):
        base = fold(node.base, key, leaf_fn, mul, identity)
        val = _monoid_pow(base, node.count, mul, identity)
    else:
        val = identity
        for p in node.parts:
            val = mul(val, fold(p, key, leaf_fn, mul, identity))
    cache[key] = val
    return val


def _monoid_pow(x, k, mul, identity):
    result = identity
    while k:
        if k & 1:
            result = mul(result, x)
        k >>= 1
        if k:
            x = mul(x, x)
    return result


# --- concrete homomorphisms -------------------------------------------------

def letter_counts(node):
    """Counter of symbol occurrences."""
    def mul(x, y):
        out = dict(x)
        for s, c in y.items():
            out[s] = out.get(s, 0) + c
        return out

    def scale_pow(x, k):  # faster than square-and-multiply for counts
        return {s: c * k for s, c in x.items()}

    cache = node._cache
    if "counts" in cache:
        return cache["counts"]
    if isinstance(node, Leaf):
        val = dict(Counter(node.symbols))
    elif isinstance(node, Pow):
        val = scale_pow(letter_counts(node.base), node.count)
    else:
        val = {}
        for p in node.parts:
            val = mul(val, letter_counts(p))
    cache["counts"] = val
    return val


def prefix_counts(node, i):
    """Letter counts of ``node[0:i]``."""
    out = {}

    def add(d, k=1):
        for s, c in d.items():
            out[s] = out.get(s, 0) + c * k

    while i > 0:
        if i >= node.length:
            add(letter_counts(node))
            break
        if isinstance(node, Leaf):
            add(Counter(node.symbols[:i]))
            break
        if isinstance(node, Pow):
            L = node.base.length
            add(letter_counts(node.base), i // L)
            i %= L
            node = node.base
        else:
            j = bisect_right(node.offsets, i) - 1
            for p in node.parts[:j]:
                add(letter_counts(p))
            i -= node.offsets[j]
            node = node.parts[j]
    return out


def cyclic_window_counts(node, start, k):
    """Letter counts of the length-``k`` window at ``start`` in ``...www...``."""
    L = node.length
    start %= L
    full, rem = divmod(k, L)
    out = {s: c * full for s, c in letter_counts(node).items()}
    if rem:
        end = start + rem
        if end <= L:
            hi, lo = prefix_counts(node, end), prefix_counts(node, start)
            part = {s: hi.get(s, 0) - lo.get(s, 0) for s in set(hi) | set(lo)}
        else:
            total = letter_counts(node)
            lo = prefix_counts(node, start)
            wrap = prefix_counts(node, end - L)
            part = {s: total.get(s, 0) - lo.get(s, 0) + wrap.get(s, 0)
                    for s in set(total) | set(wrap)}
        for s, c in part.items():
            out[s] = out.get(s, 0) + c
    return {s: c for s, c in out.items() if c}


def _hash_leaf(symbols):
    h1 = h2 = 0
    b1, b2 = _BASES
    for s in symbols:
        h1 = (h1 * b1 + s + 1) % _MOD
        h2 = (h2 * b2 + s + 1) % _MOD
    return (h1, h2, len(symbols))


def _hash_mul(x, y):
    b1, b2 = _BASES
    return ((x[0] * pow(b1, y[2], _MOD) + y[0]) % _MOD,
            (x[1] * pow(b2, y[2], _MOD) + y[1]) % _MOD,
            x[2] + y[2])


def word_hash(node):
    """Double polynomial hash modulo 2^61-1 (collision odds ~2^-120)."""
    return fold(node, "hash", _hash_leaf, _hash_mul, (0, 0, 0))


def equal(x, y):
    """Equality of two words; exact below the materialization bound, hashed above."""
    if x.length != y.length:
        return False
    if x.length <= 100_000:
        return materialize(x) == materialize(y)
    return word_hash(x) == word_hash(y)


def _edge_mul(width):
    def mul(x, y):
        # element: (payload, prefix, suffix); prefix/suffix are <= width symbols
        pay_x, pre_x, suf_x = x
        pay_y, pre_y, suf_y = y
        joined = suf_x + pre_y
        pre = (pre_x + pre_y)[:width] if len(pre_x) < width else pre_x
        suf = (suf_x + suf_y)[-width:] if len(suf_y) < width else suf_y
        if width == 0:
            pre = suf = ()
        return pay_x, pay_y, joined, len(suf_x), pre, suf
    return mul


def factor_set(node, length):
    """Set of (non-cyclic) factors of the given length."""
    w = length - 1

    def leaf_fn(sym):
        fs = {sym[i:i + length] for i in range(len(sym) - length + 1)}
        return (frozenset(fs), sym[:w] if w else (), sym[-w:] if w else ())

    edge = _edge_mul(w)

    def mul(x, y):
        fx, fy, joined, cut_at, pre, suf = edge(x, y)
        cross = {joined[i:i + length] for i in range(len(joined) - length + 1)
                 if i < cut_at < i + length}
        return (fx | fy | cross, pre, suf)

    return fold(node, ("factors", length), leaf_fn, mul, (frozenset(), (), ()))[0]


def cyclic_factor_set(node, length):
    """Set of factors of the given length of the periodic extension."""
    L = node.length
    if L == 0:
        return frozenset()
    if L < length:
        ext = materialize(periodic_cut(node, 0, L + length - 1))
        return frozenset(ext[i:i + length] for i in range(L))
    out = set(factor_set(node, length))
    if length > 1:
        ext = materialize(periodic_cut(node, L - length + 1, L + length - 1))
        out.update(ext[i:i + length] for i in range(length - 1))
    return frozenset(out)


def _windows(seq, length):
    return [seq[i:i + length] for i in range(len(seq) - length + 1)]


def count_factor(node, pattern):
    """Number of (non-cyclic) occurrences of ``pattern``."""
    pattern = tuple(pattern)
    k = len(pattern)
    w = k - 1

    def occ(sym):
        return sum(1 for i in range(len(sym) - k + 1) if sym[i:i + k] == pattern)

    def leaf_fn(sym):
        return (occ(sym), sym[:w] if w else (), sym[-w:] if w else ())

    edge = _edge_mul(w)

    def mul(x, y):
        cx, cy, joined, cut_at, pre, suf = edge(x, y)
        cross = sum(1 for i in range(len(joined) - k + 1)
                    if i < cut_at < i + k and joined[i:i + k] == pattern)
        return (cx + cy + cross, pre, suf)

    return fold(node, ("count", pattern), leaf_fn, mul, (0, (), ()))[0]


def count_cyclic_factor(node, pattern):
    """Occurrences of ``pattern`` starting at each phase of the periodic extension."""
    k = len(pattern)
    L = node.length
    if L >= k:
        inner = count_factor(node, pattern)
        # starts in [L-k+1, L) wrap around
        tail = materialize(periodic_cut(node, L - k + 1, L + k - 1)) if k > 1 else ()
        wrap = sum(1 for i in range(len(tail) - k + 1) if tuple(tail[i:i + k]) == tuple(pattern))
        return inner + wrap
    ext = materialize(periodic_cut(node, 0, L + k - 1))
    return sum(1 for i in range(L) if tuple(ext[i:i + k]) == tuple(pattern))


def has_period(node, s):
    """True iff ``node[i] == node[i+s]`` for all valid i."""
    if s <= 0 or s >= node.length:
        return s >= node.length
    return equal(cut(node, 0, node.length - s), cut(node, s, node.length))


def primitive_root_length(node):
    """Smallest d | len with node == (node[:d])**(len/d)."""
    L = node.length
    if L <= 1:
        return L
    if isinstance(node, Leaf):
        sym = node.symbols
        for d in _divisors(L):
            if d < L and L % d == 0 and sym[:L - d] == sym[d:]:
                return d
        return L
    from sympy import factorint

    d = L
    for prime in factorint(L):
        while d % prime == 0 and has_period(node, d // prime):
            d //= prime
    return d


def _divisors(n):
    small = [d for d in range(1, int(n ** 0.5) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


# --- serialization ----------------------------------------------------------

class NodeTable:
    """Deduplicating table used to serialize many words sharing structure."""

    def __init__(self):
        self.rows = []
        self._index = {}

    def add(self, node):
        key = id(node)
        if key in self._index:
            return self._index[key]
        if isinstance(node, Leaf):
            row = {"leaf": list(node.symbols)}
        elif isinstance(node, Pow):
            row = {"pow": [self.add(node.base), node.count]}
        else:
            row = {"cat": [self.add(p) for p in node.parts]}
        self.rows.append(row)
        self._index[key] = len(self.rows) - 1
        return self._index[key]

    def __getstate__(self):
        return self.rows


def load_nodes(rows):
    nodes = []
    for row in rows:
        if "leaf" in row:
            nodes.append(Leaf(tuple(int(s) for s in row["leaf"])))
        elif "pow" in row:
            b, k = row["pow"]
            nodes.append(Pow(nodes[b], int(k)) if int(k) > 1 else nodes[b])
        else:
            parts = [nodes[i] for i in row["cat"]]
            nodes.append(Cat(parts) if len(parts) > 1 else parts[0])
    return nodes
