"""Subshifts of finite type, periodic words and the shift metric.

A transitive SFT stands in for the homoclinic class.  Points are only ever
periodic: an :class:`OrbitPoint` is a phase on a :class:`PeriodicWord`, whose
bi-infinite extension is ``...www.www...`` with coordinate 0 at the phase.

The metric is ``d(x, y) = 2**-r`` with ``r = min{|j| : x_j != y_j}``, so
``d(x, y) < eps`` holds exactly when ``x`` and ``y`` agree on the window
``[-R, R]`` with ``R = agreement_radius(eps)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import functools
import math

import networkx as nx
import numpy as np

from . import words as W


class SymbolicError(ValueError):
    pass


class ShiftSystem:
    """Alphabet plus 0/1 transition table; ``transitions[s, t]`` allows ``t`` after ``s``."""

    def __init__(self, alphabet, transitions):
        self.alphabet = tuple(str(a) for a in alphabet)
        if len(set(self.alphabet)) != len(self.alphabet):
            raise SymbolicError("duplicate alphabet names")
        T = np.asarray(transitions, dtype=bool)
        k = len(self.alphabet)
        if k == 0 or T.shape != (k, k):
            raise SymbolicError(f"transition table must be {k}x{k}, got {T.shape}")
        if not T.any(axis=1).all() or not T.any(axis=0).all():
            raise SymbolicError("every symbol needs a successor and a predecessor")
        self.transitions = T
        self.transitions.setflags(write=False)
        self._index = {a: i for i, a in enumerate(self.alphabet)}
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(range(k))
        self.graph.add_edges_from(zip(*np.nonzero(T)))
        self.transitive = nx.is_strongly_connected(self.graph)

    @classmethod
    def full_shift(cls, alphabet):
        k = len(alphabet)
        return cls(alphabet, np.ones((k, k), dtype=bool))

    @classmethod
    def from_json(cls, data):
        return cls(data["alphabet"], data["transitions"])

    def to_json(self):
        return {"alphabet": list(self.alphabet),
                "transitions": [[int(v) for v in row] for row in self.transitions]}

    @property
    def size(self):
        return len(self.alphabet)

    def encode(self, text):
        """Symbols of a word given as a string (single-letter names) or a list of names."""
        try:
            if isinstance(text, str):
                if all(len(a) == 1 for a in self.alphabet):
                    return tuple(self._index[c] for c in text)
                return tuple(self._index[c] for c in text.split())
            return tuple(self._index[c] for c in text)
        except KeyError as exc:
            raise SymbolicError(f"unknown symbol {exc.args[0]!r}") from None

    def decode(self, symbols):
        sep = "" if all(len(a) == 1 for a in self.alphabet) else " "
        return sep.join(self.alphabet[s] for s in symbols)

    def allowed(self, s, t):
        return bool(self.transitions[s, t])

    def is_admissible(self, symbols):
        return all(self.transitions[a, b] for a, b in zip(symbols, symbols[1:]))

    def word(self, text):
        return PeriodicWord(self, W.leaf(self.encode(text)))

    def admissible_words(self, length):
        """All admissible words of the given length, in lexicographic order."""
        if length <= 0:
            return [()]
        out = [(s,) for s in range(self.size)]
        for _ in range(length - 1):
            out = [w + (t,) for w in out for t in range(self.size) if self.transitions[w[-1], t]]
        return out

    def count_admissible(self, length):
        if length <= 0:
            return 1
        T = self.transitions.astype(object)
        v = np.ones(self.size, dtype=object)
        for _ in range(length - 1):
            v = T.dot(v)
        return int(sum(v))

    def shortest_connector(self, s, t):
        """Shortest (possibly empty) word c with s·c·t admissible, or None."""
        if self.transitions[s, t]:
            return ()
        best = None
        for u in self.graph.successors(s):  # s == t needs a genuine cycle, not the empty path
            try:
                path = nx.shortest_path(self.graph, u, t)
            except nx.NetworkXNoPath:
                continue
            if best is None or (len(path), path) < (len(best), best):
                best = path
        return None if best is None else tuple(best[:-1])

    def __eq__(self, other):
        return (isinstance(other, ShiftSystem) and self.alphabet == other.alphabet
                and np.array_equal(self.transitions, other.transitions))

    def __hash__(self):
        return hash((self.alphabet, self.transitions.tobytes()))

    def __repr__(self):
        return f"ShiftSystem({''.join(self.alphabet) if all(len(a) == 1 for a in self.alphabet) else self.alphabet}, transitive={self.transitive})"


class PeriodicWord:
    """Cyclically admissible word, reduced to its primitive period on construction."""

    __slots__ = ("system", "node", "period")

    def __init__(self, system, node):
        if node.length == 0:
            raise SymbolicError("empty word")
        pairs = W.cyclic_factor_set(node, 2)
        bad = [p for p in pairs if not system.transitions[p[0], p[1]]]
        if bad:
            raise SymbolicError(
                f"word not cyclically admissible: forbidden transition {system.decode(bad[0])!r}")
        d = W.primitive_root_length(node)
        if d != node.length:
            node = W.cut(node, 0, d)
        self.system = system
        self.node = node
        self.period = node.length

    @property
    def explicit(self):
        return isinstance(self.node, W.Leaf)

    @property
    def symbols(self):
        return W.materialize(self.node)

    def text(self):
        return self.system.decode(self.symbols)

    def counts(self):
        return W.letter_counts(self.node)

    def window(self, start, stop):
        """Coordinates ``[start, stop)`` of the periodic extension (phase 0 at coordinate 0)."""
        return W.materialize(W.periodic_cut(self.node, start, stop))

    def point(self, phase=0):
        return OrbitPoint(self, phase % self.period)

    def same_orbit(self, other):
        if self.period != other.period:
            return False
        if self.explicit and other.explicit:
            doubled = self.symbols + self.symbols
            target = other.symbols
            return any(doubled[i:i + self.period] == target for i in range(self.period))
        return None  # undecided for compressed words

    def __len__(self):
        return self.period

    def __eq__(self, other):
        return (isinstance(other, PeriodicWord) and self.system == other.system
                and W.equal(self.node, other.node))

    def __hash__(self):
        return hash(W.word_hash(self.node))

    def __repr__(self):
        if self.period <= 40:
            return f"PeriodicWord({self.text()!r})"
        return f"PeriodicWord(period={self.period})"


@dataclass(frozen=True)
class OrbitPoint:
    word: PeriodicWord
    phase: int

    def __post_init__(self):
        if not 0 <= self.phase < self.word.period:
            raise SymbolicError("phase outside [0, period)")

    def coords(self, start, stop):
        return self.word.window(self.phase + start, self.phase + stop)

    def shift(self, s=1):
        return OrbitPoint(self.word, (self.phase + s) % self.word.period)


@dataclass(frozen=True)
class CylinderObservable:
    """Indicator of ``x[offset : offset+len(pattern)] == pattern``."""

    pattern: tuple
    center_offset: int = 0
    system: ShiftSystem = field(default=None, compare=False)

    def __post_init__(self):
        if not self.pattern:
            raise SymbolicError("empty cylinder pattern")
        if self.system is not None and not self.system.is_admissible(self.pattern):
            raise SymbolicError("cylinder pattern not admissible")

    def __call__(self, point):
        return int(tuple(point.coords(self.center_offset,
                                      self.center_offset + len(self.pattern))) == tuple(self.pattern))

    sup_norm = 1


def depth_cylinders(system, depth):
    """All cylinder indicators of radius ``depth`` (patterns of length 2*depth+1, centered)."""
    return [CylinderObservable(w, -depth, system) for w in system.admissible_words(2 * depth + 1)]


@functools.total_ordering
class Dyadic:
    """Exact ``2**-j`` kept as its exponent; the shadowing scales get far too small for Fractions."""

    __slots__ = ("j",)

    def __init__(self, j):
        self.j = int(j)

    def __truediv__(self, k):
        if k == 2:
            return Dyadic(self.j + 1)
        return self.fraction() / k

    def fraction(self):
        return Fraction(1, 1 << self.j) if self.j >= 0 else Fraction(1 << -self.j)

    def _cmp(self, other):
        """Sign of ``self - other``."""
        if isinstance(other, Dyadic):
            return (other.j > self.j) - (other.j < self.j)
        other = Fraction(other)
        if other <= 0:
            return 1
        a, b = other.numerator, other.denominator
        # compare 1/2^j with a/b  <=>  b with a * 2^j
        if self.j >= 0 and self.j > b.bit_length() + 1:
            return -1
        # sign of 2^-j - a/b is the sign of b - a 2^j
        x = b if self.j >= 0 else b << -self.j
        y = a << self.j if self.j >= 0 else a
        return (x > y) - (x < y)

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except (TypeError, ValueError):
            return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __hash__(self):
        return hash(("dyadic", self.j))

    def __float__(self):
        return 2.0 ** -self.j if self.j < 1075 else 0.0

    def __repr__(self):
        return f"2^-{self.j}"

    def __str__(self):
        return f"2^-{self.j}"

    @classmethod
    def parse(cls, text):
        text = str(text)
        if text.startswith("2^-"):
            return cls(int(text[3:]))
        return Fraction(text)


def agreement_radius(eps):
    """Largest R with: ``d(x, y) < eps`` iff x, y agree on ``[-R, R]``; -1 if eps > 1."""
    if isinstance(eps, Dyadic):
        return eps.j if eps.j >= 0 else -1
    eps = Fraction(eps)
    if eps <= 0:
        raise SymbolicError("eps must be positive")
    if eps > 1:
        return -1
    # smallest R with 2**-(R+1) < eps
    num, den = eps.numerator, eps.denominator
    R = max(0, den.bit_length() - num.bit_length() - 2)
    while (num << (R + 1)) <= den:
        R += 1
    return R


def _agree(x, y, R):
    return W.equal(W.periodic_cut(x.word.node, x.phase - R, x.phase + R + 1),
                   W.periodic_cut(y.word.node, y.phase - R, y.phase + R + 1))


def disagreement_index(x, y):
    """``min{|j| : x_j != y_j}``; None when the two bi-infinite sequences coincide."""
    horizon = x.word.period + y.word.period  # Fine-Wilf: agreement this long forces equality
    if x.word.period + y.word.period <= 4096:
        left = x.coords(-horizon, horizon + 1)
        right = y.coords(-horizon, horizon + 1)
        for r in range(horizon + 1):
            if left[horizon + r] != right[horizon + r] or left[horizon - r] != right[horizon - r]:
                return r
        return None
    if _agree(x, y, horizon):
        return None
    lo, hi = -1, horizon  # agree on radius lo, disagree on radius hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _agree(x, y, mid):
            lo = mid
        else:
            hi = mid
    return hi


def shift_distance(x, y):
    """Exact ``2**-r``; 0 when the extensions are identical."""
    if x.word.system.size != y.word.system.size:
        raise SymbolicError("points over different alphabets")
    r = disagreement_index(x, y)
    if r is None:
        return Fraction(0)
    return Fraction(1, 2 ** r)


def epsilon_dense(word, eps):
    """(dense?, witness) -- every admissible (2R+1)-word must be a cyclic factor."""
    R = agreement_radius(eps)
    return dense_at_radius(word, R)


def dense_at_radius(word, R):
    if R < 0:
        return True, None
    length = 2 * R + 1
    have = W.cyclic_factor_set(word.node, length)
    if len(have) == word.system.count_admissible(length):
        return True, None
    for w in word.system.admissible_words(length):
        if w not in have:
            return False, word.system.decode(w)
    return True, None


def tour_word(system, r):
    """Cyclic word containing every admissible word of length 2r+1 as a cyclic factor."""
    if not system.transitive:
        raise SymbolicError("tour requires a strongly connected transition graph")
    if r == 0:
        return PeriodicWord(system, W.leaf(_vertex_tour(system)))
    length = 2 * r + 1
    G = nx.MultiDiGraph()
    for w in system.admissible_words(length):
        G.add_edge(w[:-1], w[1:])
    _eulerize(G)
    start = next(iter(G.nodes))
    circuit = [v[-1] for _, v in nx.eulerian_circuit(G, source=start)]
    return PeriodicWord(system, W.leaf(circuit))


def _vertex_tour(system):
    """Closed walk visiting every symbol: greedy nearest-unvisited."""
    G = system.graph
    seq = [0]
    unvisited = set(range(1, system.size))
    cur = 0
    while unvisited:
        dist, paths = nx.single_source_shortest_path_length(G, cur), nx.single_source_shortest_path(G, cur)
        nxt = min(unvisited, key=lambda v: (dist[v], v))
        for v in paths[nxt][1:]:
            seq.append(v)
            unvisited.discard(v)
        cur = nxt
    back = nx.shortest_path(G, cur, 0)[1:-1]
    seq.extend(back)
    if len(seq) == 1 and not system.transitions[0, 0]:
        raise SymbolicError("no admissible cyclic tour")
    return seq


def _eulerize(G):
    """Duplicate edges (min total count) so that in-degree equals out-degree everywhere."""
    imbalance = {v: G.out_degree(v) - G.in_degree(v) for v in G.nodes}
    if not any(imbalance.values()):
        return
    F = nx.DiGraph()
    for u, v in G.edges():
        F.add_edge(u, v, weight=1)
    for v, d in imbalance.items():
        # nodes with in > out must emit extra edges
        F.add_node(v, demand=d)
    flow = nx.min_cost_flow(F)
    for u, targets in flow.items():
        for v, f in targets.items():
            for _ in range(f):
                G.add_edge(u, v)


def empirical_integral(word, obs):
    """Exact mean of the cylinder indicator over the orbit of ``word``."""
    return Fraction(W.count_cyclic_factor(word.node, tuple(obs.pattern)), word.period)
