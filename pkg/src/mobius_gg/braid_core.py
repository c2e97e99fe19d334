"""Braid words of the two-strand braid group of the Mobius band.

Words use the letters B (half exchange), R2, R3 (core pushes of the first and
second base point) and their inverses, stored as signed integers
+-1, +-2, +-3. The word problem is decided by the action on the free group
pi_1(M minus the base points) = F<c, g1, g2>, which is derived by pushing
loops through the explicit generator isotopies and reading their crossings
with a cut system.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .band_geometry import HALF
from .errors import ConfigurationError, DerivationError, DomainError
from .isotopy_engine import (
    BaseGeometry,
    Composite,
    Isotopy,
    chord_push,
    densify,
    generator_isotopies,
)

# ---------------------------------------------------------------------------
# braid words

_LETTER_NAMES = {1: "B", -1: "b", 2: "R2", -2: "r2", 3: "R3", -3: "r3"}
ALPHABET = (1, -1, 2, -2, 3, -3)


def free_reduce(letters: Iterable[int]) -> tuple:
    out: list = []
    for a in letters:
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


@dataclass(frozen=True)
class BraidWord:
    letters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", free_reduce(self.letters))

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other: "BraidWord") -> "BraidWord":
        return BraidWord(self.letters + other.letters)

    def __pow__(self, p: int) -> "BraidWord":
        base = self if p >= 0 else self.inverse()
        return BraidWord(base.letters * abs(p))

    def inverse(self) -> "BraidWord":
        return BraidWord(tuple(-a for a in reversed(self.letters)))

    def __str__(self):
        return "".join(_LETTER_NAMES[a] for a in self.letters) or "1"

    def derived_view(self) -> str:
        """String with each BB (resp. bb) pair shown as A (resp. a)."""
        out, i, L = [], 0, self.letters
        while i < len(L):
            if i + 1 < len(L) and L[i] == L[i + 1] and abs(L[i]) == 1:
                out.append("A" if L[i] > 0 else "a")
                i += 2
            else:
                out.append(_LETTER_NAMES[L[i]])
                i += 1
        return "".join(out) or "1"

    @property
    def parity(self) -> int:
        return sum(1 for a in self.letters if abs(a) == 1) % 2


def parse_word(text: str) -> BraidWord:
    """Parse 'B', 'b', 'A', 'a', 'R2', 'r2', 'R3', 'r3' tokens; '1' is the identity."""
    text = text.strip()
    letters: list = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in " .*":
            i += 1
        elif ch == "1" and not letters and text.strip() == "1":
            i += 1
        elif ch in "Bb":
            letters.append(1 if ch == "B" else -1)
            i += 1
        elif ch in "Aa":
            letters.extend([1, 1] if ch == "A" else [-1, -1])
            i += 1
        elif ch in "Rr" and i + 1 < len(text) and text[i + 1] in "23":
            g = int(text[i + 1])
            letters.append(g if ch == "R" else -g)
            i += 2
        else:
            raise DomainError(f"cannot parse braid word {text!r} at position {i}")
    return BraidWord(tuple(letters))


IDENTITY = BraidWord()
B = BraidWord((1,))
A = BraidWord((1, 1))
R2 = BraidWord((2,))
R3 = BraidWord((3,))


def multiply(w1: BraidWord, w2: BraidWord) -> BraidWord:
    return w1 * w2


def is_pure(w: BraidWord) -> bool:
    return w.parity == 0


def permutation(w: BraidWord) -> tuple:
    """Strand labels at positions (1, 2) after the word."""
    return (1, 2) if w.parity == 0 else (2, 1)


# ---------------------------------------------------------------------------
# free group F<c, g1, g2>: letters +-1 (c), +-2 (g1), +-3 (g2)

_FG_NAMES = {1: "c", -1: "C", 2: "x", -2: "X", 3: "y", -3: "Y"}


def fg_inverse(w: tuple) -> tuple:
    return tuple(-a for a in reversed(w))


def fg_str(w: tuple) -> str:
    return "".join(_FG_NAMES[a] for a in w) or "1"


def fg_parse(s: str) -> tuple:
    inv = {v: k for k, v in _FG_NAMES.items()}
    return free_reduce(inv[ch] for ch in s if ch != "1")


@dataclass(frozen=True)
class FreeGroupEndo:
    images: tuple  # images of c, g1, g2

    def apply(self, w: Sequence[int]) -> tuple:
        out: list = []
        for a in w:
            img = self.images[abs(a) - 1]
            seq = img if a > 0 else fg_inverse(img)
            for b in seq:
                if out and out[-1] == -b:
                    out.pop()
                else:
                    out.append(b)
        return tuple(out)

    def then(self, other: "FreeGroupEndo") -> "FreeGroupEndo":
        """other o self."""
        return FreeGroupEndo(tuple(other.apply(img) for img in self.images))

    def __str__(self):
        return "c->%s, x->%s, y->%s" % tuple(fg_str(w) for w in self.images)

    def size(self) -> int:
        return sum(len(w) for w in self.images)


FG_IDENTITY = FreeGroupEndo(((1,), (2,), (3,)))


# ---------------------------------------------------------------------------
# cut-system reading of loops

def generator_loops(base: BaseGeometry) -> dict:
    """Polygonal loops at the boundary point (0, 1/2), given as cover polylines."""
    t1, t2 = base.t1, base.t2
    top = (0.0, HALF)

    def around(t):
        w = 0.1
        return [top, (t - w, 0.0), (t - w, -0.1), (t + w, -0.1), (t + w, 0.0), top]

    g_c = [top, (0.4, 0.3), (0.5, 0.3), (0.55, 0.3), (0.55, -0.3), (1.0, -HALF)]
    delta = [top, (0.0, 0.45), (0.5, 0.45), (1.0, 0.45), (1.5, 0.45), (2.0, 0.45), (2.0, HALF)]
    # (x, 0.45) for x in [1/2, 3/2] is the bottom edge run of the window
    return {"c": np.array(g_c), "g1": np.array(around(t1)), "g2": np.array(around(t2)),
            "delta": np.array(delta)}


def read_cut_word(X: np.ndarray, Y: np.ndarray, slits: Sequence[float]) -> tuple:
    """Reduced F3 word of a cover polyline.

    Crossing x = 1/2 (mod 1) in +x contributes c; crossing the slit
    {x = t_i, y < 0} of the canonical window in +x contributes g_i.
    """
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    n = np.floor(X + HALF).astype(np.int64)
    letters: list = []
    xa, xb, ya, yb, na, nb = X[:-1], X[1:], Y[:-1], Y[1:], n[:-1], n[1:]
    if np.any(np.abs(nb - na) > 1):
        raise DerivationError("polyline step jumps more than one window")
    sign_n = np.where(na % 2 == 0, 1.0, -1.0)
    sign_nb = np.where(nb % 2 == 0, 1.0, -1.0)
    cand = na != nb
    for idx, t in enumerate(slits):
        ca = (xa - na) >= t
        cb = (xb - nb) >= t
        cand |= ca != cb
    for k in np.nonzero(cand)[0]:
        events = []
        pieces = []
        if na[k] == nb[k]:
            pieces.append((0.0, 1.0, na[k]))
        else:
            bnd = max(na[k], nb[k]) - HALF
            s = (bnd - xa[k]) / (xb[k] - xa[k])
            pieces.append((0.0, s, na[k]))
            pieces.append((s, 1.0, nb[k]))
            events.append((s, 1 if nb[k] > na[k] else -1))
        for s0, s1, m in pieces:
            sg = 1.0 if m % 2 == 0 else -1.0
            x0 = xa[k] + s0 * (xb[k] - xa[k]) - m
            x1 = xa[k] + s1 * (xb[k] - xa[k]) - m
            y0 = sg * (ya[k] + s0 * (yb[k] - ya[k]))
            y1 = sg * (ya[k] + s1 * (yb[k] - ya[k]))
            for idx, t in enumerate(slits):
                if (x0 >= t) != (x1 >= t):
                    u = (t - x0) / (x1 - x0)
                    yc = y0 + u * (y1 - y0)
                    if yc < 0:
                        events.append((s0 + u * (s1 - s0), (idx + 2) * (1 if x1 > x0 else -1)))
        events.sort()
        letters.extend(e[1] for e in events)
    del sign_n, sign_nb
    return free_reduce(letters)


def push_polyline(iso: Isotopy, pts: np.ndarray, inverse: bool = False, max_step: float = 2e-3,
                  max_rounds: int = 60) -> np.ndarray:
    """Image of a cover polyline under the time-1 map, resampled until resolved.

    A source segment is accepted once its image chord is short and the image
    of its midpoint lies close to the chord midpoint. Time concatenations are
    pushed piece by piece so each stage only resolves its own stretching.
    """
    if isinstance(iso, Composite):
        pieces = iso.pieces[::-1] if inverse else iso.pieces
        for piece in pieces:
            pts = push_polyline(piece, pts, inverse, max_step, max_rounds)
        return pts
    f = iso.lift_inverse if inverse else iso.lift_map
    src = densify(np.asarray(pts, float), 0.01)
    X, Y = f(1.0, src[:, 0], src[:, 1])
    done = np.zeros(len(src) - 1, dtype=bool)
    for _ in range(max_rounds):
        pending = np.nonzero(~done)[0]
        if pending.size == 0:
            return np.stack([X, Y], axis=1)
        mids = 0.5 * (src[pending] + src[pending + 1])
        mx, my = f(1.0, mids[:, 0], mids[:, 1])
        step = np.hypot(X[pending + 1] - X[pending], Y[pending + 1] - Y[pending])
        dev = np.hypot(mx - 0.5 * (X[pending] + X[pending + 1]), my - 0.5 * (Y[pending] + Y[pending + 1]))
        ok = (step <= max_step) & (dev <= 0.25 * max_step)
        done[pending[ok]] = True
        split = pending[~ok]
        if split.size:
            keep = ~ok
            src = np.insert(src, split + 1, mids[keep], axis=0)
            X = np.insert(X, split + 1, mx[keep])
            Y = np.insert(Y, split + 1, my[keep])
            done = np.insert(done, split + 1, False)
    raise DerivationError(f"loop image under {iso.name} did not resolve")


def push_loop(iso: Isotopy, loop: np.ndarray, slits: Sequence[float], inverse: bool = False,
              max_step: float = 2e-3) -> tuple:
    """Word of the image of a loop under the time-1 map (or its inverse)."""
    img = push_polyline(iso, loop, inverse, max_step)
    return read_cut_word(img[:, 0], img[:, 1], slits)


def pushforward(iso: Isotopy, base: BaseGeometry, inverse: bool = False) -> FreeGroupEndo:
    loops = generator_loops(base)
    slits = (base.t1, base.t2)
    return FreeGroupEndo(tuple(push_loop(iso, loops[k], slits, inverse) for k in ("c", "g1", "g2")))


def boundary_word(base: BaseGeometry) -> tuple:
    loops = generator_loops(base)
    d = loops["delta"]
    return read_cut_word(d[:, 0], d[:, 1], (base.t1, base.t2))


# ---------------------------------------------------------------------------
# generator table

@dataclass
class GeneratorTable:
    base: BaseGeometry
    endos: dict  # letter -> FreeGroupEndo
    delta: tuple
    traced: dict  # name -> FreeGroupEndo from independent isotopies
    eta_words: dict  # (strand, sign of r) -> BraidWord
    action: dict = field(default_factory=dict)  # 'A', 'R3' -> words for R2^-1 x R2
    action_inverse: dict = field(default_factory=dict)  # for R2 x R2^-1
    schreier: dict = field(default_factory=dict)  # 'X2', 'X3' -> P2 words for B R2 b, B R3 b
    checks: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def to_text(self) -> str:
        data = {
            "base": [self.base.t1, self.base.t2],
            "generators": {_LETTER_NAMES[k]: str(v) for k, v in self.endos.items() if k > 0},
            "delta": fg_str(self.delta),
            "eta": {f"{s}{'+' if r > 0 else '-'}": str(w) for (s, r), w in self.eta_words.items()},
            "action": {k: str(v) for k, v in self.action.items()},
            "action_inverse": {k: str(v) for k, v in self.action_inverse.items()},
            "schreier": {k: str(v) for k, v in self.schreier.items()},
            "checks": self.checks,
        }
        return json.dumps(data, indent=2, sort_keys=True)


def act(w: BraidWord, table: GeneratorTable) -> FreeGroupEndo:
    """Action of a word: letters act in word order (first letter first)."""
    cache = table._cache
    key = w.letters
    if key in cache:
        return cache[key]
    E = FG_IDENTITY
    for k, a in enumerate(key):
        E = E.then(table.endos[a])
    if len(cache) < 200_000:
        cache[key] = E
    return E


def equal(w1: BraidWord, w2: BraidWord, table: GeneratorTable | None = None) -> bool:
    table = table or default_table()
    if w1.parity != w2.parity:
        return False
    return act(w1, table) == act(w2, table)


def _ball_search(target: FreeGroupEndo, table: GeneratorTable, letters: Sequence[int],
                 max_len: int, parity: int | None = None) -> BraidWord | None:
    """Shortest word over ``letters`` (with inverses) whose action is ``target``."""
    alphabet = []
    for a in letters:
        alphabet.extend([a, -a])
    endo_of = {a: table.endos[a] if abs(a) <= 3 else None for a in alphabet}
    seen = {FG_IDENTITY: ()}
    frontier = [((), FG_IDENTITY)]
    if target == FG_IDENTITY and (parity in (None, 0)):
        return IDENTITY
    for _ in range(max_len):
        nxt = []
        for word, E in frontier:
            for a in alphabet:
                if word and word[-1] == -a:
                    continue
                E2 = E.then(endo_of[a])
                if E2 in seen:
                    continue
                w2 = word + (a,)
                seen[E2] = w2
                if E2 == target and (parity is None or BraidWord(w2).parity == parity):
                    return BraidWord(w2)
                nxt.append((w2, E2))
        frontier = nxt
    return None


def _search_in_words(target: FreeGroupEndo, table: GeneratorTable, gens: dict,
                     max_len: int) -> BraidWord | None:
    """Shortest product of named generator words (and inverses) with action ``target``."""
    moves = []
    for name, w in gens.items():
        moves.append((name, w, act(w, table)))
        wi = w.inverse()
        moves.append((name.lower() if name.isupper() else name.upper(), wi, act(wi, table)))
    if target == FG_IDENTITY:
        return IDENTITY
    seen = {FG_IDENTITY}
    frontier = [(IDENTITY, FG_IDENTITY, None)]
    for _ in range(max_len):
        nxt = []
        for w, E, last in frontier:
            for k, (name, mw, mE) in enumerate(moves):
                if last is not None and k == (last ^ 1):
                    continue
                E2 = E.then(mE)
                if E2 in seen:
                    continue
                seen.add(E2)
                w2 = w * mw
                if E2 == target:
                    return w2
                nxt.append((w2, E2, k))
        frontier = nxt
    return None


def _derive(base: BaseGeometry) -> GeneratorTable:
    iso = generator_isotopies(base)
    endos = {}
    for letter, name in ((1, "B"), (2, "R2"), (3, "R3")):
        endos[letter] = pushforward(iso[name], base)
        endos[-letter] = pushforward(iso[name], base, inverse=True)
    delta = boundary_word(base)
    traced = {name: pushforward(iso[name], base) for name in ("A", "A12", "A13")}
    eta_iso = {}
    for strand in (1, 2):
        for sgn in (1, -1):
            eta_iso[(strand, sgn)] = pushforward(chord_push(base, strand, 0.3 * sgn), base)
    table = GeneratorTable(base, endos, delta, traced, {})
    for letter in (1, 2, 3):
        if endos[letter].then(endos[-letter]) != FG_IDENTITY:
            raise DerivationError(f"inverse pair for {_LETTER_NAMES[letter]}")
    for (strand, sgn), E in eta_iso.items():
        w = _ball_search(E, table, (1, 2, 3), 6, parity=0)
        if w is None:
            raise DerivationError(f"eta word for strand {strand}, sign {sgn} not found within length 6")
        table.eta_words[(strand, sgn)] = w
    return table


def validate_table(table: GeneratorTable) -> dict:
    """Relation oracles; raises DerivationError naming the first failure."""
    t = table
    checks = {}

    def need(name, ok):
        checks[name] = bool(ok)
        if not ok:
            raise DerivationError(name)

    need("A = B^2", act(A, t) == t.traced["A"])
    need("A12 = R2^-1 A R2^-1", act(R2.inverse() * A * R2.inverse(), t) == t.traced["A12"])
    need("A13 = R3^-2 A^-1", act((R3 ** -2) * A.inverse(), t) == t.traced["A13"])
    for letter in ALPHABET:
        need(f"boundary word fixed by {_LETTER_NAMES[letter]}",
             t.endos[letter].apply(t.delta) == t.delta)
    need("eta(1, r<0) = R2", equal(t.eta_words[(1, -1)], R2, t))
    need("eta(1, r>0) = A^-1 R2", equal(t.eta_words[(1, 1)], A.inverse() * R2, t))
    t.checks = checks
    return checks


def _derive_splitting(table: GeneratorTable, cap: int = 12) -> None:
    """Conjugation action of R2 on the kernel <A, R3>, found by oracle search."""
    gens = {"A": A, "R3": R3}
    for name, x in gens.items():
        for key, conj, store in (("fwd", R2.inverse() * x * R2, table.action),
                                 ("inv", R2 * x * R2.inverse(), table.action_inverse)):
            w = _search_in_words(act(conj, table), table, gens, cap)
            if w is None:
                raise DerivationError(f"splitting action for {name} ({key}) not found within {cap}")
            store[name] = w
    # Schreier generators B R2 b and B R3 b rewritten over A, R2, R3
    p2 = {"A": A, "R2": R2, "R3": R3}
    for name, x in (("X2", B * R2 * B.inverse()), ("X3", B * R3 * B.inverse())):
        w = _search_in_words(act(x, table), table, p2, cap)
        if w is None:
            raise DerivationError(f"Schreier rewrite of {name} not found within {cap}")
        table.schreier[name] = w


def derive_generator_table(base: BaseGeometry | None = None) -> GeneratorTable:
    base = base or BaseGeometry()
    table = _derive(base)
    validate_table(table)
    _derive_splitting(table)
    return table


@functools.lru_cache(maxsize=8)
def _cached_table(t1: float, t2: float) -> GeneratorTable:
    return derive_generator_table(BaseGeometry(t1, t2))


def default_table(base: BaseGeometry | None = None) -> GeneratorTable:
    base = base or BaseGeometry()
    return _cached_table(base.t1, base.t2)


# ---------------------------------------------------------------------------
# lengths and norms

class Unknown:
    """Marker returned when a bounded search exceeds its cap."""

    def __init__(self, lower_bound: int):
        self.lower_bound = lower_bound

    def __repr__(self):
        return f"Unknown(>{self.lower_bound})"

    def __bool__(self):
        return False


def _gens_alphabet(S: Iterable[str]) -> tuple:
    names = {"B": 1, "R2": 2, "R3": 3}
    try:
        return tuple(names[s] for s in S)
    except KeyError as exc:
        raise ConfigurationError(f"unknown generator {exc.args[0]!r}") from None


def word_length(w: BraidWord, S: Iterable[str] = ("B", "R2", "R3"), cap: int = 6,
                table: GeneratorTable | None = None):
    """Exact word length by breadth-first search over the Cayley ball."""
    table = table or default_table()
    target = act(w, table)
    if target == FG_IDENTITY:
        return 0
    letters = _gens_alphabet(S)
    if len(w) <= 1 and set(abs(a) for a in w.letters) <= set(letters):
        return len(w)
    found = _ball_search(target, table, letters, cap, parity=w.parity)
    if found is None:
        return Unknown(cap)
    return len(found)


def c_norm_upper(w: BraidWord, factorization: Sequence[BraidWord] | None = None,
                 table: GeneratorTable | None = None) -> int:
    """Number of conjugates of generators in a factorization of w.

    Without a factorization, each letter of the reduced word is its own conjugate.
    A supplied factorization must be a list of conjugates g s^+-1 g^-1 whose product is w.
    """
    if factorization is None:
        return len(w)
    table = table or default_table()
    prod = IDENTITY
    for f in factorization:
        if not _is_conjugate_of_generator(f):
            raise DomainError(f"{f} is not a conjugate of a generator")
        prod = prod * f
    if not equal(prod, w, table):
        raise DomainError("factorization does not multiply to the word")
    return len(factorization)


def _is_conjugate_of_generator(f: BraidWord) -> bool:
    L = f.letters
    if len(L) % 2 == 0:
        return False
    m = len(L) // 2
    return all(L[i] == -L[-1 - i] for i in range(m))


def conjugates(radius: int, S: Iterable[str] = ("B", "R2", "R3")) -> list:
    letters = _gens_alphabet(S)
    gens = [BraidWord((a,)) for a in letters] + [BraidWord((-a,)) for a in letters]
    words = [IDENTITY]
    frontier = [IDENTITY]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for g in gens:
                w2 = w * g
                if len(w2) == len(w) + 1:
                    nxt.append(w2)
        words.extend(nxt)
        frontier = nxt
    out = []
    for g in words:
        for s in gens:
            out.append(g * s * g.inverse())
    return out


def c_norm_exact_small(w: BraidWord, S: Iterable[str] = ("B", "R2", "R3"), radius: int = 1,
                       max_factors: int = 3, table: GeneratorTable | None = None):
    """Exact conjugation-generated norm among conjugators of length <= radius."""
    table = table or default_table()
    target = act(w, table)
    if target == FG_IDENTITY:
        return 0
    conj = {}
    for c in conjugates(radius, S):
        conj.setdefault(act(c, table), c)
    layer = {FG_IDENTITY}
    seen = {FG_IDENTITY}
    for n in range(1, max_factors + 1):
        nxt = set()
        for E in layer:
            for C in conj:
                E2 = E.then(C)
                if E2 == target:
                    return n
                if E2 not in seen:
                    seen.add(E2)
                    nxt.add(E2)
        layer = nxt
    return Unknown(max_factors)


# ---------------------------------------------------------------------------
# strand-forgetting homomorphisms

def strand_degrees(w: BraidWord) -> tuple:
    """Signed core-crossing count of each labelled strand along the word.

    R2 moves whichever strand sits at the first base point, R3 the one at the
    second; B swaps positions.
    """
    at = [1, 2]  # label at position 1, position 2
    deg = {1: 0, 2: 0}
    for a in w.letters:
        if abs(a) == 1:
            at.reverse()
        else:
            deg[at[abs(a) - 2]] += 1 if a > 0 else -1
    return deg[1], deg[2]


def h1(w: BraidWord) -> int:
    if not is_pure(w):
        raise DomainError("h1 is defined on pure braids; use h_bar for B_2(M)")
    return strand_degrees(w)[0]


def h2(w: BraidWord) -> int:
    if not is_pure(w):
        raise DomainError("h2 is defined on pure braids; use h_bar for B_2(M)")
    return strand_degrees(w)[1]


def h_bar(fn: Callable, w: BraidWord) -> float:
    """Homogenised extension H(g^2)/2 to the full braid group."""
    return fn(w) if is_pure(w) else fn(w ** 2) / 2.0


# ---------------------------------------------------------------------------
# normal form in F2 x| Z and quasimorphisms

def _apply_word_map(u: tuple, images: dict) -> tuple:
    out: list = []
    for a in u:
        seq = images[abs(a)] if a > 0 else fg_inverse(images[abs(a)])
        for b in seq:
            if out and out[-1] == -b:
                out.pop()
            else:
                out.append(b)
    return tuple(out)


def _to_kernel_letters(w: BraidWord) -> tuple:
    """Kernel word over {A: 1, R3: 2} of a word using only A/B-pairs and R3."""
    out: list = []
    L = w.letters
    i = 0
    while i < len(L):
        a = L[i]
        if abs(a) == 1:
            if i + 1 >= len(L) or L[i + 1] != a:
                raise DomainError("odd B-run in kernel word")
            out.append(1 if a > 0 else -1)
            i += 2
        elif abs(a) == 3:
            out.append(2 if a > 0 else -2)
            i += 1
        else:
            raise DomainError("R2 letter in kernel word")
    return free_reduce(out)


@dataclass(frozen=True)
class NormalForm:
    """w = R2^k * u with u a reduced word over A (1) and R3 (2)."""

    k: int
    u: tuple

    def as_word(self) -> BraidWord:
        letters: list = [2 if self.k > 0 else -2] * abs(self.k)
        for a in self.u:
            letters.extend([1, 1] if a == 1 else [-1, -1] if a == -1 else [3] if a == 2 else [-3])
        return BraidWord(tuple(letters))

    def __str__(self):
        names = {1: "A", -1: "a", 2: "R3", -2: "r3"}
        return f"R2^{self.k} * " + ("".join(names[a] for a in self.u) or "1")


def normal_form(w: BraidWord, table: GeneratorTable | None = None) -> NormalForm:
    """Normal form of a pure word via the Schreier rewrite and the derived action."""
    if not is_pure(w):
        raise DomainError("normal form is defined on pure braids")
    table = table or default_table()
    fwd = {k: _to_kernel_letters(v) for k, v in table.action.items()}
    bwd = {k: _to_kernel_letters(v) for k, v in table.action_inverse.items()}
    phi = {1: fwd["A"], 2: fwd["R3"]}
    phi_inv = {1: bwd["A"], 2: bwd["R3"]}
    # rewrite into P2 letters: 'A', 'R2', 'R3' (with signs)
    p2: list = []
    coset = 0
    for a in w.letters:
        if abs(a) == 1:
            if a > 0 and coset == 1:
                p2.append(("A", 1))
            elif a < 0 and coset == 0:
                p2.append(("A", -1))
            coset ^= 1
        else:
            g = "R2" if abs(a) == 2 else "R3"
            s = 1 if a > 0 else -1
            if coset == 0:
                p2.append((g, s))
            else:
                x = table.schreier["X2" if g == "R2" else "X3"]
                seq = x.letters if s > 0 else x.inverse().letters
                p2.extend(_p2_letters(BraidWord(seq)))
    k = 0
    u: tuple = ()
    for g, s in p2:
        if g == "R2":
            if s > 0:
                u = _apply_word_map(u, phi)
                k += 1
            else:
                u = _apply_word_map(u, phi_inv)
                k -= 1
        else:
            letter = 1 if g == "A" else 2
            u = free_reduce(u + ((letter * s),))
    return NormalForm(k, u)


def _p2_letters(w: BraidWord) -> list:
    out = []
    L = w.letters
    i = 0
    while i < len(L):
        a = L[i]
        if abs(a) == 1:
            out.append(("A", 1 if a > 0 else -1))
            i += 2
        else:
            out.append(("R2" if abs(a) == 2 else "R3", 1 if a > 0 else -1))
            i += 1
    return out


def abelianization(table: GeneratorTable | None = None) -> dict:
    """Z + coinvariants of the R2-action on H1(<A, R3>) = Z^2."""
    table = table or default_table()
    cols = []
    for name in ("A", "R3"):
        u = _to_kernel_letters(table.action[name])
        cols.append([sum(1 if a == 1 else -1 for a in u if abs(a) == 1),
                     sum(1 if a == 2 else -1 for a in u if abs(a) == 2)])
    M = np.array(cols, dtype=np.int64).T  # columns: images of A, R3
    D = M - np.eye(2, dtype=np.int64)
    d1, d2 = _smith_2x2(D)
    a_exp_preserved = bool(M[0, 0] == 1 and M[0, 1] == 0)
    return {"action_matrix": M.tolist(), "invariant_factors": [d1, d2],
            "A_exponent_preserved": a_exp_preserved,
            "A_survives": _survives(D)}


def _survives(D: np.ndarray) -> bool:
    """True when the class of A has infinite order in the coinvariants."""
    e1 = np.array([[1], [0]])
    return bool(np.linalg.matrix_rank(np.hstack([D, e1])) > np.linalg.matrix_rank(D))


def _smith_2x2(D: np.ndarray) -> tuple:
    entries = [int(v) for v in D.flatten()]
    g = 0
    for v in entries:
        g = math.gcd(g, abs(v))
    det = abs(int(round(np.linalg.det(D))))
    if g == 0:
        return 0, 0
    return g, det // g


@dataclass(frozen=True)
class QuasimorphismSpec:
    kind: str  # 'h1', 'h2', 'hsum', 'A_exponent', 'counting'
    target: tuple = ()  # counting: kernel word over {A: 1, R3: 2}
    p_max: int = 8
    defect: float = 0.0
    defect_certificate: dict = field(default_factory=dict, compare=False)

    @property
    def is_homomorphism(self) -> bool:
        return self.kind in ("h1", "h2", "hsum", "A_exponent")


def _count(u: tuple, t: tuple) -> int:
    n, m = len(u), len(t)
    return sum(1 for i in range(n - m + 1) if u[i:i + m] == t)


def evaluate(spec: QuasimorphismSpec, w: BraidWord, table: GeneratorTable | None = None) -> float:
    """Value on a braid word; non-pure words use the homogenised H(w^2)/2."""
    if not is_pure(w):
        return evaluate(spec, w ** 2, table) / 2.0
    if spec.kind == "h1":
        return float(h1(w))
    if spec.kind == "h2":
        return float(h2(w))
    if spec.kind == "hsum":
        a, b = strand_degrees(w)
        return float(a + b)
    nf = normal_form(w, table)
    if spec.kind == "A_exponent":
        return float(sum(1 if a == 1 else -1 for a in nf.u if abs(a) == 1))
    if spec.kind == "counting":
        t = spec.target
        return float(_count(nf.u, t) - _count(nf.u, fg_inverse(t)))
    raise ConfigurationError(f"unknown quasimorphism kind {spec.kind!r}")


def make_quasimorphism(kind: str, table: GeneratorTable | None = None, **kw) -> QuasimorphismSpec:
    """Build a quasimorphism description; A_exponent is only a homomorphism when the action preserves it."""
    if kind == "A_exponent":
        ab = abelianization(table)
        if not ab["A_exponent_preserved"]:
            kind = "counting"
            kw.setdefault("target", (1,))
    spec = QuasimorphismSpec(kind, **kw)
    if spec.kind == "counting" and not spec.defect_certificate:
        d, cert = empirical_defect(spec, table=table)
        spec = QuasimorphismSpec(spec.kind, spec.target, spec.p_max, d, cert)
    return spec


def random_pure_word(rng: np.random.Generator, max_len: int) -> BraidWord:
    L = int(rng.integers(0, max_len + 1))
    w = BraidWord(tuple(int(a) for a in rng.choice(ALPHABET, size=L)))
    if w.parity:
        w = w * B
    return w


def empirical_defect(spec: QuasimorphismSpec, n: int = 10_000, max_len: int = 6, seed: int = 0,
                     table: GeneratorTable | None = None) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        g = random_pure_word(rng, max_len)
        h = random_pure_word(rng, max_len)
        d = abs(evaluate(spec, g * h, table) - evaluate(spec, g, table) - evaluate(spec, h, table))
        worst = max(worst, d)
    return worst, {"pairs": n, "max_len": max_len, "seed": seed, "empirical": True}


@dataclass
class Homogenized:
    value: float
    bracket: float
    sequence: list

    def interval(self) -> tuple:
        return self.value - self.bracket, self.value + self.bracket


def homogenize(spec, w: BraidWord, p_max: int | None = None, table=None) -> Homogenized:
    """phi(w^p)/p for p <= p_max with bracket D(phi)/p.

    ``spec`` may also be a plain callable on words (its defect is then unknown
    and the bracket is reported as nan).
    """
    if callable(spec) and not isinstance(spec, QuasimorphismSpec):
        fn, D = spec, float("nan")
        p_max = p_max or 6
    else:
        fn = lambda x: evaluate(spec, x, table)  # noqa: E731
        D = spec.defect
        p_max = p_max or spec.p_max
    seq = []
    for p in range(1, p_max + 1):
        seq.append(float(fn(w ** p)) / p)
    return Homogenized(seq[-1], D / p_max if D == D else float("nan"), seq)


def word_ball(radius: int, letters: Sequence[int] = ALPHABET) -> list:
    """All freely reduced words of length <= radius, in canonical order."""
    out = [IDENTITY]
    frontier = [()]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for a in letters:
                if w and w[-1] == -a:
                    continue
                nxt.append(w + (a,))
        out.extend(BraidWord(w) for w in nxt)
        frontier = nxt
    return out
