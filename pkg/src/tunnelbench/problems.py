"""K-local Ising cost functions, Chimera graphs and crafted instance generators.

The cost of a spin configuration s in {-1,+1}^n is

    E(s) = - sum_t c_t * prod_{j in t} s_j

over terms t (tuples of distinct variable indices); single-index tuples act
as local fields.  Problems are immutable after construction and can be
shared freely across concurrent solver runs.  Generators are pure functions
of (parameters, seed).
"""

from __future__ import annotations

import json
from functools import cached_property
from itertools import combinations

import numpy as np

from .constants import ENERGY_ATOL
from .errors import CertificationError, InputError

_ENUM_CHUNK = 1 << 16


class IsingProblem:
    """Sparse K-local cost function on n spin variables.

    Terms are canonicalized on construction: indices inside a tuple are
    sorted, duplicate tuples have their coefficients merged, and terms whose
    merged coefficient is exactly zero are dropped.
    """

    def __init__(self, n: int, terms):
        if n < 1:
            raise InputError(f"need at least one variable, got n={n}")
        merged: dict[tuple[int, ...], float] = {}
        for variables, coeff in dict(terms).items() if isinstance(terms, dict) else terms:
            key = tuple(sorted(int(v) for v in variables))
            if len(key) == 0:
                raise InputError("empty variable tuple")
            if len(set(key)) != len(key):
                raise InputError(f"repeated variable in term {key}")
            if key[0] < 0 or key[-1] >= n:
                raise InputError(f"variable index out of range in term {key}")
            merged[key] = merged.get(key, 0.0) + float(coeff)
        self.n = int(n)
        self.terms = {k: v for k, v in sorted(merged.items()) if v != 0.0}
        self.max_order = max((len(k) for k in self.terms), default=1)

    def __repr__(self):
        return f"IsingProblem(n={self.n}, terms={len(self.terms)}, K={self.max_order})"

    @cached_property
    def term_arrays(self):
        """Flattened term representation for kernels.

        Returns (coeffs, var_offsets, var_flat, adj_offsets, adj_terms):
        term t covers var_flat[var_offsets[t]:var_offsets[t+1]]; the terms
        touching variable i are adj_terms[adj_offsets[i]:adj_offsets[i+1]].
        """
        keys = list(self.terms)
        coeffs = np.array([self.terms[k] for k in keys], dtype=np.float64)
        var_offsets = np.zeros(len(keys) + 1, dtype=np.int64)
        flat = []
        per_var = [[] for _ in range(self.n)]
        for t, key in enumerate(keys):
            flat.extend(key)
            var_offsets[t + 1] = len(flat)
            for v in key:
                per_var[v].append(t)
        adj_offsets = np.zeros(self.n + 1, dtype=np.int64)
        adj = []
        for i in range(self.n):
            adj.extend(per_var[i])
            adj_offsets[i + 1] = len(adj)
        return (
            coeffs,
            var_offsets,
            np.array(flat, dtype=np.int64),
            adj_offsets,
            np.array(adj, dtype=np.int64),
        )

    def two_local_arrays(self):
        """Fields h and pair-coupling CSR (offsets, neighbor, strength).

        Raises UnsupportedProblemError if any term has order above two.
        """
        from .errors import UnsupportedProblemError

        if self.max_order > 2:
            raise UnsupportedProblemError(
                f"problem has K={self.max_order} terms, only K<=2 supported here"
            )
        h = np.zeros(self.n, dtype=np.float64)
        nbr: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for key, c in self.terms.items():
            if len(key) == 1:
                h[key[0]] += c
            else:
                i, j = key
                nbr[i].append((j, c))
                nbr[j].append((i, c))
        offsets = np.zeros(self.n + 1, dtype=np.int64)
        idx, val = [], []
        for i in range(self.n):
            for j, c in sorted(nbr[i]):
                idx.append(j)
                val.append(c)
            offsets[i + 1] = len(idx)
        return h, offsets, np.array(idx, dtype=np.int64), np.array(val, dtype=np.float64)


def as_config(values, n: int | None = None) -> np.ndarray:
    """Validate and convert a spin configuration to an int8 array."""
    config = np.asarray(values, dtype=np.int8)
    if config.ndim != 1:
        raise InputError("configuration must be one-dimensional")
    if n is not None and config.shape[0] != n:
        raise InputError(f"configuration length {config.shape[0]} != n={n}")
    if not np.all(np.abs(config) == 1):
        raise InputError("configuration values must be +1 or -1")
    return config


def evaluate_energy(problem: IsingProblem, config) -> float:
    """Cost E(s) = -sum_t c_t prod_{j in t} s_j of one configuration."""
    s = as_config(config, problem.n)
    total = 0.0
    for key, c in problem.terms.items():
        p = 1
        for j in key:
            p *= int(s[j])
        total -= c * p
    return total


def evaluate_energies(problem: IsingProblem, configs) -> np.ndarray:
    """Vectorized cost of a batch of configurations, shape (m, n)."""
    s = np.asarray(configs, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] != problem.n:
        raise InputError(f"expected shape (m, {problem.n})")
    total = np.zeros(s.shape[0])
    for key, c in problem.terms.items():
        p = s[:, key[0]].copy()
        for j in key[1:]:
            p *= s[:, j]
        total -= c * p
    return total


def single_flip_gains(problem: IsingProblem, config) -> np.ndarray:
    """Energy change of flipping each variable alone: dE_i = 2 sum_{t:i} c_t prod_t."""
    s = as_config(config, problem.n)
    gains = np.zeros(problem.n)
    for key, c in problem.terms.items():
        p = 1
        for j in key:
            p *= int(s[j])
        for j in key:
            gains[j] += 2.0 * c * p
    return gains


def _decode_lex(indices: np.ndarray, n: int) -> np.ndarray:
    """Decode enumeration indices so index order equals lexicographic config
    order with -1 < +1 and s_0 the most significant digit."""
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)
    bits = (indices[:, None] >> shifts[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def enumerate_energies(problem: IsingProblem, chunk: int = _ENUM_CHUNK):
    """Yield (start_index, energies) over all 2^n configurations in
    lexicographic order.  Used as the exhaustive oracle."""
    total = 1 << problem.n
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        configs = _decode_lex(idx, problem.n)
        yield start, evaluate_energies(problem, configs)


def brute_force_ground_state(problem: IsingProblem, max_n: int = 28):
    """Exact global minimum by full enumeration.

    Returns (config, energy, degeneracy); ties within ENERGY_ATOL count
    toward the degeneracy and the representative is the lexicographically
    smallest tied configuration (-1 sorts before +1).
    """
    if problem.n > max_n:
        raise InputError(f"refusing brute force for n={problem.n} > {max_n}")
    best = np.inf
    for _, energies in enumerate_energies(problem):
        m = energies.min()
        if m < best:
            best = m
    degeneracy = 0
    rep_index = None
    for start, energies in enumerate_energies(problem):
        tied = energies <= best + ENERGY_ATOL
        degeneracy += int(tied.sum())
        if rep_index is None and tied.any():
            rep_index = start + int(np.argmax(tied))
    config = _decode_lex(np.array([rep_index], dtype=np.uint64), problem.n)[0]
    return config, float(evaluate_energy(problem, config)), degeneracy


class ChimeraGraph:
    """Grid of 8-qubit K4,4 unit cells with an optional broken-qubit mask.

    Qubit index: ((r*cols)+c)*8 + k with k in [0,8).  Within a cell the
    left side is k in {0..3} and the right side k in {4..7}; intra-cell
    edges form the complete bipartite graph between the sides.  Equal-k
    qubits of horizontally adjacent cells are coupled for k in {4..7},
    vertically adjacent cells for k in {0..3}.
    """

    def __init__(self, rows: int, cols: int, broken=()):
        if rows < 1 or cols < 1:
            raise InputError("rows and cols must be >= 1")
        self.rows = int(rows)
        self.cols = int(cols)
        self.n_sites = 8 * self.rows * self.cols
        broken = frozenset(int(q) for q in broken)
        for q in broken:
            if q < 0 or q >= self.n_sites:
                raise InputError(f"broken qubit {q} out of range [0, {self.n_sites})")
        self.broken = broken

    def qubit(self, r: int, c: int, k: int) -> int:
        return ((r * self.cols) + c) * 8 + k

    def cell_qubits(self, r: int, c: int, active_only: bool = True):
        qs = [self.qubit(r, c, k) for k in range(8)]
        if active_only:
            qs = [q for q in qs if q not in self.broken]
        return qs

    def active_qubits(self):
        return [q for q in range(self.n_sites) if q not in self.broken]

    @property
    def n_active(self) -> int:
        return self.n_sites - len(self.broken)

    def _alive(self, u: int, v: int) -> bool:
        return u not in self.broken and v not in self.broken

    def intra_edges(self):
        edges = []
        for r in range(self.rows):
            for c in range(self.cols):
                for a in range(4):
                    for b in range(4, 8):
                        u, v = self.qubit(r, c, a), self.qubit(r, c, b)
                        if self._alive(u, v):
                            edges.append((u, v))
        return edges

    def inter_edges(self):
        edges = []
        for r in range(self.rows):
            for c in range(self.cols):
                if c + 1 < self.cols:
                    for k in range(4, 8):
                        u, v = self.qubit(r, c, k), self.qubit(r, c + 1, k)
                        if self._alive(u, v):
                            edges.append((u, v))
                if r + 1 < self.rows:
                    for k in range(4):
                        u, v = self.qubit(r, c, k), self.qubit(r + 1, c, k)
                        if self._alive(u, v):
                            edges.append((u, v))
        return edges

    def edges(self):
        return sorted(self.intra_edges() + self.inter_edges())

    def cell_pair_edges(self, cell_a, cell_b):
        """Inter edges connecting two grid-adjacent cells (may be empty if
        the cells are not adjacent or all connecting qubits are broken)."""
        (ra, ca), (rb, cb) = cell_a, cell_b
        if (ra, ca) > (rb, cb):
            (ra, ca), (rb, cb) = (rb, cb), (ra, ca)
        edges = []
        if ra == rb and cb == ca + 1:
            ks = range(4, 8)
        elif ca == cb and rb == ra + 1:
            ks = range(4)
        else:
            return edges
        for k in ks:
            u, v = self.qubit(ra, ca, k), self.qubit(rb, cb, k)
            if self._alive(u, v):
                edges.append((u, v))
        return edges


def build_chimera(rows: int, cols: int, broken=()) -> ChimeraGraph:
    """Construct a Chimera graph; edge ordering is deterministic."""
    return ChimeraGraph(rows, cols, broken)


def weak_strong_pair(h1: float = 0.44, h2: float = -1.0) -> IsingProblem:
    """Sixteen-qubit weak-strong cluster pair on a 1x2 Chimera tile.

    Ferromagnetic J=1 on every intra edge of both cells and on the four
    connecting edges; field h1 on the eight left-cell qubits, h2 on the
    eight right-cell qubits.  For 0 < h1 < 1/2 the global optimum has both
    cells aligned with the strong field, so the weakly biased cell must
    collectively reverse its orientation: a tall, narrow barrier.
    """
    graph = ChimeraGraph(1, 2)
    terms: dict[tuple[int, ...], float] = {}
    for u, v in graph.edges():
        terms[(u, v)] = 1.0
    for q in graph.cell_qubits(0, 0):
        terms[(q,)] = float(h1)
    for q in graph.cell_qubits(0, 1):
        terms[(q,)] = float(h2)
    return IsingProblem(16, terms)


def _domino_layout(rows: int, cols: int):
    """Mirrored horizontal dominoes: column pair (2i, 2i+1) carries the weak
    cell at 2i for even i and at 2i+1 for odd i.  Mirroring makes strong
    cells of neighboring dominoes grid-adjacent, so strong-strong couplings
    run both vertically (within a strong column) and horizontally (between
    dominoes), allowing frustrated coupling cycles on larger grids.
    """
    if cols % 2 != 0:
        raise InputError("weak-strong network needs an even number of cell columns")
    weak, strong, partner = set(), set(), {}
    for r in range(rows):
        for i in range(cols // 2):
            a, b = 2 * i, 2 * i + 1
            w, s = (a, b) if i % 2 == 0 else (b, a)
            weak.add((r, w))
            strong.add((r, s))
            partner[(r, w)] = (r, s)
    return weak, strong, partner


def weak_strong_network(
    graph: ChimeraGraph,
    pairing: str = "mirrored-dominoes",
    seed: int = 0,
    h1: float = 0.44,
    h2: float = -1.0,
):
    """Tile the cell grid with weak-strong dominoes and couple neighboring
    strong cells with a single random +-1 sign per adjacency.

    Returns (problem, reference_optimum).  The reference optimum comes from
    exact enumeration of the contracted super-spin model (cells are rigid at
    J=1, |h|<=1) and is certified to be a single-flip local minimum of the
    full problem; certification failure raises CertificationError.

    With broken qubits the affected terms are dropped and variables are
    compacted to the active qubits.
    """
    if pairing != "mirrored-dominoes":
        raise InputError(f"unknown pairing pattern {pairing!r}")
    weak, strong, partner = _domino_layout(graph.rows, graph.cols)
    if not partner:
        raise InputError("grid too small for a single domino")

    terms: dict[tuple[int, ...], float] = {}
    for u, v in graph.intra_edges():
        terms[(u, v)] = 1.0
    for r, c in sorted(weak):
        for q in graph.cell_qubits(r, c):
            terms[(q,)] = float(h1)
        for u, v in graph.cell_pair_edges((r, c), partner[(r, c)]):
            terms[(u, v)] = 1.0
    for r, c in sorted(strong):
        for q in graph.cell_qubits(r, c):
            terms[(q,)] = float(h2)

    strong_cells = sorted(strong)
    adjacencies = []
    for a in strong_cells:
        for b in ((a[0], a[1] + 1), (a[0] + 1, a[1])):
            if b in strong:
                adjacencies.append((a, b))
    rng = np.random.default_rng(seed)
    signs = {}
    for a, b in adjacencies:
        g = 1.0 if rng.integers(0, 2) == 1 else -1.0
        signs[(a, b)] = g
        for u, v in graph.cell_pair_edges(a, b):
            terms[(u, v)] = g

    # Compact to active qubits when the mask removed some.
    remap = {q: i for i, q in enumerate(graph.active_qubits())}
    n = len(remap)
    problem = IsingProblem(
        n, {tuple(remap[q] for q in key): c for key, c in terms.items()}
    )

    reference = _contracted_reference(problem, graph, remap, weak, strong, partner, signs)
    gains = single_flip_gains(problem, reference)
    worst = int(np.argmin(gains))
    if gains[worst] < -ENERGY_ATOL:
        raise CertificationError(
            f"contracted optimum is not a local minimum: flipping variable "
            f"{worst} lowers the energy by {-gains[worst]:.6g}",
            variable=worst,
            gain=float(gains[worst]),
        )
    return problem, reference


def _contracted_reference(problem, graph, remap, weak, strong, partner, signs):
    """Exact optimum over cluster-rigid states.

    Strong super-spins are enumerated exhaustively; each weak cell couples
    only to its partner, so its orientation is optimized conditionally.
    Ties break toward the lexicographically smaller configuration.
    """
    strong_cells = sorted(strong)
    if len(strong_cells) > 20:
        raise InputError(
            f"contracted enumeration over {len(strong_cells)} strong cells refused"
        )
    weak_cells = sorted(weak)
    strong_index = {cell: i for i, cell in enumerate(strong_cells)}
    # Per weak cell: total field weight over its active qubits and the number
    # of surviving edges to its partner.  Both shrink under a broken mask.
    field = {
        w: sum(problem.terms.get((remap[q],), 0.0) for q in graph.cell_qubits(*w))
        for w in weak_cells
    }
    couple = {w: len(graph.cell_pair_edges(w, partner[w])) for w in weak_cells}

    def expand(strong_state, weak_state):
        config = np.empty(problem.n, dtype=np.int8)
        for cell, s in zip(strong_cells, strong_state):
            for q in graph.cell_qubits(*cell):
                config[remap[q]] = s
        for cell, s in zip(weak_cells, weak_state):
            for q in graph.cell_qubits(*cell):
                config[remap[q]] = s
        return config

    best = None
    for bits in range(1 << len(strong_cells)):
        strong_state = [1 if (bits >> i) & 1 else -1 for i in range(len(strong_cells))]
        weak_state = []
        for w in weak_cells:
            s_partner = strong_state[strong_index[partner[w]]]
            # weak-cell energy contribution: -field*s_w - n_edges*s_w*s_partner
            candidates = [
                (-field[w] * s_w - couple[w] * s_w * s_partner, s_w)
                for s_w in (-1, 1)
            ]
            weak_state.append(min(candidates)[1])
        config = expand(strong_state, weak_state)
        energy = evaluate_energy(problem, config)
        key = (energy, tuple(config))
        if best is None or key < best[0]:
            best = (key, config)
    return best[1]


def random_ising(n: int, graph="complete", coefficients=(-1.0, 1.0), seed: int = 0):
    """Reproducible random 2-local test instance.

    ``graph`` is either "complete" or a ChimeraGraph whose active qubit
    count must equal n.  Each edge draws one coefficient from
    ``coefficients`` uniformly; no fields are added.
    """
    if n < 2:
        raise InputError("random instance needs n >= 2")
    if graph == "complete":
        edges = list(combinations(range(n), 2))
    elif isinstance(graph, ChimeraGraph):
        if graph.n_active != n:
            raise InputError(
                f"graph has {graph.n_active} active qubits, expected n={n}"
            )
        remap = {q: i for i, q in enumerate(graph.active_qubits())}
        edges = [(remap[u], remap[v]) for u, v in graph.edges()]
    else:
        raise InputError(f"unknown graph spec {graph!r}")
    rng = np.random.default_rng(seed)
    choices = np.asarray(coefficients, dtype=np.float64)
    terms = {e: float(choices[rng.integers(0, len(choices))]) for e in sorted(edges)}
    return IsingProblem(n, terms)


# ---------------------------------------------------------------------------
# Instance persistence


def problem_to_dict(problem: IsingProblem, metadata=None) -> dict:
    return {
        "format": "kspin-1",
        "n": problem.n,
        "terms": [{"vars": list(k), "c": c} for k, c in sorted(problem.terms.items())],
        "metadata": dict(metadata or {}),
    }


def problem_from_dict(payload: dict):
    if payload.get("format") != "kspin-1":
        raise InputError(f"unsupported instance format {payload.get('format')!r}")
    terms = {tuple(t["vars"]): float(t["c"]) for t in payload["terms"]}
    return IsingProblem(int(payload["n"]), terms), dict(payload.get("metadata", {}))


def save_instance(path, problem: IsingProblem, metadata=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem, metadata), fh, sort_keys=True)
        fh.write("\n")


def load_instance(path):
    """Read a kspin-1 JSON instance; returns (problem, metadata)."""
    with open(path, encoding="utf-8") as fh:
        return problem_from_dict(json.load(fh))


def read_two_local_text(path) -> IsingProblem:
    """Read the plain-text 2-local format: lines "i j J", i=j meaning h_i."""
    terms: dict[tuple[int, ...], float] = {}
    n = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise InputError(f"{path}:{line_no}: expected 'i j J'")
            i, j, c = int(parts[0]), int(parts[1]), float(parts[2])
            key = (i,) if i == j else tuple(sorted((i, j)))
            terms[key] = terms.get(key, 0.0) + c
            n = max(n, i + 1, j + 1)
    if not terms:
        raise InputError(f"{path}: empty instance")
    return IsingProblem(n, terms)
