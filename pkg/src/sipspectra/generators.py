"""Rate-matrix assembly for the inclusion dynamics and its relatives.

All generators are stored as a sparse off-diagonal rate matrix plus an
explicit diagonal.  Killed (sub-stochastic) generators carry the per-state
killing rate instead of a ghost cemetery state; their spectra refer to the
restricted matrix.  Rates reaching the same ordered state pair through
several site channels are accumulated.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import permutations, product

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .configspace import ConfigSpace, SpaceCapExceeded, enumerate_configs
from .graphs import WeightedGraph
from .measures import WeightedMeasure, mu

__all__ = [
    "GeneratorMatrix",
    "LabeledSpace",
    "build_sip",
    "build_slow_fast",
    "build_killed",
    "build_lookdown",
    "combine_slow_fast",
    "open_generator_apply",
    "dirichlet_form",
    "symmetrize_labels",
    "label_pullback",
]


@dataclass
class GeneratorMatrix:
    """Sparse rate matrix with explicit diagonal and optional killing."""

    space: object
    rates: sp.csr_matrix
    diagonal: np.ndarray
    kill: np.ndarray | None = None
    reference: WeightedMeasure | None = None

    @property
    def size(self) -> int:
        return self.diagonal.shape[0]

    @property
    def conservative(self) -> bool:
        return self.kill is None or not np.any(self.kill > 0)

    def matvec(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.ndim == 1:
            return self.rates @ f + self.diagonal * f
        return self.rates @ f + self.diagonal[:, None] * f

    def as_dense(self) -> np.ndarray:
        out = self.rates.toarray()
        out[np.diag_indices_from(out)] += self.diagonal
        return out

    def as_sparse(self) -> sp.csr_matrix:
        return (self.rates + sp.diags(self.diagonal)).tocsr()

    def row_sum_residual(self) -> float:
        """Max |row sum + kill| (zero for a correctly assembled generator)."""
        sums = np.asarray(self.rates.sum(axis=1)).ravel() + self.diagonal
        if self.kill is not None:
            sums = sums + self.kill
        return float(np.abs(sums).max(initial=0.0))

    def carrier(self) -> np.ndarray:
        """Symmetrized conductances mu(eta) r(eta, xi) (requires reference)."""
        if self.reference is None:
            raise ValueError("generator carries no reference measure")
        coo = self.rates.tocoo()
        w = self.reference.weights
        return sp.coo_matrix((w[coo.row] * coo.data, (coo.row, coo.col)),
                             shape=coo.shape).tocsr()

    def detailed_balance_residual(self) -> float:
        c = self.carrier()
        return float(np.abs((c - c.T).data).max(initial=0.0))


def _assemble(g: WeightedGraph, space: ConfigSpace, edge_rate) -> sp.csr_matrix:
    """Accumulate off-diagonal rates over all directed edges of g.

    ``edge_rate(occ_rows, x, y, c)`` returns the per-row jump rate x -> y.
    The space provides indexing only, so a generator for one edge set may be
    assembled on the index space of another graph over the same vertices.
    """
    occ = space.occupations
    size = space.size
    rows, cols, vals = [], [], []
    for x, y, c in g.directed_edges:
        src = np.nonzero(occ[:, x] > 0)[0]
        if src.size == 0:
            continue
        rate = edge_rate(occ[src], x, y, c)
        hot = rate > 0
        if not np.any(hot):
            continue
        src, rate = src[hot], rate[hot]
        tgt_occ = occ[src].copy()
        tgt_occ[:, x] -= 1
        tgt_occ[:, y] += 1
        rows.append(src)
        cols.append(space.rank_rows(tgt_occ))
        vals.append(rate.astype(float))
    if not rows:
        return sp.csr_matrix((size, size))
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )
    return mat.tocsr()


def _finish(space, rates, kill=None, reference=None) -> GeneratorMatrix:
    diag = -np.asarray(rates.sum(axis=1)).ravel()
    if kill is not None:
        diag = diag - kill
    return GeneratorMatrix(space=space, rates=rates, diagonal=diag,
                           kill=kill, reference=reference)


def build_sip(g: WeightedGraph, k: int, space: ConfigSpace | None = None) -> GeneratorMatrix:
    """Conservative k-particle inclusion generator on g."""
    space = space or enumerate_configs(g, k)
    alpha = g.alpha
    rates = _assemble(g, space, lambda occ, x, y, c: c * occ[:, x] * (alpha[y] + occ[:, y]))
    return _finish(space, rates, reference=mu(g, space))


def build_slow_fast(g: WeightedGraph, k: int, space: ConfigSpace | None = None):
    """Split into independent-walk part A and pure-interaction part B.

    A has rates c eta_x alpha_y, B has rates c eta_x eta_y; the full dynamics
    with site weights eps*alpha, sped up by 1/eps, equals A + B/eps.
    """
    space = space or enumerate_configs(g, k)
    alpha = g.alpha
    a_rates = _assemble(g, space, lambda occ, x, y, c: c * occ[:, x] * alpha[y])
    b_rates = _assemble(g, space, lambda occ, x, y, c: c * occ[:, x] * occ[:, y])
    # A is reversible for k independent walkers: prod alpha_x^eta_x / eta_x!
    log_w = (space.occupations * np.log(alpha)).sum(axis=1) - gammaln(
        space.occupations + 1.0).sum(axis=1)
    a_ref = WeightedMeasure(log_weights=log_w, normalized=False)
    A = _finish(space, a_rates, reference=a_ref)
    B = _finish(space, b_rates)
    return A, B


def combine_slow_fast(A: GeneratorMatrix, B: GeneratorMatrix, eps: float) -> GeneratorMatrix:
    """A + B/eps, the 1/eps-accelerated dynamics with shrunk site weights."""
    rates = (A.rates + B.rates / eps).tocsr()
    g = A.space.graph
    ref = mu(g.scaled_alpha(eps), A.space)
    return GeneratorMatrix(space=A.space, rates=rates,
                           diagonal=A.diagonal + B.diagonal / eps,
                           reference=ref)


def build_killed(g: WeightedGraph, omega, k: int,
                 space: ConfigSpace | None = None) -> GeneratorMatrix:
    """Conservative dynamics plus killing at rate sum_x omega_x eta_x."""
    omega = np.broadcast_to(np.asarray(omega, dtype=float), (g.n,))
    if np.any(omega < 0):
        raise ValueError("negative killing rate")
    space = space or enumerate_configs(g, k)
    alpha = g.alpha
    rates = _assemble(g, space, lambda occ, x, y, c: c * occ[:, x] * (alpha[y] + occ[:, y]))
    kill = space.occupations @ omega
    return _finish(space, rates, kill=kill, reference=mu(g, space))


def open_generator_apply(g: WeightedGraph, omega, theta, f, occupation) -> float:
    """Pointwise action of the open (reservoir-coupled) generator on f.

    The open state space is infinite, so no matrix is formed; f is a callable
    on occupation tuples, evaluable at eta and all single-site modifications.
    """
    omega = np.broadcast_to(np.asarray(omega, dtype=float), (g.n,))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (g.n,))
    eta = tuple(int(v) for v in occupation)
    alpha = g.alpha
    f_eta = f(eta)
    total = 0.0
    for x, y, c in g.directed_edges:
        if eta[x] == 0:
            continue
        moved = list(eta)
        moved[x] -= 1
        moved[y] += 1
        total += c * eta[x] * (alpha[y] + eta[y]) * (f(tuple(moved)) - f_eta)
    for x in range(g.n):
        if omega[x] == 0.0:
            continue
        if eta[x] > 0:
            down = list(eta)
            down[x] -= 1
            total += omega[x] * eta[x] * (1.0 + theta[x]) * (f(tuple(down)) - f_eta)
        if theta[x] > 0:
            up = list(eta)
            up[x] += 1
            total += omega[x] * theta[x] * (alpha[x] + eta[x]) * (f(tuple(up)) - f_eta)
    return float(total)


def dirichlet_form(L: GeneratorMatrix, f, reversibility_tol: float = 1e-8) -> float:
    """Quadratic form <f, -L f> under the reference measure.

    Evaluated as the sum over transitions of mu(eta) r(eta, xi) (grad f)^2 / 2,
    plus the killing contribution when present; raises when the carrier fails
    the symmetry check, i.e. the generator is not reversible.
    """
    if L.reference is None:
        raise ValueError("Dirichlet form needs a reference measure")
    f = np.asarray(f, dtype=float)
    carrier = L.carrier().tocoo()
    scale = float(carrier.data.max(initial=0.0))
    asym = float(np.abs((carrier - carrier.T).data).max(initial=0.0))
    if scale > 0 and asym > reversibility_tol * scale:
        raise ValueError(f"generator is not reversible (residual {asym:.3e})")
    grads = f[carrier.col] - f[carrier.row]
    value = 0.5 * float(np.dot(carrier.data, grads**2))
    if L.kill is not None:
        value += float(np.dot(L.reference.weights * L.kill, f**2))
    return value


# -- labeled (lookdown) dynamics -------------------------------------------


@dataclass(frozen=True)
class LabeledSpace:
    """All k-tuples of vertices, indexed in lexicographic order."""

    graph: WeightedGraph
    k: int

    @cached_property
    def states(self) -> tuple[tuple[int, ...], ...]:
        return tuple(product(range(self.graph.n), repeat=self.k))

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {s: i for i, s in enumerate(self.states)}

    @property
    def size(self) -> int:
        return self.graph.n ** self.k


def build_lookdown(g: WeightedGraph, omega, k: int, cap: int = 200_000) -> GeneratorMatrix:
    """Label-ordered particle dynamics whose symmetrization is the killed chain.

    Particle i at site x jumps to a neighbor y at rate
    c_xy (alpha_y + 2 * #{j < i : x_j = y}); killing adds sum_i omega_{x_i}.
    """
    if g.n**k > cap:
        raise SpaceCapExceeded(f"labeled space has {g.n**k} states, above the cap {cap}")
    omega = np.broadcast_to(np.asarray(omega, dtype=float), (g.n,))
    if np.any(omega < 0):
        raise ValueError("negative killing rate")
    space = LabeledSpace(graph=g, k=k)
    alpha = g.alpha
    rows, cols, vals = [], [], []
    for i_state, state in enumerate(space.states):
        for i in range(k):
            x = state[i]
            below = state[:i]
            for y in g.neighbor_lists[x]:
                y = int(y)
                rate = g.conductances[x, y] * (alpha[y] + 2.0 * below.count(y))
                rows.append(i_state)
                cols.append(space.index[state[:i] + (y,) + state[i + 1:]])
                vals.append(rate)
    rates = sp.coo_matrix((vals, (rows, cols)), shape=(space.size, space.size)).tocsr()
    kill = np.array([sum(omega[x] for x in state) for state in space.states])
    return _finish(space, rates, kill=kill)


def symmetrize_labels(space: LabeledSpace, u: np.ndarray) -> np.ndarray:
    """Average a labeled function over all label permutations."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    count = 0
    for perm in permutations(range(space.k)):
        reordered = [space.index[tuple(s[p] for p in perm)] for s in space.states]
        out += u[reordered]
        count += 1
    return out / count


def label_pullback(space: LabeledSpace, config_space: ConfigSpace, f: np.ndarray) -> np.ndarray:
    """Pull a configuration function back through the label-forgetting map."""
    occ = np.zeros((space.size, config_space.n_sites), dtype=np.int64)
    for i_state, state in enumerate(space.states):
        for x in state:
            occ[i_state, x] += 1
    return np.asarray(f, dtype=float)[config_space.rank_rows(occ)]
