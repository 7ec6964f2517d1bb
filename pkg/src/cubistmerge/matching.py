"""Path-graph token matching along rows and columns.

One row (or column) of tokens forms a path line: each token is adjacent
only to its immediate neighbors. Roles alternate along the line -- with
parity 0, offset 0 is a destination, offset 1 a source, and so on. Sources
nominate their most similar adjacent destination, and the top-k nominations
by similarity become merge edges. Alternation bounds every merge group at
one destination plus its two neighboring sources.

Tie-breaks are fixed everywhere for determinism: higher similarity first,
then lower source offset, then lower destination offset. Nomination ties
between the two neighbors go to the lower offset.

These per-line functions are the readable contract; the pipeline runs the
same logic through batched kernels (see backend module) that must agree
with them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleRateError, InvalidSpecError


@dataclass(frozen=True)
class Edge:
    """A directed merge edge: the token at `src` merges into `dst`."""

    src: int
    dst: int
    similarity: float


@dataclass(frozen=True)
class PathLine:
    """One row or column of token features with their positions on the line."""

    features: np.ndarray
    indices: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float32)
        if feats.ndim != 2 or feats.shape[0] < 2:
            raise InvalidSpecError(f"a path line needs (L>=2, d) features, got {feats.shape}")
        idx = self.indices
        idx = np.arange(feats.shape[0]) if idx is None else np.asarray(idx, dtype=np.int64)
        if idx.shape != (feats.shape[0],) or (np.diff(idx) <= 0).any():
            raise InvalidSpecError("line indices must be strictly increasing, one per token")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return self.features.shape[0]


def similarity(u, v) -> float:
    """Cosine similarity in float64; zero vectors compare as 0 to anything."""
    a = np.asarray(u, dtype=np.float64).ravel()
    b = np.asarray(v, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise InvalidSpecError(f"vector lengths differ: {a.shape[0]} vs {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a / na, b / nb))


def adjacent_sims(features) -> np.ndarray:
    """Cosine similarity of each adjacent pair along one line, (L-1,) float64."""
    feats = np.asarray(features, dtype=np.float32)[None]
    return adjacent_row_sims(feats)[0]


def adjacent_row_sims(rows) -> np.ndarray:
    """Adjacent-pair cosine similarities for a batch of lines.

    rows: (R, L, f) float32. Returns (R, L-1) float64. This is the single
    similarity implementation shared by all backends, so edge selection is
    bit-identical no matter which kernel path runs.
    """
    feats = np.asarray(rows, dtype=np.float32).astype(np.float64)
    norms = np.sqrt(np.einsum("rlf,rlf->rl", feats, feats))
    dots = np.einsum("rlf,rlf->rl", feats[:, :-1], feats[:, 1:])
    denom = norms[:, :-1] * norms[:, 1:]
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(denom > 0.0, dots / denom, 0.0)
    return sims


def assign_roles(line_length: int, parity: int = 0) -> np.ndarray:
    """Alternating roles along a line; True marks a source.

    parity 0 puts a destination at offset 0; parity 1 puts a source there.
    """
    if line_length < 2:
        raise InvalidSpecError(f"line length must be >= 2, got {line_length}")
    if parity not in (0, 1):
        raise InvalidSpecError(f"parity must be 0 or 1, got {parity}")
    offsets = np.arange(line_length)
    return (offsets + parity) % 2 == 1


def nominate(line: PathLine, roles: np.ndarray) -> list[Edge]:
    """Each source nominates its more similar adjacent neighbor.

    Returns one candidate edge per source, in source-offset order. Interior
    sources pick between their two neighbors (ties to the lower offset);
    boundary sources take their only neighbor.
    """
    roles = np.asarray(roles, dtype=bool)
    length = len(line)
    if roles.shape != (length,):
        raise InvalidSpecError("roles must align with the line")
    if length >= 2 and (roles[:-1] == roles[1:]).any():
        raise InvalidSpecError("roles must strictly alternate along the line")
    sims = adjacent_sims(line.features)
    candidates = []
    for src in np.flatnonzero(roles):
        left = sims[src - 1] if src > 0 else -np.inf
        right = sims[src] if src + 1 < length else -np.inf
        if left >= right:  # tie prefers the lower offset
            candidates.append(Edge(int(src), int(src - 1), float(left)))
        else:
            candidates.append(Edge(int(src), int(src + 1), float(right)))
    return candidates


def _ranked(edges) -> list[Edge]:
    return sorted(edges, key=lambda e: (-e.similarity, e.src, e.dst))


def select_edges_bipartite(candidates, k: int) -> list[Edge]:
    """Keep the k best nominations, ranked by similarity then offsets."""
    candidates = list(candidates)
    if k < 0 or k > len(candidates):
        raise InfeasibleRateError(f"cannot select {k} edges from {len(candidates)} nominations")
    return _ranked(candidates)[:k]


def select_edges_naive(line: PathLine, k: int) -> list[Edge]:
    """Top-k adjacent edges of the whole path graph, ignoring roles.

    Edge j joins offsets (j, j+1) and is recorded as src=j+1, dst=j, so a
    run of selected edges chains into one left-anchored group. Chains may
    grow beyond three members; the reduction still removes exactly k tokens.
    """
    length = len(line)
    if k < 0 or k > length - 1:
        raise InfeasibleRateError(f"cannot select {k} of the {length - 1} path edges")
    sims = adjacent_sims(line.features)
    edges = [Edge(j + 1, j, float(sims[j])) for j in range(length - 1)]
    return _ranked(edges)[:k]


def select_edges_global(features, k: int, parity: int = 0) -> list[Edge]:
    """Position-agnostic bipartite matching over a flattened region.

    Tokens at even flat offsets are destinations (parity 0) and odd offsets
    are sources; each source nominates its most similar destination anywhere
    in the region. This deliberately ignores spatial structure -- it exists
    as the unstructured baseline.
    """
    feats = np.asarray(features, dtype=np.float32)
    if feats.ndim != 2 or feats.shape[0] < 2:
        raise InvalidSpecError(f"region features must be (N>=2, f), got {feats.shape}")
    n = feats.shape[0]
    roles = assign_roles(n, parity)
    src_idx = np.flatnonzero(roles)
    dst_idx = np.flatnonzero(~roles)
    if k < 0 or k > src_idx.size:
        raise InfeasibleRateError(f"cannot select {k} edges from {src_idx.size} sources")
    unit = feats.astype(np.float64)
    norms = np.linalg.norm(unit, axis=1, keepdims=True)
    np.divide(unit, norms, out=unit, where=norms > 0.0)
    scores = unit[src_idx] @ unit[dst_idx].T
    best = np.argmax(scores, axis=1)  # first max -> lowest destination offset
    candidates = [
        Edge(int(s), int(dst_idx[b]), float(scores[i, b]))
        for i, (s, b) in enumerate(zip(src_idx, best))
    ]
    return _ranked(candidates)[:k]
