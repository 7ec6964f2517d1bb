"""Merged-token representations.

A merge group is an (n, d) array of member tokens, ordered destination
first and then sources left to right in spatial order. Every function here
treats that member order as the tie-break order: when two members tie on
the deciding quantity, the earlier member wins. Arithmetic accumulates in
float64, left to right over members, so results are reproducible across
backends that merge the same groups.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidSpecError


def _as_members(group) -> np.ndarray:
    try:
        arr = np.asarray(group, dtype=np.float32)
    except ValueError as exc:
        raise InvalidSpecError(f"merge group members must share one dimensionality: {exc}")
    if arr.ndim != 2:
        raise InvalidSpecError(f"merge group must be (n, d), got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise InvalidSpecError("merge group must have at least one member")
    return arr


def merge_max_per_dim(group) -> np.ndarray:
    """Per channel, keep the member entry with the largest absolute value.

    Sign and magnitude of the winning entry are preserved. Ties go to the
    earliest member.
    """
    members = _as_members(group)
    winners = np.argmax(np.abs(members), axis=0)  # first occurrence wins ties
    return members[winners, np.arange(members.shape[1])]


def merge_weighted_average(group, sizes) -> tuple[np.ndarray, int]:
    """Size-weighted mean of the members; returns (vector, combined size)."""
    members = _as_members(group)
    counts = np.asarray(sizes, dtype=np.int64)
    if counts.shape != (members.shape[0],):
        raise InvalidSpecError(f"sizes shape {counts.shape} does not match {members.shape[0]} members")
    if (counts < 1).any():
        raise InvalidSpecError("token sizes must be >= 1")
    acc = np.zeros(members.shape[1], dtype=np.float64)
    for member, count in zip(members, counts):
        acc += float(count) * member.astype(np.float64)
    total = int(counts.sum())
    return (acc / total).astype(np.float32), total


def merge_max_vector(group) -> np.ndarray:
    """Keep the whole member with the largest L1 norm; ties to the earliest."""
    members = _as_members(group)
    winner = int(np.argmax(token_l1_norms(members)))
    return members[winner].copy()


def token_l1_norms(tokens) -> np.ndarray:
    """L1 norms over the last axis, in float64.

    This is the single source of the norms used for max-vector decisions;
    both compute backends consume these values rather than re-deriving them.
    """
    arr = np.asarray(tokens, dtype=np.float32)
    return np.abs(arr).astype(np.float64).sum(axis=-1)
