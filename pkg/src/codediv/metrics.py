"""Finite-budget executable metrics and embedding-space diversity.

pass@k is estimated from n >= k samples with m correct via the unbiased
estimator 1 - C(n-m, k)/C(n, k), evaluated in the stable product form
1 - prod_{i=n-m+1..n} (1 - k/i) so n in the hundreds never touches large
binomials. The Vendi score is the exponential of the von Neumann entropy
of the cosine-kernel spectrum over sample embeddings: 1 for n identical
vectors, n for n orthonormal ones.
"""

import json
from dataclasses import dataclass

import numpy as np

from .ingest import Corpus, SampleGroup
from .similarity import SimMatrix

EIGENVALUE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class PassKEstimate:
    n: int
    m: int
    k: int
    value: float


def pass_at_k(n: int, m: int, k: int) -> PassKEstimate:
    """Unbiased pass@k estimate from n samples with m correct."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the group size n={n}")
    if not 0 <= m <= n:
        raise ValueError(f"m={m} must be within [0, n={n}]")
    if n - m < k:
        value = 1.0
    else:
        value = float(1.0 - np.prod(1.0 - k / np.arange(n - m + 1, n + 1)))
    return PassKEstimate(n=n, m=m, k=k, value=value)


def dataset_pass_at_k(corpus: Corpus, k: int) -> float:
    """Unweighted mean of per-prompt pass@k estimates."""
    values = []
    for group in corpus:
        if group.n < k:
            raise ValueError(
                f"pass@{k} undefined: prompt {group.prompt_id!r} has only n={group.n} samples"
            )
        values.append(pass_at_k(group.n, group.m, k).value)
    if not values:
        raise ValueError("empty corpus")
    return float(np.mean(values))


@dataclass
class EmbeddingSet:
    """One embedding vector per sample, fixed dimension, finite values."""

    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ValueError("embeddings must be a 2-D array (n, d)")
        if not np.isfinite(self.vectors).all():
            raise ValueError("embeddings contain NaN or Inf")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]


def vendi_score(embeddings) -> float:
    """Effective number of distinct samples in embedding space.

    exp of the Shannon entropy of the eigenvalues of K/n, K the cosine
    similarity kernel of L2-normalized vectors. Tiny or negative
    eigenvalues (floating-point residue) are clamped to zero.
    """
    vectors = embeddings.vectors if isinstance(embeddings, EmbeddingSet) else None
    if vectors is None:
        vectors = EmbeddingSet(np.asarray(embeddings, dtype=np.float64)).vectors
    n = vectors.shape[0]
    if n < 1:
        raise ValueError("vendi score needs at least one embedding")
    norms = np.linalg.norm(vectors, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"zero-norm embedding for sample {int(zero[0])}")
    unit = vectors / norms[:, None]
    kernel = unit @ unit.T
    eigvals = np.linalg.eigvalsh(kernel / n)
    eigvals = np.where(eigvals < EIGENVALUE_TOLERANCE, 0.0, eigvals)
    positive = eigvals[eigvals > 0.0]
    entropy = float(-(positive * np.log(positive)).sum())
    return float(np.exp(entropy))


def correct_only_view(group: SampleGroup, matrix: SimMatrix):
    """Restrict a group and its similarity matrix to correct samples.

    Order is preserved; the view may be empty, in which case downstream
    diversity diagnostics are reported as absent by callers.
    """
    idx = [i for i, s in enumerate(group.samples) if s.correct]
    sub_group = SampleGroup(prompt_id=group.prompt_id, samples=[group.samples[i] for i in idx])
    sub_scores = matrix.scores[np.ix_(idx, idx)]
    return sub_group, SimMatrix(sub_scores)


def load_embeddings(lines):
    """Parse line-delimited embedding records {prompt_id, sample_id, vector}.

    Returns {prompt_id: {sample_id: vector}}. The dimension must be uniform
    across the whole stream.
    """
    table: dict = {}
    dim = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as err:
            raise ValueError(f"embeddings line {lineno}: invalid JSON: {err}") from err
        try:
            prompt_id = record["prompt_id"]
            sample_id = record["sample_id"]
            vector = np.asarray(record["vector"], dtype=np.float64)
        except (KeyError, TypeError) as err:
            raise ValueError(f"embeddings line {lineno}: missing field: {err}") from err
        if vector.ndim != 1:
            raise ValueError(f"embeddings line {lineno}: vector must be flat")
        if not np.isfinite(vector).all():
            raise ValueError(f"embeddings line {lineno}: vector contains NaN or Inf")
        if dim is None:
            dim = vector.size
        elif vector.size != dim:
            raise ValueError(
                f"embeddings line {lineno}: dimension {vector.size} != corpus dimension {dim}"
            )
        table.setdefault(prompt_id, {})[sample_id] = vector
    return table


def embeddings_for_group(table, group: SampleGroup) -> EmbeddingSet:
    """Embeddings aligned to a group's sample order."""
    by_sample = table.get(group.prompt_id, {})
    rows = []
    for s in group.samples:
        if s.sample_id not in by_sample:
            raise ValueError(
                f"no embedding for prompt {group.prompt_id!r} sample {s.sample_id}"
            )
        rows.append(by_sample[s.sample_id])
    return EmbeddingSet(np.stack(rows) if rows else np.zeros((0, 1)))
