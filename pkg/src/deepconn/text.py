"""Tokenization, frozen embedding tables, and fixed-length document encoding.

A "document" is the concatenation of all review texts belonging to one
user (or one item), encoded as exactly T token ids: truncated at T or
post-padded with the reserved pad id 0, whose vector is all zeros.
"""

import re
import struct
import warnings
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataFormatError, ShapeError

_TOKEN_RE = re.compile(r"[a-z0-9]+")

PAD_ID = 0
OOV_POLICIES = ("zero", "hash_bucket")


def tokenize(text):
    """Lowercase tokens; anything outside [a-z0-9] separates.

    Duplicates are kept and order is preserved — the encoders consume
    sequences, not vocabularies.
    """
    return _TOKEN_RE.findall(text.lower())


class EmbeddingTable:
    """Immutable token -> vector lookup.

    Row 0 is the reserved pad entry (all zeros).  Unknown tokens map to
    the pad row under the "zero" policy, or to one of `n_buckets` seeded
    random rows under "hash_bucket".  Vectors are frozen: the backing
    matrix is read-only for the lifetime of the table.
    """

    def __init__(self, dim, vectors, oov_policy="zero", n_buckets=16, seed=0):
        if dim < 1:
            raise ConfigError(f"embedding dim must be >= 1, got {dim}")
        if oov_policy not in OOV_POLICIES:
            raise ConfigError(
                f"unknown oov policy {oov_policy!r}, expected one of {OOV_POLICIES}")
        self.dim = dim
        self.oov_policy = oov_policy
        items = list(vectors.items()) if isinstance(vectors, dict) else list(vectors)
        self._ids = {}
        rows = [np.zeros(dim)]
        for token, vec in items:
            vec = np.asarray(vec, dtype=np.float64)
            if vec.shape != (dim,):
                raise ConfigError(
                    f"vector for token {token!r} has shape {vec.shape}, expected ({dim},)")
            if not np.isfinite(vec).all():
                raise ConfigError(f"vector for token {token!r} has non-finite entries")
            if token in self._ids:
                rows[self._ids[token]] = vec  # last occurrence wins
            else:
                self._ids[token] = len(rows)
                rows.append(vec)
        self.n_tokens = len(self._ids)
        self._first_bucket_id = len(rows)
        if oov_policy == "hash_bucket":
            if n_buckets < 1:
                raise ConfigError(f"hash_bucket policy needs n_buckets >= 1, got {n_buckets}")
            self.n_buckets = n_buckets
            bucket_rng = np.random.default_rng(seed)
            rows.extend(0.1 * bucket_rng.standard_normal((n_buckets, dim)))
        else:
            self.n_buckets = 0
        self.matrix = np.vstack(rows) if rows else np.zeros((1, dim))
        self.matrix.setflags(write=False)

    def __len__(self):
        return self.n_tokens

    def __contains__(self, token):
        return token in self._ids

    def id_for(self, token):
        """Token id; pad or a hash bucket for out-of-vocabulary tokens."""
        known = self._ids.get(token)
        if known is not None:
            return known
        if self.oov_policy == "hash_bucket":
            bucket = zlib.crc32(token.encode("utf-8")) % self.n_buckets
            return self._first_bucket_id + bucket
        return PAD_ID

    def vector(self, token):
        return self.matrix[self.id_for(token)]


def load_embeddings(path, dim, oov_policy="zero", n_buckets=16):
    """Read a text embedding file: one `token v1 ... v<dim>` line per entry.

    Wrong arity or a non-finite float is a format error naming the line;
    a duplicate token warns and keeps the last occurrence.
    """
    entries = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if parts == [""]:
                continue
            if len(parts) != dim + 1:
                raise DataFormatError(
                    f"{path}: line {line_number}: expected 1 token + {dim} floats, "
                    f"got {len(parts)} fields")
            token = parts[0]
            try:
                vec = np.array([float(v) for v in parts[1:]])
            except ValueError as exc:
                raise DataFormatError(
                    f"{path}: line {line_number}: bad float ({exc})") from exc
            if not np.isfinite(vec).all():
                raise DataFormatError(
                    f"{path}: line {line_number}: non-finite embedding value")
            if token in seen:
                warnings.warn(
                    f"{path}: line {line_number}: duplicate token {token!r}, "
                    "last occurrence wins")
            seen.add(token)
            entries.append((token, vec))
    return EmbeddingTable(dim, entries, oov_policy=oov_policy, n_buckets=n_buckets)


@dataclass(frozen=True)
class EncodedDocument:
    ids: np.ndarray  # int32, length exactly T
    n_real_tokens: int
    owner: str = ""


def build_document(texts, length, table, owner=""):
    """Concatenate the texts' tokens in list order, map to ids, pad/truncate.

    The first `length` tokens are kept; shorter streams are post-padded
    with the pad id.
    """
    if length < 1:
        raise ConfigError(f"document length must be >= 1, got {length}")
    tokens = []
    for text in texts:
        tokens.extend(tokenize(text))
    kept = tokens[:length]
    ids = np.full(length, PAD_ID, dtype=np.int32)
    for i, token in enumerate(kept):
        ids[i] = table.id_for(token)
    ids.setflags(write=False)
    return EncodedDocument(ids=ids, n_real_tokens=len(kept), owner=owner)


def embed(doc, table):
    """(T, dim) matrix whose row t is the vector of ids[t]; pad rows are zero."""
    ids = doc.ids
    if ids.size and (ids.min() < 0 or ids.max() >= table.matrix.shape[0]):
        raise ShapeError(
            f"document {doc.owner!r} holds ids outside the table "
            f"(max valid {table.matrix.shape[0] - 1})")
    return table.matrix[ids]


# Optional on-disk cache: uint32 header (T, count) then count rows of T
# little-endian int32 ids.

def save_document_cache(docs, path):
    docs = list(docs)
    if docs:
        length = len(docs[0].ids)
        for d in docs:
            if len(d.ids) != length:
                raise ConfigError("all cached documents must share one length")
    else:
        length = 0
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", length, len(docs)))
        for d in docs:
            fh.write(np.asarray(d.ids, dtype="<i4").tobytes())


def load_document_cache(path):
    """Returns (T, list of id arrays); n_real_tokens is taken as the
    position after the last non-pad id (OOV-as-pad inside the stream is
    not distinguishable in this format)."""
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise DataFormatError(f"{path}: truncated cache header")
        length, count = struct.unpack("<II", header)
        body = fh.read()
    expected = count * length * 4
    if len(body) != expected:
        raise DataFormatError(
            f"{path}: expected {expected} body bytes, got {len(body)}")
    docs = []
    for i in range(count):
        ids = np.frombuffer(body, dtype="<i4", count=length, offset=i * length * 4)
        ids = ids.astype(np.int32)
        nonpad = np.nonzero(ids != PAD_ID)[0]
        n_real = int(nonpad[-1]) + 1 if nonpad.size else 0
        ids.setflags(write=False)
        docs.append(EncodedDocument(ids=ids, n_real_tokens=n_real))
    return length, docs
