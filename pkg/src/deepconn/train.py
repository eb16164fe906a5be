"""Training loop, evaluation, checkpointing, and run reports.

Documents are embedded once per run (embeddings are frozen, so the
matrices never change) and shared read-only between training, validation,
and test passes.  The loop itself is sequential: gradient accumulation on
the shared parameters is stateful.
"""

import json
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (CheckpointError, ConfigError, NumericFault, ShapeError)
from .ingest import group_reviews
from .model import DeepConn, ModelConfig, mse
from .optim import make_optimizer
from .text import build_document, embed


@dataclass(frozen=True)
class RatedPair:
    user_id: str
    item_id: str
    rating: float


def pairs_from_records(records):
    return [RatedPair(r.user_id, r.item_id, r.rating) for r in records]


class DocumentStore:
    """Embedded user and item documents built from a fixed review corpus.

    Pass only training-portion records to keep test reviews out of every
    document (the default protocol); pass the full record list to study
    the leaky variant.
    """

    def __init__(self, records, table, doc_length):
        groups = group_reviews(records)
        self.doc_length = doc_length
        self.table = table
        self._user_embeddings = {}
        self._item_embeddings = {}
        for user_id, reviews in groups.by_user.items():
            doc = build_document([text for _, text in reviews], doc_length,
                                 table, owner=user_id)
            self._user_embeddings[user_id] = embed(doc, table)
        for item_id, reviews in groups.by_item.items():
            doc = build_document([text for _, text in reviews], doc_length,
                                 table, owner=item_id)
            self._item_embeddings[item_id] = embed(doc, table)
        ratings = [r.rating for r in records]
        self.global_mean = float(np.mean(ratings)) if ratings else 0.0

    def has_user(self, user_id):
        return user_id in self._user_embeddings

    def has_item(self, item_id):
        return item_id in self._item_embeddings

    def user_embedding(self, user_id):
        return self._user_embeddings[user_id]

    def item_embedding(self, item_id):
        return self._item_embeddings[item_id]


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    validation_loss: float | None
    seconds: float  # cumulative wall-clock since fit() started


@dataclass
class TrainReport:
    config: dict
    seed: int
    epochs: list = field(default_factory=list)
    test_mse: float | None = None
    best_validation_epoch: int | None = None
    optimizer_steps: int = 0
    cold_start_counts: dict | None = None
    # in-memory snapshot of the best-validation parameters; never serialized
    best_parameters: list | None = field(default=None, repr=False)

    def curves_csv(self):
        """Loss-curve table: epoch,train_loss,val_loss,seconds."""
        lines = ["epoch,train_loss,val_loss,seconds"]
        for e in self.epochs:
            val = repr(e.validation_loss) if e.validation_loss is not None else ""
            lines.append(f"{e.epoch},{e.train_loss!r},{val},{e.seconds:.3f}")
        return "\n".join(lines) + "\n"

    def to_json(self):
        payload = {
            "config": self.config,
            "seed": self.seed,
            "epochs": [{"epoch": e.epoch, "train_loss": e.train_loss,
                        "validation_loss": e.validation_loss,
                        "seconds": e.seconds} for e in self.epochs],
            "test_mse": self.test_mse,
            "best_validation_epoch": self.best_validation_epoch,
            "optimizer_steps": self.optimizer_steps,
            "cold_start_counts": self.cold_start_counts,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        payload = json.loads(text)
        report = cls(config=payload["config"], seed=payload["seed"],
                     test_mse=payload.get("test_mse"),
                     best_validation_epoch=payload.get("best_validation_epoch"),
                     optimizer_steps=payload.get("optimizer_steps", 0),
                     cold_start_counts=payload.get("cold_start_counts"))
        for e in payload["epochs"]:
            report.epochs.append(EpochStats(e["epoch"], e["train_loss"],
                                            e["validation_loss"], e["seconds"]))
        return report


def fit(model, store, train_pairs, validation_pairs=None, optimizer="adam",
        learning_rate=0.001, epochs=10, batch_size=32, seed=0,
        record_timing=True, stop_below_train_loss=None):
    """Mini-batch training; returns a TrainReport.

    Per epoch: shuffle under the seed, iterate batches, per-sample
    forward in train mode, MSE gradient, optimizer step per batch, then a
    full eval-mode validation pass.  Deterministic given (model, data,
    seed); wall-clock can be suppressed (record_timing=False) when
    byte-identical reports matter more than timing.
    """
    if not train_pairs:
        raise ConfigError("fit needs a non-empty training set")
    if epochs < 0 or batch_size < 1:
        raise ConfigError("epochs must be >= 0 and batch_size >= 1")
    shuffle_seq, dropout_seq = np.random.SeedSequence(seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    dropout_rng = np.random.default_rng(dropout_seq)

    opt = make_optimizer(optimizer, model.parameters(), learning_rate=learning_rate)
    report = TrainReport(config={
        "model": model.config.to_dict(),
        "optimizer": optimizer,
        "learning_rate": learning_rate,
        "epochs": epochs,
        "batch_size": batch_size,
        "seed": seed,
    }, seed=seed)

    user_docs = [store.user_embedding(p.user_id) for p in train_pairs]
    item_docs = [store.item_embedding(p.item_id) for p in train_pairs]
    targets = np.array([p.rating for p in train_pairs])
    n = len(train_pairs)

    best_val = np.inf
    best_snapshot = None
    started = time.monotonic()
    for epoch in range(1, epochs + 1):
        order = shuffle_rng.permutation(n)
        sq_error_sum = 0.0
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            preds = np.empty(len(batch))
            residuals = np.empty(len(batch))
            for j, idx in enumerate(batch):
                y = model.forward(user_docs[idx], item_docs[idx],
                                  train=True, rng=dropout_rng)
                if not np.isfinite(y):
                    raise NumericFault(
                        f"epoch {epoch}, batch at {start}: non-finite prediction")
                residuals[j] = y - targets[idx]
                model.backward(2.0 * residuals[j] / len(batch))
                preds[j] = y
            sq_error_sum += float(np.sum(residuals ** 2))
            try:
                opt.step()
            except NumericFault as exc:
                raise NumericFault(
                    f"epoch {epoch}, batch at {start}: {exc}") from exc
        train_loss = sq_error_sum / n

        val_loss = None
        if validation_pairs:
            val_loss, _ = evaluate(model, store, validation_pairs)
            if val_loss < best_val:
                best_val = val_loss
                best_snapshot = [p.value.copy() for p in model.parameters()]
                report.best_validation_epoch = epoch
        seconds = (time.monotonic() - started) if record_timing else 0.0
        report.epochs.append(EpochStats(epoch, train_loss, val_loss, seconds))
        if stop_below_train_loss is not None and train_loss < stop_below_train_loss:
            break

    report.optimizer_steps = opt.step_count
    report.best_parameters = best_snapshot
    return report


def restore_parameters(model, snapshot):
    """Copy a fit() best-parameter snapshot back into the model."""
    params = model.parameters()
    if snapshot is None or len(snapshot) != len(params):
        raise ConfigError("snapshot does not match the model's parameter list")
    for p, value in zip(params, snapshot):
        if p.value.shape != value.shape:
            raise ShapeError(f"snapshot shape mismatch for {p.name}")
        p.value[...] = value


def evaluate(model, store, pairs, clamp=False):
    """Eval-mode MSE over (user, item, rating) pairs.

    Users or items without documents fall back to the store's global mean
    rating.  Returns (mse, counters); counters tallies "predicted",
    "cold_start_user", "cold_start_item".  Side-effect free.
    """
    if not pairs:
        raise ConfigError("cannot evaluate on an empty pair list")
    counters = {"predicted": 0, "cold_start_user": 0, "cold_start_item": 0}
    preds = np.empty(len(pairs))
    targets = np.empty(len(pairs))
    for j, pair in enumerate(pairs):
        targets[j] = pair.rating
        if not store.has_user(pair.user_id):
            counters["cold_start_user"] += 1
            preds[j] = store.global_mean
            continue
        if not store.has_item(pair.item_id):
            counters["cold_start_item"] += 1
            preds[j] = store.global_mean
            continue
        counters["predicted"] += 1
        preds[j] = model.predict(store.user_embedding(pair.user_id),
                                 store.item_embedding(pair.item_id))
    if clamp:
        preds = np.clip(preds, 1.0, 5.0)
    return mse(preds, targets), counters


def mean_predictor_mse(pairs, mean):
    """MSE of the constant predictor at `mean` — the beats-the-mean reference."""
    targets = np.array([p.rating for p in pairs])
    return mse(np.full(len(pairs), float(mean)), targets)


# Checkpoint format: 8-byte magic, little-endian uint64 manifest length,
# JSON manifest (names, shapes, precision, model config), then each
# parameter's raw float64 little-endian bytes in manifest order.

CHECKPOINT_MAGIC = b"DCNCKPT1"


def save_checkpoint(model, path):
    params = model.parameters()
    manifest = {
        "format": "deepconn-checkpoint",
        "version": 1,
        "precision": "float64",
        "config": model.config.to_dict(),
        "params": [{"name": p.name, "shape": list(p.shape)} for p in params],
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for p in params:
            fh.write(np.ascontiguousarray(p.value, dtype="<f8").tobytes())


def load_checkpoint(path, model=None):
    """Rebuild (or fill) a model from a checkpoint; bit-exact round trip.

    With `model` given, its parameter names and shapes must match the
    manifest — a mismatch is a ShapeError naming the parameter.
    """
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        raw_len = fh.read(8)
        if len(raw_len) != 8:
            raise CheckpointError(f"{path}: truncated manifest length")
        (manifest_len,) = struct.unpack("<Q", raw_len)
        blob = fh.read(manifest_len)
        if len(blob) != manifest_len:
            raise CheckpointError(f"{path}: truncated manifest")
        try:
            manifest = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"{path}: unreadable manifest ({exc})") from exc
        if manifest.get("format") != "deepconn-checkpoint":
            raise CheckpointError(f"{path}: unknown manifest format")
        if model is None:
            model = DeepConn(ModelConfig.from_dict(manifest["config"]))
        params = model.parameters()
        entries = manifest["params"]
        if len(entries) != len(params):
            raise ShapeError(
                f"checkpoint has {len(entries)} parameters, model has {len(params)}")
        for p, entry in zip(params, entries):
            if p.name != entry["name"]:
                raise ShapeError(
                    f"parameter order mismatch: model {p.name!r} vs "
                    f"checkpoint {entry['name']!r}")
            shape = tuple(entry["shape"])
            if p.value.shape != shape:
                raise ShapeError(
                    f"parameter {p.name!r}: checkpoint shape {shape}, "
                    f"model shape {p.value.shape}")
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise CheckpointError(f"{path}: truncated data for {p.name!r}")
            p.value[...] = np.frombuffer(raw, dtype="<f8").reshape(shape)
        if fh.read(1):
            raise CheckpointError(f"{path}: trailing bytes after parameter data")
    return model
