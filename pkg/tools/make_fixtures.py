#!/usr/bin/env python3
"""Regenerate the bundled offline fixtures under data/.

Both files are deterministic (fixed seeds), so running this script on a
clean checkout reproduces the committed fixtures byte for byte:

    data/sample_reviews.jsonl     1,000 synthetic reviews, 50 users x 40 items
    data/toy_embeddings_50d.txt   50 tokens x 50 dims in the text format
"""

from pathlib import Path

from deepconn.ingest import serialize_reviews
from deepconn.synthetic import embedding_file_text, make_sample_corpus


def main():
    data_dir = Path(__file__).resolve().parent.parent / "data"
    data_dir.mkdir(exist_ok=True)

    records = make_sample_corpus(n_reviews=1000, n_users=50, n_items=40, seed=13)
    (data_dir / "sample_reviews.jsonl").write_text(
        serialize_reviews(records), encoding="utf-8")

    (data_dir / "toy_embeddings_50d.txt").write_text(
        embedding_file_text(dim=50, seed=7), encoding="utf-8")

    users = {r.user_id for r in records}
    items = {r.item_id for r in records}
    print(f"wrote {len(records)} reviews ({len(users)} users, {len(items)} items)")
    print(f"wrote embeddings for 50 tokens")


if __name__ == "__main__":
    main()
