#!/usr/bin/env python3
"""Walk through the ingest pipeline on the bundled sample corpus.

Parses the JSON-lines review dump, groups reviews by user and by item,
prints dataset statistics, and contrasts the two split protocols:
shuffling individual reviews vs holding out whole users.
"""

from pathlib import Path

from deepconn import (dataset_stats, group_reviews, parse_reviews_file,
                      split_dataset)

DATA = Path(__file__).resolve().parent.parent / "data" / "sample_reviews.jsonl"


def main():
    result = parse_reviews_file(DATA)
    print(f"parsed {len(result.records)} reviews, {len(result.skips)} skipped")
    first = result.records[0]
    print(f"first record: user={first.user_id} item={first.item_id} "
          f"rating={first.rating}")
    print(f"  text: {first.text[:70]}...")

    groups = group_reviews(result.records)
    busiest_user = max(groups.by_user, key=lambda u: len(groups.by_user[u]))
    busiest_item = max(groups.by_item, key=lambda m: len(groups.by_item[m]))
    print(f"\n{len(groups.by_user)} users; busiest {busiest_user} wrote "
          f"{len(groups.by_user[busiest_user])} reviews")
    print(f"{len(groups.by_item)} items; busiest {busiest_item} has "
          f"{len(groups.by_item[busiest_item])} reviews")

    print("\nby_review split (shuffled reviews, 81/9/10):")
    split = split_dataset(result.records, 0.81, 0.09, seed=7)
    stats = dataset_stats(result.records, split)
    print(f"  train={len(split.train)} val={len(split.validation)} "
          f"test={len(split.test)}")
    print(f"  train fraction {stats.train_fraction:.2f}, "
          f"test fraction {stats.test_fraction:.2f}")

    print("\nby_user_holdout split (whole users go to test):")
    holdout = split_dataset(result.records, 0.81, 0.09, seed=7,
                            mode="by_user_holdout")
    test_users = {r.user_id for r in holdout.test}
    seen_users = {r.user_id for r in holdout.train + holdout.validation}
    print(f"  {len(holdout.test)} test reviews from {len(test_users)} "
          f"held-out users; overlap with training users: "
          f"{len(test_users & seen_users)}")


if __name__ == "__main__":
    main()
