#!/usr/bin/env python3
"""From raw review text to the fixed-length matrices the towers consume.

Shows the separator-based tokenizer, the frozen embedding table with its
reserved pad row, and how several reviews concatenate into one padded or
truncated document per user.
"""

from pathlib import Path

import numpy as np

from deepconn import build_document, embed, load_embeddings, tokenize

EMB = Path(__file__).resolve().parent.parent / "data" / "toy_embeddings_50d.txt"


def main():
    text = "Loved it!! Best action-thriller since se7en... 10/10, don't miss"
    print(f"text:   {text}")
    print(f"tokens: {tokenize(text)}")

    table = load_embeddings(EMB, 50)
    print(f"\nembedding table: {len(table)} tokens, dim {table.dim}")
    print(f"pad row (id 0) is all zeros: {not table.matrix[0].any()}")
    print(f"vector('great')[:5] = {np.round(table.vector('great')[:5], 3)}")
    print(f"'se7en' is out of vocabulary -> id {table.id_for('se7en')} "
          f"(zero policy maps it to the pad row)")

    reviews = ["Great movie, loved the suspense",
               "boring plot but wonderful acting"]
    doc = build_document(reviews, 12, table, owner="demo-user")
    print(f"\ndocument of {len(reviews)} reviews at T=12:")
    print(f"  ids: {doc.ids.tolist()}  (real tokens: {doc.n_real_tokens})")
    matrix = embed(doc, table)
    print(f"  embedded matrix shape: {matrix.shape}")
    print(f"  rows beyond the real tokens are zero: "
          f"{not matrix[doc.n_real_tokens:].any()}")

    doc_short = build_document(reviews, 6, table)
    print(f"\nsame reviews truncated to T=6 keep the head: "
          f"{doc_short.ids.tolist()}")


if __name__ == "__main__":
    main()
