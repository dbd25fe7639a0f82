"""evlink: within-document event coreference at desk scale.

Pairs event mentions from precomputed embeddings, scores them (cosine
threshold, learned cosine transform, or a joint-feature pair regressor),
clusters by transitive closure, and evaluates with B3, MUC, CEAF-E, BLANC
and the CoNLL average.
"""

__version__ = "0.1.0"
