"""geovec: map-grounded prompts, pooled embeddings, and their evaluation."""

__version__ = "0.1.0"
