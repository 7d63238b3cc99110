"""Scene-graph-conditioned autoregressive image generation, desk scale.

Pipeline: scene graphs compile into salience-ordered captions, a frozen
tokenizer/embedder encodes them, a small causal transformer models
multi-scale VQ token grids, and an exact synthetic-domain detector scores
relation and object-count fidelity of the generated images.
"""

__version__ = "0.1.0"
