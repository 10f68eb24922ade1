"""Learned long-horizon task planning with action symbols.

Symbolic task simulators generate labeled demonstrations; an
encoder-decoder sequence model translates frame embeddings into action
symbols; a closed-loop executor dispatches the predicted symbols to motion
primitives and adapts to perturbations.
"""

__version__ = "0.1.0"
