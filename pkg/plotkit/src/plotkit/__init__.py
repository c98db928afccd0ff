"""Figure scripts over the stabilization pipeline's CSV outputs.

One script per figure kind (rewards, sweep, field, outputs, angles), each
a pure view over the documented CSV interfaces: the scripts never
recompute metrics, never modify their inputs, and render deterministically
— identical inputs produce byte-identical SVG files.
"""

__all__ = ["__version__"]
__version__ = "0.1.0"
