class XGate:
    """Basic bit-flip gate; lives in an excluded subdirectory."""
