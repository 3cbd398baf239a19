"""CSV number formatting shared by all writers."""

import numpy as np

SIG_DIGITS = 9


def fmt(x) -> str:
    return format(float(x), f".{SIG_DIGITS}g")


def quantize(a) -> np.ndarray:
    """Round values exactly as they are written to CSV."""
    return np.vectorize(lambda v: float(fmt(v)), otypes=[np.float64])(np.asarray(a))
