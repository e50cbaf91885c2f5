import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def three_se(value, expected, se):
    """|value - expected| within three standard errors."""
    return abs(value - expected) <= 3.0 * se
