"""Bundled desk specs for --sample runs and tests."""

from typing import Any, Dict, Optional, Tuple

from data.errors import InvalidArgumentError
from data.functions import SystemSpec
from data.spec_loader import load_spec_text

CANONICAL = """
[domain]
kind = "interval"
lengths = [1.0]
counts = [200]

[species.1]
h = { family = "affine", params = [12.0, 1.0] }
g = { family = "linear", coeffs = [0.05] }

[species.2]
h = { family = "affine", params = [12.0, 1.0] }
g = { family = "linear", coeffs = [0.05] }
"""

SYMMETRIC = """
[domain]
kind = "interval"
lengths = [1.0]
counts = [200]

[species.1]
h = { family = "affine", params = [14.0, 1.0] }
g = { family = "linear", coeffs = [0.2] }

[species.2]
h = { family = "affine", params = [14.0, 1.0] }
g = { family = "linear", coeffs = [0.2] }
"""

DECOUPLED = """
[domain]
kind = "interval"
lengths = [1.0]
counts = [200]

[species.1]
h = { family = "affine", params = [12.0, 1.0] }
g = { family = "linear", coeffs = [0.0], absent = [true] }

[species.2]
h = { family = "affine", params = [15.0, 1.0] }
g = { family = "linear", coeffs = [0.0], absent = [true] }
"""

THREE_SPECIES = """
[domain]
kind = "interval"
lengths = [1.0]
counts = [100]

[species.1]
h = { family = "affine", params = [12.0, 1.0] }
g = { family = "linear", coeffs = [0.05, 0.04] }

[species.2]
h = { family = "saturating", params = [13.0, 26.0, 4.0] }
g = { family = "saturating_linear", coeffs = [0.05, 0.06], saturation = [0.1, 0.2] }

[species.3]
h = { family = "affine", params = [14.0, 1.5] }
g = { family = "linear", coeffs = [0.03, 0.05] }
"""

# h_1(0) sits below the competition eigenvalue set by species 2
EXTINCTION = """
[domain]
kind = "interval"
lengths = [1.0]
counts = [200]

[species.1]
h = { family = "affine", params = [10.5, 1.0] }
g = { family = "linear", coeffs = [1.0] }

[species.2]
h = { family = "affine", params = [15.0, 1.0] }
g = { family = "linear", coeffs = [0.1] }
"""

SATURATING = """
[domain]
kind = "interval"
lengths = [1.0]
counts = [200]

[species.1]
h = { family = "saturating", params = [12.0, 24.0, 4.0] }
g = { family = "linear", coeffs = [0.05] }

[species.2]
h = { family = "saturating", params = [12.0, 24.0, 4.0] }
g = { family = "linear", coeffs = [0.05] }
"""

TABULATED = """
[domain]
kind = "interval"
lengths = [1.0]
counts = [200]

[species.1]
h = { family = "tabulated", knots = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0], values = [12.0, 6.75, 1.0, -5.25, -12.0, -19.25, -27.0] }
g = { family = "linear", coeffs = [0.05] }

[species.2]
h = { family = "affine", params = [12.0, 1.0] }
g = { family = "linear", coeffs = [0.05] }
"""

RECTANGLE = """
[domain]
kind = "rectangle"
lengths = [1.0, 1.0]
counts = [30, 30]

[species.1]
h = { family = "affine", params = [25.0, 1.0] }
g = { family = "linear", coeffs = [0.05] }

[species.2]
h = { family = "affine", params = [25.0, 1.0] }
g = { family = "linear", coeffs = [0.05] }
"""

SAMPLES = {
    "canonical": CANONICAL,
    "symmetric": SYMMETRIC,
    "decoupled": DECOUPLED,
    "three_species": THREE_SPECIES,
    "extinction": EXTINCTION,
    "saturating": SATURATING,
    "tabulated": TABULATED,
    "rectangle": RECTANGLE,
}


def create_sample_spec(name: str = "canonical", grid_n: Optional[int] = None) -> Tuple[SystemSpec, Dict[str, Any]]:
    """Build one of the bundled specs, optionally at another resolution."""
    if name not in SAMPLES:
        raise InvalidArgumentError(f"unknown sample {name!r}; choose from {', '.join(SAMPLES)}")
    return load_spec_text(SAMPLES[name], grid_n)
