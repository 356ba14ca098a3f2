"""Numerics for quasi-periodic linear cocycles over torus translations.

Lyapunov spectra, dominated-splitting tests, degrees of maps T^2 -> S^2 and
the homological splitting obstruction, plus a small gallery of examples.
"""

__version__ = "0.1.0"

from .cocycle import FourierCocycle, iterate  # noqa: E402
from .domination import complexified_sweep, test_domination  # noqa: E402
from .gallery import GALLERY, example  # noqa: E402
from .lyapunov import lyapunov_spectrum, oseledets_dims  # noqa: E402
from .torus import TorusPoint, Translation  # noqa: E402

__all__ = [
    "__version__",
    "FourierCocycle",
    "GALLERY",
    "TorusPoint",
    "Translation",
    "complexified_sweep",
    "example",
    "iterate",
    "lyapunov_spectrum",
    "oseledets_dims",
    "test_domination",
]
