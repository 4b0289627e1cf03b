"""Exact counting tools for systems of integral forms.

The package computes the multilinear forms attached to a form, the
``sigma*`` invariant (witness lower bounds and ``F_p`` evidence), the
auxiliary count ``N^aux(B)``, exact integer zero counts in dilated boxes and
the singular series and integral of the predicted main term.
"""

from ._guards import GuardExceeded
from .forms import Box, DerivativeTensor, Form, FormSystem, derivative_tensor, dumps_system, loads_system

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "GuardExceeded",
    "Box",
    "DerivativeTensor",
    "Form",
    "FormSystem",
    "derivative_tensor",
    "dumps_system",
    "loads_system",
]
