"""Wave-packet scattering on planar graphs and the collision gates it generates.

The package is organised around one pipeline:

* graphs            -- scattering graphs, rails, the bundled momentum switch
* hamiltonians      -- one- and two-particle sparse Hamiltonians (Hubbard, t-J, XXZ)
* propagate         -- certified Chebyshev propagator exp(-iHT)|psi>
* scattering1p      -- single-particle S-matrices and switch certification
* phases            -- closed-form two-particle reflection phases and spin gates
* twoparticle       -- wave-packet collisions, phase extraction, scaling studies
* synth             -- continued fractions and repeated-collision gate synthesis
* logic             -- three-spin logical qubits, exchange schedules, measurement
* cli               -- deterministic command line front end
"""

__version__ = "0.1.0"

from .errors import (
    ScattergateError,
    ConfigError,
    GraphFormatError,
    ScheduleFormatError,
    NumericalFailure,
    UnreliablePhase,
    SynthesisUnreachable,
    SynthesisBudgetExceeded,
)

__all__ = [
    "__version__",
    "ScattergateError",
    "ConfigError",
    "GraphFormatError",
    "ScheduleFormatError",
    "NumericalFailure",
    "UnreliablePhase",
    "SynthesisUnreachable",
    "SynthesisBudgetExceeded",
]
