class SimulationError(RuntimeError):
    pass


class StiffnessError(SimulationError):
    """Adaptive step size collapsed below the resolvable limit."""


class InvariantError(SimulationError):
    """A propagated state stopped being a valid density matrix."""


class TruncatedTrajectoryError(SimulationError):
    """The time window ends before the emission has died out."""


class FitError(SimulationError):
    pass
