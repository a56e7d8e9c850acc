class RendezvousError(Exception):
    """Base class for errors raised by this package."""


class GraphError(RendezvousError, ValueError):
    """Malformed graph input: self-loops, duplicate edges, asymmetric ports, bad IDs."""


class InstanceError(RendezvousError, ValueError):
    """Generator parameters outside the family's valid range."""


class CapabilityError(RendezvousError):
    """A program needs a capability the neighborhood model does not provide."""


class ExecutionError(RendezvousError):
    """An agent produced an illegal action during an execution."""

    def __init__(self, message, agent=None, round=None):
        super().__init__(message)
        self.agent = agent
        self.round = round


class NondeterministicProgramError(RendezvousError):
    """Raised when a program handed to the adversary depends on its random input."""
