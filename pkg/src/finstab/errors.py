"""Exception hierarchy shared by the generators, the cascade engine and the sweep."""


class FinstabError(Exception):
    """Base class for all errors raised by finstab."""


class ParameterError(FinstabError, ValueError):
    """A parameter is outside its admissible range."""


class StructureError(FinstabError, ValueError):
    """The graph cannot carry the requested asset structure (e.g. no edges for I > 0)."""


class ValidationError(FinstabError, ValueError):
    """A balance sheet has non-positive effective external asset.

    Attributes
    ----------
    node : int
        First offending node id.
    value : float
        Its effective external asset ``e_v``.
    """

    def __init__(self, node, value):
        self.node = int(node)
        self.value = float(value)
        super().__init__(
            f"node {self.node}: effective external asset e_v = {self.value!r} is not positive"
        )


class PairingError(FinstabError, ValueError):
    """Two result sets could not be matched cell by cell."""
