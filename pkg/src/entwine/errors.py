"""Exception types shared across modules."""


class InternalCheckError(RuntimeError):
    """A self-consistency check inside the package failed.

    Raised when constructed objects violate invariants they are supposed to
    guarantee (pair closure, oracle/evolver agreement under --compare, ...).
    The CLI maps this to exit code 4.
    """
