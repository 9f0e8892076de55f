"""Exception types raised by the simulation library."""


class RepavgError(Exception):
    pass


class InvalidArgument(RepavgError, ValueError):
    pass


class InvalidDimension(InvalidArgument):
    pass


class InvalidPair(InvalidArgument):
    pass


class InitParseError(InvalidArgument):
    def __init__(self, path, line, msg):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {msg}")


class ResourceLimit(RepavgError):
    pass


class CouplingFailure(RepavgError):
    """Dominance of the particle weights over the chain was violated."""

    def __init__(self, time, site, w, x):
        self.time = time
        self.site = site
        self.w = w
        self.x = x
        super().__init__(
            f"dominance violated at t={time!r}, site {site}: w={w!r} > x'+1/n={x!r}"
        )
