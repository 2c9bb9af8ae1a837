def uniform_fanout(target):
    """Spreads amplitude evenly across the computational basis of the target."""
    return target


def extra_unexported(target):
    """Documented but absent from the public export list."""
    return target
