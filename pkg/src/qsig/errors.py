class InvariantViolation(RuntimeError):
    """A numerical invariant (norm, trace, positivity, ...) failed at runtime."""

    def __init__(self, name: str, detail: str = ""):
        self.name = name
        super().__init__(f"invariant {name!r} violated" + (f": {detail}" if detail else ""))
