"""Global tally of structural-invariant checks run by the resolver.

Every resolved outcome is checked for survivor velocity-monotonicity and the
two conservation identities; violations raise and are also counted here so a
test suite can assert that a whole campaign ran clean.
"""

import threading
from dataclasses import dataclass


class InvariantViolation(AssertionError):
    pass


@dataclass
class InvariantCounters:
    outcomes: int = 0
    violations: int = 0


counters = InvariantCounters()
_lock = threading.Lock()


def record(ok: bool):
    with _lock:
        counters.outcomes += 1
        if not ok:
            counters.violations += 1


def reset():
    with _lock:
        counters.outcomes = 0
        counters.violations = 0
