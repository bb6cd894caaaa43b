"""Prime-gap statistics and verification of gap-bound claims."""

from .primes import (
    CapacityError,
    DomainError,
    PrimeIndexEntry,
    SieveConfig,
    is_prime_64,
    next_prime,
    nth_prime,
    prev_prime,
    prime_array,
    primes_up_to,
)
from .stats import GapSample, RunningAggregate, cramer_ratio, first_occurrence_gaps, fold_gap, max_gap_records

__version__ = "0.1.0"
