"""Corrugation-number schedules, their gcd bookkeeping and the tau budgets."""
from dataclasses import dataclass, field
from math import e, exp, gcd
from functools import reduce

from .errors import ConfigurationError

DIRECTIONS = (1, 2, 3)


def _gcd_all(values):
    values = [int(v) for v in values]
    return reduce(gcd, values) if values else 0


@dataclass(frozen=True)
class Schedule:
    """Corrugation numbers N[(k, i)] for 1 <= k <= depth, plus the run budgets.

    tau1 is the first budget; tau_k = tau1 * exp(-(k - 1)), so tau1 = 1/e
    gives the usual tau_k = exp(-k).
    """

    table: dict = field(default_factory=dict)
    depth: int = 0
    tau1: float = exp(-1.0)
    rho0: float = 0.1

    def __post_init__(self):
        if self.depth < 0:
            raise ConfigurationError("depth must be >= 0")
        for k in range(1, self.depth + 1):
            for i in DIRECTIONS:
                n = self.table.get((k, i))
                if n is None:
                    raise ConfigurationError(f"schedule lacks N[{k},{i}]")
                if int(n) != n or n < 1:
                    raise ConfigurationError(f"N[{k},{i}] must be a positive integer")
                if n >= 2 ** 53:
                    raise ConfigurationError(f"N[{k},{i}] exceeds exact double range")

    @classmethod
    def from_list(cls, numbers, **kw):
        """Schedule from (N_11, N_12, N_13, N_21, ...); length must be a multiple of 3."""
        if any(int(n) != n for n in numbers):
            raise ConfigurationError("corrugation numbers must be integers")
        numbers = [int(n) for n in numbers]
        if len(numbers) % 3:
            raise ConfigurationError("a schedule lists three numbers per k")
        table = {(j // 3 + 1, j % 3 + 1): n for j, n in enumerate(numbers)}
        return cls(table, len(numbers) // 3, **kw)

    def N(self, k, i):
        return int(self.table[(k, i)])

    def stages(self):
        return [(k, i, self.N(k, i)) for k in range(1, self.depth + 1) for i in DIRECTIONS]

    def as_list(self):
        return [n for _, _, n in self.stages()]

    @property
    def M(self):
        """gcd of all corrugation numbers."""
        return _gcd_all(self.as_list())

    def L_j(self, j):
        """gcd of N[k,2] and N[k,3] for j <= k <= depth (0 when empty)."""
        return _gcd_all([self.N(k, i) for k in range(max(j, 1), self.depth + 1) for i in (2, 3)])

    @property
    def L(self):
        return self.L_j(1)

    def tau(self, k):
        return self.tau1 * exp(-(k - 1))

    def total_budget(self):
        """T = sum over all k >= 1 of tau_k."""
        return self.tau1 * e / (e - 1.0)

    def scaled(self, n):
        return Schedule({key: int(v) * int(n) for key, v in self.table.items()},
                        self.depth, self.tau1, self.rho0)

    def truncated(self, depth):
        if depth > self.depth:
            raise ConfigurationError("cannot extend a schedule by truncation")
        table = {key: v for key, v in self.table.items() if key[0] <= depth}
        return Schedule(table, depth, self.tau1, self.rho0)

    def with_numbers(self, table):
        return Schedule(dict(table), self.depth, self.tau1, self.rho0)


# desk presets ----------------------------------------------------------------
DESK_RHO0 = 0.3
DESK_NUMBERS = (100, 10_010, 1_000_000, 100_000_000, 10_000_000_010, 1_000_000_000_000)
PATTERN_NUMBERS = (10, 30, 50, 20, 70, 110)


def tau1_limit(rho0):
    """Largest tau1 with T <= lambda_C(df0) / 2 = rho0."""
    return rho0 * (e - 1.0) / e


def default_tau1(rho0):
    return min(exp(-1.0), tau1_limit(rho0))


def desk_schedule(depth=2, rho0=DESK_RHO0, tau1=None):
    tau1 = default_tau1(rho0) if tau1 is None else tau1
    return Schedule.from_list(DESK_NUMBERS[:3 * depth], tau1=tau1, rho0=rho0)


def pattern_schedule(depth=2):
    """Small schedule with M = 10 and L = 10, used for the normal-pattern demos."""
    return Schedule.from_list(PATTERN_NUMBERS[:3 * depth])
