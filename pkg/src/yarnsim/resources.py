"""Two-dimensional (vCores, memory) resource arithmetic and dominant shares."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction


class AccountingError(RuntimeError):
    """Raised when resource bookkeeping would go negative or over capacity.

    This always indicates a simulator bug, never bad user input.
    """


class ConfigError(ValueError):
    """Invalid user-supplied configuration."""


class Resource(enum.Enum):
    VCORES = "vcores"
    MEMORY = "memory"


@dataclass(frozen=True, order=False)
class ResourceVector:
    vcores: int = 0
    memory_mb: int = 0

    def __post_init__(self) -> None:
        if self.vcores < 0 or self.memory_mb < 0:
            raise AccountingError(f"negative resource vector <{self.vcores}, {self.memory_mb}>")

    def __add__(self, other: ResourceVector) -> ResourceVector:
        return ResourceVector(self.vcores + other.vcores, self.memory_mb + other.memory_mb)

    def __sub__(self, other: ResourceVector) -> ResourceVector:
        if not other <= self:
            raise AccountingError(f"cannot subtract {other} from {self}")
        return ResourceVector(self.vcores - other.vcores, self.memory_mb - other.memory_mb)

    def __le__(self, other: ResourceVector) -> bool:
        # component-wise partial order
        return self.vcores <= other.vcores and self.memory_mb <= other.memory_mb

    def __ge__(self, other: ResourceVector) -> bool:
        return other <= self

    def scale(self, k: int) -> ResourceVector:
        return ResourceVector(self.vcores * k, self.memory_mb * k)

    def is_zero(self) -> bool:
        return self.vcores == 0 and self.memory_mb == 0

    def __str__(self) -> str:
        return f"<{self.vcores}, {self.memory_mb}>"


ZERO = ResourceVector(0, 0)


@dataclass(frozen=True)
class DominantShare:
    share: Fraction
    dominant_resource: Resource


def fits(demand: ResourceVector, free: ResourceVector) -> bool:
    return demand <= free


def vec_add(a: ResourceVector, b: ResourceVector) -> ResourceVector:
    return a + b


def vec_sub(a: ResourceVector, b: ResourceVector) -> ResourceVector:
    return a - b


def dominant_share(alloc: ResourceVector, total: ResourceVector) -> DominantShare:
    """Largest per-resource fraction of ``total`` held by ``alloc``.

    Equal shares resolve to memory.
    """
    if total.vcores <= 0 or total.memory_mb <= 0:
        raise ConfigError(f"cluster capacity must be positive in both resources, got {total}")
    cpu = Fraction(alloc.vcores, total.vcores)
    mem = Fraction(alloc.memory_mb, total.memory_mb)
    if cpu > mem:
        return DominantShare(cpu, Resource.VCORES)
    return DominantShare(mem, Resource.MEMORY)


def sum_vectors(vectors) -> ResourceVector:
    total = ZERO
    for v in vectors:
        total = total + v
    return total
