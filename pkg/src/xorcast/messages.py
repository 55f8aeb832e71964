"""Multicast message and schedule containers shared by all delivery builders."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .placement import Index, Subfile


def subfile_label(subfile: Subfile) -> str:
    file_id, index = subfile
    return f"{file_id}:{'-'.join(map(str, index))}"


def parse_subfile_label(label: str) -> Subfile:
    file_id, index = label.split(":")
    return int(file_id), tuple(int(x) for x in index.split("-"))


@dataclass(frozen=True)
class MulticastMessage:
    """One transmission: the XOR of ``parts``, each part one subfile payload.

    ``targets`` are the users meant to decode something from it; every
    target must be able to recover exactly one part from its cache plus the
    message.  A single-part message is a unicast.
    """

    parts: tuple[Subfile, ...]
    step: int
    targets: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.parts:
            raise ValueError("message must carry at least one subfile")
        object.__setattr__(self, "parts", tuple(sorted(self.parts)))
        object.__setattr__(self, "targets", tuple(sorted(self.targets)))

    def dump(self) -> str:
        parts = ",".join(subfile_label(p) for p in self.parts)
        targets = ",".join(map(str, self.targets))
        return f"{self.step}\t{parts}\t{targets}"


@dataclass(frozen=True)
class DeliverySchedule:
    """Ordered transmissions for one demand vector.

    ``messages`` hold every subfile-sized transmission except the uncached
    files requested by zero-level users; those are the ``zero_level_messages``
    (full files sent subfile by subfile) and count as ``zero_level_unicasts``
    whole-file units in the rate.
    """

    K: int
    t: int
    messages: tuple[MulticastMessage, ...]
    zero_level_messages: tuple[MulticastMessage, ...] = ()

    @property
    def zero_level_unicasts(self) -> int:
        return len(self.zero_level_messages) // comb(self.K, self.t)

    @property
    def rate(self) -> Fraction:
        return Fraction(len(self.messages), comb(self.K, self.t)) + self.zero_level_unicasts

    def all_messages(self) -> tuple[MulticastMessage, ...]:
        return self.messages + self.zero_level_messages

    def step_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for m in self.messages:
            counts[m.step] = counts.get(m.step, 0) + 1
        return counts

    def dump(self) -> str:
        return "\n".join(m.dump() for m in self.all_messages()) + "\n"
