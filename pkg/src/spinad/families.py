"""Closed-form family tags shared by the operator builders and the exponential code."""

from __future__ import annotations

import enum


class ClosedFormFamily(str, enum.Enum):
    """Which truncated-polynomial exponential a generator uses.

    ``CUBIC``: G^3 = -G (fermionic singles and doubles, pair doubles).
    ``SA_SINGLE_PAIR``: product of two commuting cubic factors.
    ``QUINTIC``/``NINTH``/``ELEVENTH``: the spin-adapted doubles with two,
    four (singlet coupling) and four (triplet coupling) distinct indices.
    """

    CUBIC = "cubic"
    SA_SINGLE_PAIR = "sa_single_pair"
    QUINTIC = "quintic"
    NINTH = "ninth"
    ELEVENTH = "eleventh"

    @property
    def half_degree(self) -> int:
        return {"cubic": 1, "sa_single_pair": 2, "quintic": 2, "ninth": 4, "eleventh": 5}[self.value]
