"""Exact arithmetic in concrete countable groups with a marked abelian subgroup."""

from .core import (
    AbelianGroup,
    DirectProduct,
    FiniteCyclic,
    FreeGroup,
    FreeProduct,
    Group,
    GroupElement,
    Semidirect,
    group_from_json,
)
from .marked import MarkedSubgroup, Transporters, ball, make_marked
from .model import GroupPresentationModel

__all__ = [
    "AbelianGroup",
    "DirectProduct",
    "FiniteCyclic",
    "FreeGroup",
    "FreeProduct",
    "Group",
    "GroupElement",
    "GroupPresentationModel",
    "MarkedSubgroup",
    "Semidirect",
    "Transporters",
    "ball",
    "group_from_json",
    "make_marked",
]
