"""Group models: an ambient group together with a marked abelian subgroup."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from ..errors import PreconditionError
from .core import Form, Group, GroupElement, Semidirect, group_from_json
from .marked import MarkedSubgroup, SemidirectActingMarked, Transporters, ball, make_marked

_MODEL_KEYS = {"kind", "rank", "n", "invariants", "factors", "matrix", "marked"}


@dataclass
class GroupPresentationModel:
    """Ambient group plus marked subgroup, with membership, balls and transporters."""

    group: Group
    marked: MarkedSubgroup
    marked_spec: Any = field(default_factory=list)

    @classmethod
    def build(cls, group: Group, marked: Sequence[str | Form] | str = ()) -> "GroupPresentationModel":
        if marked == "acting_Z":
            if not isinstance(group, Semidirect):
                raise PreconditionError('"acting_Z" is only meaningful for semidirect models')
            return cls(group, SemidirectActingMarked(group, 1), "acting_Z")
        if isinstance(marked, str):
            marked = [marked]
        forms = [group.parse(m) if isinstance(m, str) else group.validate(m) for m in marked]
        spec = [group.format(f) for f in forms]
        return cls(group, make_marked(group, forms), spec)

    @classmethod
    def from_json(cls, doc: dict) -> "GroupPresentationModel":
        unknown = set(doc) - _MODEL_KEYS
        if unknown:
            raise PreconditionError(f"unknown model keys: {sorted(unknown)}")
        group_doc = {k: v for k, v in doc.items() if k != "marked"}
        return cls.build(_group_from_doc(group_doc), doc.get("marked", []))

    def to_json(self) -> dict:
        out = self.group.to_json()
        out["marked"] = self.marked_spec
        return out

    # -- elements

    def element(self, x: str | Form) -> GroupElement:
        return self.group.element(x)

    def form(self, x: str | Form | GroupElement) -> Form:
        if isinstance(x, GroupElement):
            if x.group != self.group:
                from ..errors import ModelMismatch

                raise ModelMismatch(f"element of {x.group!r} used with model over {self.group!r}")
            return x.form
        if isinstance(x, str):
            return self.group.parse(x)
        return self.group.validate(x)

    def format(self, x: Form) -> str:
        return self.group.format(x)

    def in_marked_subgroup(self, g: str | Form | GroupElement) -> bool:
        return self.marked.contains(self.form(g))

    # -- finite truncations

    def ball(self, R: int) -> list[Form]:
        return ball(self.group, R)[0]

    def ball_with_lengths(self, R: int) -> tuple[list[Form], dict]:
        return ball(self.group, R)

    def marked_ball(self, R: int) -> list[Form]:
        return self.marked.ball(R)

    # -- double cosets

    def transporters(self, g: Form, gp: Form) -> Transporters:
        return self.marked.transporters(g, gp)

    def stabilizer(self, g: Form) -> Transporters:
        return self.marked.transporters(g, g)


def _group_from_doc(doc: dict) -> Group:
    if "factors" in doc:
        doc = dict(doc, factors=[_strip_marked(f) for f in doc["factors"]])
    return group_from_json(doc)


def _strip_marked(doc: dict) -> dict:
    if "marked" in doc:
        raise PreconditionError("give the marked subgroup on the outer model, not on factors")
    return doc
