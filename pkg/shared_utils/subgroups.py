"""
subgroups.py — Canonical intersectional subgroup keys.
"""

from dataclasses import dataclass

KEY_SEPARATOR = "|"


@dataclass(frozen=True, order=True)
class SubgroupKey:
    """Ordered attribute values, e.g. ("female", "0-40") for gender × age."""
    values: tuple[str, ...]

    def __post_init__(self):
        vals = tuple(str(v) for v in self.values)
        if not vals or any(v == "" for v in vals):
            raise ValueError(f"subgroup key needs non-empty attribute values, got {self.values!r}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def parse(cls, label: str) -> "SubgroupKey":
        return cls(tuple(label.split(KEY_SEPARATOR)))

    @property
    def label(self) -> str:
        return KEY_SEPARATOR.join(self.values)

    def __str__(self) -> str:
        return self.label
