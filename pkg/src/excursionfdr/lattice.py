"""Lattice geometry, scalar fields, and region-set accounting.

Everything downstream works on a finite rectangular lattice of locations
(1, 2, or 3 dimensions).  A :class:`ScalarField` attaches one real value
per location, a :class:`SampleStack` holds n such fields from repeated
measurements, and a :class:`RegionSet` is a boolean subset of the lattice
such as an excursion set {v : field(v) > c} or a fitted confidence region.

An optional :class:`Mask` restricts inference to a subset of locations
(an in-brain mask, for example).  Out-of-mask locations never count as
hypotheses, never belong to any region, and may hold NaN values.

All per-location arrays share the lattice's row-major layout.  Types are
immutable after construction and all operations are pure, so instances
can be shared freely across worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

__all__ = [
    "LatticeShape",
    "Mask",
    "ScalarField",
    "SampleStack",
    "RegionSet",
    "RegionPartition",
    "SetCardinalities",
    "excursion_set",
    "region_confusion",
    "set_cardinalities",
]


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LatticeShape:
    """Extents of a rectangular lattice, one entry per dimension (D in 1..3)."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not 1 <= len(dims) <= 3:
            raise ValueError(f"lattice must have 1 to 3 dimensions, got {len(dims)}")
        if any(d < 1 for d in dims):
            raise ValueError(f"lattice extents must be positive, got {dims}")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        """Total number of lattice locations (mask not applied)."""
        return int(np.prod(self.dims))


@dataclass(frozen=True)
class Mask:
    """Boolean analysis mask over a lattice; inference runs on inside locations only."""

    shape: LatticeShape
    inside: np.ndarray

    def __post_init__(self):
        inside = np.asarray(self.inside, dtype=bool)
        if inside.shape != self.shape.dims:
            raise ValueError(
                f"mask array shape {inside.shape} does not match lattice {self.shape.dims}"
            )
        object.__setattr__(self, "inside", _readonly(inside))

    @property
    def count(self) -> int:
        return int(self.inside.sum())


def _inside_array(shape: LatticeShape, mask: Mask | None) -> np.ndarray:
    if mask is None:
        return np.ones(shape.dims, dtype=bool)
    return mask.inside


def _check_same_geometry(shape_a, mask_a, shape_b, mask_b, what: str) -> None:
    if shape_a != shape_b:
        raise ValueError(f"{what}: lattice shapes differ ({shape_a.dims} vs {shape_b.dims})")
    a_in = _inside_array(shape_a, mask_a)
    b_in = _inside_array(shape_b, mask_b)
    if not np.array_equal(a_in, b_in):
        raise ValueError(f"{what}: masks differ")


def _as_mask(shape: LatticeShape, mask) -> Mask | None:
    # from_array convenience: accept a ready Mask or a raw boolean array
    if mask is None or isinstance(mask, Mask):
        return mask
    return Mask(shape, np.asarray(mask, dtype=bool))


@dataclass(frozen=True)
class ScalarField:
    """One real value per lattice location.

    Parameters
    ----------
    shape : LatticeShape
    values : ndarray
        Array of shape ``shape.dims``.  NaN is rejected at in-mask
        locations (and ignored outside the mask); infinities pass.
    mask : Mask, optional
    """

    shape: LatticeShape
    values: np.ndarray
    mask: Mask | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.shape.dims:
            raise ValueError(
                f"field array shape {values.shape} does not match lattice {self.shape.dims}"
            )
        if self.mask is not None and self.mask.shape != self.shape:
            raise ValueError("field and mask lattices differ")
        inside = _inside_array(self.shape, self.mask)
        # +/-inf is allowed (degenerate-variance t fields use it); NaN is not,
        # because comparisons against NaN are meaningless
        bad = np.isnan(values) & inside
        if bad.any():
            raise ValueError(f"{int(bad.sum())} NaN values at in-mask locations")
        object.__setattr__(self, "values", _readonly(values))

    @classmethod
    def from_array(cls, values, mask=None) -> "ScalarField":
        values = np.asarray(values, dtype=np.float64)
        shape = LatticeShape(values.shape)
        return cls(shape, values, _as_mask(shape, mask))

    @property
    def inside(self) -> np.ndarray:
        return _inside_array(self.shape, self.mask)


@dataclass(frozen=True)
class SampleStack:
    """n repeated scalar fields over one lattice, stored as an (n, *dims) array.

    The leading axis indexes samples.  n must be at least 2 so that an
    unbiased standard deviation exists at every location.
    """

    shape: LatticeShape
    samples: np.ndarray
    mask: Mask | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != self.shape.ndim + 1 or samples.shape[1:] != self.shape.dims:
            raise ValueError(
                f"sample array shape {samples.shape} does not match (n, *{self.shape.dims})"
            )
        if samples.shape[0] < 2:
            raise ValueError(f"need at least 2 samples, got {samples.shape[0]}")
        if self.mask is not None and self.mask.shape != self.shape:
            raise ValueError("stack and mask lattices differ")
        inside = _inside_array(self.shape, self.mask)
        bad = ~np.isfinite(samples) & inside
        if bad.any():
            raise ValueError("non-finite sample values at in-mask locations")
        object.__setattr__(self, "samples", _readonly(samples))

    @classmethod
    def from_array(cls, samples, mask=None) -> "SampleStack":
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim < 2:
            raise ValueError("sample stack needs a leading sample axis plus lattice axes")
        shape = LatticeShape(samples.shape[1:])
        return cls(shape, samples, _as_mask(shape, mask))

    @property
    def n(self) -> int:
        return int(self.samples.shape[0])

    def sample(self, i: int) -> ScalarField:
        return ScalarField(self.shape, self.samples[i], self.mask)

    @property
    def inside(self) -> np.ndarray:
        return _inside_array(self.shape, self.mask)


@dataclass(frozen=True)
class RegionSet:
    """A subset of in-mask lattice locations.

    Out-of-mask locations are non-members by definition; membership flags
    passed in for such locations are cleared on construction.
    """

    shape: LatticeShape
    member: np.ndarray
    mask: Mask | None = None

    def __post_init__(self):
        member = np.asarray(self.member, dtype=bool)
        if member.shape != self.shape.dims:
            raise ValueError(
                f"member array shape {member.shape} does not match lattice {self.shape.dims}"
            )
        if self.mask is not None:
            if self.mask.shape != self.shape:
                raise ValueError("region and mask lattices differ")
            member = member & self.mask.inside
        object.__setattr__(self, "member", _readonly(member))

    @classmethod
    def from_array(cls, member, mask=None) -> "RegionSet":
        member = np.asarray(member, dtype=bool)
        shape = LatticeShape(member.shape)
        return cls(shape, member, _as_mask(shape, mask))

    @classmethod
    def empty(cls, shape: LatticeShape, mask: Mask | None = None) -> "RegionSet":
        return cls(shape, np.zeros(shape.dims, dtype=bool), mask)

    @classmethod
    def full(cls, shape: LatticeShape, mask: Mask | None = None) -> "RegionSet":
        return cls(shape, np.ones(shape.dims, dtype=bool), mask)

    @property
    def count(self) -> int:
        """Number of member locations."""
        return int(self.member.sum())

    @property
    def inside(self) -> np.ndarray:
        return _inside_array(self.shape, self.mask)

    def complement(self) -> "RegionSet":
        """Complement within the mask (out-of-mask stays out)."""
        return RegionSet(self.shape, ~self.member & self.inside, self.mask)

    def is_subset_of(self, other: "RegionSet") -> bool:
        _check_same_geometry(self.shape, self.mask, other.shape, other.mask, "is_subset_of")
        return not bool((self.member & ~other.member).any())


@dataclass(frozen=True)
class RegionPartition:
    """Two-by-two accounting of true-null status against rejection status."""

    true_null_not_rejected: int
    true_null_rejected: int
    alt_not_rejected: int
    alt_rejected: int

    @property
    def total(self) -> int:
        return (
            self.true_null_not_rejected
            + self.true_null_rejected
            + self.alt_not_rejected
            + self.alt_rejected
        )

    @property
    def rejected(self) -> int:
        return self.true_null_rejected + self.alt_rejected


@dataclass(frozen=True)
class SetCardinalities:
    a_only: int
    b_only: int
    both: int
    a_total: int = dataclass_field(default=0)
    b_total: int = dataclass_field(default=0)


def excursion_set(field: ScalarField, c: float, strict: bool = True) -> RegionSet:
    """Locations where the field exceeds the level c.

    Parameters
    ----------
    field : ScalarField
    c : float
        Threshold level.
    strict : bool
        With ``strict=True`` membership means field(v) > c (the open
        excursion set); with ``strict=False`` it means field(v) >= c
        (its closure).  The two differ exactly on the level set.
    """
    inside = field.inside
    if strict:
        member = (field.values > c) & inside
    else:
        member = (field.values >= c) & inside
    return RegionSet(field.shape, member, field.mask)


def region_confusion(true_null: RegionSet, rejected: RegionSet) -> RegionPartition:
    """Count the four cells of the null-status / rejection-status partition.

    The caller supplies whichever true-null set matches the test direction;
    this function only does the set arithmetic.
    """
    _check_same_geometry(
        true_null.shape, true_null.mask, rejected.shape, rejected.mask, "region_confusion"
    )
    null = true_null.member
    rej = rejected.member
    inside = true_null.inside
    alt = ~null & inside
    return RegionPartition(
        true_null_not_rejected=int((null & ~rej).sum()),
        true_null_rejected=int((null & rej).sum()),
        alt_not_rejected=int((alt & ~rej).sum()),
        alt_rejected=int((alt & rej).sum()),
    )


def set_cardinalities(a: RegionSet, b: RegionSet) -> SetCardinalities:
    """Sizes of a\\b, b\\a, the intersection, and both sets, over in-mask locations."""
    _check_same_geometry(a.shape, a.mask, b.shape, b.mask, "set_cardinalities")
    both = int((a.member & b.member).sum())
    a_total = a.count
    b_total = b.count
    return SetCardinalities(
        a_only=a_total - both,
        b_only=b_total - both,
        both=both,
        a_total=a_total,
        b_total=b_total,
    )
