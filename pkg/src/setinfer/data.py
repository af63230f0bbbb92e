"""Dataset/schema data model, ingestion, and the mask/shot samplers.

A bundle is a named collection of rows over a declared feature schema
plus a natural-language context string. Feature values are either a
category index into the declared choices or a real normalized into
[0, 1] from the declared range. Bundles are immutable after load;
samplers take an explicit caller-owned RNG.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"


class RangeClampWarning(UserWarning):
    """A continuous raw value fell outside its declared range."""


@dataclass(frozen=True)
class FeatureSpec:
    id: str
    desc: str
    ftype: str
    choices: tuple = ()
    range: tuple = ()
    cost: float = 1.0

    def __post_init__(self):
        if not self.id:
            raise DataError("feature id must be non-empty")
        if self.ftype not in (CATEGORICAL, CONTINUOUS):
            raise DataError(f"feature {self.id!r}: unknown type {self.ftype!r}")
        if self.ftype == CATEGORICAL:
            if not self.choices:
                raise DataError(f"feature {self.id!r}: categorical needs choices")
            if len(set(self.choices)) != len(self.choices):
                raise DataError(f"feature {self.id!r}: duplicate choices")
        else:
            if len(self.range) != 2 or not self.range[0] < self.range[1]:
                raise DataError(
                    f"feature {self.id!r}: continuous needs range (min, max) with min < max"
                )
        if self.cost < 0:
            raise DataError(f"feature {self.id!r}: cost must be >= 0, got {self.cost}")

    @property
    def n_choices(self) -> int:
        return len(self.choices)


@dataclass(frozen=True)
class Value:
    kind: str
    index: int = -1        # categorical: index into choices
    raw: float = 0.0       # continuous: original units
    normalized: float = 0.0  # continuous: clamped into [0, 1]

    @staticmethod
    def cat(index: int) -> "Value":
        return Value(kind=CATEGORICAL, index=int(index))

    @staticmethod
    def cont(raw: float, lo: float, hi: float, where: str = "") -> "Value":
        raw = float(raw)
        norm = (raw - lo) / (hi - lo)
        if norm < 0.0 or norm > 1.0:
            warnings.warn(
                f"{where + ': ' if where else ''}value {raw} outside range "
                f"({lo}, {hi}); clamped",
                RangeClampWarning,
                stacklevel=2,
            )
            norm = min(max(norm, 0.0), 1.0)
        return Value(kind=CONTINUOUS, raw=raw, normalized=norm)


def make_value(spec: FeatureSpec, raw, where: str = "") -> Value:
    """Parse a raw JSON/CSV cell against a feature spec."""
    if spec.ftype == CATEGORICAL:
        if not isinstance(raw, str):
            raise DataError(
                f"{where}: feature {spec.id!r} expects a category string, got {raw!r}"
            )
        try:
            idx = spec.choices.index(raw)
        except ValueError:
            raise DataError(
                f"{where}: feature {spec.id!r}: {raw!r} not in choices {list(spec.choices)}"
            ) from None
        return Value.cat(idx)
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise DataError(f"{where}: feature {spec.id!r} expects a number, got {raw!r}")
    if not np.isfinite(raw):
        raise DataError(f"{where}: feature {spec.id!r}: non-finite value {raw!r}")
    lo, hi = spec.range
    return Value.cont(float(raw), lo, hi, where=f"{where}: feature {spec.id!r}")


def denormalize(spec: FeatureSpec, norm: float) -> float:
    lo, hi = spec.range
    return lo + float(norm) * (hi - lo)


@dataclass(frozen=True)
class Instance:
    atoms: dict  # feature_id -> Value
    mask: frozenset = frozenset()  # observed feature ids

    def __post_init__(self):
        extra = self.mask - set(self.atoms)
        if extra:
            raise DataError(f"mask references ids without atoms: {sorted(extra)}")

    @property
    def unobserved(self) -> frozenset:
        return frozenset(self.atoms) - self.mask

    def with_mask(self, mask) -> "Instance":
        return Instance(atoms=self.atoms, mask=frozenset(mask))

    def fully_observed(self) -> "Instance":
        return Instance(atoms=self.atoms, mask=frozenset(self.atoms))


@dataclass(frozen=True)
class DatasetBundle:
    name: str
    context: str
    features: tuple
    rows: tuple
    target_ids: tuple = ()

    def __post_init__(self):
        ids = [f.id for f in self.features]
        if len(set(ids)) != len(ids):
            raise DataError(f"bundle {self.name!r}: duplicate feature ids")
        declared = set(ids)
        for i, row in enumerate(self.rows):
            unknown = set(row.atoms) - declared
            if unknown:
                raise DataError(
                    f"bundle {self.name!r} row {i}: unknown feature ids {sorted(unknown)}"
                )
        for t in self.target_ids:
            if t not in declared:
                raise DataError(f"bundle {self.name!r}: unknown target id {t!r}")
        object.__setattr__(self, "_by_id", {f.id: f for f in self.features})

    @property
    def feature_ids(self) -> list:
        return [f.id for f in self.features]

    def feature(self, fid: str) -> FeatureSpec:
        spec = self._by_id.get(fid)
        if spec is None:
            raise DataError(f"bundle {self.name!r}: no feature {fid!r}")
        return spec


# -- file format ---------------------------------------------------------


def _feature_from_json(obj: dict, where: str) -> FeatureSpec:
    try:
        fid = obj["id"]
        desc = obj["desc"]
        ftype = obj["type"]
    except KeyError as e:
        raise DataError(f"{where}: feature missing field {e}") from None
    return FeatureSpec(
        id=fid,
        desc=desc,
        ftype=ftype,
        choices=tuple(obj.get("choices", ())),
        range=tuple(obj.get("range", ())),
        cost=float(obj.get("cost", 1.0)),
    )


def bundle_from_json(obj: dict, where: str = "dataset") -> DatasetBundle:
    for key in ("name", "context", "features", "rows"):
        if key not in obj:
            raise DataError(f"{where}: missing top-level field {key!r}")
    features = tuple(
        _feature_from_json(f, f"{where}: features[{i}]")
        for i, f in enumerate(obj["features"])
    )
    by_id = {f.id: f for f in features}
    rows = []
    for i, robj in enumerate(obj["rows"]):
        values = robj.get("values")
        if not isinstance(values, dict):
            raise DataError(f"{where}: row {i}: missing 'values' object")
        atoms = {}
        for fid, raw in values.items():
            spec = by_id.get(fid)
            if spec is None:
                raise DataError(f"{where}: row {i}: unknown feature id {fid!r}")
            atoms[fid] = make_value(spec, raw, where=f"{where}: row {i}")
        rows.append(Instance(atoms=atoms, mask=frozenset()))
    return DatasetBundle(
        name=obj["name"],
        context=obj["context"],
        features=features,
        rows=tuple(rows),
        target_ids=tuple(obj.get("target_ids", ())),
    )


def bundle_to_json(bundle: DatasetBundle) -> dict:
    features = []
    for f in bundle.features:
        obj = {"id": f.id, "desc": f.desc, "type": f.ftype}
        if f.ftype == CATEGORICAL:
            obj["choices"] = list(f.choices)
        else:
            obj["range"] = [f.range[0], f.range[1]]
        if f.cost != 1.0:
            obj["cost"] = f.cost
        features.append(obj)
    rows = []
    for row in bundle.rows:
        values = {}
        for fid in sorted(row.atoms):
            v = row.atoms[fid]
            spec = bundle.feature(fid)
            values[fid] = spec.choices[v.index] if v.kind == CATEGORICAL else v.raw
        rows.append({"values": values})
    out = {
        "name": bundle.name,
        "context": bundle.context,
        "features": features,
        "rows": rows,
    }
    if bundle.target_ids:
        out["target_ids"] = list(bundle.target_ids)
    return out


def load_dataset(path) -> DatasetBundle:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: not valid JSON ({e})") from e
    return bundle_from_json(obj, where=str(path))


def save_dataset(path, bundle: DatasetBundle):
    with open(path, "w") as fh:
        json.dump(bundle_to_json(bundle), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_csv_dataset(csv_path, meta_path) -> DatasetBundle:
    """CSV rows + JSON sidecar (name/context/features). Blank cell = absent."""
    with open(meta_path) as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as e:
            raise DataError(f"{meta_path}: not valid JSON ({e})") from e
    for key in ("name", "context", "features"):
        if key not in meta:
            raise DataError(f"{meta_path}: missing field {key!r}")
    features = tuple(
        _feature_from_json(f, f"{meta_path}: features[{i}]")
        for i, f in enumerate(meta["features"])
    )
    by_id = {f.id: f for f in features}
    rows = []
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        for i, rec in enumerate(reader):
            atoms = {}
            for fid, cell in rec.items():
                if fid not in by_id:
                    raise DataError(f"{csv_path}: row {i}: unknown column {fid!r}")
                if cell is None or cell.strip() == "":
                    continue
                spec = by_id[fid]
                if spec.ftype == CONTINUOUS:
                    try:
                        raw = float(cell)
                    except ValueError:
                        raise DataError(
                            f"{csv_path}: row {i}: feature {fid!r}: bad number {cell!r}"
                        ) from None
                else:
                    raw = cell
                atoms[fid] = make_value(spec, raw, where=f"{csv_path}: row {i}")
            rows.append(Instance(atoms=atoms, mask=frozenset()))
    return DatasetBundle(
        name=meta["name"],
        context=meta["context"],
        features=features,
        rows=tuple(rows),
        target_ids=tuple(meta.get("target_ids", ())),
    )


# -- samplers ------------------------------------------------------------


def sample_mask(instance: Instance, rng: np.random.Generator) -> frozenset:
    """Observed subset: size uniform on {0..M-1}, then a uniform subset.

    Leaves at least one atom unobserved by construction.
    """
    ids = sorted(instance.atoms)
    m = len(ids)
    if m == 0:
        raise DataError("cannot sample a mask for an instance with no atoms")
    size = int(rng.integers(0, m))
    if size == 0:
        return frozenset()
    picked = rng.choice(m, size=size, replace=False)
    return frozenset(ids[i] for i in picked)


def sample_shots(
    bundle: DatasetBundle,
    exclude: Instance | None,
    rng: np.random.Generator,
    smax: int = 5,
) -> list:
    """S ~ Uniform{0..smax} fully observed rows, never the excluded row."""
    eligible = [r for r in bundle.rows if r is not exclude]
    if len(eligible) < smax:
        raise DataError(
            f"bundle {bundle.name!r}: {len(eligible)} eligible rows < smax={smax}"
        )
    s = int(rng.integers(0, smax + 1))
    if s == 0:
        return []
    picked = rng.choice(len(eligible), size=s, replace=False)
    return [eligible[i].fully_observed() for i in picked]
