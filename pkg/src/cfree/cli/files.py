"""Scene and region JSON files.

Both formats carry an integer ``version``. Matrices are nested lists in row-major
order. Floats are written with ``repr`` precision, so a saved region loads back
bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..collision import CollisionWorld, PlanarArmWorld, world_from_dict
from ..geometry import Ellipsoid, HPolytope

SCENE_VERSION = 1
REGION_VERSION = 1


class FileFormatError(ValueError):
    """A scene or region file is malformed or inconsistent."""


@dataclass
class Scene:
    name: str
    world: CollisionWorld
    domain: HPolytope
    seeds: list[np.ndarray]

    @property
    def dim(self) -> int:
        return self.domain.dim

    def colliding_seeds(self) -> list[int]:
        return [i for i, s in enumerate(self.seeds) if self.world.check(s)]

    def seeds_outside(self) -> list[int]:
        return [i for i, s in enumerate(self.seeds) if not self.domain.is_interior(s)]


def builtin_scenes() -> list[str]:
    root = resources.files("cfree") / "scenes"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _domain_from_dict(d: dict) -> HPolytope:
    kind = d.get("type")
    if kind == "box":
        return HPolytope.from_box(d["lo"], d["hi"])
    if kind == "hpolytope":
        return HPolytope(np.array(d["A"], dtype=float), np.array(d["b"], dtype=float))
    raise FileFormatError(f"unknown domain type {kind!r}")


def parse_scene(data: dict, name: str = "scene") -> Scene:
    try:
        if data.get("version") != SCENE_VERSION:
            raise FileFormatError(f"unsupported scene version {data.get('version')!r}")
        world = world_from_dict(data["world"])
        if "domain" in data:
            domain = _domain_from_dict(data["domain"])
        elif isinstance(world, PlanarArmWorld):
            domain = world.domain
        else:
            raise FileFormatError("scene has no domain")
        seeds = [np.array(s, dtype=float) for s in data.get("seeds", [])]
    except FileFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"invalid scene: {exc}") from exc
    if domain.dim != world.dim:
        raise FileFormatError(f"domain is {domain.dim}-d but world is {world.dim}-d")
    for i, s in enumerate(seeds):
        if s.shape != (world.dim,):
            raise FileFormatError(f"seed {i} has shape {s.shape}, expected ({world.dim},)")
    try:
        domain.bounding_box()
    except Exception as exc:
        raise FileFormatError(f"domain must be bounded with nonempty interior: {exc}") from exc
    return Scene(data.get("name", name), world, domain, seeds)


def load_scene(path) -> Scene:
    """Load a scene from a file path, or from a built-in scene name."""
    p = Path(path)
    if not p.exists() and str(path) in builtin_scenes():
        text = (resources.files("cfree") / "scenes" / f"{path}.json").read_text()
        name = str(path)
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise FileFormatError(f"cannot read scene {path}: {exc}") from exc
        name = p.stem
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"scene {path} is not valid JSON: {exc}") from exc
    return parse_scene(data, name)


@dataclass
class RegionFile:
    A: list[list[float]]
    b: list[float]
    ellipsoid: dict | None
    seed: list[float]
    seed_index: int
    scene: str
    rng_seed: int
    options: dict
    report: dict
    tool_version: str
    version: int = REGION_VERSION
    extra: dict = field(default_factory=dict)

    @property
    def polytope(self) -> HPolytope:
        return HPolytope(np.array(self.A, dtype=float).reshape(len(self.b), -1), np.array(self.b, dtype=float))

    @property
    def dim(self) -> int:
        return len(self.seed) if self.seed else (len(self.A[0]) if self.A else 0)

    def ellipsoid_obj(self) -> Ellipsoid | None:
        if self.ellipsoid is None:
            return None
        return Ellipsoid(np.array(self.ellipsoid["E"], dtype=float), np.array(self.ellipsoid["c"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_dict(cls, d: dict) -> RegionFile:
        if d.get("version") != REGION_VERSION:
            raise FileFormatError(f"unsupported region version {d.get('version')!r}")
        try:
            r = cls(**d)
        except TypeError as exc:
            raise FileFormatError(f"invalid region file: {exc}") from exc
        if len(r.A) != len(r.b) or len({len(row) for row in r.A}) > 1:
            raise FileFormatError("region A and b have inconsistent shapes")
        return r

    @classmethod
    def load(cls, path) -> RegionFile:
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except OSError as exc:
            raise FileFormatError(f"cannot read region {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"region {path} is not valid JSON: {exc}") from exc


def region_from_report(report, scene: Scene, seed_index: int, options: dict, rng_seed: int,
                       tool_version: str) -> RegionFile:
    P = report.polytope
    e = report.final_ellipsoid
    ell = None if e is None else {"E": e.E.tolist(), "c": e.c.tolist()}
    return RegionFile(
        A=P.A.tolist(),
        b=P.b.tolist(),
        ellipsoid=ell,
        seed=[float(x) for x in report.seed],
        seed_index=seed_index,
        scene=scene.name,
        rng_seed=int(rng_seed),
        options=options,
        report=report.summary(),
        tool_version=tool_version,
    )
