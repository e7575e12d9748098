import sys
import json
import os
from dataclasses import dataclass

from geometry.solids import solid_from_dict, check_member
from voxel import kvox
from voxel.grid import VoxelSet, rasterize_family
from shading.family import ShadedFamily
from shading.archive import read_archive
from projection.points import ParamPointSet
from generators.spec import GeneratorSpec, Generated, generate
from util.exceptions import KakeyaException, GeometryException, VoxelException, ShadingException, \
    GeneratorException

class SourceException(KakeyaException):
    pass

@dataclass
class Payload:
    """Whatever a source yields; unused fields stay None"""
    solids: list = None
    family: ShadedFamily = None
    voxels: VoxelSet = None
    points: ParamPointSet = None
    generated: Generated = None
    scale: float = None
    kind: str = None            # generator kind, when known

    def shaded_family(self) -> ShadedFamily:
        """The shaded family, with full shadings when the input had none"""
        if self.family is not None:
            return self.family
        if not self.solids:
            raise SourceException("input carries no solids")
        return ShadedFamily.full(self.solids, self.scale)

    def voxel_set(self) -> VoxelSet:
        if self.voxels is not None:
            return self.voxels
        if self.family is not None:
            return self.family.union()
        if self.solids:
            return rasterize_family(self.solids, self.scale)
        raise SourceException("input carries neither voxels nor solids")

def _read_json(file):
    try:
        return json.load(file)
    except json.JSONDecodeError as e:
        raise SourceException(f"malformed JSON: {e}") from None

def _open(filepath, mode="r"):
    try:
        return open(filepath, mode)
    except OSError as e:
        raise SourceException(f"cannot open {filepath}: {e.strerror}") from None

def family_payload(data) -> Payload:
    """Payload from a family document {"scale", "solids", optional "shadings",
    optional "points"}; generator output has the same keys."""
    if not isinstance(data, dict) or "scale" not in data:
        raise SourceException("family document needs a 'scale' key")
    try:
        scale = float(data["scale"])
        solids = [check_member(solid_from_dict(d)) for d in data.get("solids", [])]
        points = ParamPointSet.from_dict(data["points"]) if data.get("points") else None
    except (KeyError, TypeError, ValueError) as e:
        raise SourceException(f"malformed family document: {e!r}") from None
    except GeometryException as e:
        raise SourceException(f"invalid solid in family document: {e}") from e
    family = None
    if "shadings" in data:
        if len(data["shadings"]) != len(solids):
            raise SourceException("family document needs one shading per solid")
        family = ShadedFamily(solids, data["shadings"], scale)
    kind = data.get("spec", {}).get("kind") if isinstance(data.get("spec"), dict) else None
    return Payload(solids=solids, family=family, points=points, scale=scale, kind=kind)

class FamilySource:
    """Family JSON from a file (default: stdin)"""

    def __init__(self, filepath=None):
        self.filepath = filepath

    def load(self) -> Payload:
        if not self.filepath:
            return family_payload(_read_json(sys.stdin))
        with _open(self.filepath) as f:
            return family_payload(_read_json(f))

class KvoxSource:

    def __init__(self, filepath):
        self.filepath = filepath

    def load(self) -> Payload:
        with _open(self.filepath, "rb") as f:
            data = f.read()
        try:
            voxels = kvox.decode(data)
        except VoxelException as e:
            raise SourceException(f"malformed voxel file {self.filepath}: {e}") from e
        return Payload(voxels=voxels, scale=voxels.scale)

class SpecSource:
    """Runs the generator named by a GeneratorSpec JSON file"""

    def __init__(self, filepath):
        self.filepath = filepath

    def load(self) -> Payload:
        with _open(self.filepath) as f:
            data = _read_json(f)
        try:
            spec = GeneratorSpec.from_dict(data)
        except (GeneratorException, TypeError, ValueError) as e:
            raise SourceException(f"bad generator spec {self.filepath}: {e}") from None
        out = generate(spec)
        return Payload(solids=out.tubes, points=out.points, generated=out, scale=out.scale,
                       kind=spec.kind.value)

class GeneratorSource:
    """Runs a generator given inline as kind, k (delta = 2^-k) and seed"""

    def __init__(self, kind, k, seed=0):
        try:
            self.spec = GeneratorSpec(kind, 2.0 ** -int(k), int(seed))
        except ValueError:
            raise SourceException(f"bad generator scale or seed {k!r}, {seed!r}") from None
        except GeneratorException as e:
            raise SourceException(str(e)) from None

    def load(self) -> Payload:
        out = generate(self.spec)
        return Payload(solids=out.tubes, points=out.points, generated=out, scale=out.scale,
                       kind=self.spec.kind.value)

class ArchiveSource:
    """Shaded family zip archive"""

    def __init__(self, filepath):
        self.filepath = filepath

    def load(self) -> Payload:
        if not os.path.exists(self.filepath):
            raise SourceException(f"cannot open {self.filepath}: no such file")
        try:
            family = read_archive(self.filepath)
        except ShadingException as e:
            raise SourceException(str(e)) from e
        return Payload(solids=family.solids, family=family, scale=family.scale)

_EXTENSIONS = {
    ".kvox": KvoxSource,
    ".zip": ArchiveSource,
}

class Source:

    @staticmethod
    def from_string(string=None):
        """Instantiates a source from a string. If an empty argument is given,
        a family JSON document is read from stdin.

        Example strings:
        - family:path.json
        - kvox:path.kvox
        - spec:path.json
        - zip:path.zip
        - gen:kind:k[:seed]   generator run inline at delta = 2^-k
        - path (chosen by extension, JSON files holding a "kind" are specs)
        """
        if not string:
            return FamilySource()

        input_type, sep, filepath = string.partition(':')
        if not sep or len(input_type) == 1:
            # Bare path, possibly with a drive letter
            return Source._from_path(string)
        if not filepath:
            raise SourceException(f"no path in source string {string!r}")
        if input_type == 'family':
            return FamilySource(filepath)
        elif input_type == 'kvox':
            return KvoxSource(filepath)
        elif input_type == 'spec':
            return SpecSource(filepath)
        elif input_type == 'zip':
            return ArchiveSource(filepath)
        elif input_type == 'gen':
            tok = filepath.split(':')
            if len(tok) not in (2, 3):
                raise SourceException("invalid generator source string")
            return GeneratorSource(*tok)
        else:
            raise SourceException(f"invalid type {input_type!r} for a source")

    @staticmethod
    def _from_path(filepath):
        ext = os.path.splitext(filepath)[1].lower()
        if ext in _EXTENSIONS:
            return _EXTENSIONS[ext](filepath)
        with _open(filepath) as f:
            data = _read_json(f)
        if isinstance(data, dict) and "kind" in data:
            return SpecSource(filepath)
        return FamilySource(filepath)
