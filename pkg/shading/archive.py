"""
Zip archives of shaded families.

    family.json           {"scale": delta, "solids": [...]}
    shadings/NNNNN.kvox   shading of solid NNNNN as a KVOX blob
"""
import json
import zipfile

from geometry.solids import solid_to_dict, solid_from_dict
from shading.family import ShadedFamily
from voxel import kvox
from util.exceptions import ShadingException

FAMILY_ENTRY = "family.json"

def _shading_entry(i):
    return f"shadings/{i:05d}.kvox"

def write_archive(f: ShadedFamily, path):
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr(FAMILY_ENTRY, json.dumps({"scale": f.scale,
                                              "solids": [solid_to_dict(s) for s in f.solids]}))
        for i in range(len(f)):
            zf.writestr(_shading_entry(i), kvox.encode(f.shading_set(i)))

def read_archive(path) -> ShadedFamily:
    """:raises ShadingException: on a missing entry or a shading leaving its solid"""
    try:
        with zipfile.ZipFile(path) as zf:
            meta = json.loads(zf.read(FAMILY_ENTRY))
            solids = [solid_from_dict(d) for d in meta["solids"]]
            sets = [kvox.decode(zf.read(_shading_entry(i))) for i in range(len(solids))]
    except (KeyError, zipfile.BadZipFile) as e:
        raise ShadingException(f"malformed shaded family archive {path}: {e}") from None
    if not solids:
        return ShadedFamily([], [], meta["scale"])
    for e in sets:
        if e.scale != meta["scale"]:
            raise ShadingException(f"shading scale {e.scale} differs from family scale {meta['scale']}")
    return ShadedFamily.from_sets(solids, sets)
