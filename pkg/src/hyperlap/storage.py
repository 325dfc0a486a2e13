"""Flat binary containers with a JSON header.

Layout: magic b"HYPL", little-endian u32 header length, UTF-8 JSON header,
then the raw arrays in declared order (little-endian float64; complex arrays
are stored as separate re/im planes and the header records the layout).
"""

import json
import os
import struct

import numpy as np

from .errors import DomainError

MAGIC = b"HYPL"


def _write_container(path, header: dict, arrays):
    header = dict(header)
    header["arrays"] = []
    blobs = []
    for name, arr in arrays:
        arr = np.asarray(arr)
        if np.iscomplexobj(arr):
            parts = [("re", np.ascontiguousarray(arr.real, dtype="<f8")),
                     ("im", np.ascontiguousarray(arr.imag, dtype="<f8"))]
            kind = "complex128"
        else:
            parts = [("re", np.ascontiguousarray(arr, dtype="<f8"))]
            kind = "float64"
        header["arrays"].append({"name": name, "shape": list(arr.shape),
                                 "kind": kind})
        blobs.extend(p for _, p in parts)
    head = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        for blob in blobs:
            fh.write(blob.tobytes())


def _read_container(path):
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise DomainError(f"{path}: not a hyperlap container")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        arrays = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            re = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(shape)
            if spec["kind"] == "complex128":
                im = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(shape)
                arrays[spec["name"]] = re + 1j * im
            else:
                arrays[spec["name"]] = re.copy()
        return header, arrays


def save_radial(path, f):
    _write_container(path, {"type": "radial", "space": f.space,
                            "endianness": "little"},
                     [("t_grid", f.t_grid), ("values", f.values)])


def load_radial(path):
    from .transforms import RadialFunction

    header, arrays = _read_container(path)
    if header.get("type") != "radial":
        raise DomainError(f"{path}: expected a radial container")
    return RadialFunction(header["space"], arrays["t_grid"], arrays["values"])


def save_spectral(path, phi):
    _write_container(path, {"type": "spectral", "band": list(phi.band),
                            "endianness": "little"},
                     [("s_grid", phi.s_grid), ("theta_grid", phi.theta_grid),
                      ("values", phi.values)])


def load_spectral(path):
    from .transforms import SpectralFunction

    header, arrays = _read_container(path)
    if header.get("type") != "spectral":
        raise DomainError(f"{path}: expected a spectral container")
    return SpectralFunction(arrays["s_grid"], arrays["theta_grid"],
                            arrays["values"], band=tuple(header["band"]))


def save_beam_family(dirpath, family):
    """BeamFamily as a directory: grid.json plus one container per beam."""
    os.makedirs(dirpath, exist_ok=True)
    meta = {
        "lam": family.grid.lam, "beta": family.grid.beta,
        "eps1": family.grid.eps1, "n1": family.grid.n1, "n2": family.grid.n2,
        "band": list(family.band),
        "x_grid": family.x_grid.tolist(), "t_grid": family.t_grid.tolist(),
        "beams": sorted([f"{m}_{n}" for (m, n) in family.beams]),
    }
    with open(os.path.join(dirpath, "grid.json"), "w") as fh:
        json.dump(meta, fh, indent=1)
    for (m, n), arr in family.beams.items():
        _write_container(os.path.join(dirpath, f"beam_{m}_{n}.bin"),
                         {"type": "beam", "m": m, "n": n},
                         [("values", arr)])


def load_beam_family(dirpath):
    from .beams import BeamFamily
    from .geometry_tubes import build_beam_grid

    with open(os.path.join(dirpath, "grid.json")) as fh:
        meta = json.load(fh)
    grid = build_beam_grid(meta["lam"], meta["beta"], meta["eps1"])
    beams = {}
    for tag in meta["beams"]:
        m, n = map(int, tag.split("_"))
        _, arrays = _read_container(os.path.join(dirpath, f"beam_{m}_{n}.bin"))
        beams[(m, n)] = arrays["values"]
    return BeamFamily(grid=grid, beams=beams, band=tuple(meta["band"]),
                      x_grid=np.array(meta["x_grid"]),
                      t_grid=np.array(meta["t_grid"]))
