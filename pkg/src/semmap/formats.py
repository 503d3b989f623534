"""File formats: JSON object maps, PLY clouds, TUM trajectories, PGM frames,
CSV curves and JSON ablation configs/reports.

Every loader raises ``FormatError`` naming the file and the offending
object, property or line. Floats are written with ``repr`` so a save/load
round trip is lossless.
"""
from __future__ import annotations

import csv
import json
import math
import re
import warnings
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from semmap.ablation import AblationConfig
from semmap.errors import FormatError
from semmap.geometry import Cuboid, RigidPose
from semmap.instances import ClusterParams, LabeledPointCloud
from semmap.quality.detection import PRCurve
from semmap.quality.objectmap import ObjectMap
from semmap.sim.render import CameraIntrinsics, Frame
from semmap.sim.noise import PoseNoiseParams, SegNoiseParams
from semmap.sim.scene import Scene, SceneObject
from semmap.trajectory import Trajectory
from semmap.vocabulary import BACKGROUND_NAME, DEFAULT_VOCABULARY

QUAT_WARN_TOL = 1e-3
DEPTH_SCALE = 1000.0  # PGM units per meter


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc


def _write_json(obj, path):
    text = json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def _floats(values):
    return [float(v) for v in values]


# --- object maps -------------------------------------------------------------

def object_map_to_dict(m: ObjectMap) -> dict:
    vocab = list(m.class_vocabulary)
    names = [BACKGROUND_NAME] + vocab
    objects = []
    for c in m.objects:
        entry = {
            "centroid": _floats(c.centroid),
            "extent": _floats(c.extent),
            "class": names[c.class_id],
            "confidence": float(c.confidence),
        }
        if c.label_probs is not None:
            entry["label_probs"] = {names[i]: float(p) for i, p in enumerate(c.label_probs) if p > 0}
        objects.append(entry)
    return {"class_vocabulary": vocab, "objects": objects}


def object_map_from_dict(data, source="<object map>") -> ObjectMap:
    if not isinstance(data, dict) or "objects" not in data:
        raise FormatError(f"{source}: expected an object with an 'objects' list")
    vocab = tuple(data.get("class_vocabulary", DEFAULT_VOCABULARY))
    if BACKGROUND_NAME in vocab:
        raise FormatError(f"{source}: '{BACKGROUND_NAME}' is reserved and cannot be in the vocabulary")
    ids = {name: i + 1 for i, name in enumerate(vocab)}
    ids[BACKGROUND_NAME] = 0
    objects = []
    for k, entry in enumerate(data["objects"]):
        where = f"{source}: object {k}"
        try:
            name = entry["class"]
            if name not in ids:
                raise FormatError(f"{where}: unknown class name {name!r}")
            probs = None
            if entry.get("label_probs") is not None:
                probs = np.zeros(len(vocab) + 1)
                for pname, p in entry["label_probs"].items():
                    if pname not in ids:
                        raise FormatError(f"{where}: unknown class name {pname!r} in label_probs")
                    probs[ids[pname]] = float(p)
            objects.append(Cuboid(entry["centroid"], entry["extent"], ids[name], probs,
                                  entry.get("confidence", 1.0)))
        except FormatError:
            raise
        except KeyError as exc:
            raise FormatError(f"{where}: missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{where}: {exc}") from exc
    try:
        return ObjectMap(objects, vocab)
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from exc


def load_object_map(path) -> ObjectMap:
    return object_map_from_dict(_read_json(path), str(path))


def save_object_map(m: ObjectMap, path):
    _write_json(object_map_to_dict(m), path)


# --- PLY point clouds ----------------------------------------------------------

_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}
_PLY_REQUIRED = ("x", "y", "z", "class_id")


def _ply_header(fh, path):
    if fh.readline().strip() != b"ply":
        raise FormatError(f"{path}: not a PLY file")
    fmt = None
    elements = []  # (name, count, [(prop, type or ('list', count_t, item_t))])
    while True:
        raw = fh.readline()
        if not raw:
            raise FormatError(f"{path}: header has no end_header")
        parts = raw.decode("ascii", "replace").split()
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "end_header":
            break
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise FormatError(f"{path}: property before any element")
            if parts[1] == "list":
                elements[-1][2].append((parts[4], ("list", parts[2], parts[3])))
            else:
                if parts[1] not in _PLY_TYPES:
                    raise FormatError(f"{path}: unknown PLY type {parts[1]!r}")
                elements[-1][2].append((parts[2], parts[1]))
    if fmt not in ("ascii", "binary_little_endian"):
        raise FormatError(f"{path}: unsupported PLY format {fmt!r}")
    return fmt, elements


def load_labeled_cloud(path) -> LabeledPointCloud:
    """Read ``x, y, z, class_id`` and optional ``instance_id`` vertex properties."""
    with open(path, "rb") as fh:
        try:
            fmt, elements = _ply_header(fh, path)
        except (IndexError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"{path}: malformed PLY header") from exc
        body = fh.read()
    vertex = next((e for e in elements if e[0] == "vertex"), None)
    if vertex is None:
        raise FormatError(f"{path}: no vertex element")
    names = [p for p, _ in vertex[2]]
    for req in _PLY_REQUIRED:
        if req not in names:
            raise FormatError(f"{path}: missing required vertex property {req!r}")
    if fmt == "ascii":
        table = _ply_ascii_vertices(body, elements, path)
    else:
        table = _ply_binary_vertices(body, elements, path)
    inst = table["instance_id"] if "instance_id" in names else None
    cls = table["class_id"]
    if np.any(cls != np.round(cls)) or (inst is not None and np.any(inst != np.round(inst))):
        raise FormatError(f"{path}: class_id and instance_id must be integers")
    try:
        return LabeledPointCloud(np.column_stack([table["x"], table["y"], table["z"]]), cls, inst)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def _ply_ascii_vertices(body, elements, path):
    lines = body.decode("ascii", "replace").splitlines()
    lines = [ln for ln in lines if ln.strip()]
    start = 0
    for name, count, props in elements:
        if name == "vertex":
            rows = lines[start:start + count]
            if len(rows) < count:
                raise FormatError(f"{path}: expected {count} vertices, found {len(rows)}")
            if any(isinstance(t, tuple) for _, t in props):
                raise FormatError(f"{path}: list properties on vertices are not supported")
            try:
                arr = np.array([r.split() for r in rows], dtype=np.float64).reshape(count, len(props))
            except ValueError as exc:
                raise FormatError(f"{path}: bad vertex row: {exc}") from exc
            return {p: arr[:, j] for j, (p, _) in enumerate(props)}
        start += count
    raise FormatError(f"{path}: no vertex element")


def _ply_binary_vertices(body, elements, path):
    offset = 0
    for name, count, props in elements:
        if any(isinstance(t, tuple) for _, t in props):
            if name == "vertex":
                raise FormatError(f"{path}: list properties on vertices are not supported")
            raise FormatError(f"{path}: binary element {name!r} with list properties precedes vertices")
        dtype = np.dtype([(p, "<" + _PLY_TYPES[t]) for p, t in props])
        if name == "vertex":
            need = dtype.itemsize * count
            if len(body) - offset < need:
                raise FormatError(f"{path}: truncated vertex data")
            table = np.frombuffer(body, dtype=dtype, count=count, offset=offset)
            return {p: table[p].astype(np.float64) for p, _ in props}
        offset += dtype.itemsize * count
    raise FormatError(f"{path}: no vertex element")


def save_labeled_cloud(cloud: LabeledPointCloud, path, binary: bool = True):
    props = [("x", "double"), ("y", "double"), ("z", "double"), ("class_id", "ushort")]
    if cloud.instance_ids is not None:
        props.append(("instance_id", "ushort"))
    for ids in (cloud.class_ids, cloud.instance_ids):
        if ids is not None and ids.size and ids.max() > 65535:
            raise ValueError("ids must fit in uint16")
    header = ["ply", f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
              f"element vertex {len(cloud)}"]
    header += [f"property {t} {p}" for p, t in props]
    header.append("end_header")
    columns = [cloud.positions[:, 0], cloud.positions[:, 1], cloud.positions[:, 2], cloud.class_ids]
    if cloud.instance_ids is not None:
        columns.append(cloud.instance_ids)
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            table = np.empty(len(cloud), dtype=[(p, "<" + _PLY_TYPES[t]) for p, t in props])
            for (p, _), col in zip(props, columns):
                table[p] = col
            fh.write(table.tobytes())
        else:
            for row in zip(*columns):
                fh.write((" ".join(repr(float(v)) if j < 3 else str(int(v))
                                   for j, v in enumerate(row)) + "\n").encode("ascii"))


# --- TUM trajectories ------------------------------------------------------------

def load_trajectory(path) -> Trajectory:
    """``timestamp tx ty tz qx qy qz qw`` per line; ``#`` starts a comment."""
    stamps, pos, quat = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            cols = re.split(r"[\s,]+", text)
            if len(cols) != 8:
                raise FormatError(f"{path}: line {lineno}: expected 8 columns, found {len(cols)}")
            try:
                vals = [float(c) for c in cols]
            except ValueError as exc:
                raise FormatError(f"{path}: line {lineno}: {exc}") from exc
            if not all(math.isfinite(v) for v in vals):
                raise FormatError(f"{path}: line {lineno}: non-finite value")
            q = np.array([vals[7], vals[4], vals[5], vals[6]])
            norm = float(np.linalg.norm(q))
            if norm == 0.0:
                raise FormatError(f"{path}: line {lineno}: zero quaternion")
            if abs(norm - 1.0) > QUAT_WARN_TOL:
                warnings.warn(f"{path}: line {lineno}: quaternion norm {norm:.6g} renormalized",
                              stacklevel=2)
            if abs(norm - 1.0) > 1e-12:
                q = q / norm
            stamps.append(vals[0])
            pos.append(vals[1:4])
            quat.append(q)
    try:
        return Trajectory(stamps, np.array(pos).reshape(-1, 3), np.array(quat).reshape(-1, 4))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_trajectory(traj: Trajectory, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# timestamp tx ty tz qx qy qz qw\n")
        for t, p, q in zip(traj.timestamps, traj.positions, traj.quaternions):
            vals = [t, *p, q[1], q[2], q[3], q[0]]
            fh.write(" ".join(repr(float(v)) for v in vals) + "\n")


# --- PGM frames ------------------------------------------------------------------

def save_pgm(path, image, maxval: int):
    """Binary PGM; samples are big-endian 16-bit when ``maxval`` > 255."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM images are 2-D")
    if not 0 < maxval < 65536:
        raise ValueError("maxval must lie in [1, 65535]")
    if img.size and (img.min() < 0 or img.max() > maxval):
        raise ValueError(f"pixel values must lie in [0, {maxval}]")
    dtype = ">u2" if maxval > 255 else "u1"
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(img.astype(dtype).tobytes())


def load_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, pos = [], 0
    while len(tokens) < 4:
        m = re.compile(rb"\s*(#[^\n]*\n\s*)*(\S+)").match(data, pos)
        if m is None:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(m.group(2))
        pos = m.end()
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError(f"{path}: bad PGM header") from exc
    pos += 1  # single whitespace byte before the raster
    dtype = np.dtype(">u2" if maxval > 255 else "u1")
    need = w * h * dtype.itemsize
    if len(data) - pos < need:
        raise FormatError(f"{path}: truncated PGM raster")
    return np.frombuffer(data, dtype=dtype, count=w * h, offset=pos).reshape(h, w).astype(np.int64)


def _frame_paths(directory, stem):
    d = Path(directory)
    return d / f"{stem}_depth.pgm", d / f"{stem}_class.pgm", d / f"{stem}_instance.pgm"


def save_frame(frame: Frame, directory, stem: str):
    """Depth in millimetres (16-bit) and class/instance ids (8-bit).

    Depth is quantized to 1 mm; poses are stored separately in TUM files.
    """
    dpath, cpath, ipath = _frame_paths(directory, stem)
    depth_mm = np.clip(np.round(frame.depth * DEPTH_SCALE), 0, 65535)
    save_pgm(dpath, depth_mm, 65535)
    save_pgm(cpath, frame.class_image, 255)
    save_pgm(ipath, frame.instance_image, 255)


def load_frame(directory, stem: str, pose: RigidPose | None = None) -> Frame:
    dpath, cpath, ipath = _frame_paths(directory, stem)
    depth = load_pgm(dpath) / DEPTH_SCALE
    cls, inst = load_pgm(cpath), load_pgm(ipath)
    if not depth.shape == cls.shape == inst.shape:
        raise FormatError(f"{directory}/{stem}: image sizes differ")
    return Frame(depth, cls, inst, pose if pose is not None else RigidPose.identity())


# --- scenes ------------------------------------------------------------------------

def scene_to_dict(scene: Scene) -> dict:
    gt = object_map_to_dict(scene.ground_truth_map())
    for entry, o in zip(gt["objects"], scene.objects):
        entry["instance_id"] = int(o.instance_id)
    return {"room_lo": _floats(scene.room_lo), "room_hi": _floats(scene.room_hi),
            "class_vocabulary": gt["class_vocabulary"], "objects": gt["objects"]}


def scene_from_dict(data, source="<scene>") -> Scene:
    m = object_map_from_dict(data, source)
    try:
        objs = [SceneObject(c, int(e["instance_id"])) for c, e in zip(m.objects, data["objects"])]
        return Scene(objs, data["room_lo"], data["room_hi"], m.class_vocabulary)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{source}: {exc}") from exc


def load_scene(path) -> Scene:
    return scene_from_dict(_read_json(path), str(path))


def save_scene(scene: Scene, path):
    _write_json(scene_to_dict(scene), path)


# --- curves --------------------------------------------------------------------------

def save_curve_csv(curve: PRCurve, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["recall", "precision"])
        for r, p in zip(curve.recall, curve.precision):
            w.writerow([repr(float(r)), repr(float(p))])


def load_curve_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["recall", "precision"]:
        raise FormatError(f"{path}: expected header 'recall,precision'")
    try:
        vals = np.array([[float(a), float(b)] for a, b in rows[1:]]).reshape(-1, 2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return vals[:, 0], vals[:, 1]


# --- ablation configs and reports ---------------------------------------------------

_NESTED = {"seg_noise": SegNoiseParams, "pose_noise": PoseNoiseParams,
           "cluster": ClusterParams, "intrinsics": CameraIntrinsics}


def config_to_dict(config) -> dict:
    out = {}
    for f in fields(config):
        v = getattr(config, f.name)
        out[f.name] = asdict(v) if f.name in _NESTED else (list(v) if isinstance(v, tuple) else v)
    out["n_objects"] = list(config.n_objects)
    return out


def config_from_dict(data, source="<config>"):
    if not isinstance(data, dict):
        raise FormatError(f"{source}: expected a JSON object")
    known = {f.name for f in fields(AblationConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise FormatError(f"{source}: unknown config keys {unknown}")
    kw = {}
    try:
        for key, value in data.items():
            if key in _NESTED:
                kw[key] = _NESTED[key](**value)
            elif key in ("seeds", "cases", "classes", "n_objects"):
                kw[key] = tuple(value)
            else:
                kw[key] = value
        return AblationConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{source}: {exc}") from exc


def load_config(path):
    return config_from_dict(_read_json(path), str(path))


def save_config(config, path):
    _write_json(config_to_dict(config), path)


def curve_filename(seed: int, case: str, label: str) -> str:
    return f"seed{seed}_case{case}_{label}.csv"


def report_to_dict(report) -> dict:
    vocab = None
    results = []
    for r in report.results:
        vocab = r.object_map.class_vocabulary
        names = [BACKGROUND_NAME] + list(vocab)
        results.append({
            "seed": r.seed,
            "case": r.case,
            "n_objects": len(r.object_map),
            "map3d": r.scores.map3d,
            "map25": r.scores.map25,
            "map50": r.scores.map50,
            "per_class_ap": {names[c]: _floats(ap) for c, ap in r.scores.per_class_ap.items()},
            "omq": {k: getattr(r.omq, k) for k in ("omq", "mPOQ", "mLQ", "mSQ", "mFPQ",
                                                   "n_tp", "n_fn", "n_fp")},
            "trajectory": asdict(r.traj_error),
            "ratios": dict(r.ratios),
            "curves": {label: {"ap": c.ap, "file": "curves/" + curve_filename(r.seed, r.case, label)}
                       for label, c in r.curves.items()},
        })
    return {"config": config_to_dict(report.config), "results": results,
            "mean_ratios": report.mean_ratios}


def save_report(report, out_dir) -> Path:
    """Write ``report.json`` plus one curve CSV per (seed, case, curve)."""
    out = Path(out_dir)
    curves = out / "curves"
    curves.mkdir(parents=True, exist_ok=True)
    for r in report.results:
        for label, c in r.curves.items():
            save_curve_csv(c, curves / curve_filename(r.seed, r.case, label))
    path = out / "report.json"
    _write_json(report_to_dict(report), path)
    return path


def load_report_dict(path) -> dict:
    return _read_json(path)


__all__ = [
    "DEPTH_SCALE", "config_from_dict", "config_to_dict", "curve_filename",
    "load_config", "load_curve_csv", "load_frame", "load_labeled_cloud",
    "load_object_map", "load_pgm", "load_report_dict", "load_scene",
    "load_trajectory", "object_map_from_dict", "object_map_to_dict",
    "report_to_dict", "save_config", "save_curve_csv", "save_frame",
    "save_labeled_cloud", "save_object_map", "save_pgm", "save_report",
    "save_scene", "save_trajectory", "scene_from_dict", "scene_to_dict",
]
