"""Triangle surface meshes partitioned into named electrodes."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import GeometryError

AREA_EPS = 1e-30


@dataclass
class ElectrodeGeometry:
    """Closed triangle mesh with one electrode label per triangle.

    Triangles are wound counter-clockwise when seen from outside the
    conductor, so ``normals`` point out of the metal into the field region.

    Parameters
    ----------
    vertices : ndarray, shape (V, 3)
        Vertex coordinates in metres.
    triangles : ndarray of int, shape (T, 3)
        Vertex indices.
    electrode_names : list of str
        Distinct electrode labels in a fixed order.
    electrode_id : ndarray of int, shape (T,)
        Index into ``electrode_names`` per triangle.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    electrode_names: list
    electrode_id: np.ndarray
    normals: np.ndarray = field(init=False)
    areas: np.ndarray = field(init=False)
    centroids: np.ndarray = field(init=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        self.electrode_id = np.ascontiguousarray(self.electrode_id, dtype=np.int64)
        self.electrode_names = list(self.electrode_names)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise GeometryError("vertices must have shape (V, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise GeometryError("triangles must have shape (T, 3)")
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise GeometryError("triangle vertex index out of range")
        if self.electrode_id.shape != (len(self.triangles),):
            raise GeometryError("one electrode label per triangle required")
        if len(set(self.electrode_names)) != len(self.electrode_names):
            raise GeometryError("duplicate electrode names")
        counts = np.bincount(self.electrode_id, minlength=len(self.electrode_names))
        if len(counts) > len(self.electrode_names) or np.any(counts == 0):
            empty = [n for n, c in zip(self.electrode_names, counts) if c == 0]
            raise GeometryError(f"electrodes without triangles or unknown labels: {empty}")
        v = self.vertices[self.triangles]
        cr = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        nrm = np.linalg.norm(cr, axis=1)
        scale = np.max(np.linalg.norm(v[:, 1] - v[:, 0], axis=1) ** 2, initial=1.0)
        bad = np.flatnonzero(nrm <= max(AREA_EPS, 1e-14 * scale))
        if bad.size:
            raise GeometryError(f"degenerate triangle(s): {bad[:10].tolist()}")
        self.areas = 0.5 * nrm
        self.normals = cr / nrm[:, None]
        self.centroids = v.mean(axis=1)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @property
    def corners(self) -> np.ndarray:
        """Triangle vertex coordinates, shape (T, 3, 3)."""
        return self.vertices[self.triangles]

    @property
    def electrodes(self) -> dict:
        """Mapping electrode name -> triangle indices."""
        return {n: np.flatnonzero(self.electrode_id == k) for k, n in enumerate(self.electrode_names)}

    def element_voltages(self, voltages: dict) -> np.ndarray:
        """Per-triangle values from a per-electrode mapping (missing names -> 0)."""
        unknown = set(voltages) - set(self.electrode_names)
        if unknown:
            raise GeometryError(f"unknown electrode(s): {sorted(unknown)}")
        per = np.array([float(voltages.get(n, 0.0)) for n in self.electrode_names])
        return per[self.electrode_id]

    # --- serialisation -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "electrodes": {n: idx.tolist() for n, idx in self.electrodes.items()},
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def from_dict(cls, d: dict) -> "ElectrodeGeometry":
        try:
            verts = np.asarray(d["vertices"], dtype=float)
            tris = np.asarray(d["triangles"], dtype=np.int64)
            elec = d["electrodes"]
        except (KeyError, TypeError, ValueError) as exc:
            raise GeometryError(f"malformed geometry document: {exc}") from None
        ids = np.full(len(tris), -1, dtype=np.int64)
        names = list(elec)
        for k, n in enumerate(names):
            idx = np.asarray(elec[n], dtype=np.int64)
            if idx.size and (idx.min() < 0 or idx.max() >= len(tris)):
                raise GeometryError(f"electrode {n!r} references a missing triangle")
            if np.any(ids[idx] >= 0):
                raise GeometryError(f"triangle assigned to several electrodes (electrode {n!r})")
            ids[idx] = k
        if np.any(ids < 0):
            raise GeometryError("every triangle must belong to an electrode")
        return cls(verts, tris, names, ids)

    @classmethod
    def load(cls, path) -> "ElectrodeGeometry":
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise GeometryError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(d)


def merge(parts) -> ElectrodeGeometry:
    """Concatenate meshes; triangles keep their electrode labels (same name = same electrode)."""
    names: list = []
    verts, tris, ids = [], [], []
    offset = 0
    for g in parts:
        for n in g.electrode_names:
            if n not in names:
                names.append(n)
        remap = np.array([names.index(n) for n in g.electrode_names])
        verts.append(g.vertices)
        tris.append(g.triangles + offset)
        ids.append(remap[g.electrode_id])
        offset += len(g.vertices)
    return ElectrodeGeometry(np.vstack(verts), np.vstack(tris), names, np.concatenate(ids))


def _orient(vertices, triangles, outward):
    """Flip triangles whose normal opposes the given per-triangle outward direction."""
    v = vertices[triangles]
    cr = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    flip = np.einsum("ij,ij->i", cr, outward) < 0
    tri = triangles.copy()
    tri[flip] = tri[flip][:, [0, 2, 1]]
    return tri


def icosphere(radius: float = 1.0, level: int = 3, center=(0.0, 0.0, 0.0), name: str = "sphere") -> ElectrodeGeometry:
    """Subdivided icosahedron projected onto a sphere (20 * 4**level triangles)."""
    t = (1 + np.sqrt(5)) / 2
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
             (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    v = [np.array(p, float) / np.linalg.norm(p) for p in verts]
    for _ in range(level):
        cache: dict = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = v[i] + v[j]
                v.append(m / np.linalg.norm(m))
                cache[key] = len(v) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    V = np.array(v) * radius
    F = np.array(faces, dtype=np.int64)
    F = _orient(V, F, V[F].mean(axis=1))
    V = V + np.asarray(center, float)
    return ElectrodeGeometry(V, F, [name], np.zeros(len(F), dtype=np.int64))


def cylinder(center_yz, radius: float, x_breaks, labels, n_phi: int = 12, n_per_section=4,
             cap_labels=None) -> ElectrodeGeometry:
    """Closed faceted cylinder along x, split axially into labelled sections.

    Parameters
    ----------
    center_yz : (float, float)
        Axis position in the yz plane.
    x_breaks : sequence of float
        Increasing section boundaries along x (m).
    labels : sequence of str
        Electrode label per section (``len(x_breaks) - 1`` entries).
    n_per_section : int or sequence of int
        Axial divisions per section.
    cap_labels : (str, str), optional
        Labels of the end discs; default: the adjacent section labels.
    """
    x_breaks = np.asarray(x_breaks, float)
    nsec = len(x_breaks) - 1
    if len(labels) != nsec:
        raise GeometryError("one label per axial section required")
    if np.isscalar(n_per_section):
        n_per_section = [int(n_per_section)] * nsec
    xs, sec_of_ring = [x_breaks[0]], []
    for s in range(nsec):
        pts = np.linspace(x_breaks[s], x_breaks[s + 1], n_per_section[s] + 1)[1:]
        xs.extend(pts)
        sec_of_ring.extend([s] * n_per_section[s])
    xs = np.array(xs)
    y0, z0 = center_yz
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    ring = np.column_stack([y0 + radius * np.cos(phi), z0 + radius * np.sin(phi)])
    verts = [np.column_stack([np.full(n_phi, x), ring]) for x in xs]
    V = np.vstack(verts + [np.array([[xs[0], y0, z0], [xs[-1], y0, z0]])])
    c0, c1 = len(xs) * n_phi, len(xs) * n_phi + 1
    names = list(dict.fromkeys(labels))
    tris, ids, outward = [], [], []
    for i in range(len(xs) - 1):
        lab = names.index(labels[sec_of_ring[i]])
        for k in range(n_phi):
            a, b = i * n_phi + k, i * n_phi + (k + 1) % n_phi
            c, d = a + n_phi, b + n_phi
            for t in ((a, c, d), (a, d, b)):
                tris.append(t)
                ids.append(lab)
    caps = cap_labels or (labels[0], labels[-1])
    for lab_name in caps:
        if lab_name not in names:
            names.append(lab_name)
    for k in range(n_phi):
        kn = (k + 1) % n_phi
        tris.append((c0, k, kn))
        ids.append(names.index(caps[0]))
        last = (len(xs) - 1) * n_phi
        tris.append((c1, last + k, last + kn))
        ids.append(names.index(caps[1]))
    T = np.array(tris, dtype=np.int64)
    cent = V[T].mean(axis=1)
    outward = np.zeros_like(cent)
    lateral = np.arange(len(T)) < (len(xs) - 1) * n_phi * 2
    outward[lateral, 1] = cent[lateral, 1] - y0
    outward[lateral, 2] = cent[lateral, 2] - z0
    outward[~lateral, 0] = np.sign(cent[~lateral, 0] - 0.5 * (xs[0] + xs[-1]))
    T = _orient(V, T, outward)
    return ElectrodeGeometry(V, T, names, np.array(ids))


@dataclass(frozen=True)
class TrapLayout:
    """Dimensions of the four-rod segmented linear trap (metres)."""

    rod_radius: float = 0.5e-3
    axis_clearance: float = 1.5e-3
    segment_width: float = 2.0e-3
    n_segments: int = 5
    n_phi: int = 12
    n_per_segment: int = 4

    @property
    def rod_center_distance(self) -> float:
        return self.axis_clearance + self.rod_radius

    @property
    def length(self) -> float:
        return self.segment_width * self.n_segments

    @property
    def dc_names(self) -> list:
        return [f"dc{k + 1}" for k in range(self.n_segments)]


def five_segment_trap(layout: TrapLayout | None = None, refine: int = 1) -> ElectrodeGeometry:
    """Four-rod linear trap with two segmented dc rods and two rf rods.

    Rods run along x.  The rf rods sit on the y axis at +-d, the dc rods on
    the z axis at +-d, with d = clearance + radius.  Segment k of both dc
    rods forms electrode ``dc{k}``; segment 3 is centred at x = 0.
    ``refine`` multiplies the axial division count.
    """
    L = layout or TrapLayout()
    d = L.rod_center_distance
    half = L.length / 2
    breaks = -half + L.segment_width * np.arange(L.n_segments + 1)
    nps = L.n_per_segment * refine
    parts = []
    for zc in (d, -d):
        parts.append(cylinder((0.0, zc), L.rod_radius, breaks, L.dc_names, L.n_phi, nps))
    rf_breaks = [-half, half]
    for yc in (d, -d):
        parts.append(cylinder((yc, 0.0), L.rod_radius, rf_breaks, ["rf"], L.n_phi, nps * L.n_segments))
    return merge(parts)
