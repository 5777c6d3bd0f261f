"""Synthetic spine geometry: landmark generation and Cobb angle measurement.

A spine is 17 vertebrae, each a rotated rectangle described by its four
corner landmarks in image coordinates (h grows rightward, v grows
downward).  The angle oracle measures vertebra slopes from the top and
bottom edges and derives the three clinical angles (top, main, bottom) by
maximizing slope differences, which makes generated annotations exactly
self-consistent: the stored angles are the oracle applied to the stored
landmarks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, GeometryError, ModeError, ParameterError, ShapeError

N_VERTEBRAE = 17
CORNERS_PER_VERTEBRA = 4  # stored in order: top-left, top-right, bottom-left, bottom-right
N_LANDMARKS = N_VERTEBRAE * CORNERS_PER_VERTEBRA
LABEL_LENGTH = 2 * N_LANDMARKS + 3  # h block, v block, then (top, main, bottom) angles

ANNOTATION_MAGIC = "s2vr-annotations v1"


@dataclass
class SpineAnnotation:
    """Landmarks of one spine (17 x 4 x 2, (h, v) per corner) plus its three angles."""

    landmarks: np.ndarray
    angles: np.ndarray

    def __post_init__(self) -> None:
        self.landmarks = np.asarray(self.landmarks, dtype=float)
        self.angles = np.asarray(self.angles, dtype=float)
        if self.landmarks.shape != (N_VERTEBRAE, CORNERS_PER_VERTEBRA, 2):
            raise ShapeError(
                f"landmarks must be {N_VERTEBRAE}x{CORNERS_PER_VERTEBRA}x2, got {self.landmarks.shape}"
            )
        if self.angles.shape != (3,):
            raise ShapeError(f"angles must have 3 entries, got {self.angles.shape}")

    def label_vector(self) -> np.ndarray:
        """Flatten to [h_1..h_68, v_1..v_68, top, main, bottom] (length 139)."""
        pts = self.landmarks.reshape(N_LANDMARKS, 2)
        return np.concatenate([pts[:, 0], pts[:, 1], self.angles])

    @classmethod
    def from_label_vector(cls, vec: np.ndarray) -> "SpineAnnotation":
        vec = np.asarray(vec, dtype=float).ravel()
        if vec.size != LABEL_LENGTH:
            raise ShapeError(f"label vector must have length {LABEL_LENGTH}, got {vec.size}")
        pts = np.stack([vec[:N_LANDMARKS], vec[N_LANDMARKS : 2 * N_LANDMARKS]], axis=1)
        return cls(pts.reshape(N_VERTEBRAE, CORNERS_PER_VERTEBRA, 2), vec[-3:])


@dataclass
class SpineShapeParams:
    """Parameters of the sinusoidal lateral-offset spine generator.

    The spine axis runs vertically; its lateral offset is a sum of up to
    three sine terms over the normalized arc position.  Vertebra tilt
    follows the local curve direction plus a bounded per-vertebra jitter.
    scale/shift apply a global similarity transform about the frame center.
    """

    amplitudes: tuple[float, float, float] = (6.0, 1.0, 0.0)
    phases: tuple[float, float, float] = (0.0, 0.0, 0.0)
    vertebra_width: float = 24.0
    vertebra_height: float = 8.0
    gap: float = 6.0
    rot_jitter_deg: float = 0.0
    scale: float = 1.0
    shift: tuple[float, float] = (0.0, 0.0)
    frame: tuple[int, int] = (64, 256)
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.amplitudes) != 3 or len(self.phases) != 3:
            raise ParameterError("amplitudes and phases must each have 3 entries")
        if self.vertebra_width <= 0 or self.vertebra_height <= 0 or self.gap <= 0:
            raise ParameterError("vertebra dimensions and gap must be positive")
        if self.rot_jitter_deg < 0:
            raise ParameterError("rotation jitter must be nonnegative")
        if self.scale <= 0:
            raise ParameterError("scale must be positive")


def _edge_angle_deg(edge: np.ndarray) -> float:
    """Signed angle of an undirected edge versus horizontal, in (-90, 90]."""
    dh, dv = float(edge[0]), float(edge[1])
    if dh == 0.0 and dv == 0.0:
        raise GeometryError("degenerate vertebra: coincident corners")
    a = math.degrees(math.atan2(dv, dh))
    if a > 90.0:
        a -= 180.0
    elif a <= -90.0:
        a += 180.0
    return a


def vertebra_slope(corners: np.ndarray) -> float:
    """Vertebra tilt in degrees: mean of the top-edge and bottom-edge angles.

    corners is 4 x 2 ordered (top-left, top-right, bottom-left, bottom-right).
    A rectangle rotated by theta has slope exactly theta; a sheared
    quadrilateral averages its two edge angles.
    """
    corners = np.asarray(corners, dtype=float)
    if corners.shape != (CORNERS_PER_VERTEBRA, 2):
        raise ShapeError(f"corners must be 4x2, got {corners.shape}")
    top = _edge_angle_deg(corners[1] - corners[0])
    bottom = _edge_angle_deg(corners[3] - corners[2])
    return 0.5 * (top + bottom)


def _line_angle_diff(a: float, b: float) -> float:
    """Acute angle between two line orientations given in degrees."""
    d = abs(a - b)
    return min(d, 180.0 - d)


def cobb_from_landmarks(landmarks: np.ndarray) -> np.ndarray:
    """(top, main, bottom) angles in degrees from 17 x 4 x 2 landmarks.

    The main angle is the largest pairwise slope difference; its argmax pair
    (smallest indices on ties) splits the spine, and the top/bottom angles
    are the largest slope differences against the upper/lower end vertebra
    within the regions above/below the split.
    """
    landmarks = np.asarray(landmarks, dtype=float)
    if landmarks.shape != (N_VERTEBRAE, CORNERS_PER_VERTEBRA, 2):
        raise ShapeError(
            f"landmarks must be {N_VERTEBRAE}x{CORNERS_PER_VERTEBRA}x2, got {landmarks.shape}"
        )
    slopes = [vertebra_slope(landmarks[i]) for i in range(N_VERTEBRAE)]
    main = -1.0
    i_star, j_star = 0, 1
    for i in range(N_VERTEBRAE):
        for j in range(i + 1, N_VERTEBRAE):
            d = _line_angle_diff(slopes[i], slopes[j])
            if d > main:
                main, i_star, j_star = d, i, j
    top = max(_line_angle_diff(slopes[k], slopes[i_star]) for k in range(i_star + 1))
    bottom = max(_line_angle_diff(slopes[k], slopes[j_star]) for k in range(j_star, N_VERTEBRAE))
    return np.array([top, main, bottom])


def generate_spine(params: SpineShapeParams) -> SpineAnnotation:
    """Deterministically generate one spine from its shape parameters.

    Raises a parameter error if the requested shape makes consecutive
    vertebrae overlap vertically.  The stored angles are the measurement
    oracle applied to the generated landmarks (bit-exact closure).
    """
    rng = np.random.default_rng([params.seed, 0x5B1]) if params.rot_jitter_deg > 0 else None
    w2 = 0.5 * params.vertebra_width
    h2 = 0.5 * params.vertebra_height
    span = (N_VERTEBRAE - 1) * (params.vertebra_height + params.gap)
    width, height = params.frame
    v0 = 0.5 * (height - span)
    center_h = 0.5 * width
    a1, a2, a3 = params.amplitudes
    p1, p2, p3 = params.phases
    landmarks = np.empty((N_VERTEBRAE, CORNERS_PER_VERTEBRA, 2))
    for i in range(N_VERTEBRAE):
        t = i / (N_VERTEBRAE - 1)
        off = (
            a1 * math.sin(math.pi * t + p1)
            + a2 * math.sin(2.0 * math.pi * t + p2)
            + a3 * math.sin(3.0 * math.pi * t + p3)
        )
        doff = (
            a1 * math.pi * math.cos(math.pi * t + p1)
            + a2 * 2.0 * math.pi * math.cos(2.0 * math.pi * t + p2)
            + a3 * 3.0 * math.pi * math.cos(3.0 * math.pi * t + p3)
        )
        tilt = math.atan2(doff, span)
        if rng is not None:
            tilt += math.radians(rng.uniform(-params.rot_jitter_deg, params.rot_jitter_deg))
        c = np.array([center_h + off, v0 + i * (params.vertebra_height + params.gap)])
        u = np.array([math.cos(tilt), math.sin(tilt)])  # vertebra long axis
        nrm = np.array([-math.sin(tilt), math.cos(tilt)])  # toward larger v
        landmarks[i, 0] = c - w2 * u - h2 * nrm
        landmarks[i, 1] = c + w2 * u - h2 * nrm
        landmarks[i, 2] = c - w2 * u + h2 * nrm
        landmarks[i, 3] = c + w2 * u + h2 * nrm
    fc = np.array([0.5 * width, 0.5 * height])
    landmarks = (landmarks - fc) * params.scale + fc + np.asarray(params.shift, dtype=float)
    for i in range(N_VERTEBRAE - 1):
        if landmarks[i + 1, :, 1].min() - landmarks[i, :, 1].max() <= 0.0:
            raise ParameterError(
                f"vertebrae {i} and {i + 1} overlap; reduce amplitudes/jitter or widen the gap"
            )
    return SpineAnnotation(landmarks=landmarks, angles=cobb_from_landmarks(landmarks))


def consistency_gap(prediction: np.ndarray) -> np.ndarray:
    """Per-angle gap |predicted angles - oracle(predicted landmarks)| for one joint prediction."""
    vec = np.asarray(prediction, dtype=float).ravel()
    if vec.size != LABEL_LENGTH:
        raise ModeError(
            f"consistency gap needs a joint label vector of length {LABEL_LENGTH}, got {vec.size}"
        )
    ann = SpineAnnotation.from_label_vector(vec)
    return np.abs(ann.angles - cobb_from_landmarks(ann.landmarks))


# ----------------------------------------------------------------------
# annotation file format: '#' header lines, then one comma-separated
# record of 136 landmark floats + 3 angle floats per sample
# ----------------------------------------------------------------------


def format_float(x: float) -> str:
    """Shortest decimal that round-trips the exact float64 value."""
    return repr(float(x))


def write_annotations(
    path,
    labels: np.ndarray,
    pipeline: str = "",
    magic: str = ANNOTATION_MAGIC,
) -> None:
    """Write a label matrix (139 x N, one sample per column) as an annotation file."""
    labels = np.asarray(labels, dtype=float)
    if labels.ndim != 2 or labels.shape[0] != LABEL_LENGTH:
        raise ShapeError(f"label matrix must be {LABEL_LENGTH} x N, got {labels.shape}")
    n = labels.shape[1]
    lines = [
        f"# {magic}",
        f"# pipeline={pipeline}",
        "# columns=h_1..h_68,v_1..v_68,angle_top,angle_main,angle_bottom",
        f"# count={n}",
    ]
    for i in range(n):
        lines.append(",".join(format_float(x) for x in labels[:, i]))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_annotations(path, magic: str = ANNOTATION_MAGIC) -> tuple[np.ndarray, dict]:
    """Read an annotation file back into a (139 x N) label matrix plus header metadata."""
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.read().splitlines()
    header: dict[str, str] = {}
    rows: list[np.ndarray] = []
    tagged = False
    for line in raw:
        if line.startswith("#"):
            body = line[1:].strip()
            if body == magic:
                tagged = True
            elif "=" in body:
                k, v = body.split("=", 1)
                header[k.strip()] = v.strip()
            continue
        if not line.strip():
            continue
        vals = np.array([float(tok) for tok in line.split(",")], dtype=float)
        if vals.size != LABEL_LENGTH:
            raise FormatError(f"record has {vals.size} fields, expected {LABEL_LENGTH}")
        rows.append(vals)
    if not tagged:
        raise FormatError(f"missing '{magic}' header")
    if "count" in header and int(header["count"]) != len(rows):
        raise FormatError(f"header count={header['count']} but file has {len(rows)} records")
    if rows:
        labels = np.stack(rows, axis=1)
    else:
        labels = np.empty((LABEL_LENGTH, 0))
    return labels, header
