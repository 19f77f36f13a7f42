"""Object-detection path: a statistically parameterized detector behind a
pluggable interface, confidence filtering, a deduplicating announcer, and a
precision/recall scorer.

The detector is a sampling model, not a network: each truth object is
detected with a per-class recall probability, detected labels pass through a
row-stochastic confusion matrix, and spurious detections arrive as a Poisson
stream. Boxes come from a fixed pinhole-ish projection of truth geometry in
the camera frame (x forward, y left), so scorer and detector share one
convention. The RNG draw order inside simulate_detections is part of the
determinism contract; do not reorder draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .world import CLASS_LABELS, SceneObject, WorldState

DEFAULT_FOV_DEG = 60.0
DEFAULT_RANGE_M = 5.0
DEFAULT_CONFIDENCE_THRESHOLD = 0.5
DEFAULT_IOU_THRESHOLD = 0.5
DEFAULT_BOX_JITTER = 0.05
DEFAULT_COOLDOWN_S = 5.0
PERCEPTION_CADENCE_S = 0.2

# Label used in confusion-matrix reports for "no truth" / "no detection".
BACKGROUND = "(none)"

Box = tuple[float, float, float, float]  # (cx, cy, w, h), all normalized


@dataclass(frozen=True)
class Detection:
    class_label: str
    confidence: float
    box: Box
    frame_id: int

    def __post_init__(self) -> None:
        if self.class_label not in CLASS_LABELS:
            raise ValueError(f"unknown class label {self.class_label!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")
        cx, cy, w, h = self.box
        if not all(0.0 <= v <= 1.0 for v in self.box):
            raise ValueError("box coordinates must lie in [0, 1]")
        if w <= 0.0 or h <= 0.0:
            raise ValueError("box extent must be positive")


def identity_confusion() -> np.ndarray:
    return np.eye(len(CLASS_LABELS))


@dataclass(frozen=True)
class DetectorParams:
    """Statistical description of a detector's behavior.

    Confidence distributions are uniform ranges; TPs and FPs get separate
    ranges so a downstream threshold separates them imperfectly, the way a
    score histogram would.
    """

    recall_per_class: Mapping[str, float]
    false_positive_rate: float
    confusion: np.ndarray = field(default_factory=identity_confusion)
    tp_confidence: tuple[float, float] = (0.55, 0.99)
    fp_confidence: tuple[float, float] = (0.05, 0.95)
    box_jitter: float = DEFAULT_BOX_JITTER
    seed: int = 0

    def __post_init__(self) -> None:
        for label in CLASS_LABELS:
            r = self.recall_per_class.get(label)
            if r is None or not 0.0 <= r <= 1.0:
                raise ValueError(f"recall for {label!r} missing or out of [0, 1]")
        if self.false_positive_rate < 0.0:
            raise ValueError("false_positive_rate must be non-negative")
        n = len(CLASS_LABELS)
        if self.confusion.shape != (n, n):
            raise ValueError(f"confusion must be {n}x{n}")
        if np.any(self.confusion < 0.0) or np.any(self.confusion > 1.0):
            raise ValueError("confusion entries must lie in [0, 1]")
        rows = self.confusion.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-9):
            raise ValueError("confusion rows must sum to 1")
        for lo, hi in (self.tp_confidence, self.fp_confidence):
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError("confidence ranges must be ordered within [0, 1]")
        if not 0.0 <= self.box_jitter < 0.5:
            raise ValueError("box_jitter must lie in [0, 0.5)")


def uniform_recall(value: float) -> dict[str, float]:
    return {label: value for label in CLASS_LABELS}


def fp_rate_for_precision(
    recall: float,
    precision_target: float,
    fp_confidence: tuple[float, float] = (0.05, 0.95),
    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
    mean_objects_per_frame: float = 1.0,
) -> float:
    """Poisson FP rate that yields a target precision in expectation.

    With identity confusion and TP confidences above the threshold,
    E[TP] = n * r per frame and E[kept FP] = lambda * q where q is the
    fraction of the FP confidence range at or above the threshold. Setting
    precision = E[TP] / (E[TP] + E[kept FP]) and solving gives
    lambda = n * r * (1 - P) / (P * q).
    """
    if not 0.0 < precision_target <= 1.0:
        raise ValueError("precision_target must lie in (0, 1]")
    lo, hi = fp_confidence
    if hi <= lo:
        raise ValueError("degenerate fp confidence range")
    q = max(0.0, min(hi, 1.0) - max(lo, threshold)) / (hi - lo)
    if q == 0.0:
        raise ValueError("threshold removes all false positives; precision "
                         "target is unreachable by rate calibration")
    expected_tp = mean_objects_per_frame * recall
    return expected_tp * (1.0 - precision_target) / (precision_target * q)


def to_camera_frame(state: WorldState, obj: SceneObject) -> SceneObject:
    """Re-express a world-frame object in the chair's camera frame."""
    dx, dy = obj.x - state.x, obj.y - state.y
    ch, sh = math.cos(state.heading), math.sin(state.heading)
    return SceneObject(obj.class_label, dx * ch + dy * sh, -dx * sh + dy * ch, obj.extent)


def project_box(obj: SceneObject, fov_deg: float = DEFAULT_FOV_DEG,
                range_m: float = DEFAULT_RANGE_M) -> Box | None:
    """Project a camera-frame object to a normalized image box.

    Bearing maps linearly across the horizontal field of view, apparent
    height follows distance, and apparent width shrinks as 1/distance.
    None for degenerate geometry (object at the camera origin).
    """
    d = math.hypot(obj.x, obj.y)
    if d == 0.0:
        return None
    fov = math.radians(fov_deg)
    bearing = math.atan2(obj.y, obj.x)
    cx = 0.5 - bearing / fov
    cy = 0.75 - 0.5 * min(d / range_m, 1.0)
    w = min(max(obj.extent / (d * fov), 0.02), 0.4)
    h = min(max(1.4 * w, 0.02), 0.5)
    cx = min(max(cx, 0.0), 1.0)
    cy = min(max(cy, 0.0), 1.0)
    return (cx, cy, w, h)


def _sample_label(row: np.ndarray, u: float) -> str:
    acc = 0.0
    for i, p in enumerate(row):
        acc += p
        if u <= acc:
            return CLASS_LABELS[i]
    return CLASS_LABELS[-1]


def simulate_detections(
    truth: Sequence[SceneObject],
    params: DetectorParams,
    frame_id: int,
    rng: np.random.Generator,
    fov_deg: float = DEFAULT_FOV_DEG,
    range_m: float = DEFAULT_RANGE_M,
) -> list[Detection]:
    """One frame of synthetic detections for camera-frame truth objects.

    Draw order per truth object: detection Bernoulli, confusion label,
    confidence, four box-jitter values. Then one Poisson draw for the FP
    count and, per FP, label, confidence, and four box values.
    """
    out: list[Detection] = []
    j = params.box_jitter
    for obj in truth:
        detected = rng.random() < params.recall_per_class[obj.class_label]
        if not detected:
            continue
        row = params.confusion[CLASS_LABELS.index(obj.class_label)]
        label = _sample_label(row, rng.random())
        conf = rng.uniform(*params.tp_confidence)
        box = project_box(obj, fov_deg, range_m)
        if box is None:
            continue
        cx, cy, w, h = box
        if j > 0.0:
            dx, dy, dw, dh = rng.uniform(-j, j, 4)
            cx, cy = cx + dx * w, cy + dy * h
            w, h = w * (1.0 + dw), h * (1.0 + dh)
        out.append(Detection(
            label, float(conf),
            (min(max(cx, 0.0), 1.0), min(max(cy, 0.0), 1.0),
             min(max(w, 0.005), 1.0), min(max(h, 0.005), 1.0)),
            frame_id,
        ))
    for _ in range(rng.poisson(params.false_positive_rate)):
        label = CLASS_LABELS[rng.integers(0, len(CLASS_LABELS))]
        conf = rng.uniform(*params.fp_confidence)
        cx, cy = rng.uniform(0.0, 1.0, 2)
        w = rng.uniform(0.02, 0.4)
        h = rng.uniform(0.02, 0.5)
        out.append(Detection(label, float(conf),
                             (float(cx), float(cy), float(w), float(h)), frame_id))
    return out


def filter_detections(dets: Sequence[Detection], threshold: float) -> list[Detection]:
    """Boundary-inclusive confidence cut, order-preserving."""
    return [d for d in dets if d.confidence >= threshold]


@dataclass(frozen=True)
class Utterance:
    text: str
    timestamp: float


@dataclass
class AnnouncerState:
    last_announced: dict[str, float] = field(default_factory=dict)
    cooldown_s: float = DEFAULT_COOLDOWN_S

    def __post_init__(self) -> None:
        if self.cooldown_s <= 0:
            raise ValueError("cooldown must be positive")


def announce(dets: Sequence[Detection], state: AnnouncerState,
             now: float) -> tuple[AnnouncerState, list[Utterance]]:
    """Emit each distinct class at most once per cooldown window.

    Returns updated state; emission order follows first appearance in the
    detection list.
    """
    new_times = dict(state.last_announced)
    utterances: list[Utterance] = []
    seen: set[str] = set()
    for det in dets:
        label = det.class_label
        if label in seen:
            continue
        seen.add(label)
        last = new_times.get(label)
        if last is None or now - last >= state.cooldown_s:
            utterances.append(Utterance(label, now))
            new_times[label] = now
    return AnnouncerState(new_times, state.cooldown_s), utterances


def iou(a: Box, b: Box) -> float:
    ax1, ay1 = a[0] - a[2] / 2, a[1] - a[3] / 2
    ax2, ay2 = a[0] + a[2] / 2, a[1] + a[3] / 2
    bx1, by1 = b[0] - b[2] / 2, b[1] - b[3] / 2
    bx2, by2 = b[0] + b[2] / 2, b[1] + b[3] / 2
    ix = max(0.0, min(ax2, bx2) - max(ax1, bx1))
    iy = max(0.0, min(ay2, by2) - max(ay1, by1))
    inter = ix * iy
    union = a[2] * a[3] + b[2] * b[3] - inter
    return inter / union if union > 0.0 else 0.0


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    confusion: dict[str, dict[str, int]]

    @staticmethod
    def from_counts(tp: int, fp: int, fn: int,
                    confusion: dict[str, dict[str, int]] | None = None) -> "Metrics":
        precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
        recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
        f1 = 0.0 if precision + recall == 0.0 else (
            2.0 * precision * recall / (precision + recall))
        return Metrics(precision, recall, f1, tp, fp, fn, confusion or {})


def score_detections(
    dets: Sequence[Detection],
    truth: Sequence[SceneObject],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
    fov_deg: float = DEFAULT_FOV_DEG,
    range_m: float = DEFAULT_RANGE_M,
) -> Metrics:
    """Greedy same-label matching by descending confidence.

    A detection matching an unclaimed truth box of the same label at
    IoU >= iou_threshold is a TP; leftover detections are FPs, leftover
    truth are FNs. The reported confusion matrix is computed in a separate
    label-agnostic pass (best overlapping detection per truth, so cross-label
    mistakes are visible), with BACKGROUND rows/columns for misses and
    spurious detections. Metrics come from the strict matching only.
    """
    truth_boxes: list[tuple[SceneObject, Box]] = []
    for obj in truth:
        box = project_box(obj, fov_deg, range_m)
        if box is not None:
            truth_boxes.append((obj, box))

    order = sorted(range(len(dets)), key=lambda i: -dets[i].confidence)
    claimed = [False] * len(truth_boxes)
    matched_det = [False] * len(dets)
    tp = 0
    for i in order:
        det = dets[i]
        best_j, best_iou = -1, 0.0
        for j, (obj, box) in enumerate(truth_boxes):
            if claimed[j] or obj.class_label != det.class_label:
                continue
            v = iou(det.box, box)
            if v >= iou_threshold and v > best_iou:
                best_j, best_iou = j, v
        if best_j >= 0:
            claimed[best_j] = True
            matched_det[i] = True
            tp += 1
    fp = len(dets) - tp
    fn = len(truth_boxes) - tp

    confusion: dict[str, dict[str, int]] = {}

    def bump(t: str, p: str) -> None:
        confusion.setdefault(t, {})
        confusion[t][p] = confusion[t].get(p, 0) + 1

    used = [False] * len(dets)
    for obj, box in truth_boxes:
        best_i, best_conf = -1, -1.0
        for i, det in enumerate(dets):
            if used[i]:
                continue
            if iou(det.box, box) >= iou_threshold and det.confidence > best_conf:
                best_i, best_conf = i, det.confidence
        if best_i >= 0:
            used[best_i] = True
            bump(obj.class_label, dets[best_i].class_label)
        else:
            bump(obj.class_label, BACKGROUND)
    for i, det in enumerate(dets):
        if not used[i]:
            bump(BACKGROUND, det.class_label)

    return Metrics.from_counts(tp, fp, fn, confusion)


class Perceiver:
    """Stateful per-tick wrapper tying detector, filter, and announcer
    together for the simulation loop."""

    def __init__(
        self,
        params: DetectorParams,
        rng: np.random.Generator,
        confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
        fov_deg: float = DEFAULT_FOV_DEG,
        range_m: float = DEFAULT_RANGE_M,
        cooldown_s: float = DEFAULT_COOLDOWN_S,
    ):
        self.params = params
        self.rng = rng
        self.confidence_threshold = confidence_threshold
        self.fov_deg = fov_deg
        self.range_m = range_m
        self.announcer = AnnouncerState(cooldown_s=cooldown_s)
        self.frame_id = 0

    def tick(self, state: WorldState, visible: Sequence[SceneObject],
             now: float) -> tuple[list[Detection], list[Utterance]]:
        camera_truth = [to_camera_frame(state, obj) for obj in visible]
        dets = simulate_detections(camera_truth, self.params, self.frame_id,
                                   self.rng, self.fov_deg, self.range_m)
        kept = filter_detections(dets, self.confidence_threshold)
        self.announcer, utterances = announce(kept, self.announcer, now)
        self.frame_id += 1
        return kept, utterances
