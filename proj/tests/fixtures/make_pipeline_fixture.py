#!/usr/bin/env python3
"""Builds pipeline_requests.jsonl (50 score requests) and the metric values
that `georeward eval` must report for the records emitted by
`georeward score --emit-eval`. Metrics are computed here from scratch.

The first rollout of every group is its top-1 prediction."""

import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
rng = random.Random(20240607)


def iou(a, b):
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


def rollout(think, answer):
    if answer is None:
        return "I think it is somewhere near the top."
    return f"<think>{think}</think>\n<answer>{answer}</answer>"


THINKS = ["scan the whole scene", "check the harbor first", "compare shadows", "follow the road north",
          "count objects along the edge", "inspect the runway apron"]


def group(first, extras):
    return [first] + extras


requests = []
expected_records = []  # (task, pred, gt)

# REC: IoU is height / 100 by construction.
heights = [95, 90, 85, 80, 75, 71, 70, 69, 65, 60, 55, 51, 50, 49, 45, 40, 30, 20, None, None]
rng.shuffle(heights)
for i, h in enumerate(heights):
    x, y = rng.randint(0, 300), rng.randint(0, 300)
    gt = [x, y, x + 100, y + 100]
    pred = None if h is None else [x, y, x + 100, y + h]
    answer = None if pred is None else json.dumps(pred)
    extras = [rollout(rng.choice(THINKS), json.dumps([x + 3, y, x + 100, y + 90])),
              rollout(rng.choice(THINKS), json.dumps(gt))]
    requests.append({"request_id": f"rec-{i:02d}", "task": "REC", "query": "the large ship",
                     "ground_truth": gt, "rollouts": group(rollout(rng.choice(THINKS), answer), extras)})
    expected_records.append(("REC", pred, gt))

# OVD: random scenes; integer boxes, no IoU sitting on a threshold.
LABELS = ["ship", "plane", "storage tank"]
THRESHOLDS = [0.5 + 0.05 * i for i in range(10)]


def random_box():
    x, y = rng.randint(0, 400), rng.randint(0, 400)
    return [x, y, x + rng.randint(10, 60), y + rng.randint(10, 60)]


def jittered(box):
    d = [rng.randint(-6, 6) for _ in range(4)]
    b = [box[k] + d[k] for k in range(4)]
    return [min(b[0], b[2]), min(b[1], b[3]), max(b[0], b[2]), max(b[1], b[3])]


def clear_of_thresholds(preds, gts):
    for p in preds:
        for g in gts:
            v = iou(p["bbox"], g["bbox"])
            if any(abs(v - t) < 1e-9 for t in THRESHOLDS + [0.3]):
                return False
    return True


ovd_count = 0
while ovd_count < 15:
    gts = [{"bbox": random_box(), "label": rng.choice(LABELS)} for _ in range(rng.randint(1, 4))]
    preds = []
    for g in gts:
        r = rng.random()
        if r < 0.75:
            preds.append({"bbox": jittered(g["bbox"]), "label": g["label"]})
        elif r < 0.85:
            preds.append({"bbox": jittered(g["bbox"]), "label": rng.choice(LABELS)})
    for _ in range(rng.randint(0, 2)):
        preds.append({"bbox": random_box(), "label": rng.choice(LABELS)})
    rng.shuffle(preds)
    if not clear_of_thresholds(preds, gts):
        continue
    missing = rng.random() < 0.1
    answer = None if missing else json.dumps(preds)
    extras = [rollout(rng.choice(THINKS), json.dumps(gts)), rollout(rng.choice(THINKS), "[]")]
    requests.append({"request_id": f"ovd-{ovd_count:02d}", "task": "OVD", "query": "ship, plane, storage tank",
                     "ground_truth": gts, "rollouts": group(rollout(rng.choice(THINKS), answer), extras)})
    expected_records.append(("OVD", None if missing else preds, gts))
    ovd_count += 1

# VQA: 11 of 15 match after normalization; one has no answer section.
vqa = [("Yes", "yes"), ("no.", "No"), ("Rural", "rural"), ("  urban area ", "urban area"), ("3", "3"),
       ("Yes!", "yes"), ("dense  residential", "Dense residential"), ("no", "no"), ("2", "2"),
       ("harbor?", "harbor"), ("yes", "yes"), ("yes", "no"), ("4", "5"), ("farmland", "forest"), (None, "yes")]
for i, (pred, gt) in enumerate(vqa):
    extras = [rollout(rng.choice(THINKS), gt), rollout(rng.choice(THINKS), "unsure")]
    requests.append({"request_id": f"vqa-{i:02d}", "task": "VQA", "query": "question",
                     "ground_truth": gt, "rollouts": group(rollout(rng.choice(THINKS), pred), extras)})
    expected_records.append(("VQA", pred, gt))

assert len(requests) == 50


def normalize(text):
    t = " ".join(text.lower().split())
    while t and t[-1] in ".!?":
        t = t[:-1].rstrip()
    return t


def ap_101(images, category, threshold):
    """images: list of (preds, gts). Re-matches from scratch at every rank cutoff."""
    num_gt = sum(1 for _, gts in images for g in gts if g["label"] == category)
    if num_gt == 0:
        return None
    max_rank = max((len(p) for p, _ in images), default=0)
    points = []
    for cutoff in range(max_rank):
        tp = fp = 0
        present = False
        for preds, gts in images:
            taken = [False] * len(gts)
            for k, p in enumerate(preds[: cutoff + 1]):
                if p["label"] != category:
                    continue
                present |= k == cutoff
                best, best_g = -1.0, None
                for gi, g in enumerate(gts):
                    if taken[gi] or g["label"] != category:
                        continue
                    v = iou(p["bbox"], g["bbox"])
                    if v >= threshold and v > best:
                        best, best_g = v, gi
                if best_g is None:
                    fp += 1
                else:
                    taken[best_g] = True
                    tp += 1
        if present:
            points.append((tp / num_gt, tp / (tp + fp)))
    total = 0.0
    for k in range(101):
        r = k / 100
        total += max((p for rc, p in points if rc >= r), default=0.0)
    return total / 101


rec = [(p, g) for t, p, g in expected_records if t == "REC"]
ovd = [(p or [], g) for t, p, g in expected_records if t == "OVD"]
vqa_records = [(p, g) for t, p, g in expected_records if t == "VQA"]


def acc(t):
    hits = sum(1 for p, g in rec if p is not None and iou(p, g) > t)
    return 100.0 * hits / len(rec)


categories = sorted({g["label"] for _, gts in ovd for g in gts})
per_threshold = []
for t in THRESHOLDS:
    aps = [ap_101(ovd, c, t) for c in categories]
    per_threshold.append(sum(aps) / len(aps))

expected = {
    "REC": {"n_items": len(rec), "Acc@0.5": acc(0.5), "Acc@0.7": acc(0.7)},
    "OVD": {"n_items": len(ovd), "mAP@0.5": per_threshold[0],
            "mAP@[0.5:0.95]": sum(per_threshold) / len(per_threshold)},
    "VQA": {"n_items": len(vqa_records),
            "pass_at_1": 100.0 * sum(1 for p, g in vqa_records if p is not None and normalize(p) == normalize(g))
            / len(vqa_records)},
}

with open(HERE / "pipeline_requests.jsonl", "w") as f:
    for r in requests:
        f.write(json.dumps(r, separators=(",", ":")) + "\n")
with open(HERE / "pipeline_expected.json", "w") as f:
    json.dump(expected, f, indent=2)
    f.write("\n")
print(json.dumps(expected, indent=2))
