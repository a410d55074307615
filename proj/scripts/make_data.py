#!/usr/bin/env python3
"""Regenerates the bundled datasets under data/.

Outputs:
  data/synthetic_env.json    4x4 grid, 16 nodes A..P, start A, target P
  data/synthetic_scenes.json scene features for all 16 nodes x 3 headings
  data/trial_env.json        33-node walkthrough graph (format example, no scenes)

Front-view features are authored below; left/right views are derived
deterministically so the bundle stays self-consistent. Run from the repo root:
  python3 scripts/make_data.py
"""

import json
import os

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "data")

SEG_CLASSES = ["building", "road", "vegetation", "sky", "person",
               "vehicle", "pole", "fence", "wall"]

# node -> (segmentation fractions in SEG_CLASSES order,
#          [(category, confidence)...] sorted by confidence desc,
#          [attributes...], {object: count})
FRONTS = {
    "A": ([0.30, 0.28, 0.14, 0.12, 0.03, 0.04, 0.01, 0.01, 0.02],
          [("street", 0.34), ("residential neighborhood", 0.22),
           ("canal/urban area", 0.14), ("courtyard", 0.08), ("alley", 0.05)],
          ["man-made", "natural light", "open area", "driving", "pavement"],
          {"person": 3, "bicycle": 1, "car": 2}),
    "B": ([0.36, 0.35, 0.22, 0.03, 0.02, 0.01, 0.005, 0.005, 0.0],
          [("street", 0.30), ("promenade", 0.24),
           ("residential neighborhood", 0.18), ("embassy", 0.10), ("campus", 0.07)],
          ["man-made", "natural light", "open area", "no horizon", "driving",
           "biking", "asphalt", "pavement", "trees"],
          {"person": 12, "bicycle": 2, "motorcycle": 1, "handbag": 2}),
    "C": ([0.34, 0.30, 0.12, 0.08, 0.04, 0.05, 0.01, 0.005, 0.01],
          [("street", 0.31), ("shopfront", 0.21),
           ("residential neighborhood", 0.16), ("canal/urban area", 0.11),
           ("crosswalk", 0.06)],
          ["man-made", "natural light", "open area", "driving", "pavement", "glass"],
          {"person": 5, "bicycle": 3, "car": 2}),
    "D": ([0.40, 0.33, 0.04, 0.06, 0.0, 0.02, 0.01, 0.02, 0.05],
          [("alley", 0.36), ("street", 0.18), ("medina", 0.12),
           ("residential neighborhood", 0.09), ("courtyard", 0.05)],
          ["man-made", "natural light", "no horizon", "enclosed area", "pavement"],
          {}),
    "E": ([0.37, 0.36, 0.05, 0.06, 0.01, 0.06, 0.02, 0.01, 0.02],
          [("street", 0.33), ("parking lot", 0.19), ("indoor bus station", 0.13),
           ("residential neighborhood", 0.10), ("train station platform", 0.08)],
          ["man-made", "natural light", "open area", "driving", "transporting",
           "asphalt", "pavement"],
          {"car": 2, "truck": 2, "bicycle": 1, "motorcycle": 1}),
    "F": ([0.38, 0.10, 0.36, 0.05, 0.0, 0.005, 0.005, 0.01, 0.02],
          [("residential neighborhood", 0.28), ("alley", 0.20),
           ("roof garden", 0.12), ("street", 0.09)],
          ["man-made", "natural light", "open area", "no horizon", "pavement",
           "shrubbery", "leaves", "foliage"],
          {"bicycle": 1}),
    "G": ([0.30, 0.32, 0.15, 0.10, 0.04, 0.03, 0.01, 0.0, 0.01],
          [("street", 0.29), ("promenade", 0.22), ("plaza", 0.13),
           ("residential neighborhood", 0.09), ("crosswalk", 0.06)],
          ["man-made", "natural light", "open area", "sunny", "pavement"],
          {"person": 4, "bicycle": 2, "car": 1}),
    "H": ([0.39, 0.36, 0.04, 0.05, 0.0, 0.0, 0.01, 0.01, 0.04],
          [("alley", 0.34), ("medina", 0.15), ("loading dock", 0.12),
           ("jail cell", 0.08), ("arcade", 0.07)],
          ["man-made", "natural light", "vertical components", "depth",
           "mostly open", "some enclosed", "pavement", "biking"],
          {}),
    "I": ([0.36, 0.30, 0.08, 0.07, 0.01, 0.01, 0.01, 0.02, 0.03],
          [("alley", 0.30), ("street", 0.17), ("residential neighborhood", 0.12),
           ("courtyard", 0.07), ("medina", 0.05)],
          ["man-made", "natural light", "no horizon", "pavement"],
          {"bicycle": 1}),
    "J": ([0.32, 0.28, 0.18, 0.10, 0.02, 0.03, 0.01, 0.01, 0.01],
          [("residential neighborhood", 0.27), ("street", 0.21),
           ("canal/urban area", 0.12), ("courtyard", 0.08), ("plaza", 0.05)],
          ["man-made", "natural light", "open area", "trees", "pavement"],
          {"person": 2, "car": 1}),
    "K": ([0.18, 0.36, 0.12, 0.20, 0.03, 0.02, 0.01, 0.02, 0.01],
          [("aqueduct", 0.22), ("water park", 0.17), ("playground", 0.14),
           ("promenade", 0.12), ("arch", 0.08)],
          ["man-made", "natural light", "touring", "driving", "open area",
           "sunny", "no horizon", "trees", "metal"],
          {"person": 6, "bicycle": 5, "car": 2}),
    "L": ([0.38, 0.35, 0.05, 0.06, 0.04, 0.03, 0.01, 0.0, 0.01],
          [("street", 0.31), ("promenade", 0.18), ("phone booth", 0.12),
           ("outdoor parking garage", 0.10), ("hotel", 0.07)],
          ["man-made", "natural light", "bright", "driving", "biking",
           "asphalt", "pavement", "open area", "sunny", "no horizon"],
          {"person": 7, "car": 2, "bicycle": 2, "backpack": 1, "handbag": 1}),
    "M": ([0.33, 0.31, 0.10, 0.09, 0.03, 0.06, 0.01, 0.01, 0.01],
          [("street", 0.28), ("parking lot", 0.20),
           ("residential neighborhood", 0.13), ("canal/urban area", 0.08),
           ("loading dock", 0.05)],
          ["man-made", "natural light", "open area", "driving", "asphalt"],
          {"person": 2, "car": 4, "bicycle": 1}),
    "N": ([0.34, 0.30, 0.08, 0.10, 0.02, 0.07, 0.01, 0.01, 0.02],
          [("parking lot", 0.26), ("street", 0.22),
           ("residential neighborhood", 0.12), ("outdoor parking garage", 0.09),
           ("alley", 0.05)],
          ["man-made", "natural light", "open area", "driving", "asphalt"],
          {"person": 2, "car": 5}),
    "O": ([0.31, 0.30, 0.12, 0.11, 0.03, 0.05, 0.01, 0.01, 0.01],
          [("street", 0.27), ("parking lot", 0.18), ("harbor", 0.11),
           ("residential neighborhood", 0.09), ("plaza", 0.06)],
          ["man-made", "natural light", "open area", "driving", "water", "pavement"],
          {"person": 3, "car": 3, "bicycle": 1}),
    "P": ([0.28, 0.26, 0.12, 0.14, 0.05, 0.03, 0.01, 0.01, 0.01],
          [("restaurant", 0.30), ("cafeteria", 0.20), ("street", 0.16),
           ("promenade", 0.10), ("plaza", 0.06)],
          ["man-made", "natural light", "open area", "sunny", "outdoor seating",
           "pavement", "trees"],
          {"person": 9, "bicycle": 2, "car": 1}),
}


def features(seg_values, cats, attrs, objects):
    assert len(seg_values) == len(SEG_CLASSES)
    assert sum(seg_values) <= 1.01, seg_values
    assert len(cats) <= 5
    assert all(cats[i][1] >= cats[i + 1][1] for i in range(len(cats) - 1)), cats
    assert len(attrs) <= 10 and len(set(attrs)) == len(attrs)
    return {
        "segmentation": {cls: round(v, 4) for cls, v in zip(SEG_CLASSES, seg_values)},
        "categories": [{"label": l, "confidence": c} for l, c in cats],
        "attributes": attrs,
        "objects": objects,
    }


def side_view(front, side):
    """Derives a plausible left or right view from the front view."""
    seg = dict(front["segmentation"])
    if side == "left":
        shift = min(0.02, seg["road"])
        seg["building"] = round(seg["building"] + shift, 4)
        seg["road"] = round(seg["road"] - shift, 4)
        cats = front["categories"][1:5]
        attrs = front["attributes"][:-1]
    else:
        shift = min(0.01, seg["sky"])
        seg["vegetation"] = round(seg["vegetation"] + shift, 4)
        seg["sky"] = round(seg["sky"] - shift, 4)
        cats = [front["categories"][0]] + front["categories"][2:5]
        attrs = front["attributes"][1:]
    objects = {k: v // 2 for k, v in front["objects"].items() if v // 2 > 0}
    return {"segmentation": seg, "categories": cats,
            "attributes": attrs, "objects": objects}


def synthetic_env():
    def node_id(row, col):
        return chr(ord("A") + row * 4 + col)

    nodes, edges = [], []
    for row in range(4):
        for col in range(4):
            nid = node_id(row, col)
            nodes.append({
                "id": nid,
                "geo": {"lat": round(52.370 + 0.001 * row, 4),
                        "lng": round(4.890 + 0.001 * col, 4),
                        "heading": 0},
                "scene": {"front": f"{nid}/front", "left": f"{nid}/left",
                          "right": f"{nid}/right"},
            })
    for row in range(4):
        for col in range(4):
            nid = node_id(row, col)
            if col + 1 < 4:  # right neighbor
                edges.append({"from": nid, "to": node_id(row, col + 1), "dir": "right"})
                edges.append({"from": node_id(row, col + 1), "to": nid, "dir": "left"})
            if row + 1 < 4:  # forward neighbor
                edges.append({"from": nid, "to": node_id(row + 1, col), "dir": "forward"})
                edges.append({"from": node_id(row + 1, col), "to": nid, "dir": "backward"})
    return {"nodes": nodes, "edges": edges, "start": "A",
            "target_node": "P", "target_label": "restaurant"}


# Walkthrough graph: a trunk with side chains, start A, distant target 1H.
TRIAL_CHAINS = [
    ["A", "B", "C", "D", "E", "H", "U", "Y"],
    ["Y", "R", "S", "T", "W", "X"],
    ["M", "N"],
    ["F", "G", "J", "K", "L", "O", "P", "Q"],
    ["1A", "1B", "1C", "1D", "1E", "1F", "1G", "1H"],
]
TRIAL_CROSS = [  # (from, to, dir) pairs not covered by the forward chains
    ("A", "F", "right"),
    ("U", "M", "right"),
    ("N", "V", "right"),
    ("V", "I", "forward"),
    ("I", "N", "right"),
    ("V", "1A", "right"),
]
REVERSE = {"forward": "backward", "backward": "forward",
           "left": "right", "right": "left"}


def trial_env():
    edges = []

    def link(a, b, d):
        edges.append({"from": a, "to": b, "dir": d})
        edges.append({"from": b, "to": a, "dir": REVERSE[d]})

    for chain in TRIAL_CHAINS:
        for a, b in zip(chain, chain[1:]):
            link(a, b, "forward")
    for a, b, d in TRIAL_CROSS:
        link(a, b, d)

    ids = [chr(ord("A") + i) for i in range(25)] + [f"1{chr(ord('A') + i)}" for i in range(8)]
    nodes = [{"id": nid,
              "scene": {"front": f"{nid}/front", "left": f"{nid}/left",
                        "right": f"{nid}/right"}} for nid in ids]
    return {"nodes": nodes, "edges": edges, "start": "A",
            "target_node": "1H", "target_label": "tree-house"}


def main():
    scenes = {}
    for nid, row in FRONTS.items():
        front = features(*row)
        scenes[f"{nid}/front"] = front
        scenes[f"{nid}/left"] = side_view(front, "left")
        scenes[f"{nid}/right"] = side_view(front, "right")

    # The target label must be visible only at the target node itself.
    for ref, f in scenes.items():
        labels = [c["label"].lower() for c in f["categories"]]
        hit = any("restaurant" in l for l in labels)
        assert hit == ref.startswith("P/") or not hit, ref

    env = synthetic_env()
    assert len(env["nodes"]) == 16 and len(env["edges"]) == 48

    trial = trial_env()
    assert len(trial["nodes"]) == 33 and len(trial["edges"]) == 66
    used = {e["from"] for e in trial["edges"]} | {e["to"] for e in trial["edges"]}
    assert used == {n["id"] for n in trial["nodes"]}

    for name, doc in [("synthetic_env.json", env),
                      ("synthetic_scenes.json", scenes),
                      ("trial_env.json", trial)]:
        path = os.path.join(OUT_DIR, name)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
