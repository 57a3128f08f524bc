#!/usr/bin/env python3
"""Writes tests/fixtures/fixture_trace.jsonl.

Rows are given as integer weights per frame and normalized here, so every
raw row sums to 1 up to float rounding. The three utterances cover:
  ted-fig1      first segment emits "Ich werde", withholds "reden."
  ted-mismatch  a later from-scratch hypothesis disagrees with the output
  ted-heads     per-head stack (2 heads), partial final segment, extra layer
"""
import json
import pathlib


def row(n, weights):
    """weights: {frame: int}; negative frame indexes count from the end."""
    ints = [0] * n
    for frame, w in weights.items():
        ints[frame if frame >= 0 else n + frame] += w
    total = sum(ints)
    return [x / total for x in ints]


def averaged(layer, rows):
    return {"layer": layer, "heads": "averaged", "rows": rows}


def per_head(layer, stack):
    return {"layer": layer, "heads": "per_head", "stack": stack}


def step(prefix, n, words, hyp, attention):
    return {"prefix_ms": float(prefix), "n_frames": n, "detected_words": words,
            "hypothesis": hyp, "attention": attention}


def utt_fig1():
    s1 = [row(8, {0: 6, 1: 3, 2: 1, -1: 10}),
          row(8, {1: 1, 2: 3, 3: 6, 4: 3, 5: 0, -1: 6}),
          row(8, {4: 1, 5: 3, 6: 6, -1: 30})]
    s2 = [row(16, {0: 6, 1: 3, 2: 1, -1: 12}),
          row(16, {2: 2, 3: 6, 4: 2, -1: 12}),
          row(16, {8: 2, 9: 5, 10: 2, -1: 9}),
          row(16, {11: 2, 12: 5, 13: 2, 14: 1, -1: 9}),
          row(16, {13: 1, 14: 5, -1: 20})]
    s3 = [row(24, {0: 6, 1: 3, 2: 1, -1: 12}),
          row(24, {2: 2, 3: 6, 4: 2, -1: 12}),
          row(24, {8: 2, 9: 5, 10: 2, -1: 9}),
          row(24, {14: 2, 15: 5, 16: 2, -1: 9}),
          row(24, {20: 1, 21: 3, 22: 6, -1: 25})]
    return {"schema": 1, "id": "ted-fig1", "source_duration_ms": 2400.0, "segment_ms": 800.0,
            "reference": "Ich werde über Klimawandel sprechen.", "n_layers": 6, "n_heads": 8,
            "steps": [
                step(800, 8, 2, ["Ich", "werde", "reden."], [averaged(4, s1)]),
                step(1600, 16, 4, ["Ich", "werde", "über", "Klima", "reden."], [averaged(4, s2)]),
                step(2400, 24, 5, ["Ich", "werde", "über", "Klimawandel", "sprechen."], [averaged(4, s3)]),
            ]}


def utt_mismatch():
    s1 = [row(8, {0: 5, 1: 4, 2: 1, -1: 10}),
          row(8, {2: 2, 3: 5, 4: 3, -1: 10})]
    s2 = [row(16, {0: 5, 1: 4, 2: 1, -1: 10}),
          row(16, {2: 2, 3: 5, 4: 3, -1: 10}),
          row(16, {7: 2, 8: 5, 9: 3, -1: 10})]
    s3 = [row(24, {0: 5, 1: 4, 2: 1, -1: 10}),
          row(24, {2: 2, 3: 5, 4: 3, -1: 10}),
          row(24, {11: 2, 12: 4, 13: 3, 21: 1, -1: 10}),
          row(24, {19: 2, 20: 3, 21: 2, 22: 3, -1: 10})]
    s4 = [row(32, {0: 5, 1: 4, 2: 1, -1: 10}),
          row(32, {2: 2, 3: 5, 4: 3, -1: 10}),
          row(32, {11: 2, 12: 4, 13: 4, -1: 10}),
          row(32, {22: 3, 23: 4, 24: 2, 28: 1, 29: 0, -1: 6}),
          row(32, {28: 3, 29: 4, 30: 3, -1: 40})]
    # gute at the final step: kept frames 22..30, tail over frames 29, 30 = 0
    # plus frame 28 outside the window, so its tail mass is 0.
    return {"schema": 1, "id": "ted-mismatch", "source_duration_ms": 3200.0, "segment_ms": 800.0,
            "reference": "Das ist eine sehr gute Idee.", "n_layers": 6, "n_heads": 8,
            "steps": [
                step(800, 8, 2, ["Das", "ist"], [averaged(4, s1)]),
                step(1600, 16, 3, ["Dies", "ist", "ein"], [averaged(4, s2)]),
                step(2400, 24, 5, ["Das", "ist", "eine", "gute"], [averaged(4, s3)]),
                step(3200, 32, 6, ["Das", "ist", "eine", "gute", "Idee."], [averaged(4, s4)]),
            ]}


def utt_heads():
    h1_s1 = [row(8, {0: 5, 1: 3, 2: 2, -1: 10}), row(8, {3: 1, 4: 2, 5: 4, 6: 3, -1: 10})]
    h2_s1 = [row(8, {0: 3, 1: 3, 2: 1, 5: 1, 6: 2, -1: 10}), row(8, {4: 2, 5: 4, 6: 4, -1: 10})]
    h1_s2 = [row(16, {0: 5, 1: 3, 2: 2, -1: 10}), row(16, {7: 2, 8: 6, 9: 2, -1: 10}),
             row(16, {9: 2, 10: 6, 11: 2, -1: 10}), row(16, {12: 2, 13: 4, 14: 4, -1: 10})]
    h2_s2 = [row(16, {0: 4, 1: 4, 2: 2, -1: 10}), row(16, {7: 3, 8: 4, 9: 3, -1: 10}),
             row(16, {9: 3, 10: 4, 11: 3, -1: 10}), row(16, {13: 5, 14: 5, -1: 10})]
    h1_s3 = [row(20, {0: 5, 1: 3, 2: 2, -1: 10}), row(20, {7: 2, 8: 6, 9: 2, -1: 10}),
             row(20, {9: 2, 10: 6, 11: 2, -1: 10}), row(20, {13: 2, 14: 5, 15: 2, 17: 1, -1: 10}),
             row(20, {16: 2, 17: 4, 18: 4, -1: 10})]
    h2_s3 = [row(20, {0: 4, 1: 4, 2: 2, -1: 10}), row(20, {7: 3, 8: 4, 9: 3, -1: 10}),
             row(20, {9: 3, 10: 4, 11: 3, -1: 10}), row(20, {13: 3, 14: 4, 15: 2, 17: 1, -1: 10}),
             row(20, {17: 5, 18: 5, -1: 10})]
    # Layer 2 points everywhere near the end; the policy must not read it.
    def decoy(n, k):
        return [row(n, {n - 2: 9, -1: 1}) for _ in range(k)]
    return {"schema": 1, "id": "ted-heads", "source_duration_ms": 2000.0, "segment_ms": 800.0,
            "reference": "Wir sehen das neue Haus.", "n_layers": 6, "n_heads": 2,
            "steps": [
                step(800, 8, 2, ["Wir", "sehen"], [averaged(2, decoy(8, 2)), per_head(4, [h1_s1, h2_s1])]),
                step(1600, 16, 4, ["Wir", "sehen", "das", "Haus"],
                     [averaged(2, decoy(16, 4)), per_head(4, [h1_s2, h2_s2])]),
                step(2000, 20, 5, ["Wir", "sehen", "das", "neue", "Haus."],
                     [averaged(2, decoy(20, 5)), per_head(4, [h1_s3, h2_s3])]),
            ]}


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "fixture_trace.jsonl"
    with open(out, "w", encoding="utf-8") as f:
        for utt in (utt_fig1(), utt_mismatch(), utt_heads()):
            f.write(json.dumps(utt, ensure_ascii=False, separators=(",", ":")) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
