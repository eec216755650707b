#!/usr/bin/env python3
"""Independent check of the imported ImageNet hierarchy.

Parses data.noun directly, builds the hypernym closure of the 1000 leaves,
and compares counts, the SCS normalizer and the leaf-distance filter with
what `hypereval hierarchy` reports for the imported files.
"""
import argparse
import json
import math
import subprocess
import sys
from collections import deque

HUMAN_EVAL_NAMES = [
    "frog", "clock", "oven", "monkey", "knife", "wolf", "pan", "boat", "wheel", "shark",
    "whale", "fruit", "turtle", "hat", "vegetable", "pot", "flower", "duck", "chair", "spider",
]


def parse_data_noun(path):
    synsets = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.startswith(" "):
                continue
            fields = line.split(" | ")[0].split()
            offset = fields[0]
            n_words = int(fields[3], 16)
            words = [fields[4 + 2 * i] for i in range(n_words)]
            pos = 4 + 2 * n_words
            n_ptrs = int(fields[pos])
            parents = []
            for i in range(n_ptrs):
                symbol, target, target_pos = fields[pos + 1 + 4 * i: pos + 4 + 4 * i]
                if symbol in ("@", "@i") and target_pos == "n":
                    parents.append("n" + target)
            synsets["n" + offset] = (words, parents)
    return synsets


def closure(synsets, leaves):
    nodes = set()
    queue = deque(leaves)
    while queue:
        s = queue.popleft()
        if s in nodes:
            continue
        nodes.add(s)
        queue.extend(synsets[s][1])
    children = {s: [] for s in nodes}
    for s in nodes:
        for p in synsets[s][1]:
            children[p].append(s)
    return nodes, children


def leaves_below(s, children, leaf_set):
    seen, stack, found = {s}, [s], set()
    while stack:
        x = stack.pop()
        if x in leaf_set:
            found.add(x)
        for c in children[x]:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return found


def leaf_distance(s, children, leaf_set):
    seen, queue = {s}, deque([(s, 0)])
    while queue:
        x, d = queue.popleft()
        if x in leaf_set:
            return d
        for c in children[x]:
            if c not in seen:
                seen.add(c)
                queue.append((c, d + 1))
    raise ValueError(s)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data-noun", required=True)
    ap.add_argument("--wnids", required=True)
    ap.add_argument("--graph-dir", required=True)
    ap.add_argument("--hypereval", required=True)
    args = ap.parse_args()

    synsets = parse_data_noun(args.data_noun)
    with open(args.wnids) as f:
        leaves = [line.split()[0] for line in f if line.strip()]
    leaf_set = set(leaves)
    nodes, children = closure(synsets, leaves)
    evaluation = sorted(nodes - leaf_set)
    sizes = {s: len(leaves_below(s, children, leaf_set)) for s in evaluation}
    eligible = [s for s in evaluation if sizes[s] > 1]
    expected = {
        "nodes": len(nodes),
        "leaves": len(leaves),
        "evaluation_synsets": len(evaluation),
        "scs_eligible": len(eligible),
        "scs_normalizer": math.fsum(math.log(sizes[s]) for s in eligible) / len(eligible),
    }

    graph = ["--edges", f"{args.graph_dir}/edges.txt", "--leaves", f"{args.graph_dir}/leaves.txt",
             "--lemmas", f"{args.graph_dir}/lemmas.txt"]
    stats = json.loads(subprocess.check_output([args.hypereval, "hierarchy", *graph]))
    near = json.loads(subprocess.check_output([args.hypereval, "hierarchy", *graph, "--max-leaf-distance", "2"]))

    failures = []
    for key, value in expected.items():
        got = stats[key]
        ok = abs(got - value) <= 1e-12 if isinstance(value, float) else got == value
        print(f"{key}: oracle={value} hypereval={got} {'ok' if ok else 'MISMATCH'}")
        if not ok:
            failures.append(key)

    oracle_near = sorted(s for s in evaluation if leaf_distance(s, children, leaf_set) <= 2)
    tool_near = sorted(row["synset"] for row in near["synsets"])
    print(f"leaf distance <= 2: oracle={len(oracle_near)} hypereval={len(tool_near)}")
    if oracle_near != tool_near:
        failures.append("leaf-distance filter")

    near_names = {row["lemma"] for row in near["synsets"]}
    missing = [n for n in HUMAN_EVAL_NAMES if n not in near_names]
    print(f"human-evaluation synsets within distance 2: {20 - len(missing)}/20")
    if missing:
        failures.append("missing " + ",".join(missing))

    if failures:
        print("FAILED: " + "; ".join(failures))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
