"""Independent references shared by the unit and acceptance tests."""

import math


def brute_force_partner(features, labels, anchor, kind, mode):
    """Scan every eligible partner with true Euclidean distance; first best wins."""
    best, best_d = None, None
    for j in range(len(labels)):
        if j == anchor:
            continue
        same = labels[j] == labels[anchor]
        if (kind == "intra") != same:
            continue
        d = math.dist(features[anchor], features[j])
        if best is None or (d < best_d if mode == "S" else d > best_d):
            best, best_d = j, d
    return best


def brute_force_pairs(features, labels, rule):
    """Expected (anchor, partner, kind) list for a deterministic rule string such as "SD" or "-S"."""
    feats = [list(map(float, row)) for row in features]
    labels = [int(c) for c in labels]
    out = []
    for kind, mode in (("intra", rule[0]), ("inter", rule[1])):
        if mode == "-":
            continue
        for a in range(len(labels)):
            out.append((a, brute_force_partner(feats, labels, a, kind, mode), kind))
    return out


def squared_distance_table(features):
    n = len(features)
    return [[sum((features[i][k] - features[j][k]) ** 2 for k in range(len(features[i]))) for j in range(n)]
            for i in range(n)]
