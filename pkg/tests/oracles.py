"""Independent reference computations.

Written from the problem statement directly, without going through the
optimizer's candidate tables, so solver bugs cannot cancel out.
"""

import itertools
from fractions import Fraction


def latency(stream, r, model, bandwidth, alpha):
    return alpha * r * r / (stream.framerate * bandwidth) + model.proc_latency[r]


def acc_pct(model, r):
    c2, c1, c0 = model.accuracy_coeffs
    return min(100.0, max(0.0, c2 * r * r + c1 * r + c0))


def enumerate_optimum(instance):
    """Return ``(best_objective, [argmin assignments])`` or ``(None, [])``."""
    p = instance.params
    scale = 0.01 if p.accuracy_units == "fraction" else 1.0
    per_stream = []
    for i, s in enumerate(instance.streams):
        bound = s.deadline if p.per_stream_deadline else p.l_max
        options = []
        for r in s.resolution_ladder:
            for m in instance.models:
                lat = latency(s, r, m, p.bandwidth, p.alpha)
                if lat <= bound and m.proc_latency[r] <= 1.0 / s.framerate:
                    val = (lat - p.omega * acc_pct(m, r) * scale) / s.qos
                    options.append(((r, m.id), val, p.alpha * r * r))
        per_stream.append(options)
    best, argmins = None, []
    for combo in itertools.product(*per_stream):
        if sum(c[2] for c in combo) > p.bandwidth:
            continue
        val = sum(c[1] for c in combo)
        choice = tuple(c[0] for c in combo)
        if best is None or val < best - 1e-12:
            best, argmins = val, [choice]
        elif abs(val - best) <= 1e-12:
            argmins.append(choice)
    return best, argmins


def exact_objective_single(q, latency_s, coeffs, r, omega):
    """Exact rational objective of one stream with fraction-unit accuracy."""
    c2, c1, c0 = (Fraction(str(c)) for c in coeffs)
    r = Fraction(r)
    a = (c2 * r * r + c1 * r + c0) / 100
    return (Fraction(str(latency_s)) - Fraction(omega) * a) / Fraction(q)
