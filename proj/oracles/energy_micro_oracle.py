"""Hand-evaluated per-round time/energy ledger for a 2-UAV / 4-device scenario.

Every quantity is written out with plain `math` from the closed-form channel,
delay and energy expressions, without touching the C++ library. Run it to
regenerate energy_micro_expected.json.
"""

import json
import math
import pathlib

C0 = 299_792_458.0

# Table II constants.
F = 2e9
B = 80e6
N0 = 10 ** ((-174 - 30) / 10)
A, BB = 11.95, 0.14
ETA_LOS, ETA_NLOS = 3.0, 23.0
G = 10 ** (-31.5 / 10)
P_U = 5.0
P_K = 10 ** ((23 - 30) / 10)
Q_U, PHI_U, KAPPA = 2e4, 3e9, 1e-27
P_H = 52.1
M_BASE = 169_000 * 8
M_TOTAL = 172_400 * 8
NU, TAU = 500.0, 1
L_U = 100.0

UAVS = [(0.0, 0.0), (1000.0, 0.0)]
DEVICES = [(0.0, 0.0), (100.0, 50.0), (1000.0, 150.0), (1120.0, 0.0)]
SERVING = [0, 0, 1, 1]
SIZES = [500, 500, 500, 500]


def d2u_gain_linear(k, u):
    dx = DEVICES[k][0] - UAVS[u][0]
    dy = DEVICES[k][1] - UAVS[u][1]
    d = math.sqrt(dx * dx + dy * dy + L_U * L_U)
    r = math.degrees(math.asin(L_U / d))
    p_los = 1 / (1 + A * math.exp(-BB * (r - A)))
    fspl = 20 * math.log10(4 * math.pi * F * d / C0)
    h_db = -(p_los * (fspl + ETA_LOS) + (1 - p_los) * (fspl + ETA_NLOS))
    return 10 ** (h_db / 10)


def u2u_gain_linear(u, v):
    d = math.dist(UAVS[u], UAVS[v])
    return G / (d * d)


def rate(p, g, bw):
    return bw * math.log2(1 + p * g / (bw * N0))


def ledger(selected, lead, bits, per_uav_only=False):
    U = len(UAVS)
    t_local = max(TAU * s / NU for s in SIZES)

    t_up = [bits / rate(P_K, d2u_gain_linear(k, SERVING[k]), B / len(selected)) for k in selected]
    t_upload = max(t_up, default=0.0)

    uploads = [sum(1 for k in selected if SERVING[k] == u) for u in range(U)]
    forwards = [0] * U
    if lead is not None:
        forwards = [1 if (u != lead and uploads[u] > 0) else 0 for u in range(U)]
    n_fwd = sum(forwards)

    models = [uploads[u] + (n_fwd if u == lead else 0) for u in range(U)]
    e_agg = [KAPPA * Q_U * PHI_U ** 2 * m for m in models]
    t_agg = [Q_U * m / PHI_U for m in models]

    t_u2u = [0.0] * U
    for u in range(U):
        if forwards[u]:
            t_u2u[u] = bits / rate(P_U, u2u_gain_linear(u, lead), B / n_fwd)

    holds = [False] * U
    if selected:
        if per_uav_only:
            holds = [uploads[u] > 0 for u in range(U)]
        elif lead is not None:
            holds = [u == lead or forwards[u] == 1 for u in range(U)]
    t_bc = [0.0] * U
    for u in range(U):
        to_dev = 0.0
        if holds[u]:
            to_dev = max(bits / rate(P_U, d2u_gain_linear(k, u), B)
                         for k in range(len(DEVICES)) if SERVING[k] == u)
        to_uav = 0.0
        if u == lead and selected:
            to_uav = max((bits / rate(P_U, u2u_gain_linear(v, u), B)
                          for v in range(U) if forwards[v]), default=0.0)
        t_bc[u] = to_dev + to_uav

    t_hover = t_local + t_upload + max(t_agg) + max(t_u2u) + max(t_bc)
    e_hover = P_H * t_hover
    e_u2u = [P_U * t for t in t_u2u]
    e_bc = [P_U * t for t in t_bc]
    e_round = U * e_hover + sum(e_agg) + sum(e_u2u) + sum(e_bc)
    return {
        "t_local": t_local,
        "t_upload": t_upload,
        "t_upload_per_device": dict(zip(map(str, selected), t_up)),
        "t_agg": max(t_agg),
        "t_u2u": max(t_u2u),
        "t_broadcast": max(t_bc),
        "t_hover": t_hover,
        "e_hover": e_hover,
        "e_agg_per_uav": e_agg,
        "e_u2u_per_uav": e_u2u,
        "e_broadcast_per_uav": e_bc,
        "e_agg": sum(e_agg),
        "e_u2u": sum(e_u2u),
        "e_broadcast": sum(e_bc),
        "e_round": e_round,
    }


def main():
    doc = {
        "scenario": {
            "uavs": [[x, y, L_U] for x, y in UAVS],
            "devices": [list(p) for p in DEVICES],
            "serving_uav": SERVING,
            "dataset_sizes": SIZES,
        },
        "checkpoints": {
            "aggregation_energy_per_model": KAPPA * Q_U * PHI_U ** 2,
            "local_training_time": TAU * SIZES[0] / NU,
        },
        "cases": {
            "single_upload": {"policy": "top-alpha", "selected": [0], "designated_uav": 0,
                              "ledger": ledger([0], 0, M_BASE)},
            "cross_uav": {"policy": "top-alpha", "selected": [1, 2], "designated_uav": 0,
                          "ledger": ledger([1, 2], 0, M_BASE)},
            "per_uav_fedavg": {"policy": "intra-uav-fedavg", "selected": [0, 1, 2, 3],
                               "designated_uav": None,
                               "ledger": ledger([0, 1, 2, 3], None, M_TOTAL, per_uav_only=True)},
            "local_only": {"policy": "local-only", "selected": [], "designated_uav": None,
                           "ledger": ledger([], None, M_BASE)},
        },
    }
    out = pathlib.Path(__file__).with_name("energy_micro_expected.json")
    out.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
