"""Closed-form channel values frozen into tests/test_channel.cpp.

Plain math module only; shares no code with the C++ implementation.
Run: python3 oracles/channel_oracle.py
"""
import math

C0 = 299_792_458.0
F = 2e9
A, B_SIG = 11.95, 0.14
ETA_LOS, ETA_NLOS = 3.0, 23.0
ALTITUDE = 100.0
N0 = 10 ** ((-174 - 30) / 10)


def air_to_ground(d):
    r = math.degrees(math.asin(ALTITUDE / d))
    p_los = 1 / (1 + A * math.exp(-B_SIG * (r - A)))
    fspl = 20 * math.log10(4 * math.pi * F * d / C0)
    los, nlos = fspl + ETA_LOS, fspl + ETA_NLOS
    return {
        "elevation_deg": r,
        "p_los": p_los,
        "pl_los_db": los,
        "pl_nlos_db": nlos,
        "gain_db": -(p_los * los + (1 - p_los) * nlos),
    }


def main():
    nadir = air_to_ground(100.0)
    edge = air_to_ground(math.hypot(200.0, 100.0))
    print("nadir", nadir)
    print("edge", edge)
    print("u2u_1000m", 10 ** (-31.5 / 10) / 1000.0**2)

    gain = 10 ** (nadir["gain_db"] / 10)
    p_dev = 10 ** ((23 - 30) / 10)
    share = 80e6 / 5
    rate = share * math.log2(1 + p_dev * gain / (share * N0))
    print("nadir_device_rate_share5", rate)
    print("nadir_upload_time_share5", 169_000 * 8 / rate)


if __name__ == "__main__":
    main()
