#!/usr/bin/env python3
"""Deterministic mock scorer: fixed energy per sample index."""
import json
import sys

ENERGIES = {
    '0': -1.3,
    '1': -1.85,
    '2': -1.3,
    '3': -1.5,
    '4': -1.48,
    '5': -0.5,
    '8': -0.2,
    '9': -0.3,
    '10': -2.6,
    '11': -0.05,
    '12': 0.02,
    '13': -1.28,
    '14': 0.15,
    '15': 0.3,
    '17': -1.18,
    '18': -1.3,
    '19': -1.2,
    '20': -1.85,
    '21': -0.9,
    '23': -1.2,
    '24': -1.3,
    '25': -1.18,
    '26': -1.3,
    '27': -1.85,
    '28': -0.5,
}


def main():
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        energy = ENERGIES[req["id"]]
        sys.stdout.write(
            json.dumps({"id": req["id"], "energy_per_atom": energy}) + "\n")


if __name__ == "__main__":
    main()
