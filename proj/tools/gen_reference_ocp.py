#!/usr/bin/env python3
"""Regenerate the reference open-circuit potential tables in data/.

The tables are stand-ins: the cell these parameters were identified for has
no published OCP data. Graphite uses the Chen et al. (2020) LG M50 anode fit
directly. NMC uses the Chen et al. (2020) NMC811 fit restricted to its valid
lithiation window [0.27, 0.95] and rescaled onto theta in [0, 1], so that the
preset's near-empty positive electrode starts on the high-voltage plateau.
"""
import math
import pathlib

NMC_WINDOW = (0.27, 0.95)


def graphite(x):
    return (1.9793 * math.exp(-39.3631 * x) + 0.2482
            - 0.0909 * math.tanh(29.8538 * (x - 0.1234))
            - 0.04478 * math.tanh(14.9159 * (x - 0.2769))
            - 0.0205 * math.tanh(30.4444 * (x - 0.6103)))


def nmc(theta):
    x = NMC_WINDOW[0] + (NMC_WINDOW[1] - NMC_WINDOW[0]) * theta
    return (-0.8090 * x + 4.4875
            - 0.0428 * math.tanh(18.5138 * (x - 0.5542))
            - 17.7326 * math.tanh(15.7890 * (x - 0.3117))
            + 17.5842 * math.tanh(15.9308 * (x - 0.3120)))


def knots():
    fine = [i * 0.0025 for i in range(40)]
    coarse = [0.1 + i * 0.01 for i in range(91)]
    return fine + coarse


def write(path, label, fn):
    lines = [f"# {label}", "theta,voltage_V"]
    for t in knots():
        lines.append(f"{t:.4f},{fn(t):.9f}")
    path.write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parent.parent / "data"
    write(out / "ocp_graphite_reference.csv",
          "SUBSTITUTE reference curve: graphite, Chen et al. 2020 LG M50 fit", graphite)
    write(out / "ocp_nmc_reference.csv",
          "SUBSTITUTE reference curve: NMC811, Chen et al. 2020 fit rescaled from x in [0.27, 0.95]", nmc)
