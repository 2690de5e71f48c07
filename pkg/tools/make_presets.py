"""Regenerate the register presets in src/spinscope/data.

The 23-spin register is SYNTHETIC: couplings are drawn uniformly
(a_zz in +-80 kHz, a_zx in 2..40 kHz, seed 3) and rounded to 0.1 kHz.
It is not the dataset behind the published detectability counts.
"""
import json
from pathlib import Path

import numpy as np

from spinscope.register import GAMMA_SI29, ElectronSpin, make_register

DATA = Path(__file__).resolve().parents[1] / "src" / "spinscope" / "data"
NV = ElectronSpin.nv_like()
HALF = ElectronSpin.spin_half()


def write(name, register, description):
    doc = {"description": description, **register.to_dict()}
    (DATA / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")


def main():
    DATA.mkdir(exist_ok=True)
    rng = np.random.default_rng(3)
    azz = np.round(rng.uniform(-80e3, 80e3, 23), -2)
    azx = np.round(rng.uniform(2e3, 40e3, 23), -2)
    couplings = list(zip(azz.tolist(), azx.tolist()))
    write("synthetic_23_s1", make_register(couplings, NV),
          "SYNTHETIC 23-spin 13C register, S=1 NV-like electron, wL/2pi = 500 kHz")
    write("synthetic_23_s_half", make_register(couplings, HALF),
          "SYNTHETIC 23-spin 13C register, S=1/2 group-IV electron, wL/2pi = 500 kHz")
    write("example_1spin", make_register([(20e3, 10e3)], NV), "one 13C, S=1 NV-like")
    write("example_2spin", make_register([(20e3, 10e3), (-35e3, 6e3)], NV), "two 13C, S=1 NV-like")
    write("example_3spin_s_half", make_register([(-60e3, 12e3), (25e3, 8e3), (90e3, 15e3)], HALF),
          "three 13C, S=1/2 group-IV")
    write("example_4spin", make_register([(20e3, 10e3), (-35e3, 6e3), (55e3, 20e3), (-8e3, 3e3)], HALF),
          "four 13C, S=1/2 group-IV")
    write("twin_spins", make_register([(30e3, 10e3), (30e3, 10e3)], NV), "two identical 13C (degenerate)")
    bis = make_register([(20e3, 10e3), (-30e3, 8e3)], NV)
    si = bis.spins[1].__class__("si0", -30e3, 8e3, GAMMA_SI29, "29Si")
    write("bispecies", bis.with_spins([bis.spins[0], si]), "one 13C and one 29Si, S=1 NV-like")


if __name__ == "__main__":
    main()
