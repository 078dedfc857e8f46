"""Regenerate data/synthetic_gains.csv.

Model gains of the density-sweep configuration (delta_k = 210 rad/m, EP at
5.5e12 cm^-3) on 20 densities, with 3 % multiplicative Gaussian noise drawn
from numpy's default_rng(SEED).
"""

from pathlib import Path

import numpy as np

from aptfwm.config import load_config
from aptfwm.fitting import synthetic_dataset
from aptfwm.tables import write_dataset

SEED = 20240611
NOISE = 0.03
ROOT = Path(__file__).resolve().parents[1]


def main():
    cfg = load_config(ROOT / "configs" / "fig1_density.ini")
    grid = np.linspace(5e12, 9e12, 20)
    ds = synthetic_dataset(cfg.physical, "density", grid, noise=NOISE, seed=SEED)
    write_dataset(ds, ROOT / "data" / "synthetic_gains.csv", comments=[
        "synthetic probe/Stokes gains from configs/fig1_density.ini",
        f"delta_k = 210 rad/m, g = {cfg.physical.g!r} SI, alpha_ref = {cfg.physical.alpha_ref!r} rad/m",
        f"multiplicative gaussian noise {NOISE}, numpy default_rng seed {SEED}",
        "regenerate with scripts/make_synthetic_dataset.py",
    ])


if __name__ == "__main__":
    main()
