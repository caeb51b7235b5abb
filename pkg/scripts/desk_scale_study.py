"""
Estudio del posterior a escala reducida (N_z = 20, modo edm-equilibrium,
2 cadenas, 100 muestras, burn-in 25, ε = 0.99, cotas de diseño).

Corre `sample`, calcula las razones m_j de las muestras post burn-in y
verifica:
- al menos 90 % de las muestras en la región A
- moda de m_III - m_II en [0.10, 0.20] y de m_I - m_IV en [0.30, 0.45]
- pendiente del ajuste (m_II, m_III) en [0.9, 1.1]

Uso:
    python scripts/desk_scale_study.py --out runs/desk --seed 7 --threads 8
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

import click

from commands.analyze import cmd_analyze
from commands.sample import cmd_sample
from storage.run_store import RunStore
from utils.analysis_engine import linear_fit, ratio_difference_histogram, triangle_table
from utils.presets import load_run_config

CHECKS = {
    "region_a_fraction": (0.90, 1.0),
    "mode_m3_minus_m2": (0.10, 0.20),
    "mode_m1_minus_m4": (0.30, 0.45),
    "slope_m3_vs_m2": (0.9, 1.1),
}


@click.command()
@click.option("--out", default="runs/desk-scale", help="Directorio de la corrida")
@click.option("--seed", type=int, default=7)
@click.option("--threads", type=int, default=2)
@click.option("--skip-sampling", is_flag=True, help="Reusar cadenas existentes en --out")
def main(out: str, seed: int, threads: int, skip_sampling: bool):
    config = load_run_config(preset="desk-scale")
    out_dir = Path(out)
    if not skip_sampling:
        print(f"📄 Muestreando en {out_dir} (seed={seed}, threads={threads})")
        cmd_sample(config, out_dir, seed=seed, threads=threads)

    cmd_analyze(config, out_dir, ["triangle", "fits", "ratio-histogram", "ci-table"], threads=threads)

    frame = RunStore(out_dir).load_post_burn_in()
    names = config.plant.isotherm.component_names
    ratios = triangle_table(frame, config.plant.geometry, config.plant.isotherm, names[-1], names[0])
    values = {
        "region_a_fraction": float((ratios["region"] == "A").mean()),
        "mode_m3_minus_m2": ratio_difference_histogram(ratios, "III-II").mode,
        "mode_m1_minus_m4": ratio_difference_histogram(ratios, "I-IV").mode,
        "slope_m3_vs_m2": linear_fit(ratios["m_II"], ratios["m_III"]).slope,
    }

    failed = 0
    for name, (low, high) in CHECKS.items():
        ok = low <= values[name] <= high
        failed += not ok
        print(f"{'✅' if ok else '❌'} {name} = {values[name]:.4f} (esperado [{low}, {high}])")
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
