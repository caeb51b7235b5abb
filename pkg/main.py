"""
Punto de entrada de la CLI smbbayes: simulate | sample | analyze.

    python main.py simulate --preset klatt-reference --out runs/ref
    python main.py sample --preset desk-scale --seed 7 --threads 4 --out runs/desk
    python main.py analyze --store runs/desk --analysis triangle --analysis fits
"""
import click

import config
from commands.analyze import analyze
from commands.sample import sample
from commands.simulate import simulate
from utils.logging_utils import log_event


@click.group("smbbayes")
@click.version_option("1.0.0", prog_name="smbbayes")
def cli():
    """Diseño bayesiano de procesos SMB de cuatro zonas (isoterma lineal)."""
    log_event("cli", "smbbayes", "env", f"env={config.ENV} log_level={config.LOG_LEVEL}", level="DEBUG")


# ========== COMANDOS ==========
cli.add_command(simulate)
cli.add_command(sample)
cli.add_command(analyze)


if __name__ == "__main__":
    cli()
