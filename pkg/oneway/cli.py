"""
Command-line interface for oneway.

Every subcommand builds a RunConfig from defaults, an optional --config
document and the flags given, runs it through the Harness and writes the
report to stdout or --out.
"""

import sys
from pathlib import Path
from typing import Any

import click

from . import __version__
from .cluster import ClusterError
from .config import FORMATS, MODES, ORACLES, ORDERINGS, PROTOCOLS, ConfigError, ConfigManager
from .harness import Harness
from .logging_config import LOG_FORMATS, setup_logging
from .mbqc import ImpossibleBranchError, PatternError
from .noise import NoiseError
from .report import ReportError, ReportWriter, RowValueError
from .sim.statevec import StateError

EXIT_UNEXPECTED = 1
EXIT_SCHEMA = 2
EXIT_IO = 3
EXIT_IMPOSSIBLE_BRANCH = 4

_SCHEMA_ERRORS = (ConfigError, PatternError, ClusterError, NoiseError, StateError)

HELP_TEXT = """
oneway - one-way quantum computation on a two-photon four-qubit cluster.

Runs the rotation, C-NOT and C-Phase measurement patterns on the lab
encoding of the chain cluster and reports branch fidelities as JSON or CSV.

\b
Quick Start:
  oneway rotate --alpha pi/4 --beta pi/2
  oneway cnot --alpha pi/2 --oracle h --format csv
  oneway fidelity --noise-p 0.872
  oneway rotation-table --out rotation.csv --format csv

\b
Angles:
  Plain radians or rational multiples of pi: pi, -pi/4, 3pi/4, 3*pi/4

\b
Exit codes:
  0 success, 2 invalid input, 3 I/O error,
  4 forced branch is impossible, 1 unexpected error
"""


def run_options(func):
    """Flags shared by every run command; None means "not given"."""
    options = [
        click.option(
            "--config",
            "-c",
            "config_path",
            type=click.Path(dir_okay=False, path_type=Path),
            default=None,
            help="YAML or JSON run configuration",
        ),
        click.option("--alpha", default=None, help="First angle, e.g. pi/4"),
        click.option("--beta", default=None, help="Second angle, e.g. -pi/2"),
        click.option("--ordering", type=click.Choice(ORDERINGS), default=None),
        click.option("--oracle", type=click.Choice(ORACLES), default=None),
        click.option(
            "--ff", type=click.Choice(["on", "off"]), default=None, help="Pauli corrections"
        ),
        click.option(
            "--adaptive/--no-adaptive",
            default=None,
            help="Flip measurement angles on earlier outcomes",
        ),
        click.option(
            "--compensate-ht/--no-compensate-ht",
            default=None,
            help="Wave plates undoing the C-NOT target Hadamard",
        ),
        click.option("--noise-p", type=float, default=None, help="White-noise weight p"),
        click.option("--depol", default=None, help="Per-qubit depolarizing, e.g. 0.1,0,0,0"),
        click.option("--mode", type=click.Choice(MODES), default=None),
        click.option("--shots", type=int, default=None),
        click.option("--seed", type=int, default=None),
        click.option("--force-bits", default=None, help="Outcomes to force, e.g. 0,1,1"),
        click.option("--format", "format_", type=click.Choice(FORMATS), default=None),
        click.option(
            "--out", "-o", type=click.Path(dir_okay=False), default=None, help="Report file"
        ),
        click.option("--detector-map", default=None, help="e.g. a1=01,a2=00,b1=0"),
        click.option("--grid", type=int, default=None, help="Angles per axis for sweeps"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _overrides(options: dict[str, Any]) -> dict[str, Any]:
    overrides = dict(options)
    overrides["format"] = overrides.pop("format_", None)
    return overrides


def _execute(command: str | None, config_path: Path | None, overrides: dict[str, Any]) -> None:
    """Load, run and write one report; exits with the code of the error class."""
    try:
        config = ConfigManager().load_and_validate(config_path, overrides)
        result = Harness(config).run(command)
        writer = ReportWriter(config.format)
        if config.out:
            writer.write(result.rows, result.meta, Path(config.out))
            click.echo(f"✅ Wrote {len(result.rows)} rows to {config.out}")
        else:
            click.echo(writer.render(result.rows, result.meta), nl=False)
    except ImpossibleBranchError as e:
        click.echo(f"❌ Impossible branch: {e}", err=True)
        sys.exit(EXIT_IMPOSSIBLE_BRANCH)
    except _SCHEMA_ERRORS as e:
        click.echo(f"❌ Invalid input: {e}", err=True)
        sys.exit(EXIT_SCHEMA)
    except (ReportError, OSError) as e:
        click.echo(f"❌ I/O error: {e}", err=True)
        sys.exit(EXIT_IO)
    except RowValueError as e:
        click.echo(f"❌ Invalid result: {e}", err=True)
        sys.exit(EXIT_UNEXPECTED)
    except Exception as e:
        click.echo(f"❌ Unexpected error: {e}", err=True)
        sys.exit(EXIT_UNEXPECTED)


@click.group(help=HELP_TEXT)
@click.version_option(
    version=__version__, prog_name="oneway", message="%(prog)s version %(version)s"
)
@click.option(
    "--verbose", "-v", is_flag=True, help="Enable verbose logging for debugging"
)
@click.option(
    "--log-format",
    type=click.Choice(sorted(LOG_FORMATS)),
    default="simple",
    help="Format of log records on stderr",
)
@click.pass_context
def cli(ctx, verbose, log_format):
    """oneway - one-way quantum computation simulator."""
    ctx.ensure_object(dict)

    log_level = "DEBUG" if verbose else "INFO"
    setup_logging(level=log_level, format_style=log_format)

    ctx.obj["verbose"] = verbose


def _protocol(protocol: str, options: dict[str, Any], **fixed: Any) -> dict[str, Any]:
    return {**_overrides(options), "protocol": protocol, **fixed}


@cli.command()
@run_options
def rotate(config_path: Path | None, **options: Any):
    """Single-qubit rotation R_x(beta) R_z(alpha) on ordering a or b.

    Reports every branch with FF-on and FF-off fidelity.
    """
    _execute("rotation", config_path, _protocol("rotation", options))


@cli.command()
@run_options
def cnot(config_path: Path | None, **options: Any):
    """C-NOT with an equatorial target R_z(alpha)|+> on ordering c.

    One row per control readout and a joint row per branch.
    """
    _execute("cnot", config_path, _protocol("cnot", options))


@cli.command()
@run_options
def cphase(config_path: Path | None, **options: Any):
    """C-Phase with target R_x(beta) R_z(alpha)|+> on ordering d."""
    _execute("cphase", config_path, _protocol("cphase", options))


@cli.command()
@run_options
def fidelity(config_path: Path | None, **options: Any):
    """Direct and stabilizer fidelity of the (noisy) lab cluster state."""
    _execute("fidelity", config_path, _protocol("fidelity", options))


@cli.command(name="enumerate")
@run_options
@click.option(
    "--pattern-file",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Pattern JSON document",
)
@click.option(
    "--state",
    default=None,
    help='cluster, lab, or a graph JSON file {"n": .., "edges": [..]}',
)
def enumerate_branches(
    config_path: Path | None, pattern_file: Path | None, state: str | None, **options: Any
):
    """Dump every branch of a serialized pattern."""
    overrides = _protocol(
        "enumerate",
        options,
        pattern_file=str(pattern_file) if pattern_file else None,
        state=state,
    )
    _execute("enumerate", config_path, overrides)


@cli.command()
@run_options
@click.option("--protocol", type=click.Choice(PROTOCOLS), default=None)
def run(config_path: Path | None, protocol: str | None, **options: Any):
    """Run whichever protocol the flags or the --config document name."""
    _execute(None, config_path, {**_overrides(options), "protocol": protocol})


@cli.command(name="rotation-table")
@run_options
def rotation_table(config_path: Path | None, **options: Any):
    """Ordering b, beta = 0, alpha in {0, pi/2, pi/4, -pi/4}, s2 = 0 branches.

    Each branch is scored against its own closed form, next to the
    laboratory values.
    """
    _execute("rotation-table", config_path, _protocol("rotation", options, ordering="b"))


@cli.command(name="cnot-table")
@run_options
def cnot_table(config_path: Path | None, **options: Any):
    """Compensated C-NOT for oracles H and identity, alpha in {pi/2, pi/4}."""
    _execute("cnot-table", config_path, _protocol("cnot", options, compensate_ht=True))


@cli.command(name="ff-compare")
@run_options
def ff_compare(config_path: Path | None, **options: Any):
    """FF on against FF off per photon-A detector, ordering a, photon B on b1.

    Needs --alpha and --beta unless a --config document supplies them.
    """
    if config_path is None and (options["alpha"] is None or options["beta"] is None):
        raise click.UsageError("ff-compare needs --alpha and --beta")
    _execute("ff-compare", config_path, _protocol("rotation", options, ordering="a"))


@cli.command(name="cphase-avg")
@run_options
def cphase_avg(config_path: Path | None, **options: Any):
    """Conditional C-Phase fidelity averaged over a grid x grid lattice."""
    _execute("cphase-avg", config_path, _protocol("cphase", options))


PRESET_ALIASES = {"table1": rotation_table, "table2": cnot_table, "fig3": ff_compare}
for _alias, _command in PRESET_ALIASES.items():
    cli.add_command(_command, name=_alias)


def main():
    """Main entry point for the oneway CLI."""
    cli()


if __name__ == "__main__":
    cli()
