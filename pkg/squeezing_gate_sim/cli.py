"""
Main entry point for the squeezing gate simulator
"""
import functools
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
import numpy as np
import pandas as pd

from squeezing_gate_sim import __version__
from squeezing_gate_sim.core.analysis import (
    LossBudget,
    SqueezingPair,
    budget_gap,
    infer_loss_and_r,
    loss_budget_product,
    loss_sensitivity,
    path_precision,
    product_metric,
)
from squeezing_gate_sim.core.config import RunManifest, SimulationConfig, load_config
from squeezing_gate_sim.core.errors import (
    ConfigError,
    DegenerateMeasurementError,
    EmptyBandError,
    GateSimulationError,
    InconsistentMeasurementError,
    InfeasibleParametersError,
    InvalidArgumentError,
)
from squeezing_gate_sim.core.gate import (
    ANCILLA_CONVENTIONS,
    MEASURED_PRODUCTS,
    analytic_variances,
    run_gate,
    spectral_sweep,
    sweep_transmittance,
)
from squeezing_gate_sim.core.gaussian import to_db
from squeezing_gate_sim.core.invariants import InvariantChecker
from squeezing_gate_sim.core.opa import (
    OpaGainLoss,
    OpaSpec,
    decompose_loss_then_amp,
    efficiency,
    lossy_opa_channel,
    slice_oracle,
    spec_from_gain_loss,
)
from squeezing_gate_sim.core.tables import (
    SIMULATE_COLUMNS,
    SPECTRUM_COLUMNS,
    SWEEP_COLUMNS,
    format_matrix,
    records_to_frame,
    write_csv,
    write_json,
)

logger = logging.getLogger(__name__)

EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_EMPTY_BAND = 4
EXIT_DEGENERATE = 5

DEFAULT_T_GRID = "0.30,0.40,0.50,0.62"


def exit_code(exc: GateSimulationError) -> int:
    if isinstance(exc, EmptyBandError):
        return EXIT_EMPTY_BAND
    if isinstance(exc, (DegenerateMeasurementError, InconsistentMeasurementError)):
        return EXIT_DEGENERATE
    if isinstance(exc, (ConfigError, InvalidArgumentError)):
        return EXIT_CONFIG
    if isinstance(exc, InfeasibleParametersError):
        return EXIT_INFEASIBLE
    return EXIT_INVARIANT


def handle_errors(command):
    """Turn simulator errors into a diagnostic on stderr and the matching exit code"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except GateSimulationError as exc:
            click.echo(f"error: {exc}", err=True)
            click.get_current_context().exit(exit_code(exc))

    return wrapper


def _parse_floats(ctx, param, value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def output_options(command):
    """--json, --output, --manifest and --invariants-report"""
    command = click.option("--invariants-report", "report_path", type=click.Path(dir_okay=False),
                           help="Write the invariant check report as YAML")(command)
    command = click.option("--manifest", "manifest_path", type=click.Path(dir_okay=False),
                           help="Write a YAML run manifest")(command)
    command = click.option("-o", "--output", type=click.File("w"), default="-",
                           help="Output file (default stdout)")(command)
    command = click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of CSV")(command)
    return command


config_option = click.option(
    "--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None, help="Experiment config (default: the shipped experiment setup)",
)
jobs_option = click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
                           help="Worker processes for grid evaluation")


def _emit(frame: pd.DataFrame, output, as_json: bool, summary: Optional[Dict[str, Any]] = None) -> None:
    if as_json:
        write_json(frame, output, summary)
    else:
        write_csv(frame, output, summary)


def _check_invariants(frame: pd.DataFrame, table_name: str, report_path: Optional[str]) -> None:
    checker = InvariantChecker()
    passed = checker.validate_table(frame, table_name)
    if report_path:
        checker.generate_report(report_path)
    if not passed:
        for failure in checker.failures():
            click.echo(f"invariant violated: {failure['rule'].get('description', failure['rule'])}", err=True)
        click.get_current_context().exit(EXIT_INVARIANT)


def _write_manifest(manifest_path: Optional[str], command: str, config: SimulationConfig) -> None:
    if manifest_path:
        RunManifest.for_run(command, config).write(manifest_path)
        logger.info("wrote manifest to %s", manifest_path)


def _report_frame(rows: List[tuple]) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=["quantity", "value"])


@click.group()
@click.version_option(__version__, prog_name="squeezing-gate")
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for debug output")
def cli(verbose):
    """Squeezing gate simulator CLI"""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


@cli.command()
@config_option
@click.option("--ancilla-convention", type=click.Choice(ANCILLA_CONVENTIONS), default="measured",
              show_default=True, help="How measured ancilla levels enter the analytic prediction")
@output_options
@handle_errors
def simulate(config_path, ancilla_convention, as_json, output, manifest_path, report_path):
    """Run the gate once and compare with the analytic prediction"""
    config = load_config(config_path)
    outcome = run_gate(config.gate)
    predicted = analytic_variances(config.gate, ancilla_convention)

    rows = []
    for name in ("S_plus", "S_minus", "product", "S_plus_pre", "S_minus_pre", "product_pre"):
        pipeline_db = to_db(getattr(outcome, name))
        analytic_db = to_db(getattr(predicted, name))
        rows.append((name, pipeline_db, analytic_db, pipeline_db - analytic_db))
    frame = pd.DataFrame(rows, columns=SIMULATE_COLUMNS)

    _check_invariants(frame, "simulate", report_path)
    _emit(frame, output, as_json, {"attenuation": outcome.attenuation})
    _write_manifest(manifest_path, "simulate", config)


@cli.command()
@config_option
@click.option("--t-grid", default=DEFAULT_T_GRID, show_default=True, callback=_parse_floats,
              help="Comma-separated transmittances")
@click.option("--ancilla-convention", type=click.Choice(ANCILLA_CONVENTIONS), default="measured",
              show_default=True)
@click.option("--compare", is_flag=True, help="Add the measured products next to the simulated ones")
@jobs_option
@output_options
@handle_errors
def sweep(config_path, t_grid, ancilla_convention, compare, jobs, as_json, output, manifest_path, report_path):
    """Sweep the variable beam splitter transmittance"""
    config = load_config(config_path)
    records = sweep_transmittance(config.gate, t_grid, ancilla_convention, n_jobs=jobs)
    frame = records_to_frame(records, SWEEP_COLUMNS)

    _check_invariants(frame, "sweep", report_path)

    if compare:
        measured = [
            next((value for T, value in MEASURED_PRODUCTS.items() if np.isclose(T, row_T)), (np.nan, np.nan))
            for row_T in frame["T"]
        ]
        frame["measured_product_pre"] = [pre for pre, _ in measured]
        frame["measured_product"] = [post for _, post in measured]

    _emit(frame, output, as_json)
    _write_manifest(manifest_path, "sweep", config)


@cli.command()
@config_option
@click.option("--fmax", type=click.FloatRange(min=0, min_open=True), default=2.0, show_default=True,
              help="Highest sideband frequency in THz")
@click.option("--bins", type=click.IntRange(min=2), default=200, show_default=True,
              help="Number of frequency bins")
@jobs_option
@output_options
@handle_errors
def spectrum(config_path, fmax, bins, jobs, as_json, output, manifest_path, report_path):
    """Levels across sideband frequency with the configured delay and dispersion"""
    config = load_config(config_path)
    f_thz = np.linspace(fmax / bins, fmax, bins)
    result = spectral_sweep(config.gate, config.spectral, f_thz * 1e12, n_jobs=jobs)

    frame = pd.DataFrame(
        {
            "f_THz": f_thz,
            "S_plus_dB": [to_db(p.S_plus) for p in result.points],
            "S_minus_dB": [to_db(p.S_minus) for p in result.points],
            "cancellation_dB": [p.cancellation_db for p in result.points],
        },
        columns=SPECTRUM_COLUMNS,
    )
    _check_invariants(frame, "spectrum", report_path)

    summary = {
        "band_S_plus_dB": to_db(result.band_S_plus),
        "band_S_minus_dB": to_db(result.band_S_minus),
        "band_cancellation_dB": to_db(result.band_cancellation),
        "mask_inner_THz": config.spectral.mask_inner / 1e12,
        "mask_outer_THz": config.spectral.mask_outer / 1e12,
        "bins_in_band": result.bins_in_band,
    }
    _emit(frame, output, as_json, summary)
    _write_manifest(manifest_path, "spectrum", config)


@cli.command("infer-loss")
@click.option("--s-plus-db", type=float, required=True, help="Anti-squeezing level in dB")
@click.option("--s-minus-db", type=float, required=True, help="Squeezing level in dB (magnitude)")
@click.option("--budget", callback=_parse_floats, help="Comma-separated itemized transmittances")
@click.option("--uncertainty-db", type=click.FloatRange(min=0), default=None,
              help="Report the loss range for levels moved by +-this many dB")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of CSV")
@handle_errors
def infer_loss(s_plus_db, s_minus_db, budget, uncertainty_db, as_json):
    """Infer loss and squeezing parameter from a measured level pair"""
    pair = SqueezingPair.from_db(s_plus_db, s_minus_db)
    inference = infer_loss_and_r(pair)

    rows = [
        ("loss", inference.loss),
        ("r", inference.r),
        ("residual", inference.residual),
        ("product", product_metric(pair)),
    ]
    if budget is not None:
        itemized = LossBudget.from_values(budget)
        transmittance, budget_loss = loss_budget_product(itemized)
        rows += [
            ("budget_transmittance", transmittance),
            ("budget_loss", budget_loss),
            ("loss_difference", budget_gap(inference.loss, itemized)),
        ]
    if uncertainty_db is not None:
        loss_min, loss_max = loss_sensitivity(pair, uncertainty_db)
        rows += [("loss_min", loss_min), ("loss_max", loss_max)]

    _emit(_report_frame(rows), sys.stdout, as_json)


@cli.command("opa-check")
@click.option("--g", "g", type=float, required=True, help="Parametric gain per metre")
@click.option("--alpha", type=float, required=True, help="Extinction coefficient per metre")
@click.option("--L", "length", type=float, default=1.0, show_default=True, help="Waveguide length in metres")
@click.option("--slices", type=click.IntRange(min=1), default=10000, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of CSV")
@handle_errors
def opa_check(g, alpha, length, slices, as_json):
    """Compare the closed-form waveguide amplifier with its slice construction"""
    spec = OpaSpec(g=g, alpha=alpha, L=length)
    closed = lossy_opa_channel(spec, 0)
    oracle = slice_oracle(spec, slices, 0)
    for label, channel in (("closed form", closed), ("slice oracle", oracle)):
        logger.debug("%s scale:\n%s", label, format_matrix(channel.scale))
        logger.debug("%s noise:\n%s", label, format_matrix(channel.noise))

    entries = {
        "scale_x": (closed.scale[0, 0], oracle.scale[0, 0]),
        "scale_p": (closed.scale[1, 1], oracle.scale[1, 1]),
        "noise_x": (closed.noise[0, 0], oracle.noise[0, 0]),
        "noise_p": (closed.noise[1, 1], oracle.noise[1, 1]),
    }
    rows = []
    for name, (exact, sliced) in entries.items():
        deviation = abs(sliced - exact) / abs(exact) if exact != 0 else abs(sliced - exact)
        rows.append((name, exact, sliced, deviation))
    frame = pd.DataFrame(rows, columns=["entry", "closed_form", "slice_oracle", "relative_deviation"])

    eta, G_hat = decompose_loss_then_amp(spec)
    summary = {
        "max_relative_deviation": float(frame["relative_deviation"].max()),
        "efficiency": efficiency(spec),
        "eta": eta,
        "G_hat": G_hat,
        "gain_dB": spec.gain_db,
    }
    _emit(frame, sys.stdout, as_json, summary)


@cli.command("opa-fit")
@click.option("--gain-db", type=float, required=True, help="Measured gain in dB")
@click.option("--loss", type=float, required=True, help="Effective propagation loss as a fraction")
@click.option("--length", type=float, default=1.0, show_default=True, help="Assumed waveguide length in metres")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of CSV")
@handle_errors
def opa_fit(gain_db, loss, length, as_json):
    """Waveguide gain and extinction reproducing a measured gain and loss"""
    spec = spec_from_gain_loss(OpaGainLoss(gain_db, loss), length)
    rows = [
        ("g", spec.g),
        ("alpha", spec.alpha),
        ("L", spec.L),
        ("efficiency", efficiency(spec)),
        ("gain_dB", spec.gain_db),
    ]
    _emit(_report_frame(rows), sys.stdout, as_json)


@cli.command("path-precision")
@click.option("--f-thz", type=float, default=1.0, show_default=True, help="Sideband frequency in THz")
@click.option("--degrees", type=float, default=1.0, show_default=True, help="Phase tolerance in degrees")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of CSV")
@handle_errors
def path_precision_command(f_thz, degrees, as_json):
    """Path-length adjustment matching a phase tolerance at a sideband frequency"""
    length = path_precision(f_thz * 1e12, degrees)
    rows = [("length_m", length), ("length_um", length * 1e6)]
    _emit(_report_frame(rows), sys.stdout, as_json)


def main():
    cli(prog_name="squeezing-gate")


if __name__ == "__main__":
    main()
