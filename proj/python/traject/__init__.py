"""EMOS post-processing and rapid adjustment of hourly forecast trajectories."""

from ._traject import (
    MAX_LEAD,
    MEMBERS,
    ConfigError,
    DataError,
    EmosParams,
    Error,
    InsufficientDataError,
    MissingArtifactError,
    RaftLink,
    bootstrap_ci,
    crps_ensemble,
    crps_gaussian,
    fit_emos,
    fit_link,
    pit,
    rmse,
    run_cli,
    select_adjustment_period,
    skill_score,
)


def run(subcommand, **options):
    """Run a pipeline step, e.g. run("synth", data_dir="d", days=60).

    Keyword names map to flags (data_dir -> --data-dir). Raises RuntimeError
    with the tool's message on a nonzero exit code.
    """
    args = [subcommand]
    for key, value in options.items():
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        args += ["--" + key.replace("_", "-"), str(value)]
    code, out, err = run_cli(args)
    if code != 0:
        raise RuntimeError(f"traject {subcommand} exited with {code}: {err.strip()}")
    return out


__all__ = [
    "MAX_LEAD",
    "MEMBERS",
    "ConfigError",
    "DataError",
    "EmosParams",
    "Error",
    "InsufficientDataError",
    "MissingArtifactError",
    "RaftLink",
    "bootstrap_ci",
    "crps_ensemble",
    "crps_gaussian",
    "fit_emos",
    "fit_link",
    "pit",
    "rmse",
    "run",
    "run_cli",
    "select_adjustment_period",
    "skill_score",
]
