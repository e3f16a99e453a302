"""Command-line scenario runner.

    timebin-qudits simulate --config scenario.toml --seed 42 --out out/
    timebin-qudits analytic --config scenario.toml
    timebin-qudits sweep --param sweep.parameter=hardware.delta_phi_deg
    timebin-qudits validate
    timebin-qudits rates --param "rates.dimensions=[2,4,8]"

Errors are reported as one JSON object ``{code, message, context}`` on stderr
with a nonzero exit status.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, oracle
from .chain import Apparatus, BASES, build_measurement_chain, propagate, routing_table
from .config import (
    SCHEMA_VERSION,
    config_hash,
    get_path,
    hardware_from_config,
    load_config,
    noise_from_config,
    parse_value,
    set_path,
)
from .errors import ConfigError, QuditSimError
from .hilbert import PhotonicState
from .montecarlo import frame_start_ps, run_experiment

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2


def _provenance(cfg: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "config_hash": config_hash(cfg), "seed": cfg["seed"]}


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(rows: list[dict], header: dict) -> str:
    buf = io.StringIO()
    for key, value in header.items():
        buf.write(f"# {key}={value}\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def _table(out: Path, stem: str, rows: list[dict], cfg: dict) -> Path:
    head = _provenance(cfg)
    if cfg["output"]["format"] == "json":
        path = out / f"{stem}.json"
        _write(path, _dump({**head, "rows": rows}))
    else:
        path = out / f"{stem}.csv"
        _write(path, _csv(rows, head))
    return path


def _pairs(cfg) -> list[tuple[int, int]]:
    return [tuple(p) for p in cfg["bases"]]


def cmd_simulate(cfg: dict, out: Path) -> int:
    d = cfg["dimension"]
    counts = run_experiment(
        d,
        hardware_from_config(cfg),
        noise_from_config(cfg),
        shots=cfg["shots"],
        seed=cfg["seed"],
        basis_pairs=_pairs(cfg),
        shards=cfg["run"]["shards"],
        workers=cfg["run"]["workers"],
    )
    head = _provenance(cfg)
    for (a, b), cm in sorted(counts.items()):
        if cfg["output"]["format"] == "json":
            _write(out / f"counts_{a}{b}.json", _dump({**head, **cm.to_dict()}))
        else:
            _write(out / f"counts_{a}{b}.csv", cm.to_csv(head))
        _write(
            out / f"probabilities_{a}{b}.json",
            _dump({**head, "alpha": a, "beta": b, "probabilities": analysis.probabilities(cm).tolist()}),
        )
    report = analysis.build_report(counts)
    report.check()
    _write(out / "report.json", report.to_json(**head) + "\n")
    return EXIT_OK


def analytic_matrices(cfg: dict) -> dict:
    d = cfg["dimension"]
    hw = hardware_from_config(cfg)
    return {(a, b): oracle.confusion_matrix_analytic(a, b, hw, d) for a, b in _pairs(cfg)}


def cmd_analytic(cfg: dict, out: Path) -> int:
    d = cfg["dimension"]
    hw = hardware_from_config(cfg)
    head = _provenance(cfg)
    matrices = analytic_matrices(cfg)
    for (a, b), P in sorted(matrices.items()):
        _write(
            out / f"probabilities_{a}{b}.json",
            _dump(
                {
                    **head,
                    "alpha": a,
                    "beta": b,
                    "raw": P.tolist(),
                    "probabilities": analysis.probabilities(P).tolist(),
                }
            ),
        )
    for b in BASES:
        apparatus = build_measurement_chain(d, b, hw)
        windows = routing_table(build_measurement_chain(d, b, hw.ideal()))
        _write(
            out / f"apparatus_{b}.json",
            _dump({**head, "apparatus": apparatus.to_dict(), "windows": windows.to_dict()}),
        )
    report = analysis.build_report(matrices)
    report.check()
    _write(out / "report.json", report.to_json(**head) + "\n")
    return EXIT_OK


def sweep_rows(cfg: dict) -> list[dict]:
    """Detection-model (no sampling) fidelities, QBER and rate along one parameter."""
    sweep = cfg["sweep"]
    name = sweep["parameter"]
    try:
        get_path(cfg, name)
    except (KeyError, TypeError):
        raise ConfigError(f"unknown sweep parameter {name!r}", parameter=name) from None
    rows = []
    for value in np.linspace(sweep["start"], sweep["stop"], sweep["num"]):
        point = json.loads(json.dumps(cfg))
        set_path(point, name, float(value))
        point = load_config(None, _flatten(point))
        d = point["dimension"]
        hw = hardware_from_config(point)
        noise = noise_from_config(point)
        windows = routing_table(build_measurement_chain(d, 0, hw.ideal()))
        tables = {}
        for a, b in ((0, 0), (1, 1)):
            probs = oracle.detection_model_probabilities(
                a,
                b,
                hw,
                d,
                mu=noise.mu,
                efficiency=noise.efficiency,
                jitter_sigma_ps=noise.jitter_sigma_ps,
                dark_count_rate_hz=noise.dark_count_rate_hz,
                frame_ps=noise.frame_ps,
                frame_start_ps=frame_start_ps(windows),
            )
            tables[(a, b)] = probs[:, :d]
        report = analysis.build_report(tables)
        row = {name: float(value), "qber": report.qber, "rate": report.rate}
        for basis, fs in report.fidelities.items():
            for i, f in enumerate(fs):
                row[f"F{i}_{basis}"] = f
        rows.append(row)
    return rows


def _flatten(cfg: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in cfg.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict) and key != "transmissions":
            flat.update(_flatten(value, path + "."))
        else:
            flat[path] = value
    return flat


def cmd_sweep(cfg: dict, out: Path) -> int:
    _table(out, "sweep", sweep_rows(cfg), cfg)
    return EXIT_OK


def validation_results(cfg: dict, n_states: int = 100, tol: float = 1e-10) -> list[dict]:
    d = cfg["dimension"]
    hw = hardware_from_config(cfg)
    rng = np.random.default_rng(cfg["seed"])
    results = []
    for b in BASES:
        a = build_measurement_chain(d, b, hw)
        cm = oracle.full_matrix(a)
        worst = 0.0
        for _ in range(n_states):
            vec = rng.normal(size=d) + 1j * rng.normal(size=d)
            vec /= np.linalg.norm(vec)
            state = PhotonicState.from_vector(a.grid, a.input_modes(), vec)
            diff = propagate(state, a) - cm.apply(state)
            worst = max(worst, max((abs(v) for v in diff.amplitudes.values()), default=0.0))
        unitary = cm.unitarity_error() if a.lossless else None
        reloaded = Apparatus.from_dict(json.loads(json.dumps(a.to_dict())))
        ideal = build_measurement_chain(d, b, hw.ideal())
        same_routing = routing_table(ideal) == routing_table(
            build_measurement_chain(d, b, reloaded.hardware.ideal())
        )
        results.append(
            {
                "basis": b,
                "max_deviation": worst,
                "unitarity_error": unitary,
                "round_trip_routing": same_routing,
                "passed": worst < tol and (unitary is None or unitary < tol) and same_routing,
            }
        )
    return results


def cmd_validate(cfg: dict, out: Path) -> int:
    results = validation_results(cfg)
    _write(out / "validate.json", _dump({**_provenance(cfg), "results": results}))
    return EXIT_OK if all(r["passed"] for r in results) else EXIT_CHECK_FAILED


def cmd_rates(cfg: dict, out: Path) -> int:
    dims = cfg["rates"]["dimensions"]
    rows = analysis.rate_table(dims, cfg["rates"]["qbers"])
    _table(out, "rates", rows, cfg)
    thresholds = [{"d": d, "threshold": analysis.key_rate_threshold(d)} for d in dims]
    _table(out, "thresholds", thresholds, cfg)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "analytic": cmd_analytic,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "rates": cmd_rates,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="timebin-qudits", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="scenario TOML file (defaults to the reference geometry)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--shots", type=int)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--format", choices=["json", "csv"])
    parser.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="dotted-path override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {}
        for item in args.param:
            if "=" not in item:
                raise ConfigError(f"--param expects KEY=VALUE, got {item!r}", param=item)
            key, value = item.split("=", 1)
            overrides[key.strip()] = parse_value(value.strip())
        for key, value in (
            ("seed", args.seed),
            ("shots", args.shots),
            ("output.dir", args.out),
            ("output.format", args.format),
        ):
            if value is not None:
                overrides[key] = value
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg, Path(cfg["output"]["dir"]))
    except QuditSimError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), default=str) + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
