"""Command-line entry point: ``qdotspin {run,sweep,demo-swap,calc,validate}``.

Exit codes: 0 success, 2 configuration/validation failure, 3 numeric failure.
``QDOTSPIN_OUTPUT_DIR`` sets the directory for relative output paths.  When
the ``CI`` environment variable is set, ``run`` refuses to start without an
explicit ``--seed``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import constants, esr, exchange, harness, microwave
from .config import ConfigError, load_config
from .readout import DetectorModel, ReadoutConfig, ReadoutScheme
from .state import StateError
from .units import UnitError, parse_quantity

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
OUTPUT_ENV = "QDOTSPIN_OUTPUT_DIR"


def _out_path(name: str) -> Path:
    p = Path(name)
    if not p.is_absolute() and os.environ.get(OUTPUT_ENV):
        p = Path(os.environ[OUTPUT_ENV]) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


# name -> (function, [(arg, dimension)], result label, result unit)
def _calculators():
    def wire(a):
        return microwave.wire_field(a["current"], microwave.WireGeometry(a["distance"], a["mu_r"]))

    def current(a):
        return microwave.required_current(a["b1"], microwave.WireGeometry(a["distance"], a["mu_r"]))

    def ohmic(a):
        return microwave.ohmic_power(a["current"], microwave.WireGeometry(1.0, resistance=a["resistance"]))

    def dissipated(a):
        geo = microwave.WireGeometry(1.0, resistance=a["resistance"])
        return microwave.dissipated_power(a["current"], geo, a["overhead"])

    def near(a):
        rep = microwave.near_field_check(microwave.WireGeometry(a["distance"]), a["frequency"],
                                         a["permittivity"], a["threshold"])
        return rep.to_dict()

    def budget(a):
        rep = microwave.thermal_budget_check(a["power"], microwave.ThermalBudget(a["available"], a["duty"]))
        return rep.to_dict()

    return {
        "wire-field": (wire, {"current": "current", "distance": "length", "mu_r": None}, "B1", "T"),
        "required-current": (current, {"b1": "field", "distance": "length", "mu_r": None}, "I", "A"),
        "ohmic-power": (ohmic, {"current": "current", "resistance": "resistance"}, "P", "W"),
        "dissipated-power": (dissipated, {"current": "current", "resistance": "resistance",
                                          "overhead": None}, "P", "W"),
        "cavity-power": (lambda a: microwave.cavity_power_estimate(a["b1"]), {"b1": "field"}, "P", "W"),
        "near-field": (near, {"distance": "length", "frequency": "frequency", "permittivity": None,
                              "threshold": None}, None, None),
        "thermal-budget": (budget, {"power": "power", "available": "power", "duty": None}, None, None),
        "zeeman": (lambda a: constants.zeeman_splitting(a["g"], a["field"]), {"g": None, "field": "field"},
                   "dE_z", "eV"),
        "larmor": (lambda a: constants.larmor_frequency(a["g"], a["field"]), {"g": None, "field": "field"},
                   "f0", "Hz"),
        "thermal-up": (lambda a: constants.thermal_up_probability(a["g"], a["field"], a["temperature"]),
                       {"g": None, "field": "field", "temperature": "temperature"}, "Pr[up]", ""),
        "polarization": (lambda a: constants.polarization_condition_met(a["g"], a["field"], a["temperature"]),
                         {"g": None, "field": "field", "temperature": "temperature"}, "condition met", ""),
        "rabi-frequency": (lambda a: esr.rabi_frequency(a["g"], a["b1"]), {"g": None, "b1": "field"},
                           "f1", "Hz"),
        "min-f1": (lambda a: esr.min_observable_f1(a["t1"], a["t2"]), {"t1": "time", "t2": "time"},
                   "f1_min", "Hz"),
        "cw-saturation": (lambda a: esr.cw_saturation_probability(a["f1"], a["t1"], a["t2"]),
                          {"f1": "frequency", "t1": "time", "t2": "time"}, "Pr[up]", ""),
        "addressing": (lambda a: esr.detuning_for_addressing(a["g_base"], a["g_shifted"], a["field"],
                                                              a["mode"]),
                       {"g_base": None, "g_shifted": None, "field": "field", "mode": "str"}, "detuning", "Hz"),
        "swap-time": (lambda a: exchange.swap_time(exchange.j_energy_from_frequency(a["j"])),
                      {"j": "frequency"}, "t_swap", "s"),
        "error-budget": (lambda a: harness.error_per_gate_budget(a["gate"], a["t2"]),
                         {"gate": "time", "t2": "time"}, "error/gate", ""),
    }


_CALC_DEFAULTS = {"mu_r": 1.0, "overhead": microwave.DEFAULT_LOSS_OVERHEAD,
                  "permittivity": microwave.GAAS_SURFACE_PERMITTIVITY,
                  "threshold": microwave.NEAR_FIELD_RATIO, "duty": 1.0, "mode": "signed",
                  "resistance": microwave.REFERENCE_RESISTANCE, "available": 300e-6}


def _build_parser():
    p = argparse.ArgumentParser(prog="qdotspin", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a protocol config")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--shots", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--out", help="write RunResult JSON here instead of stdout")
    r.add_argument("--shots-csv", help="write per-shot records as CSV")

    s = sub.add_parser("sweep", help="sweep one config entry and emit CSV")
    s.add_argument("config")
    s.add_argument("--path", required=True, help="dot path into the config, e.g. protocol.1.duration")
    s.add_argument("--values", required=True, help="comma-separated values (unit strings allowed)")
    s.add_argument("--shots", type=int, default=1000)
    s.add_argument("--observable", default="q0=down")
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", help="CSV file (default stdout)")

    d = sub.add_parser("demo-swap", help="SWAP demonstration with a pure and a mixed qubit")
    d.add_argument("--p-up", type=float, default=0.5)
    d.add_argument("--shots", type=int, default=10000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--noise", type=float, default=0.0, help="detector noise_sigma_at_1us")
    d.add_argument("--readout", default="ideal", choices=["ideal"] + [s.value for s in ReadoutScheme])
    d.add_argument("--json", action="store_true")

    c = sub.add_parser("calc", help="engineering calculators")
    c.add_argument("name", choices=sorted(_calculators()))
    c.add_argument("--json", action="store_true")
    names = sorted({k for _, args, _, _ in _calculators().values() for k in args})
    for n in names:
        c.add_argument("--" + n.replace("_", "-"), dest=n)

    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    return p


def _cmd_run(args):
    if os.environ.get("CI") and args.seed is None:
        raise ConfigError("--seed is mandatory for run in CI mode")
    exp = load_config(args.config)
    seed = args.seed if args.seed is not None else exp.run.seed
    if seed is None:
        raise ConfigError("no seed given (config run.seed or --seed)")
    res = harness.run_protocol(exp.protocol, exp.device, args.shots or exp.run.shots, seed,
                               args.workers or exp.run.workers, keep_shots=bool(args.shots_csv))
    text = res.to_json()
    if args.out:
        _out_path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.shots_csv:
        with open(_out_path(args.shots_csv), "w", newline="") as fh:
            res.write_shots_csv(fh)


def _cmd_sweep(args):
    exp_doc = json.loads(Path(args.config).read_text()) if Path(args.config).exists() else json.loads(args.config)
    values = []
    for v in args.values.split(","):
        v = v.strip()
        try:
            values.append(float(v))
        except ValueError:
            values.append(v)
    spec = harness.SweepSpec(args.path, values, args.shots, args.observable)
    results = harness.run_sweep(exp_doc, spec, args.seed, args.workers)
    if args.out:
        with open(_out_path(args.out), "w", newline="") as fh:
            harness.write_sweep_csv(results, spec, fh)
    else:
        harness.write_sweep_csv(results, spec, sys.stdout)


def _cmd_demo_swap(args):
    readout = ReadoutConfig.ideal() if args.readout == "ideal" else ReadoutConfig(scheme=args.readout)
    res = harness.swap_demo_experiment(args.p_up, args.shots, readout, args.seed,
                                       DetectorModel(noise_sigma_at_1us=args.noise))
    table = res.table()
    if args.json:
        print(json.dumps(table, sort_keys=True, indent=2))
        return
    print(f"{'':8s}{'Pr[q1 up]':>12s}{'Pr[q2 up]':>12s}")
    for row in ("before", "after"):
        print(f"{row:8s}{table[row]['q1_up']:12.4f}{table[row]['q2_up']:12.4f}")


def _cmd_calc(args):
    fn, spec, label, unit = _calculators()[args.name]
    values = {}
    for key, dim in spec.items():
        raw = getattr(args, key)
        if raw is None:
            if key not in _CALC_DEFAULTS:
                raise ConfigError(f"calc {args.name} needs --{key.replace('_', '-')}")
            values[key] = _CALC_DEFAULTS[key]
        elif dim == "str":
            values[key] = raw
        else:
            values[key] = parse_quantity(raw, expect=dim)
    result = fn(values)
    if args.json:
        payload = result if isinstance(result, dict) else {label: result, "unit": unit}
        print(json.dumps({"calculator": args.name, "inputs": values, "result": payload}, sort_keys=True))
        return
    if isinstance(result, dict):
        for k, v in result.items():
            print(f"{k:18s} {v}")
    elif isinstance(result, bool):
        print(f"{label:18s} {result}")
    else:
        print(f"{label:18s} {result:.6g} {unit}".rstrip())


COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "demo-swap": _cmd_demo_swap, "calc": _cmd_calc,
            "validate": lambda a: (load_config(a.config), print("ok"))}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (ConfigError, UnitError, harness.ProtocolError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (harness.NumericError, StateError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
