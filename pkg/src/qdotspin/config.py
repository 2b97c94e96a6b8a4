"""Experiment configuration documents (JSON) and their translation to objects.

Schema (version 1)::

    {
      "schema_version": 1,
      "device": {
        "preset": "paper-device",          # optional starting point
        "n_qubits": 1,                     # default: len(dots) or 1
        "B0": "5T", "temperature": "100mK",
        "dots": [{"g_d": 0.44, "T1": "100us", "T2": "100ns",
                  "charging_energy": "3meV", "level_spacing": "1meV"}],
        "leads": {"g_l": 0.5, "g_l_eff": 5, "filling_factor": 1,
                  "fermi_level_offset": "-0.5meV"}
      },
      "protocol": [
        {"type": "init", "qubit": 0, "method": "polarized_leads"},
        {"type": "init", "qubit": 0, "method": "thermal", "wait_time": "500us"},
        {"type": "init", "qubit": 1, "method": "partially_polarized_leads",
         "lead_polarization": 0.5},
        {"type": "wait", "duration": "1us"},
        {"type": "esr", "b1": "1mT", "duration": "81ns", "phase": 0,
         "carrier": "resonant" | "30.8GHz", "resonant_qubit": 0,
         "integrator_step": "10ps", "rwa": true, "frame": "rotating"},
        {"type": "exchange", "J": "20GHz" | "82ueV", "duration": "25ps"},
        {"type": "exchange", "J": "20GHz", "gate": "swap" | "sqrt_swap"},
        {"type": "measure", "qubit": 0,
         "readout": "ideal" | {"scheme": "rate_selective", "gamma_up_out": "10MHz",
                               "gamma_down_out": "100Hz", "gamma_in": "10MHz",
                               "measurement_window": "5us",
                               "singlet_triplet_splitting": "1meV"},
         "detector": {"noise_sigma_at_1us": 0.1, "threshold": 0.5}}
      ],
      "run": {"shots": 10000, "seed": 1, "workers": 1}
    }

Quantities accept the unit grammar of `qdotspin.units`.  ``J`` may be given
as an energy or as a frequency (J/h).
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .constants import DeviceParams, DotParams, LeadParams, paper_device
from .esr import BlochSettings, EsrPulse
from .exchange import ExchangePulse, j_energy_from_frequency, sqrt_swap_pulse, swap_pulse
from .harness import EsrBurst, Exchange, Init, Measure, ProtocolError, Wait, validate_protocol
from .initialization import InitMethod
from .readout import DetectorModel, ReadoutConfig
from .units import UnitError, parse_quantity, parse_with_dimension

__all__ = ["SCHEMA_VERSION", "ConfigError", "Experiment", "RunSettings", "load_config",
           "parse_device", "parse_step"]

SCHEMA_VERSION = 1
PRESETS = {"paper-device": paper_device}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunSettings:
    shots: int = 1000
    seed: int | None = None
    workers: int = 1


@dataclass(frozen=True)
class Experiment:
    device: DeviceParams
    protocol: list
    run: RunSettings


def _q(d, key, dim, default=None):
    if key not in d:
        return default
    try:
        return parse_quantity(d[key], expect=dim)
    except UnitError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_device(d: dict) -> DeviceParams:
    d = dict(d)
    n = d.get("n_qubits", len(d.get("dots", [])) or 1)
    preset = d.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown device preset {preset!r}")
        base = PRESETS[preset](n)
    else:
        base = DeviceParams(dots=(DotParams(),) * n)
    shared = {}
    for key, dim in (("B0", "field"), ("temperature", "temperature")):
        v = _q(d, key, dim)
        if v is not None:
            shared[key] = v
    dot_docs = d.get("dots", [{}] * n)
    if len(dot_docs) != n:
        raise ConfigError(f"n_qubits = {n} but {len(dot_docs)} dot entries given")
    dots = []
    for i, dd in enumerate(dot_docs):
        fields = dict(shared)
        if "g_d" in dd:
            fields["g_d"] = float(dd["g_d"])
        for key, dim in (("T1", "time"), ("T2", "time"), ("charging_energy", "energy"),
                         ("level_spacing", "energy")):
            v = _q(dd, key, dim)
            if v is not None:
                fields[key] = v
        dots.append(base.dots[i].with_(**fields))
    ld = d.get("leads", {})
    leads = base.leads
    if ld:
        leads = LeadParams(
            g_l=float(ld.get("g_l", leads.g_l)),
            g_l_eff=float(ld.get("g_l_eff", leads.g_l_eff)),
            filling_factor=int(ld.get("filling_factor", leads.filling_factor)),
            fermi_level_offset=_q(ld, "fermi_level_offset", "energy", leads.fermi_level_offset),
        )
    return DeviceParams(dots=tuple(dots), leads=leads)


def _exchange_energy(value) -> float:
    v, dim = parse_with_dimension(value)
    if dim == "frequency":
        return j_energy_from_frequency(v)
    if dim in (None, "energy"):
        return v
    raise ConfigError(f"J must be an energy or a frequency, got {value!r}")


def _readout(doc) -> ReadoutConfig:
    if doc is None or doc == "ideal":
        return ReadoutConfig.ideal()
    if isinstance(doc, str):
        return ReadoutConfig(scheme=doc)
    kwargs = {"scheme": doc.get("scheme", "rate_selective")}
    for key in ("gamma_up_out", "gamma_down_out", "gamma_in"):
        v = _q(doc, key, "frequency")
        if v is not None:
            kwargs[key] = v
    v = _q(doc, "measurement_window", "time")
    if v is not None:
        kwargs["measurement_window"] = v
    v = _q(doc, "singlet_triplet_splitting", "energy")
    if v is not None:
        kwargs["singlet_triplet_splitting"] = v
    return ReadoutConfig(**kwargs)


def _detector(doc) -> DetectorModel:
    if not doc:
        return DetectorModel()
    kwargs = {}
    if "charge_levels" in doc:
        kwargs["charge_levels"] = tuple(doc["charge_levels"])
    if "noise_sigma_at_1us" in doc:
        kwargs["noise_sigma_at_1us"] = float(doc["noise_sigma_at_1us"])
    if "threshold" in doc:
        kwargs["threshold"] = float(doc["threshold"])
    return DetectorModel(**kwargs)


def parse_step(doc: dict, device: DeviceParams):
    kind = doc.get("type")
    if kind == "init":
        method = InitMethod(
            variant=doc.get("method", "polarized_leads"),
            wait_time=_q(doc, "wait_time", "time", 0.0),
            lead_polarization=float(doc.get("lead_polarization", 1.0)),
            tunnel_time=_q(doc, "tunnel_time", "time", 0.1e-6),
            spin_flip_probability=float(doc.get("spin_flip_probability", 0.0)),
        )
        return Init(int(doc.get("qubit", 0)), method)
    if kind == "wait":
        return Wait(_q(doc, "duration", "time", 0.0))
    if kind == "esr":
        carrier = doc.get("carrier", "resonant")
        if carrier == "resonant":
            q = int(doc.get("resonant_qubit", 0))
            if not 0 <= q < device.n_qubits:
                raise ConfigError(f"resonant_qubit {q} not in device")
            f_c = device.dots[q].larmor_frequency
        else:
            f_c = parse_quantity(carrier, expect="frequency")
        pulse = EsrPulse(f_c, _q(doc, "b1", "field", 0.0), _q(doc, "duration", "time", 0.0),
                         float(doc.get("phase", 0.0)))
        settings = BlochSettings(_q(doc, "integrator_step", "time"), doc.get("frame", "rotating"),
                                 bool(doc.get("rwa", True)))
        return EsrBurst(pulse, settings)
    if kind == "exchange":
        if "J" not in doc:
            raise ConfigError("exchange step needs J")
        J = _exchange_energy(doc["J"])
        gate = doc.get("gate")
        if gate == "swap":
            return Exchange(swap_pulse(J))
        if gate == "sqrt_swap":
            return Exchange(sqrt_swap_pulse(J))
        if gate is not None:
            raise ConfigError(f"unknown gate {gate!r}")
        return Exchange(ExchangePulse(J, _q(doc, "duration", "time", 0.0)))
    if kind == "measure":
        return Measure(int(doc.get("qubit", 0)), _readout(doc.get("readout")),
                       _detector(doc.get("detector")))
    raise ConfigError(f"unknown step type {kind!r}")


def load_config(source) -> Experiment:
    """Parse and validate a config given as dict, JSON text or file path."""
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        text = path.read_text() if path.exists() else str(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    try:
        device = parse_device(doc.get("device", {"preset": "paper-device"}))
        steps_doc = doc.get("protocol")
        if not isinstance(steps_doc, list):
            raise ConfigError("protocol must be a list of steps")
        steps = []
        for i, s in enumerate(steps_doc):
            try:
                steps.append(parse_step(s, device))
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"protocol step {i}: {exc}") from None
        validate_protocol(steps, device)
        rd = doc.get("run", {})
        run = RunSettings(int(rd.get("shots", 1000)),
                          None if rd.get("seed") is None else int(rd["seed"]),
                          int(rd.get("workers", 1)))
    except ConfigError:
        raise
    except (ValueError, TypeError, ProtocolError) as exc:
        raise ConfigError(str(exc)) from None
    return Experiment(device, steps, run)
