"""Scenario configuration: the dataclass and its INI-style file loader.

A scenario file has up to five sections, all optional, every key optional:

    [scenario]  seed, blocks, behavior fractions
    [roles]     actor counts per role
    [amounts]   token quantities, batch-size ranges, thresholds
    [params]    protocol constants (mirrors the Params dataclass)
    [costs]     gas model scalars plus pricing for the USD column

Unknown sections or keys are rejected outright rather than ignored, since
a typo that silently falls back to a default is the worst failure mode a
config file can have.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from ..costmodel import CostParams, default_cost_params
from ..errors import InvalidParameter
from ..state import Params


@dataclass
class ScenarioConfig:
    # [scenario]
    seed: int = 1
    blocks: int = 60
    payment_probability: float = 0.8       # chance a buyer registers a batch each block
    locked_fraction: float = 0.0           # fraction of batches registered locked
    instant_fraction: float = 0.0          # fraction of collects using instant slots
    external_destination_fraction: float = 0.0  # collects paid to an outside address
    cheating_delegate_fraction: float = 0.0
    lazy_monitor_fraction: float = 0.0
    withholding_unlocker_fraction: float = 0.0

    # [roles]
    buyers: int = 4
    sellers: int = 12
    delegates: int = 1
    monitors: int = 1
    unlockers: int = 0
    bulk_register_sellers: bool = False

    # [amounts]
    per_destination_min: int = 1
    per_destination_max: int = 20
    payees_min: int = 1
    payees_max: int = 8
    accumulation_threshold: int = 3        # matured payments before a seller collects
    collect_fee: int = 2
    unlocker_fee: int = 1
    overstatement_min: int = 1             # token units a cheater adds to a claim
    overstatement_max: int = 25
    buyer_deposit: int = 200_000
    delegate_deposit: int = 50_000
    monitor_deposit: int = 5_000

    # pricing knobs for the report's USD column ([costs] section)
    gas_price_gwei: float = 5.0
    eth_usd: float = 225.0

    params: Params = field(default_factory=Params)
    costs: CostParams = field(default_factory=default_cost_params)

    def validate(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise InvalidParameter("seed must fit in 64 bits")
        if self.blocks < 0:
            raise InvalidParameter("blocks must be >= 0")
        for name in (
            "payment_probability",
            "locked_fraction",
            "instant_fraction",
            "external_destination_fraction",
            "cheating_delegate_fraction",
            "lazy_monitor_fraction",
            "withholding_unlocker_fraction",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameter(f"{name} must be in [0, 1], got {value}")
        for name in ("buyers", "sellers", "delegates", "monitors", "unlockers"):
            if getattr(self, name) < 0:
                raise InvalidParameter(f"{name} must be >= 0")
        for lo, hi in (
            ("per_destination_min", "per_destination_max"),
            ("payees_min", "payees_max"),
            ("overstatement_min", "overstatement_max"),
        ):
            if getattr(self, lo) < 1:
                raise InvalidParameter(f"{lo} must be >= 1")
            if getattr(self, lo) > getattr(self, hi):
                raise InvalidParameter(f"{lo} > {hi}: empty range")
        if self.accumulation_threshold < 1:
            raise InvalidParameter("accumulation_threshold must be >= 1")
        for name in (
            "collect_fee",
            "unlocker_fee",
            "buyer_deposit",
            "delegate_deposit",
            "monitor_deposit",
        ):
            if getattr(self, name) < 0:
                raise InvalidParameter(f"{name} must be >= 0")
        if self.gas_price_gwei <= 0 or self.eth_usd <= 0:
            raise InvalidParameter("gas_price_gwei and eth_usd must be positive")
        if self.locked_fraction > 0 and self.unlockers == 0:
            raise InvalidParameter("locked payments configured but no unlockers")
        self.params.validate()
        self.costs.validate()


def _parse_bool(raw: str, where: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise InvalidParameter(f"{where}: expected a boolean, got {raw!r}")


def _parse_int(raw: str, where: str) -> int:
    try:
        return int(raw.strip(), 0)
    except ValueError:
        raise InvalidParameter(f"{where}: expected an integer, got {raw!r}") from None


def _parse_float(raw: str, where: str) -> float:
    try:
        return float(raw.strip())
    except ValueError:
        raise InvalidParameter(f"{where}: expected a number, got {raw!r}") from None


_SCENARIO_FLOATS = {
    "payment_probability",
    "locked_fraction",
    "instant_fraction",
    "external_destination_fraction",
    "cheating_delegate_fraction",
    "lazy_monitor_fraction",
    "withholding_unlocker_fraction",
}
_SCENARIO_INTS = {"seed", "blocks"}
_ROLE_INTS = {"buyers", "sellers", "delegates", "monitors", "unlockers"}
_ROLE_BOOLS = {"bulk_register_sellers"}
_AMOUNT_INTS = {
    "per_destination_min",
    "per_destination_max",
    "payees_min",
    "payees_max",
    "accumulation_threshold",
    "collect_fee",
    "unlocker_fee",
    "overstatement_min",
    "overstatement_max",
    "buyer_deposit",
    "delegate_deposit",
    "monitor_deposit",
}
_PARAM_INTS = {f.name for f in fields(Params)}
_COST_INTS = {"base_tx", "per_zero_byte", "per_nonzero_byte", "per_storage_write"}
_COST_FLOATS = {"gas_price_gwei", "eth_usd"}


def _apply_section(config: ScenarioConfig, section: str, items) -> None:
    for key, raw in items:
        where = f"[{section}] {key}"
        if section == "scenario":
            if key in _SCENARIO_INTS:
                setattr(config, key, _parse_int(raw, where))
            elif key in _SCENARIO_FLOATS:
                setattr(config, key, _parse_float(raw, where))
            else:
                raise InvalidParameter(f"{where}: unknown key")
        elif section == "roles":
            if key in _ROLE_INTS:
                setattr(config, key, _parse_int(raw, where))
            elif key in _ROLE_BOOLS:
                setattr(config, key, _parse_bool(raw, where))
            else:
                raise InvalidParameter(f"{where}: unknown key")
        elif section == "amounts":
            if key not in _AMOUNT_INTS:
                raise InvalidParameter(f"{where}: unknown key")
            setattr(config, key, _parse_int(raw, where))
        elif section == "params":
            if key not in _PARAM_INTS:
                raise InvalidParameter(f"{where}: unknown key")
            setattr(config.params, key, _parse_int(raw, where))
        elif section == "costs":
            if key in _COST_INTS:
                setattr(config.costs, key, _parse_int(raw, where))
            elif key in _COST_FLOATS:
                setattr(config, key, _parse_float(raw, where))
            else:
                raise InvalidParameter(f"{where}: unknown key")
        else:
            raise InvalidParameter(f"unknown section [{section}]")


def parse_scenario_config(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InvalidParameter(f"config does not parse: {exc}") from exc
    if parser.defaults():
        raise InvalidParameter("keys outside a section are not allowed")
    config = ScenarioConfig()
    for section in parser.sections():
        _apply_section(config, section, parser.items(section))
    config.validate()
    return config


def load_scenario_config(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidParameter(f"cannot read config {path}: {exc}") from exc
    return parse_scenario_config(text)
