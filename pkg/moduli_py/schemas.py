import json
import os
from datetime import datetime, timezone
from fractions import Fraction
from math import factorial, gcd
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from moduli_py.enums import SCHEMA_VERSION, Command, OutputFormat, Preset
from moduli_py.exceptions import UsageError
from moduli_py.models import EtaClass, EtaSpec, RankDegreeGenus, WeylElement, WeylTerm
from moduli_py.symfunc import discriminant_class


class RationalPayload(BaseModel):
    """An exact rational as decimal strings."""

    num: str
    den: str = "1"

    @staticmethod
    def of(value: Fraction | int) -> "RationalPayload":
        value = Fraction(value)
        return RationalPayload(num=str(value.numerator), den=str(value.denominator))

    def to_fraction(self) -> Fraction:
        return Fraction(int(self.num), int(self.den))


class WeylTermPayload(BaseModel):
    """One Weyl element and its contribution: {"weyl": [1, 0], "value": {"num": "1", "den": "2"}}."""

    weyl: list[int]
    value: RationalPayload

    @staticmethod
    def of(term: WeylTerm) -> "WeylTermPayload":
        return WeylTermPayload(weyl=list(term.weyl.permutation), value=RationalPayload.of(term.contribution))

    def to_term(self) -> WeylTerm:
        return WeylTerm(WeylElement(tuple(self.weyl)), self.value.to_fraction())


class EtaSpecPayload(BaseModel):
    """Wire form of an EtaSpec: {"a": {"2": 1}, "b": [[2, 1], [2, 3]], "f": {"2": 2}}."""

    a: dict[int, int] = Field(default_factory=dict)
    b: list[tuple[int, int]] = Field(default_factory=list)
    f: dict[int, int] = Field(default_factory=dict)
    lam: bool = False

    @staticmethod
    def of(spec: EtaSpec) -> "EtaSpecPayload":
        return EtaSpecPayload(a=spec.a, b=spec.b, f=spec.f, lam=spec.lam)

    def to_spec(self) -> EtaSpec:
        return EtaSpec(a=dict(self.a), b=list(self.b), f=dict(self.f), lam=self.lam)


def rational_polynomial(coefficients: dict[int, dict[int, Fraction]], degree: int) -> list[list[RationalPayload]]:
    """t-coefficients 0..degree, each a list of λ-coefficients."""
    rows = []
    for r in range(degree + 1):
        row = coefficients.get(r, {})
        top = max(row, default=-1)
        rows.append([RationalPayload.of(row.get(j, 0)) for j in range(top + 1)])
    return rows


def resolve_eta(text: str | None, rdg: RankDegreeGenus, r: int = 0, absorb_f2: bool = False) -> EtaClass:
    """Parse an EtaSpec JSON document or expand a preset.

    Args:
        text: JSON text or a preset name, None for the unit class 1.
        rdg: rank, degree and genus the class lives on.
        r: the power of a₂ in the Thaddeus preset.
        absorb_f2: leave exp f₂ out of the presets, for formulas that already carry it.
    Raises:
        UsageError: the text is neither valid JSON nor a preset, or the class does not fit rank and genus.
    """
    if text is None:
        return EtaClass.of(EtaSpec().validate(rdg))
    presets = {preset.value: preset for preset in Preset}
    if text in presets:
        return _preset(presets[text], rdg, r, absorb_f2)
    try:
        payload = EtaSpecPayload.model_validate(json.loads(text))
    except (json.JSONDecodeError, ValidationError) as e:
        raise UsageError(f"malformed EtaSpec {text!r}: {e}") from e
    return EtaClass.of(payload.to_spec().validate(rdg))


def _preset(preset: Preset, rdg: RankDegreeGenus, r: int, absorb_f2: bool) -> EtaClass:
    if preset is Preset.ETA0_EXPF2:
        base = discriminant_class(rdg.n, rdg.g).to_class(preset.value)
        fill = (rdg.real_dim - rdg.pontryagin_threshold) // 2
    else:
        if rdg.n != 2:
            raise UsageError("the Thaddeus preset is defined for rank 2 only")
        if not 0 <= r <= rdg.g - 1:
            raise UsageError(f"a₂-power {r} is outside 0..{rdg.g - 1}")
        base = EtaClass([(Fraction(1), EtaSpec(a={2: r}, lam=True))], preset.value)
        fill = (rdg.real_dim - 4 * r) // 2
    if absorb_f2:
        return base
    weight = Fraction(1, factorial(fill))
    return EtaClass([(c * weight, s.times(EtaSpec(f={2: fill}))) for c, s in base.terms], base.name)


class JobConfig(BaseModel):
    """One CLI job, validated before dispatch."""

    command: Command
    n: int
    d: int
    g: int
    eta: str | None = None
    out: OutputFormat = OutputFormat.TEXT
    cache_dir: Path | None = Field(default_factory=lambda: os.environ.get("RESIDUE_CACHE_DIR") or None)
    caps: int | Literal["auto"] = "auto"
    threads: int = Field(default_factory=lambda: os.cpu_count() or 1)
    quick: bool = False
    pad_f2: bool = False
    verify_cache: bool = False
    r: int = 0
    inject_sign_error: bool = False

    @field_validator("threads")
    @classmethod
    def positive_threads(cls, value: int) -> int:
        if value < 1:
            raise ValueError("threads must be at least 1")
        return value

    @model_validator(mode="after")
    def check_ranges(self) -> "JobConfig":
        if self.n < 2:
            raise ValueError(f"rank {self.n} is below 2, the moduli space is a point")
        if self.g < 2:
            raise ValueError(f"genus {self.g} is below 2")
        if gcd(self.n, self.d) != 1:
            raise ValueError(f"rank {self.n} and degree {self.d} are not coprime")
        if self.command is not Command.VERIFY:
            try:
                resolve_eta(self.eta, self.rdg, self.r, absorb_f2=self.command is Command.CHERN)
            except UsageError as e:
                raise ValueError(str(e)) from e
        return self

    @property
    def rdg(self) -> RankDegreeGenus:
        return RankDegreeGenus(self.n, self.d, self.g)

    @property
    def caps_override(self) -> int | None:
        return None if self.caps == "auto" else self.caps


class CacheRecord(BaseModel):
    key: str
    schema_version: int = SCHEMA_VERSION
    command: str
    n: int
    d: int
    g: int
    eta: str
    value: Any
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    engine_version: str


class Report(BaseModel):
    """The JSON report printed by the CLI."""

    command: str
    n: int
    d: int
    g: int
    eta: str | None = None
    result: Any = None
    metadata: dict[str, Any] = Field(default_factory=dict)
