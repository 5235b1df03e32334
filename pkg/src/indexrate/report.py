"""Assemble bounds, heuristics, oracle and closed forms into one rate report."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

from ._bits import fmt_subset
from .bounds import dsm_plus_dp
from .capm import run_capm
from .generators import SUITE_NOTES, match_fixture
from .closed_form import PreconditionError, dag_analysis, directed_cycle_rate, no_excess_rate, theorem3_rate
from .instance import Instance, classify
from .oracle import DEFAULT_MAX_BITS, exact_scalar_linear
from .scapm import run_scapm


def fraction_text(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def decimal_text(q: Fraction, digits: int = 6) -> str:
    """Exact decimal when it terminates, otherwise ``digits`` places and a trailing '...'."""
    sign = "-" if q < 0 else ""
    q = abs(q)
    whole, rem = divmod(q.numerator, q.denominator)
    out = []
    for _ in range(digits):
        if not rem:
            break
        d, rem = divmod(rem * 10, q.denominator)
        out.append(str(d))
    text = sign + str(whole)
    if out:
        text += "." + "".join(out)
    return text + ("..." if rem else "")


@dataclass
class RateReport:
    m: int
    s: int
    classification: dict
    lower: int
    lower_permutation: tuple[int, ...]
    capm: int
    capm_messages: list[str]
    scapm: Fraction
    scapm_t: int
    oracle: int | None = None
    oracle_rows: list[str] | None = None
    oracle_pivots: tuple[int, ...] | None = None
    oracle_skipped: str | None = None
    closed_forms: dict = field(default_factory=dict)
    certified_optimal: bool = False
    certificate_kind: str = "none"
    warnings: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scapm"] = {
            "numerator": self.scapm.numerator,
            "denominator": self.scapm.denominator,
            "text": fraction_text(self.scapm),
            "decimal": decimal_text(self.scapm),
        }
        d["lower_permutation"] = list(self.lower_permutation)
        if self.oracle_pivots is not None:
            d["oracle_pivots"] = list(self.oracle_pivots)
        return d

    def render(self) -> str:
        c = self.classification
        lines = [
            f"instance      m={self.m} s={self.s} gm2_form={str(c['is_gm2_form']).lower()} "
            f"dag={str(c['is_dag']).lower()} directed_cycle={str(c['is_directed_cycle']).lower()} "
            f"unicast={str(c['is_unicast']).lower()}",
            f"lower (DSM+)  {self.lower}   order {' '.join(map(str, self.lower_permutation))}",
            f"capm          {self.capm}",
            f"scapm         {fraction_text(self.scapm)} ({decimal_text(self.scapm)})   t={self.scapm_t}",
        ]
        if self.oracle is not None:
            lines.append(f"scalar-linear {self.oracle}   (exact over binary scalar linear codes)")
        else:
            lines.append(f"scalar-linear skipped: {self.oracle_skipped}")
        for name, value in self.closed_forms.items():
            lines.append(f"closed form   {name} = {value}")
        verdict = "yes" if self.certified_optimal else "no"
        lines.append(f"certified     {verdict} ({self.certificate_kind})")
        lines.extend(f"note          {n}" for n in self.notes)
        return "\n".join(lines) + "\n"


def build_report(inst: Instance, warnings=(), max_oracle_bits: int = DEFAULT_MAX_BITS) -> RateReport:
    cls = classify(inst)
    lower = dsm_plus_dp(inst)
    capm = run_capm(inst)
    scapm = run_scapm(inst)
    rep = RateReport(
        m=inst.m,
        s=inst.s,
        classification=asdict(cls),
        lower=lower.value,
        lower_permutation=lower.permutation,
        capm=capm.rate,
        capm_messages=capm.table.describe(inst),
        scapm=scapm.rate,
        scapm_t=scapm.t,
        warnings=list(warnings),
    )
    if inst.s <= max_oracle_bits:
        r, code = exact_scalar_linear(inst, max_oracle_bits)
        rep.oracle, rep.oracle_rows, rep.oracle_pivots = r, code.row_strings(), code.pivots
    else:
        rep.oracle_skipped = f"s={inst.s} exceeds --max-oracle-bits {max_oracle_bits}"

    best = min(Fraction(capm.rate), scapm.rate)
    checks = []
    if cls.is_gm2_form:
        value, arg = theorem3_rate(inst)
        rep.closed_forms["theorem3"] = value
        checks.append(("theorem3", value))
    if cls.is_dag:
        value, order = dag_analysis(inst)
        rep.closed_forms["dag"] = value
        checks.append(("dag", value))
    if cls.is_directed_cycle:
        value = directed_cycle_rate(inst.m)
        rep.closed_forms["directed-cycle"] = value
        checks.append(("directed-cycle", value))
    try:
        value = no_excess_rate(inst)
    except PreconditionError:
        pass
    else:
        rep.closed_forms["no-excess"] = value
        checks.append(("no-excess", value))

    if lower.value == best:
        rep.certified_optimal, rep.certificate_kind = True, "bounds-met"
    else:
        for kind, value in checks:
            if best == value:
                rep.certified_optimal, rep.certificate_kind = True, kind
                break
    if not rep.certified_optimal:
        rep.notes.append(f"gap between lower bound {lower.value} and best scheme {fraction_text(best)}")
    known = match_fixture(inst)
    if known in SUITE_NOTES:
        rep.notes.append(SUITE_NOTES[known])
    return rep


def message_summary(inst: Instance, table) -> list[dict]:
    out = []
    for msg in table.messages:
        out.append(
            {
                "subset": fmt_subset(msg.subset),
                "components": ["+".join(inst.labels(c.bits)) for c in msg.components],
                "excess": [c.excess for c in msg.components],
            }
        )
    return out
