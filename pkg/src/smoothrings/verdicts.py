"""Three-valued verification outcomes.

Equality of smooth terms modulo an ideal is undecidable, so every check in
this package answers with one of three statuses: Proven (purely syntactic
reasoning: normalization equality or certificate algebra folding to a
syntactic identity), NumericallySupported (held at every sampled point, with
the evidence recorded), or Refuted (a concrete witness point is attached).
"""

from __future__ import annotations

from dataclasses import dataclass, field

PROVEN = "proven"
SUPPORTED = "numerically_supported"
REFUTED = "refuted"

_RANK = {PROVEN: 0, SUPPORTED: 1, REFUTED: 2}


@dataclass(frozen=True)
class Verdict:
    status: str
    samples: int = 0
    max_residual: float = 0.0
    witness: tuple[float, ...] | None = None
    detail: str = ""
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.status not in _RANK:
            raise ValueError(f"unknown verdict status {self.status!r}")
        if self.status == REFUTED and self.witness is None:
            raise ValueError("a refutation must carry a concrete witness")

    @staticmethod
    def proven(detail: str = "") -> "Verdict":
        return Verdict(PROVEN, detail=detail)

    @staticmethod
    def supported(samples: int, max_residual: float, detail: str = "",
                  flags: tuple[str, ...] = ()) -> "Verdict":
        return Verdict(SUPPORTED, samples=samples, max_residual=max_residual,
                       detail=detail, flags=flags)

    @staticmethod
    def refuted(witness: tuple[float, ...], residual: float, detail: str = "") -> "Verdict":
        return Verdict(REFUTED, samples=0, max_residual=residual,
                       witness=tuple(float(w) for w in witness), detail=detail)

    @property
    def is_proven(self) -> bool:
        return self.status == PROVEN

    @property
    def is_refuted(self) -> bool:
        return self.status == REFUTED

    @property
    def accepted(self) -> bool:
        return self.status in (PROVEN, SUPPORTED)

    def to_dict(self) -> dict:
        out: dict = {
            "status": self.status,
            "samples": self.samples,
            "max_residual": self.max_residual,
        }
        if self.witness is not None:
            out["witness"] = list(self.witness)
        if self.detail:
            out["detail"] = self.detail
        if self.flags:
            out["flags"] = list(self.flags)
        return out


def merge_verdicts(verdicts: list[Verdict], detail: str = "") -> Verdict:
    """Worst-of combination: refuted dominates, proven only if unanimous."""
    if not verdicts:
        return Verdict.proven(detail or "vacuous")
    worst = max(verdicts, key=lambda v: _RANK[v.status])
    if worst.is_refuted:
        return Verdict(REFUTED, samples=worst.samples, max_residual=worst.max_residual,
                       witness=worst.witness, detail=detail or worst.detail)
    samples = sum(v.samples for v in verdicts)
    residual = max(v.max_residual for v in verdicts)
    flags = tuple(sorted({f for v in verdicts for f in v.flags}))
    if worst.is_proven:
        return Verdict(PROVEN, detail=detail or worst.detail, flags=flags)
    return Verdict(SUPPORTED, samples=samples, max_residual=residual,
                   detail=detail or worst.detail, flags=flags)
