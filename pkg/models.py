from sqlmodel import SQLModel, Field
from typing import Any, Dict, List, Optional

SCHEMA_VERSION = 1


class BoundsOut(SQLModel):
    max_ind: Optional[int] = None
    max_extra: Optional[int] = None
    equivalence_bound: Optional[int] = None
    max_dom: Optional[int] = None


class CountermodelOut(SQLModel):
    domain: List[str] = Field(default_factory=list)
    individuals: Dict[str, str] = Field(default_factory=dict)
    concepts: Dict[str, List[str]] = Field(default_factory=dict)
    roles: Dict[str, List[List[str]]] = Field(default_factory=dict)


class AboxOut(SQLModel):
    text: str
    individuals: List[str] = Field(default_factory=list)
    assertions: int = 0


class VerdictOut(SQLModel):
    kind: str  # "yes", "no" or "unknown"
    exact: bool = True
    reason: str = ""
    bounds: BoundsOut = Field(default_factory=BoundsOut)
    certificate: Optional[Dict[str, Any]] = None


class AnswersOut(SQLModel):
    consistent: bool
    abox: AboxOut
    answers: Dict[str, VerdictOut] = Field(default_factory=dict)


class RewriteOut(SQLModel):
    construction: str
    document: str
    fresh_concepts: List[str] = Field(default_factory=list)
    provenance: Dict[str, str] = Field(default_factory=dict)
    verification: Optional["VerificationReportOut"] = None


class DiscrepancyOut(SQLModel):
    abox: str
    individual: str
    original: bool
    rewritten: bool
    answered_by: str


class UnknownCellOut(SQLModel):
    abox: str
    individual: str
    reason: str = ""


class VerificationReportOut(SQLModel):
    passed: bool
    checked: int = 0
    aboxes: int = 0
    discrepancies: List[DiscrepancyOut] = Field(default_factory=list)
    unknown: List[UnknownCellOut] = Field(default_factory=list)
    bounds: BoundsOut = Field(default_factory=BoundsOut)


class DecisionOut(SQLModel):
    verdict: str  # "rewritable", "not-rewritable" or "unknown"
    target: str
    exact: bool = True
    reason: str = ""
    bounds: BoundsOut = Field(default_factory=BoundsOut)
    witness: Optional[str] = None
    rewriting: Optional[RewriteOut] = None
    certificate: Optional[Dict[str, Any]] = None
    verification: Optional[VerificationReportOut] = None


class DisjunctAnalysisOut(SQLModel):
    query: str
    variables: int
    atoms: int
    x_acyclic: bool
    x_cycle: Optional[str] = None
    connected: bool
    x_accessible: bool
    tree_shaped: bool
    f_acyclic: Optional[bool] = None
    f_cycle: Optional[str] = None
    core: str


class AnalysisOut(SQLModel):
    dialect: str
    minimal_dialect: str
    sigma: str
    full_signature: bool
    tbox_kind: str  # "empty", "functionality-only" or "general"
    disjuncts: List[DisjunctAnalysisOut] = Field(default_factory=list)
    q_acyc_disjuncts: Optional[int] = None


class MmsnpEvalOut(SQLModel):
    holds: bool
    domain_size: int
    coloring: Optional[Dict[str, List[str]]] = None


class MmsnpVerdictOut(SQLModel):
    kind: str
    reason: str = ""
    bounds: BoundsOut = Field(default_factory=BoundsOut)
    certificate: Optional[Dict[str, Any]] = None


class SentenceOut(SQLModel):
    sentence: str
    rules: int


class ParseCheckOut(SQLModel):
    kind: str
    rendered: str


class ErrorOut(SQLModel):
    type: str
    message: str
    details: Dict[str, Any] = Field(default_factory=dict)


class ReportEnvelope(SQLModel):
    schema_version: int = SCHEMA_VERSION
    command: str
    exit_code: int
    result: Optional[Dict[str, Any]] = None
    error: Optional[ErrorOut] = None


RewriteOut.model_rebuild()
