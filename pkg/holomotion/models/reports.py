from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from holomotion.config import Tolerances
from holomotion.models.domain import Subcommand, Verdict


class VerdictEntry(BaseModel):
    check: str = Field(..., description="What was decided (axioms, generator-0, lift, ...)")
    verdict: Verdict


class WordEntry(BaseModel):
    generator: int = Field(..., description="Index of the generator loop of pi_1")
    word: str = Field(..., description="Freely reduced braid word in token form, e.g. 's1 s2^-1'")
    exponent_sum: int
    trivial: bool = Field(..., description="Triviality in Mod(0, n) after the full-twist quotient")


class ArtifactEntry(BaseModel):
    kind: str = Field(..., description="braid-svg, grid-json, beltrami-svg or motion-toml")
    path: str = Field(..., description="Path relative to the output directory")


class Report(BaseModel):
    version: str
    subcommand: Subcommand
    input: str
    seed: int
    tolerances: Tolerances
    verdicts: List[VerdictEntry] = []
    words: List[WordEntry] = []
    artifacts: List[ArtifactEntry] = []
    details: Dict[str, Any] = {}
    exit_code: int = 0
    cause: Optional[str] = Field(None, description="Exception class name when the run failed")
    message: Optional[str] = Field(None, description="Error details (if failed)")
