# Pydantic report models and str-enums

from .domain import DomainKind, ExtendMode, StrandKind, Subcommand, Verdict
from .reports import ArtifactEntry, Report, VerdictEntry, WordEntry
