import enum


class DomainKind(str, enum.Enum):
    DISK = "disk"
    PUNCTURED_DISK = "punctured-disk"
    ANNULUS = "annulus"
    FINITELY_PUNCTURED_DISK = "finitely-punctured-disk"


class StrandKind(str, enum.Enum):
    CLOSED_FORM = "closed-form"
    ALGEBRAIC_ROOT = "algebraic-root"


class ExtendMode(str, enum.Enum):
    CONTINUOUS = "continuous"
    POINT = "point"
    INDUCTIVE = "inductive"


class Subcommand(str, enum.Enum):
    VALIDATE = "validate"
    MONODROMY = "monodromy"
    EXTEND = "extend"
    LIFT = "lift"
    REPORT = "report"


class Verdict(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    TRIVIAL = "trivial"
    NONTRIVIAL = "nontrivial"
    LIFTED = "lifted"
    OBSTRUCTED = "obstructed"
    SOLVED = "solved"
