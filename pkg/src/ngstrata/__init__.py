"""Well-stratified named-graph families.

A quad-store data model (finite maps from names to triples) with a total
merge algebra, rule-based reasoners with change tracking, and two
coherence checkers guaranteeing that meta-information never cyclically
references the data it describes: a linear-time batch check and an
incremental per-insert check over an exact dyadic-rational order.
"""

from .model import (
    EMPTY,
    Iri,
    Literal,
    NGFamily,
    RenamingError,
    RenamingMap,
    Term,
    Triple,
    atomic,
    canonicalize,
    conflict_set,
    equiv,
    extends,
    iri,
    literal,
    rename,
    support,
    vocabulary,
)
from .algebra import (
    ConflictError,
    ConflictPolicy,
    drop_conflicting,
    join,
    meet,
    merge,
    merge_all,
    override_left,
    override_right,
    rename_join,
)
from .stratify import (
    CheckReport,
    CycleError,
    DependencyGraph,
    DuplicateNameError,
    InsertOutcome,
    LevelAssignment,
    OrderMap,
    StratifiedStore,
    UnknownNameError,
    check_batch,
    dependency_graph,
    format_cycle,
    infer_levels,
    order_init,
    verify_levels,
)
from .reason import (
    DeltaReport,
    DomainPattern,
    NamedPattern,
    ReasonerId,
    Rule,
    RuleError,
    TriplePattern,
    Var,
    apply,
    builtin_closure_rules,
    check_well_behaved,
    derived_set,
    diff,
    infer_uses,
    with_tracking,
)
from .syntax import (
    DeleteOp,
    InsertOp,
    ParseError,
    SerializationError,
    parse_ops,
    parse_quads,
    parse_rules,
    serialize_quads,
)

__version__ = "0.1.0"
