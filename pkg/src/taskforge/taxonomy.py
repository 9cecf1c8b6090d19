"""The closed taxonomy of procedural modifiers and their precondition names."""

from __future__ import annotations

from enum import Enum


class ModifierId(str, Enum):
    """The thirteen rule-based fault modifiers. Serialized names are fixed."""

    OP_CHANGE = "op_change"          # replace operator with a same-group sibling
    OP_FLIP = "op_flip"              # invert comparison/boolean logic
    OPERAND_SWAP = "operand_swap"    # exchange left/right operands
    CHAIN_BREAK = "chain_break"      # replace full expression with one operand
    CONST_MOD = "const_mod"          # +-1 on an integer literal
    BRANCH_SWAP = "branch_swap"      # exchange if body and else body
    STMT_SHUFFLE = "stmt_shuffle"    # derange statements in a function body
    BLOCK_DROP = "block_drop"        # delete a loop/conditional/assignment
    WRAPPER_DROP = "wrapper_drop"    # delete a try/with block and its content
    WRAPPER_UNWRAP = "wrapper_unwrap"  # drop the wrapper keyword, keep content
    BASE_DROP = "base_drop"          # remove inherited base classes
    MEMBER_SHUFFLE = "member_shuffle"  # reorder class members
    METHOD_DROP = "method_drop"      # delete a method definition

    def __str__(self) -> str:  # pragma: no cover
        return self.value


ALL_MODIFIERS: tuple[ModifierId, ...] = tuple(ModifierId)

# Modifiers whose planned edits are guaranteed to re-parse. Statement
# shuffling is excluded: reordering can be invalid in ordering-sensitive
# grammars.
PARSE_GUARANTEED: frozenset[ModifierId] = frozenset(
    m for m in ModifierId if m is not ModifierId.STMT_SHUFFLE
)

# Structural predicates a template's injection rules may reference.
# The matching logic lives in the mutation engine; templates only name them.
KNOWN_PRECONDITIONS = frozenset({
    "has_group_sibling",
    "has_flippable_operator",
    "has_distinct_operands",
    "has_else_branch",
    "min_two_statements",
    "has_base_class",
    "min_two_members",
    "min_two_methods",
})
