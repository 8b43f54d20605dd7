"""
Parser and pretty-printer for the ISPL subset.

The grammar (documented in docs/ispl_grammar.md) covers Agent blocks with
Obsvars/Vars/Actions/Protocol/Evolution sections, plus Evaluation,
InitStates and Formulae. ``--`` starts a comment that runs to end of line.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

from pyparsing import (
    Group,
    Keyword,
    Literal,
    MatchFirst,
    Optional as Opt,
    ParseBaseException,
    ParserElement,
    Regex,
    Suppress,
    Word,
    ZeroOrMore,
    alphanums,
    alphas,
    delimitedList,
    infixNotation,
    lineno,
    nums,
    oneOf,
    opAssoc,
    restOfLine,
)

from ..errors import ISPLError, ISPLSyntaxError
from .model import (
    BOOLEAN,
    ENVIRONMENT,
    TEMPORAL_OPERATORS,
    ActionRef,
    AgentSpec,
    Assignment,
    BinOp,
    BoolLit,
    EvolutionRule,
    Formula,
    IntLit,
    Name,
    NotExpr,
    Proposition,
    ProtocolRule,
    Ref,
    SystemSpec,
    VarDecl,
    VarType,
    format_expr,
)

logger = logging.getLogger(__name__)

ParserElement.enablePackrat()

RESERVED = (
    "Agent", "end", "Obsvars", "Vars", "Actions", "Protocol", "Evolution", "Evaluation",
    "InitStates", "Formulae", "Other", "Action", "if", "and", "or", "true", "false", "boolean",
)


@dataclass(frozen=True)
class _Section:
    kind: str
    items: tuple


def _fold_binary(toks):
    items = toks[0]
    result = items[0]
    for i in range(1, len(items), 2):
        result = BinOp(items[i], result, items[i + 1])
    return result


def _unary_not(toks):
    return NotExpr(toks[0][1])


def _section(kind: str):
    return lambda toks: _Section(kind, tuple(toks))


class ISPLParser:
    """pyparsing grammar for interpreted-system descriptions."""

    def __init__(self):
        reserved = MatchFirst([Keyword(word) for word in RESERVED])
        self.ident = (~reserved + Word(alphas + "_", alphanums + "_"))("ident")

        semi = Suppress(";")
        colon = Suppress(":")

        def kw(word):
            return Suppress(Keyword(word))

        def end(word):
            return Suppress(Keyword("end") + Keyword(word))

        # Expressions
        integer = Word(nums).setParseAction(lambda t: IntLit(int(t[0])))
        boolean = (Keyword("true") | Keyword("false")).setParseAction(lambda t: BoolLit(t[0] == "true"))
        qualified = (self.ident + Suppress(".") + (Keyword("Action") | self.ident)).setParseAction(
            lambda t: ActionRef(t[0]) if t[1] == "Action" else Ref(t[0], t[1])
        )
        own_action = Keyword("Action").setParseAction(lambda t: ActionRef(None))
        name = self.ident.copy().setParseAction(lambda t: Name(t[0]))
        atom = boolean | integer | qualified | own_action | name

        self.expr = infixNotation(atom, [
            (Literal("!"), 1, opAssoc.RIGHT, _unary_not),
            (oneOf("+ -"), 2, opAssoc.LEFT, _fold_binary),
            (oneOf("<= >= != < > ="), 2, opAssoc.LEFT, _fold_binary),
            (Keyword("and"), 2, opAssoc.LEFT, _fold_binary),
            (Keyword("or"), 2, opAssoc.LEFT, _fold_binary),
        ])
        arith = infixNotation(atom, [(oneOf("+ -"), 2, opAssoc.LEFT, _fold_binary)])

        # Declarations
        signed = Regex(r"-?\d+").setParseAction(lambda t: int(t[0]))
        bool_type = Keyword("boolean").setParseAction(lambda t: BOOLEAN)
        range_type = (signed + Suppress("..") + signed).setParseAction(
            lambda s, loc, t: self._range(s, loc, t[0], t[1])
        )
        enum_type = (Suppress("{") + delimitedList(self.ident) + Suppress("}")).setParseAction(
            lambda t: VarType("enum", symbols=tuple(t))
        )
        decl = (self.ident + colon - (bool_type | range_type | enum_type) - semi).setParseAction(
            lambda t: VarDecl(t[0], t[1])
        )
        action_set = Group(Suppress("{") + delimitedList(self.ident) + Suppress("}"))

        obsvars = (kw("Obsvars") - colon - ZeroOrMore(decl) - end("Obsvars")).setParseAction(_section("obsvars"))
        variables = (kw("Vars") - colon - ZeroOrMore(decl) - end("Vars")).setParseAction(_section("vars"))
        actions = (kw("Actions") - Suppress("=") - action_set - semi).setParseAction(
            lambda t: _Section("actions", tuple(t[0]))
        )
        rule = ((Keyword("Other") | self.expr) + colon + action_set + semi).setParseAction(
            lambda t: ProtocolRule(None if isinstance(t[0], str) else t[0], tuple(t[1]))
        )
        protocol = (kw("Protocol") - colon - ZeroOrMore(rule) - end("Protocol")).setParseAction(_section("protocol"))
        assignment = (self.ident + Suppress("=") + arith).setParseAction(lambda t: Assignment(t[0], t[1]))
        ev_rule = (
            Group(assignment + ZeroOrMore(kw("and") + assignment)) + kw("if") + self.expr + semi
        ).setParseAction(lambda s, loc, t: EvolutionRule(tuple(t[0]), t[1], lineno(loc, s)))
        evolution = (kw("Evolution") - colon - ZeroOrMore(ev_rule) - end("Evolution")).setParseAction(_section("evolution"))

        agent = (
            kw("Agent") - self.ident - Opt(obsvars) - Opt(variables) - actions - Opt(protocol) - Opt(evolution) - end("Agent")
        ).setParseAction(self._agent)

        # System-level sections
        proposition = (self.ident + kw("if") + self.expr + semi).setParseAction(lambda t: Proposition(t[0], t[1]))
        evaluation = (kw("Evaluation") - ZeroOrMore(proposition) - end("Evaluation")).setParseAction(_section("evaluation"))
        init = (kw("InitStates") - self.expr - semi - end("InitStates")).setParseAction(_section("init"))

        self.formula = (
            MatchFirst([Keyword(op) for op in TEMPORAL_OPERATORS])
            + Opt(Literal("!"))
            + (Keyword("true") | Keyword("false") | self.ident)
        ).setParseAction(lambda t: Formula(t[0], t[-1], len(t) == 3))
        formulae = (kw("Formulae") - ZeroOrMore(self.formula + semi) - end("Formulae")).setParseAction(_section("formulae"))

        self.system = ZeroOrMore(agent) + Opt(evaluation) + Opt(init) + Opt(formulae)
        comment = Literal("--") + restOfLine
        for element in (self.system, self.formula):
            element.ignore(comment)

    @staticmethod
    def _range(s, loc, lo, hi):
        if lo > hi:
            raise ISPLSyntaxError(f"empty range {lo}..{hi}", lineno(loc, s), 1)
        return VarType("range", lo=lo, hi=hi)

    @staticmethod
    def _agent(toks):
        name = toks[0]
        parts = {section.kind: section.items for section in toks[1:]}
        return AgentSpec(
            name=name,
            obsvars=parts.get("obsvars", ()),
            vars=parts.get("vars", ()),
            actions=parts.get("actions", ()),
            protocol=parts.get("protocol", ()),
            evolution=parts.get("evolution", ()),
        )

    def parse(self, text: str) -> SystemSpec:
        try:
            tokens = self.system.parseString(text, parseAll=True)
        except ParseBaseException as exc:
            raise ISPLSyntaxError(exc.msg, exc.lineno, exc.col) from None
        agents: List[AgentSpec] = []
        sections = {}
        for token in tokens:
            if isinstance(token, AgentSpec):
                agents.append(token)
            else:
                sections[token.kind] = token.items
        environment = next((a for a in agents if a.name == ENVIRONMENT), None)
        others = tuple(a for a in agents if a.name != ENVIRONMENT)
        init = sections.get("init")
        return SystemSpec(
            environment=environment,
            agents=others,
            evaluation=sections.get("evaluation", ()),
            init=init[0] if init else None,
            formulae=sections.get("formulae", ()),
        )

    def parse_formula(self, text: str) -> Formula:
        try:
            return self.formula.parseString(text, parseAll=True)[0]
        except ParseBaseException as exc:
            raise ISPLSyntaxError(f"bad formula {text!r}: {exc.msg}", exc.lineno, exc.col) from None


_PARSER = None


def _parser() -> ISPLParser:
    global _PARSER
    if _PARSER is None:
        _PARSER = ISPLParser()
    return _PARSER


def parse_ispl_syntax(text: str) -> SystemSpec:
    """Syntax-only parse; no declaration or type checks."""
    return _parser().parse(text)


def parse_ispl(text: str) -> SystemSpec:
    """
    Parse and validate an interpreted-system description.

    Args:
        text: ISPL subset source

    Returns:
        The SystemSpec AST

    Raises:
        ISPLSyntaxError: with the line and column of the first syntax error
        UndeclaredIdentifierError, ISPLTypeError, EmptyInitError: on semantic errors
    """
    spec, _ = parse_with_diagnostics(text)
    return spec


def parse_with_diagnostics(text: str) -> Tuple[SystemSpec, List[ISPLError]]:
    """Parse, validate, and collect non-fatal diagnostics (protocol totality warnings)."""
    from .semantics import InterpretedSystem

    spec = parse_ispl_syntax(text)
    system = InterpretedSystem(spec)
    return spec, system.check_totality()


def parse_formula(text: str) -> Formula:
    """Parse ``AG p``, ``AF !p``, ``EF true`` and the like."""
    return _parser().parse_formula(text.strip())


# ---------------------------------------------------------------------------
# Pretty-printing
# ---------------------------------------------------------------------------

def _format_agent(agent: AgentSpec) -> List[str]:
    lines = [f"Agent {agent.name}"]
    if agent.obsvars:
        lines.append("  Obsvars:")
        lines.extend(f"    {decl}" for decl in agent.obsvars)
        lines.append("  end Obsvars")
    lines.append("  Vars:")
    lines.extend(f"    {decl}" for decl in agent.vars)
    lines.append("  end Vars")
    lines.append("  Actions = {" + ", ".join(agent.actions) + "};")
    lines.append("  Protocol:")
    for rule in agent.protocol:
        guard = "Other" if rule.is_other else format_expr(rule.guard)
        lines.append(f"    {guard} : {{" + ", ".join(rule.actions) + "};")
    lines.append("  end Protocol")
    lines.append("  Evolution:")
    lines.extend(f"    {rule}" for rule in agent.evolution)
    lines.append("  end Evolution")
    lines.append("end Agent")
    return lines


def format_ispl(spec: SystemSpec) -> str:
    """Pretty-print a SystemSpec; the output reparses to an identical structure."""
    lines: List[str] = []
    for agent in spec.participants:
        lines.extend(_format_agent(agent))
        lines.append("")
    if spec.evaluation:
        lines.append("Evaluation")
        lines.extend(f"  {p.name} if {format_expr(p.expr)};" for p in spec.evaluation)
        lines.append("end Evaluation")
        lines.append("")
    if spec.init is not None:
        lines.append("InitStates")
        lines.append(f"  {format_expr(spec.init)};")
        lines.append("end InitStates")
        lines.append("")
    if spec.formulae:
        lines.append("Formulae")
        lines.extend(f"  {f};" for f in spec.formulae)
        lines.append("end Formulae")
    return "\n".join(lines).rstrip() + "\n"
