from .grounding import ground_rule, ground_rules
from .miner import dedupe_rules, mine_rules
from .rule_io import format_rule, parse_rule_line, parse_rules, serialize_rules
from .rules import Atom, ConclusionSet, ConclusionState, HornRule, filter_rules
