"""
Substring rule engines for decoded function names and address name tags.

Rule files are plain text, one rule per line:

    bucket<TAB>pattern1,pattern2,...
    !fallback<TAB>bucket

Lines starting with '#' and blank lines are ignored. Rules are evaluated in
file order and the first rule with a pattern contained in the lowercased
input wins.
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from hyperrole.core.errors import InvalidRuleFile
from hyperrole.schemas.labels import Role
from hyperrole.schemas.reports import BucketReportRow
from hyperrole.schemas.transaction import TransactionRecord

logger = logging.getLogger(__name__)

FALLBACK_DIRECTIVE = "!fallback"
DEFAULT_FALLBACK = "unknown"

# Token name -> shipped bucket rule file
TOKEN_RULE_FILES = {
    "buidl": "buidl_buckets.tsv",
    "usdy": "usdy_buckets.tsv",
    "benji": "benji_buckets.tsv",
}
ROLE_RULE_FILE = "address_roles.tsv"

# Most specific role first
ROLE_PRIORITY = [Role.BOT, Role.TREASURY, Role.TRADER]


@dataclass(frozen=True)
class BucketRuleSet:
    rules: Tuple[Tuple[str, Tuple[str, ...]], ...]
    fallback: str = DEFAULT_FALLBACK

    @property
    def buckets(self) -> List[str]:
        return [bucket for bucket, _ in self.rules]

    def patterns(self) -> Dict[str, str]:
        """pattern -> bucket"""
        return {p: bucket for bucket, patterns in self.rules for p in patterns}


@dataclass(frozen=True)
class RoleRuleSet:
    rules: Tuple[Tuple[Role, Tuple[str, ...]], ...]
    fallback: Role = Role.OTHER


def _parse_rule_lines(text: str, source: str) -> Tuple[List[Tuple[str, Tuple[str, ...]]], Optional[str]]:
    rules = []
    fallback = None
    seen = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        fields = [f.strip() for f in line.split("\t")]
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise InvalidRuleFile(f"{source}:{lineno}: expected '<name><TAB><patterns>'")
        name, body = fields

        if name == FALLBACK_DIRECTIVE:
            fallback = body
            continue
        if name.startswith("!"):
            raise InvalidRuleFile(f"{source}:{lineno}: unknown directive {name}")
        if name in seen:
            raise InvalidRuleFile(f"{source}:{lineno}: duplicate rule {name}")

        patterns = tuple(p.strip() for p in body.split(","))
        for pattern in patterns:
            if not pattern:
                raise InvalidRuleFile(f"{source}:{lineno}: empty pattern")
            if pattern != pattern.lower():
                raise InvalidRuleFile(f"{source}:{lineno}: pattern '{pattern}' is not lowercase")

        seen.add(name)
        rules.append((name, patterns))

    if not rules:
        raise InvalidRuleFile(f"{source}: no rules defined")
    return rules, fallback


def parse_bucket_rules(text: str, source: str = "<rules>") -> BucketRuleSet:
    rules, fallback = _parse_rule_lines(text, source)
    return BucketRuleSet(rules=tuple(rules), fallback=fallback or DEFAULT_FALLBACK)


def parse_role_rules(text: str, source: str = "<roles>") -> RoleRuleSet:
    rules, fallback = _parse_rule_lines(text, source)

    by_role = {}
    for name, patterns in rules:
        try:
            role = Role(name)
        except ValueError:
            raise InvalidRuleFile(f"{source}: unknown role {name}")
        if role == Role.OTHER:
            raise InvalidRuleFile(f"{source}: Other is the fallback and takes no patterns")
        by_role[role] = patterns

    try:
        fallback_role = Role(fallback) if fallback else Role.OTHER
    except ValueError:
        raise InvalidRuleFile(f"{source}: unknown fallback role {fallback}")

    ordered = tuple((role, by_role[role]) for role in ROLE_PRIORITY if role in by_role)
    return RoleRuleSet(rules=ordered, fallback=fallback_role)


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidRuleFile(f"cannot read rule file {path}: {e}")


def load_bucket_rules(path: str) -> BucketRuleSet:
    return parse_bucket_rules(_read(Path(path)), source=str(path))


def load_role_rules(path: str) -> RoleRuleSet:
    return parse_role_rules(_read(Path(path)), source=str(path))


@lru_cache(maxsize=None)
def shipped_bucket_rules(filename: str) -> BucketRuleSet:
    text = resources.files("hyperrole.rules").joinpath(filename).read_text(encoding="utf-8")
    return parse_bucket_rules(text, source=filename)


@lru_cache(maxsize=None)
def default_role_rules() -> RoleRuleSet:
    text = resources.files("hyperrole.rules").joinpath(ROLE_RULE_FILE).read_text(encoding="utf-8")
    return parse_role_rules(text, source=ROLE_RULE_FILE)


def rules_for_token(
    token: str,
    default: str = "usdy",
    overrides: Optional[Mapping[str, BucketRuleSet]] = None,
) -> BucketRuleSet:
    """Rule set for a token: an override if given, else the shipped file; unknown tokens use `default`"""
    overrides = overrides or {}
    key = token.strip().lower()
    if key in overrides:
        return overrides[key]
    if key not in TOKEN_RULE_FILES and default.lower() in overrides:
        return overrides[default.lower()]
    filename = TOKEN_RULE_FILES.get(key) or TOKEN_RULE_FILES[default.lower()]
    return shipped_bucket_rules(filename)


def assign_bucket(function_name: str, rules: BucketRuleSet) -> str:
    name = (function_name or "").lower()
    for bucket, patterns in rules.rules:
        if any(pattern in name for pattern in patterns):
            return bucket
    return rules.fallback


def assign_role(name_tag: str, rules: Optional[RoleRuleSet] = None) -> Role:
    rules = rules or default_role_rules()
    tag = (name_tag or "").lower()
    for role, patterns in rules.rules:
        if any(pattern in tag for pattern in patterns):
            return role
    return rules.fallback


def bucket_records(
    records: Sequence[TransactionRecord],
    rules: Optional[BucketRuleSet] = None,
    default_token: str = "usdy",
    overrides: Optional[Mapping[str, BucketRuleSet]] = None,
) -> List[str]:
    """Bucket per record; without explicit rules each record uses its token's rule set"""
    return [
        assign_bucket(r.function_name, rules or rules_for_token(r.token, default_token, overrides))
        for r in records
    ]


def function_chain_report(
    records: Iterable[TransactionRecord],
    rules: Optional[BucketRuleSet] = None,
    default_token: str = "usdy",
    overrides: Optional[Mapping[str, BucketRuleSet]] = None,
) -> List[BucketReportRow]:
    """
    Aggregate records per (bucket, chain).

    Returns rows sorted by bucket then chain with transaction count, exact
    value sum and first/last timestamps.
    """
    records = list(records)
    buckets = bucket_records(records, rules, default_token, overrides)

    values: Dict[Tuple[str, str], List[float]] = defaultdict(list)
    first_seen: Dict[Tuple[str, str], int] = {}
    last_seen: Dict[Tuple[str, str], int] = {}

    for record, bucket in zip(records, buckets):
        key = (bucket, record.chain)
        values[key].append(record.value)
        first_seen[key] = min(first_seen.get(key, record.timestamp), record.timestamp)
        last_seen[key] = max(last_seen.get(key, record.timestamp), record.timestamp)

    rows = [
        BucketReportRow(
            bucket=bucket,
            chain=chain,
            tx_count=len(values[(bucket, chain)]),
            total_value=math.fsum(values[(bucket, chain)]),
            first_seen=first_seen[(bucket, chain)],
            last_seen=last_seen[(bucket, chain)],
        )
        for bucket, chain in sorted(values)
    ]
    logger.info(f"Function x chain report: {len(rows)} rows from {len(records)} records")
    return rows
