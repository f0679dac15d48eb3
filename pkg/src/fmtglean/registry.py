"""The format registry: an ordered list of rules mapping inputs to a
schema and its transforms.

The registry is one INI-style text file.  Each rule is a section named
``[rule <id>]`` with exactly one match condition and a schema:

    [rule csv]
    glob = *.csv
    schema = schemas/simple_table.xsd
    transforms = transforms/simple_table.xsl

Match conditions: ``glob`` (shell pattern on the file name), ``magic``
(ASCII byte prefix) or ``magic-hex`` (the same, hex encoded), ``media``
(declared media type, exact match).  Rules are tried in file order and
the first match wins.  Schema and transform paths are relative to the
registry file and must exist at load time, so a stale registry fails at
startup rather than mid-ingest.
"""

from __future__ import annotations

import configparser
import fnmatch
from dataclasses import dataclass
from pathlib import Path

from .errors import RegistryError

_MATCH_KEYS = ("glob", "magic", "magic-hex", "media")
_ALL_KEYS = _MATCH_KEYS + ("schema", "transforms")


@dataclass(frozen=True)
class RegistryRule:
    id: str
    glob: str | None
    magic: bytes | None
    media: str | None
    schema_path: Path
    transforms: tuple[str, ...]

    def matches(self, path: Path, head: bytes, media_type: str | None) -> bool:
        if self.glob is not None:
            return fnmatch.fnmatchcase(path.name, self.glob)
        if self.magic is not None:
            return head.startswith(self.magic)
        return media_type is not None and media_type == self.media


class Registry:
    def __init__(self, rules: list[RegistryRule], base_dir: Path):
        self.rules = rules
        self.base_dir = base_dir

    def __len__(self) -> int:
        return len(self.rules)

    def max_magic_len(self) -> int:
        return max((len(r.magic) for r in self.rules if r.magic is not None), default=0)


def load_registry(path: Path | str) -> Registry:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise RegistryError(f"cannot read registry {path}: {exc}") from None

    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       default_section="DEFAULT")
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise RegistryError(f"malformed registry {path}: {exc}") from None

    base = path.resolve().parent
    rules = []
    seen_ids = set()
    for section in parser.sections():
        head, _, rule_id = section.partition(" ")
        if head != "rule" or not rule_id.strip():
            raise RegistryError(
                f"registry {path}: section [{section}] is not of the form [rule <id>]")
        rule_id = rule_id.strip()
        if rule_id in seen_ids:
            raise RegistryError(f"duplicate rule id: {rule_id}")
        seen_ids.add(rule_id)
        opts = parser[section]
        for key in opts:
            if key not in _ALL_KEYS:
                raise RegistryError(f"rule {rule_id}: unknown key {key!r}")
        given = [k for k in _MATCH_KEYS if k in opts]
        if len(given) == 0:
            raise RegistryError(f"rule {rule_id}: no match condition "
                                f"(need one of {', '.join(_MATCH_KEYS)})")
        if len(given) > 1:
            raise RegistryError(
                f"rule {rule_id}: more than one match condition ({', '.join(given)})")

        glob = opts.get("glob")
        media = opts.get("media")
        magic = None
        if "magic" in opts:
            try:
                magic = opts["magic"].encode("ascii")
            except UnicodeEncodeError:
                raise RegistryError(f"rule {rule_id}: magic must be ASCII; "
                                    f"use magic-hex for arbitrary bytes") from None
        elif "magic-hex" in opts:
            try:
                magic = bytes.fromhex(opts["magic-hex"])
            except ValueError:
                raise RegistryError(
                    f"rule {rule_id}: magic-hex is not valid hex: {opts['magic-hex']!r}") from None
        if magic == b"":
            raise RegistryError(f"rule {rule_id}: magic prefix is empty")

        if "schema" not in opts:
            raise RegistryError(f"rule {rule_id}: missing schema")
        schema_path = (base / opts["schema"]).resolve()
        if not schema_path.is_file():
            raise RegistryError(f"rule {rule_id}: schema not found: {schema_path}")

        transforms = []
        for t in opts.get("transforms", "").split():
            resolved = (base / t).resolve()
            if not resolved.is_file():
                raise RegistryError(f"rule {rule_id}: transform not found: {resolved}")
            transforms.append(str(resolved))

        rules.append(RegistryRule(rule_id, glob, magic, media, schema_path,
                                  tuple(transforms)))
    return Registry(rules, base)


def detect_format(file: Path | str, registry: Registry,
                  media_type: str | None = None) -> RegistryRule:
    """First rule matching the file, in registry order."""
    path = Path(file)
    head = b""
    need = registry.max_magic_len()
    if need:
        with open(path, "rb") as f:
            head = f.read(need)
    for rule in registry.rules:
        if rule.matches(path, head, media_type):
            return rule
    raise RegistryError(f"no registry rule matches {path.name}")
