"""Build-manifest detection and direct-dependency extraction.

Detects the build type from filenames, parses Maven POMs, npm package
manifests and Python requirements files, and assembles the per-application
SBOM snapshot. Only dependencies literally declared in each file are
extracted: no transitive resolution, no parent-POM or lockfile reading.

All parsers are pure functions over byte strings and are safe to run in
parallel per file.
"""

from __future__ import annotations

import fnmatch
import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime
from enum import Enum

from .errors import MalformedManifest
from .model import (
    DEFAULT_GROUP,
    Coordinate,
    Ecosystem,
    format_ts,
    parse_ts,
    utc_now,
    version_key,
)


class ManifestKind(Enum):
    MAVEN_POM = "maven_pom"
    NPM_PACKAGE = "npm_package"
    PYTHON_REQUIREMENTS = "python_requirements"

    @classmethod
    def parse(cls, text: str) -> "ManifestKind":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown manifest kind: {text!r}")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ManifestFile:
    path: str
    kind: ManifestKind
    content: bytes


@dataclass(frozen=True)
class ParseWarning:
    code: str
    message: str
    path: str | None = None

    def render(self) -> str:
        prefix = f"{self.path}: " if self.path else ""
        return f"{prefix}{self.code}: {self.message}"


@dataclass(frozen=True)
class SbomSnapshot:
    """Direct-dependency bill of materials of one application at one commit."""

    application: str
    commit: str
    captured_at: datetime
    dependencies: tuple  # Coordinates, deduplicated and sorted by canonical form

    def to_dict(self) -> dict:
        deps = []
        for c in self.dependencies:
            entry = {
                "ecosystem": c.ecosystem.value,
                "group": c.group,
                "name": c.name,
                "version": c.version,
            }
            if c.scope is not None:
                entry["scope"] = c.scope
            if c.spec is not None:
                entry["spec"] = c.spec
            if c.flags:
                entry["flags"] = list(c.flags)
            deps.append(entry)
        return {
            "application": self.application,
            "commit": self.commit,
            "captured_at": format_ts(self.captured_at),
            "dependencies": deps,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SbomSnapshot":
        try:
            deps = []
            for entry in payload["dependencies"]:
                deps.append(
                    Coordinate(
                        ecosystem=Ecosystem.parse(entry["ecosystem"]),
                        group=entry["group"],
                        name=entry["name"],
                        version=entry["version"],
                        scope=entry.get("scope"),
                        spec=entry.get("spec"),
                        flags=tuple(entry.get("flags", ())),
                    )
                )
            return cls(
                application=payload["application"],
                commit=payload["commit"],
                captured_at=parse_ts(payload["captured_at"]),
                dependencies=_dedupe_sorted(deps),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedManifest(f"invalid SBOM payload: {exc}") from exc


# ---------------------------------------------------------------------------
# Build-type detection
# ---------------------------------------------------------------------------

def detect_kind(filename: str) -> ManifestKind | None:
    if filename == "pom.xml":
        return ManifestKind.MAVEN_POM
    if filename == "package.json":
        return ManifestKind.NPM_PACKAGE
    if filename == "requirements.txt" or fnmatch.fnmatch(filename, "requirements-*.txt"):
        return ManifestKind.PYTHON_REQUIREMENTS
    return None


def detect_build_types(file_tree) -> set:
    """Return every (kind, path) match in a repo file tree.

    Paths are repo-relative and '/'-separated; nested manifests (monorepos)
    are all detected.
    """
    found = set()
    for path in file_tree:
        kind = detect_kind(path.rsplit("/", 1)[-1])
        if kind is not None:
            found.add((kind, path))
    return found


# ---------------------------------------------------------------------------
# Maven
# ---------------------------------------------------------------------------

_PROPERTY_REF = re.compile(r"\$\{([^}]+)\}")


def _local_name(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _child_text(element, name: str) -> str | None:
    for child in element:
        if _local_name(child.tag) == name:
            return (child.text or "").strip()
    return None


def parse_maven_pom(content: bytes):
    """Extract the literal top-level <dependencies> of one POM.

    ``${property}`` references are resolved from the same file's
    <properties> block only; unresolved references keep the literal
    placeholder and flag the coordinate. <dependencyManagement>, profiles
    and parent inheritance are deliberately not consulted.

    Returns (coordinates, warnings); raises MalformedManifest on invalid XML.
    """
    try:
        root = ET.fromstring(content)
    except ET.ParseError as exc:
        raise MalformedManifest(f"invalid XML: {exc}") from exc

    properties = {}
    for child in root:
        if _local_name(child.tag) == "properties":
            for prop in child:
                properties[_local_name(prop.tag)] = (prop.text or "").strip()

    def resolve(value):
        unresolved = False

        def substitute(match):
            nonlocal unresolved
            key = match.group(1)
            if key in properties:
                return properties[key]
            unresolved = True
            return match.group(0)

        return _PROPERTY_REF.sub(substitute, value), unresolved

    coordinates = []
    warnings = []
    for section in root:
        if _local_name(section.tag) != "dependencies":
            continue
        for dep in section:
            if _local_name(dep.tag) != "dependency":
                continue
            group = _child_text(dep, "groupId") or ""
            name = _child_text(dep, "artifactId") or ""
            version = _child_text(dep, "version")
            scope = _child_text(dep, "scope") or None
            packaging = _child_text(dep, "type") or None
            flags = []
            if version is None or version == "":
                version = "(unspecified)"
                flags.append("missing_version")
            resolved = []
            for value in (group, name, version):
                value, unresolved = resolve(value)
                if unresolved:
                    flags.append("unresolved_property")
                resolved.append(value)
            group, name, version = resolved
            if not group or not name:
                warnings.append(
                    ParseWarning("incomplete_dependency", "dependency without groupId/artifactId skipped")
                )
                continue
            if "unresolved_property" in flags:
                warnings.append(
                    ParseWarning("unresolved_property", f"{group}:{name} keeps literal placeholder {version}")
                )
            try:
                coordinates.append(
                    Coordinate(
                        ecosystem=Ecosystem.MAVEN,
                        group=group,
                        name=name,
                        version=version,
                        scope=scope,
                        packaging=packaging,
                        flags=tuple(dict.fromkeys(flags)),
                    )
                )
            except ValueError as exc:
                warnings.append(ParseWarning("invalid_coordinate", f"{group}:{name}: {exc}"))
    return coordinates, warnings


# ---------------------------------------------------------------------------
# Range specs and floors (npm / pypi)
# ---------------------------------------------------------------------------

_RANGE_CHARS = set("^~><=| ")
_COMPARATOR = re.compile(r"^(>=|<=|==|===|!=|~=|>|<|=|\^|~)?\s*(.*)$")


def _is_pinned(spec: str) -> bool:
    if not spec or not spec[0].isdigit():
        return False
    if any(ch in _RANGE_CHARS for ch in spec) or "*" in spec:
        return False
    return all(seg.lower() != "x" for seg in spec.split("."))


def _clean_wildcards(version: str) -> str:
    segments = []
    for seg in version.split("."):
        segments.append("0" if seg in ("x", "X", "*") else seg)
    return ".".join(segments)


def spec_floor(spec: str) -> str:
    """Lowest version satisfying a range spec's lower bound.

    Handles comma- and space-separated comparator sets, caret/tilde sugar,
    wildcard segments, "a - b" hyphen ranges and "||" alternatives. Specs
    with no derivable lower bound floor at "0".
    """
    branches = [b.strip() for b in spec.split("||")] if "||" in spec else [spec.strip()]
    floors = [f for f in (_branch_floor(b) for b in branches) if f is not None]
    if not floors:
        return "0"
    # An || alternative is satisfied by its lowest branch.
    return min(floors, key=version_key)


def _branch_floor(branch: str) -> str | None:
    if " - " in branch:
        branch = branch.split(" - ", 1)[0]
    lower_bounds = []
    for part in re.split(r"[,\s]+", branch):
        if not part:
            continue
        match = _COMPARATOR.match(part)
        op, version = match.group(1) or "", match.group(2).strip()
        if not version:
            continue
        if op in ("", "=", "==", "===", ">=", ">", "^", "~", "~="):
            cleaned = _clean_wildcards(version)
            if cleaned:
                lower_bounds.append(cleaned)
    if not lower_bounds:
        return None
    # Conjunctive constraints: the effective lower bound is the largest one.
    return max(lower_bounds, key=version_key)


def _range_coordinate(ecosystem, name, spec, scope=None):
    spec = spec.strip()
    if _is_pinned(spec):
        return Coordinate(ecosystem=ecosystem, group=DEFAULT_GROUP, name=name, version=spec, scope=scope)
    return Coordinate(
        ecosystem=ecosystem,
        group=DEFAULT_GROUP,
        name=name,
        version=spec_floor(spec),
        spec=spec,
        scope=scope,
    )


# ---------------------------------------------------------------------------
# npm
# ---------------------------------------------------------------------------

def parse_npm_manifest(content: bytes):
    """Union of "dependencies" and "devDependencies" from a package.json.

    Pinned specs become the coordinate version; range specs keep the verbatim
    spec and floor the version at the range's lower bound. devDependencies
    get scope "dev".

    Returns (coordinates, warnings); raises MalformedManifest on invalid JSON.
    """
    try:
        payload = json.loads(content.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise MalformedManifest(f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise MalformedManifest("package manifest must be a JSON object")

    coordinates = []
    warnings = []
    for section, scope in (("dependencies", None), ("devDependencies", "dev")):
        block = payload.get(section, {})
        if not isinstance(block, dict):
            warnings.append(ParseWarning("invalid_section", f"{section} is not an object; skipped"))
            continue
        for name, spec in block.items():
            if not isinstance(spec, str) or not name or re.search(r"\s", name):
                warnings.append(ParseWarning("invalid_entry", f"unusable {section} entry {name!r}"))
                continue
            try:
                coordinates.append(_range_coordinate(Ecosystem.NPM, name, spec, scope))
            except ValueError as exc:
                warnings.append(ParseWarning("invalid_entry", f"{name}: {exc}"))
    return coordinates, warnings


# ---------------------------------------------------------------------------
# Python requirements
# ---------------------------------------------------------------------------

_REQUIREMENT_NAME = re.compile(r"^([A-Za-z0-9][A-Za-z0-9._-]*)(\[[^\]]*\])?\s*(.*)$")
_PIN = re.compile(r"^==\s*(\S+)$")


def parse_python_requirements(content: bytes):
    """One requirement per line; comments, blanks and environment markers skipped.

    "name==x.y.z" pins; other comparator forms keep the verbatim spec with a
    floor version. Lines without a parseable name are skipped with a warning.
    """
    text = content.decode("utf-8", errors="replace")
    coordinates = []
    warnings = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        line = line.split(";", 1)[0].strip()
        match = _REQUIREMENT_NAME.match(line)
        if not match:
            warnings.append(
                ParseWarning("malformed_requirement_line", f"line {lineno}: no parseable name: {raw.strip()!r}")
            )
            continue
        name, _extras, rest = match.group(1), match.group(2), match.group(3).strip()
        pin = _PIN.match(rest)
        if pin and _is_pinned(pin.group(1)):
            coordinates.append(
                Coordinate(ecosystem=Ecosystem.PYPI, group=DEFAULT_GROUP, name=name, version=pin.group(1))
            )
        elif not rest:
            coordinates.append(
                Coordinate(ecosystem=Ecosystem.PYPI, group=DEFAULT_GROUP, name=name, version="0", spec="*")
            )
        else:
            coordinates.append(
                Coordinate(
                    ecosystem=Ecosystem.PYPI,
                    group=DEFAULT_GROUP,
                    name=name,
                    version=spec_floor(rest),
                    spec=rest,
                )
            )
    return coordinates, warnings


# ---------------------------------------------------------------------------
# SBOM assembly
# ---------------------------------------------------------------------------

_PARSERS = {
    ManifestKind.MAVEN_POM: parse_maven_pom,
    ManifestKind.NPM_PACKAGE: parse_npm_manifest,
    ManifestKind.PYTHON_REQUIREMENTS: parse_python_requirements,
}


def _dedupe_sorted(coordinates) -> tuple:
    by_canonical = {}
    for c in coordinates:
        by_canonical.setdefault(c.canonical(), c)
    return tuple(sorted(by_canonical.values(), key=lambda c: c.canonical()))


def classify_internal(coordinate: Coordinate, internal_group_prefixes) -> Coordinate:
    """Reclassify a coordinate as internal when its group matches a configured prefix."""
    if coordinate.ecosystem is Ecosystem.INTERNAL:
        return coordinate
    for prefix in internal_group_prefixes:
        if prefix and coordinate.group.startswith(prefix):
            return Coordinate(
                ecosystem=Ecosystem.INTERNAL,
                group=coordinate.group,
                name=coordinate.name,
                version=coordinate.version,
                scope=coordinate.scope,
                spec=coordinate.spec,
                packaging=coordinate.packaging,
                flags=coordinate.flags,
            )
    return coordinate


def build_sbom(application, commit, manifests, internal_group_prefixes=(), now=None):
    """Parse every manifest per its kind and union the results into one snapshot.

    A malformed manifest contributes a warning tagged with its path; the
    remaining files still parse (partial SBOM). Returns (snapshot, warnings).
    """
    if not application:
        raise ValueError("application must be non-empty")
    coordinates = []
    warnings = []
    for manifest in manifests:
        parser = _PARSERS[manifest.kind]
        try:
            parsed, file_warnings = parser(manifest.content)
        except MalformedManifest as exc:
            warnings.append(ParseWarning("malformed_manifest", str(exc), path=manifest.path))
            continue
        warnings.extend(
            ParseWarning(w.code, w.message, path=manifest.path) for w in file_warnings
        )
        coordinates.extend(
            classify_internal(c, internal_group_prefixes) for c in parsed
        )
    snapshot = SbomSnapshot(
        application=application,
        commit=commit,
        captured_at=now if now is not None else utc_now(),
        dependencies=_dedupe_sorted(coordinates),
    )
    return snapshot, warnings
