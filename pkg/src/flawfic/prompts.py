"""Prompt templates: loading, placeholder rendering, and digest pinning.

Templates are plain text files bundled under ``flawfic/templates``; the
manifest in that directory pins a sha256 digest and the declared
placeholder tokens for every stage. Rendering is literal token
replacement, strict in both directions: missing values and unknown
values are errors, and no declared token may survive in the output.

Placeholder syntax is only what the manifest declares: lowercase
``{name}`` tokens plus the uppercase ``{{NAME}}`` form. Instructional
text in double braces (``{{line1}}`` and friends) is literal template
content and passes through rendering untouched.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

from flawfic.core import FlawficError

__all__ = [
    "Stage",
    "PromptTemplate",
    "TemplateError",
    "TemplateIntegrityError",
    "MissingPlaceholderError",
    "UnknownPlaceholderError",
    "ResidualPlaceholderError",
    "load_template",
    "load_manifest",
    "render",
    "template_digests",
    "find_placeholder_residues",
]


class Stage(str, Enum):
    THREE_ACT = "three_act"
    PROP_EXTRACT = "prop_extract"
    PROP_SCORE = "prop_score"
    COUNTERFACT = "counterfact"
    FILTER = "filter"
    DETECT_VANILLA = "detect_vanilla"
    DETECT_COT = "detect_cot"
    DETECT_FEWSHOT = "detect_fewshot"
    VERIFIER = "verifier"
    SUMMARIZE = "summarize"
    ADAPT_MODERN = "adapt_modern"
    RESOLVE_NEGATIVE = "resolve_negative"


class TemplateError(FlawficError):
    pass


class TemplateIntegrityError(TemplateError):
    """A bundled template no longer matches its pinned digest."""


class MissingPlaceholderError(TemplateError):
    pass


class UnknownPlaceholderError(TemplateError):
    pass


class ResidualPlaceholderError(TemplateError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    stage: Stage
    body: str
    placeholders: dict[str, str]  # name -> literal token, e.g. {"story": "{story}"}
    sha256: str
    reconstructed: bool = False


_LOWER_TOKEN = re.compile(r"(?<!\{)\{([a-z][a-z0-9_]*)\}(?!\})")
_UPPER_TOKEN = re.compile(r"\{\{([A-Z][A-Z0-9_]*)\}\}")


def find_placeholder_residues(text: str) -> list[str]:
    """All placeholder-syntax tokens present in *text*.

    Lowercase single-brace identifiers and uppercase double-brace
    identifiers; double-brace instructional prose does not qualify.
    """
    out = ["{%s}" % m for m in _LOWER_TOKEN.findall(text)]
    out += ["{{%s}}" % m for m in _UPPER_TOKEN.findall(text)]
    return out


def _read_resource(name: str) -> bytes:
    return (resources.files("flawfic") / "templates" / name).read_bytes()


@lru_cache(maxsize=1)
def load_manifest() -> dict:
    return json.loads(_read_resource("manifest.json").decode("utf-8"))


@lru_cache(maxsize=None)
def load_template(stage: Stage) -> PromptTemplate:
    manifest = load_manifest()
    entry = manifest["templates"][stage.value]
    raw = _read_resource(entry["file"])
    digest = hashlib.sha256(raw).hexdigest()
    if digest != entry["sha256"]:
        raise TemplateIntegrityError(
            f"template {stage.value}: digest {digest} != pinned {entry['sha256']}"
        )
    body = raw.decode("utf-8")
    declared = dict(entry["placeholders"])
    found = set(find_placeholder_residues(body))
    expected = set(declared.values())
    if found != expected:
        raise TemplateIntegrityError(
            f"template {stage.value}: placeholder tokens {sorted(found)} do not "
            f"match declared {sorted(expected)}"
        )
    return PromptTemplate(
        stage=stage,
        body=body,
        placeholders=declared,
        sha256=digest,
        reconstructed=bool(entry.get("reconstructed", False)),
    )


def render(template: PromptTemplate, **values: object) -> str:
    """Fill every declared placeholder; strict in both directions."""
    missing = sorted(set(template.placeholders) - set(values))
    if missing:
        raise MissingPlaceholderError(
            f"template {template.stage.value}: missing values for {missing}"
        )
    unknown = sorted(set(values) - set(template.placeholders))
    if unknown:
        raise UnknownPlaceholderError(
            f"template {template.stage.value}: unknown values {unknown}"
        )
    out = template.body
    for name, token in template.placeholders.items():
        out = out.replace(token, str(values[name]))
    left = [tok for tok in template.placeholders.values() if tok in out]
    if left:
        raise ResidualPlaceholderError(
            f"template {template.stage.value}: residual tokens {left}"
        )
    return out


def template_digests() -> dict[str, str]:
    """stage name -> pinned sha256; recorded into run provenance."""
    manifest = load_manifest()
    return {name: entry["sha256"] for name, entry in sorted(manifest["templates"].items())}
