"""Response schemas for model-facing operations.

One JSON Schema per template id. ``parse_response`` is the single funnel every
model reply passes through: it parses JSON, validates against the template's
schema, and raises ``ResponseFormatError`` with a message specific enough to
feed back into a repair prompt.
"""

from __future__ import annotations

import json
from typing import Any

import jsonschema

_FACET_TYPES = ["problem", "contribution", "evaluation"]
_RELEVANCE = [
    "perfectly_relevant",
    "somewhat_relevant",
    "complementary",
    "not_relevant",
]

_FINDING = {
    "type": "object",
    "properties": {
        "claim": {"type": "string", "minLength": 1},
        "evidence_snippet": {"type": "string", "minLength": 1},
        "paper_id": {"type": "string", "minLength": 1},
        "section": {"type": "string"},
    },
    "required": ["claim", "evidence_snippet", "paper_id", "section"],
    "additionalProperties": False,
}


def _checker_schema(elements: list[str]) -> dict:
    return {
        "type": "object",
        "properties": {
            "findings": {"type": "array", "items": _FINDING},
            "verdict_summary": {"type": "string", "minLength": 1},
            "suggested_rewrite": {"type": "string", "minLength": 1},
            "rewrite_elements": {
                "type": "object",
                "properties": {name: {"type": "boolean"} for name in elements},
                "required": elements,
                "additionalProperties": False,
            },
        },
        "required": [
            "findings",
            "verdict_summary",
            "suggested_rewrite",
            "rewrite_elements",
        ],
        "additionalProperties": False,
    }


SCHEMAS: dict[str, dict] = {
    "segment_idea": {
        "type": "object",
        "properties": {
            "segments": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "facet_type": {"enum": _FACET_TYPES},
                        "text": {"type": "string", "minLength": 1},
                    },
                    "required": ["facet_type", "text"],
                    "additionalProperties": False,
                },
            }
        },
        "required": ["segments"],
        "additionalProperties": False,
    },
    "extract_facets": {
        "type": "object",
        "properties": {
            "statements": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "statement": {"type": "string", "minLength": 1},
                        "source_section": {"type": "string"},
                        "citations": {
                            "type": "array",
                            "items": {"type": "string", "minLength": 1},
                        },
                    },
                    "required": ["statement", "source_section", "citations"],
                    "additionalProperties": False,
                },
            }
        },
        "required": ["statements"],
        "additionalProperties": False,
    },
    "classify_relevance": {
        "type": "object",
        "properties": {"category": {"enum": _RELEVANCE}},
        "required": ["category"],
        "additionalProperties": False,
    },
    "cluster_facet": {
        "type": "object",
        "properties": {
            "clusters": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "label": {"type": "string"},
                        "members": {
                            "type": "array",
                            "items": {"type": "string", "minLength": 1},
                        },
                    },
                    "required": ["label", "members"],
                    "additionalProperties": False,
                },
            }
        },
        "required": ["clusters"],
        "additionalProperties": False,
    },
    "rank_clusters": {
        "type": "object",
        "properties": {
            "starred": {"type": "array", "items": {"type": "string", "minLength": 1}}
        },
        "required": ["starred"],
        "additionalProperties": False,
    },
    "build_graph": {
        "type": "object",
        "properties": {
            "edges": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "contribution": {"type": "string", "minLength": 1},
                        "limitation": {"type": "string", "minLength": 1},
                    },
                    "required": ["contribution", "limitation"],
                    "additionalProperties": False,
                },
            }
        },
        "required": ["edges"],
        "additionalProperties": False,
    },
    "link_contribution": {
        "type": "object",
        "properties": {
            "links": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "limitation": {"type": "string", "minLength": 1},
                        "rationale": {"type": "string"},
                    },
                    "required": ["limitation", "rationale"],
                    "additionalProperties": False,
                },
            }
        },
        "required": ["links"],
        "additionalProperties": False,
    },
    "problem_checker": _checker_schema(
        ["problem_stated", "evidence_cited", "significance_argued"]
    ),
    "contribution_checker": _checker_schema(
        ["addresses_problem", "plausible", "positioned_against_limitations"]
    ),
    "evaluation_checker": _checker_schema(
        ["demonstrates_alignment", "feasible_and_sensitive"]
    ),
    "affected_facets": {
        "type": "object",
        "properties": {
            "affected": {"type": "array", "items": {"type": "string", "minLength": 1}}
        },
        "required": ["affected"],
        "additionalProperties": False,
    },
}


class ResponseFormatError(ValueError):
    """Raised when a model reply is not valid JSON or fails its schema."""


def parse_response(template_id: str, raw: str) -> Any:
    try:
        schema = SCHEMAS[template_id]
    except KeyError:
        raise KeyError(f"no response schema registered for {template_id!r}") from None
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ResponseFormatError(f"reply is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(payload, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(part) for part in exc.absolute_path) or "(root)"
        raise ResponseFormatError(f"schema violation at {where}: {exc.message}") from exc
    return payload
