"""Reading and writing datasets, schemas and rule lists.

Rule lists have two forms.  The text form is what a person reads::

    1. IF X<=18 THEN Class=RIGHT
    2. IF X=19 THEN Class=UP
    3. IF TRUE THEN Class=UP

``X=19`` on a continuous feature is shorthand for ``X>=19 AND X<=19``.
The JSON form additionally keeps rule statistics.
"""
from __future__ import annotations

import csv
import json
import re
from pathlib import Path

from .core import (
    CONTINUOUS,
    DataSet,
    Feature,
    FeatureSchema,
    Instance,
    Rule,
    RuleList,
    RuleStats,
    SchemaError,
    Condition,
)

LABEL_SEP = ";"
_COND_RE = re.compile(r"^(.*?)(<=|>=|!=|=)(.*)$")
_LINE_RE = re.compile(r"^\s*(?:\d+(?:\.\d+)*\.?|\[[\d.]+\])?\s*IF (.*) THEN Class=(.*?)\s*$")


def format_value(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def _render_cond(c: Condition) -> str:
    op = "=" if c.op == "==" else c.op
    return f"{c.feature}{op}{format_value(c.value)}"


def render_antecedent(conds) -> str:
    if not conds:
        return "TRUE"
    parts = []
    i = 0
    while i < len(conds):
        c = conds[i]
        nxt = conds[i + 1] if i + 1 < len(conds) else None
        if (c.op == ">=" and nxt is not None and nxt.op == "<="
                and nxt.feature == c.feature and nxt.value == c.value):
            parts.append(f"{c.feature}={format_value(c.value)}")
            i += 2
            continue
        parts.append(_render_cond(c))
        i += 1
    return " AND ".join(parts)


def render_rule(rule: Rule) -> str:
    return f"IF {render_antecedent(rule.antecedent)} THEN Class={rule.consequent}"


def render_rulelist(rulelist: RuleList) -> str:
    return "\n".join(f"{i}. {render_rule(r)}" for i, r in enumerate(rulelist.rules, 1)) + "\n"


def parse_antecedent(text: str, schema: FeatureSchema) -> tuple[Condition, ...]:
    text = text.strip()
    if text == "TRUE":
        return ()
    out = []
    for part in text.split(" AND "):
        m = _COND_RE.match(part.strip())
        if not m:
            raise SchemaError(f"cannot parse condition {part!r}")
        name, op, raw = m.group(1), m.group(2), m.group(3)
        feat = schema.feature(name)
        if feat.is_discrete:
            op = "==" if op == "=" else op
            cond = Condition(name, op, raw)
            schema.check_condition(cond)
            out.append(cond)
        elif op == "=":
            out.extend([Condition(name, ">=", float(raw)), Condition(name, "<=", float(raw))])
        else:
            cond = Condition(name, op, float(raw))
            schema.check_condition(cond)
            out.append(cond)
    return tuple(out)


def parse_rule(line: str, schema: FeatureSchema) -> Rule:
    m = _LINE_RE.match(line)
    if not m:
        raise SchemaError(f"cannot parse rule line {line!r}")
    label = m.group(2)
    if label not in schema.label_index:
        raise SchemaError(f"unknown class {label!r}")
    return Rule(parse_antecedent(m.group(1), schema), label)


def parse_rulelist(text: str, schema: FeatureSchema) -> RuleList:
    rules = [parse_rule(line, schema) for line in text.splitlines() if line.strip()]
    return RuleList(tuple(rules))


# -- structured (JSON) forms ------------------------------------------------

def schema_to_dict(schema: FeatureSchema) -> dict:
    feats = []
    for f in schema.features:
        d = {"name": f.name, "kind": f.kind}
        if f.is_discrete:
            d["domain"] = list(f.domain)
        feats.append(d)
    return {"features": feats, "labels": list(schema.labels)}


def schema_from_dict(d: dict) -> FeatureSchema:
    try:
        feats = tuple(Feature(f["name"], f.get("kind", CONTINUOUS), tuple(f.get("domain", ())))
                      for f in d["features"])
        return FeatureSchema(feats, tuple(d["labels"]))
    except (KeyError, TypeError) as e:
        raise SchemaError(f"malformed schema: {e}") from None


def rule_to_dict(rule: Rule) -> dict:
    return {
        "antecedent": [[c.feature, c.op, c.value] for c in rule.antecedent],
        "consequent": rule.consequent,
        "stats": {"covered": rule.stats.covered, "positives": rule.stats.positives,
                  "heuristic": rule.stats.heuristic},
    }


def rule_from_dict(d: dict) -> Rule:
    stats = RuleStats(**d.get("stats", {}))
    return Rule(tuple(Condition(*c) for c in d["antecedent"]), d["consequent"], stats)


def rulelist_to_dict(rulelist: RuleList, schema: FeatureSchema | None = None) -> dict:
    out = {"rules": [rule_to_dict(r) for r in rulelist.rules]}
    if schema is not None:
        out["schema"] = schema_to_dict(schema)
    return out


def rulelist_from_dict(d: dict) -> RuleList:
    return RuleList(tuple(rule_from_dict(r) for r in d["rules"]))


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- datasets -----------------------------------------------------------------

def write_schema(schema: FeatureSchema, path) -> None:
    dump_json(schema_to_dict(schema), path)


def read_schema(path) -> FeatureSchema:
    return schema_from_dict(json.loads(Path(path).read_text()))


def write_dataset(data: DataSet, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f.name for f in data.schema.features] + ["labels"])
        order = data.schema.label_index
        for inst in data:
            labels = LABEL_SEP.join(sorted(inst.labelset, key=order.__getitem__))
            w.writerow([format_value(v) for v in inst.values] + [labels])


def read_dataset(path, schema: FeatureSchema) -> DataSet:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = rows[0]
    names = [f.name for f in schema.features]
    if header != names + ["labels"]:
        raise SchemaError(f"{path}: header {header} does not match schema {names} + ['labels']")
    insts = []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(header):
            raise SchemaError(f"{path}:{lineno}: expected {len(header)} columns")
        vals = tuple(v if f.is_discrete else float(v) for f, v in zip(schema.features, row))
        insts.append(Instance(vals, frozenset(row[-1].split(LABEL_SEP))))
    return DataSet(schema, tuple(insts))
