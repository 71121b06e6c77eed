import json

import pytest
from hypothesis import given, strategies as st

from ruledistill import io as rio
from ruledistill.core import (
    CONTINUOUS,
    DISCRETE,
    Condition,
    DataSet,
    Feature,
    FeatureSchema,
    Instance,
    Rule,
    RuleList,
    RuleStats,
    SchemaError,
)

GRID = FeatureSchema.grid(("UP", "DOWN", "LEFT", "RIGHT"))
MIXED = FeatureSchema((Feature("X", CONTINUOUS), Feature("(0, 4)", DISCRETE, ("NULL", "BRICK"))),
                      ("UP", "RIGHT"))


def test_equal_bounds_print_as_equality_and_parse_back():
    rl = RuleList((Rule((Condition("X", "<=", 18.0),), "RIGHT"),
                   Rule((Condition("X", ">=", 19.0), Condition("X", "<=", 19.0)), "UP"),
                   Rule((), "UP")))
    text = rio.render_rulelist(rl)
    assert text == ("1. IF X<=18 THEN Class=RIGHT\n"
                    "2. IF X=19 THEN Class=UP\n"
                    "3. IF TRUE THEN Class=UP\n")
    assert rio.parse_rulelist(text, GRID) == rl


def test_discrete_feature_names_with_spaces():
    r = Rule((Condition("(0, 4)", "==", "NULL"), Condition("(0, 4)", "!=", "BRICK")), "RIGHT")
    line = rio.render_rule(r)
    assert line == "IF (0, 4)=NULL AND (0, 4)!=BRICK THEN Class=RIGHT"
    assert rio.parse_rule(line, MIXED) == r


def test_parse_accepts_hierarchical_numbers():
    r = rio.parse_rule("  1.4. IF X<=18 AND Y=11 THEN Class=UP", GRID)
    assert r.antecedent[1:] == (Condition("Y", ">=", 11.0), Condition("Y", "<=", 11.0))


@pytest.mark.parametrize("line", [
    "IF X<<3 THEN Class=UP",
    "IF X<=3 THEN Class=JUMP",
    "IF Z<=3 THEN Class=UP",
    "X<=3 -> UP",
])
def test_parse_errors(line):
    with pytest.raises(SchemaError):
        rio.parse_rule(line, GRID)


conds = st.builds(Condition, st.sampled_from(("X", "Y")), st.sampled_from((">=", "<=")),
                  st.integers(-3, 25).map(float))
body_rules = st.builds(Rule, st.lists(conds, min_size=1, max_size=4).map(tuple),
                       st.sampled_from(GRID.labels))


@given(body=st.lists(body_rules, max_size=5), default=st.sampled_from(GRID.labels))
def test_text_and_json_round_trip(body, default):
    rl = RuleList(tuple(body) + (Rule((), default),))
    assert rio.parse_rulelist(rio.render_rulelist(rl), GRID) == rl
    back = rio.rulelist_from_dict(json.loads(json.dumps(rio.rulelist_to_dict(rl))))
    assert back == rl


def test_json_keeps_stats():
    rl = RuleList((Rule((Condition("X", "<=", 1.0),), "UP", RuleStats(7, 5, 0.125)),
                   Rule((), "UP")))
    back = rio.rulelist_from_dict(rio.rulelist_to_dict(rl, GRID))
    assert back.rules[0].stats == RuleStats(7, 5, 0.125)


def test_dataset_and_schema_files(tmp_path):
    data = DataSet(MIXED, (Instance((1.5, "NULL"), {"UP", "RIGHT"}),
                           Instance((3.0, "BRICK"), {"RIGHT"})))
    rio.write_schema(MIXED, tmp_path / "schema.json")
    rio.write_dataset(data, tmp_path / "d.csv")
    schema = rio.read_schema(tmp_path / "schema.json")
    assert schema == MIXED
    assert rio.read_dataset(tmp_path / "d.csv", schema) == data
    assert (tmp_path / "d.csv").read_text().splitlines()[1] == "1.5,NULL,UP;RIGHT"


def test_dataset_header_must_match(tmp_path):
    (tmp_path / "d.csv").write_text("A,B,labels\n1,2,UP\n")
    with pytest.raises(SchemaError):
        rio.read_dataset(tmp_path / "d.csv", GRID)
