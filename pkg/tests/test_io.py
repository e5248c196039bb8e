import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from logvol.io import (
    InputError,
    check_lengths,
    design_to_csv,
    dumps,
    fmt_float,
    load_design,
    load_response,
    parse_design,
    parse_response,
    response_to_text,
    table_to_csv,
    write_design,
    write_response,
)

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)), elements=finite))
def test_design_round_trip_is_exact(X):
    back = parse_design(design_to_csv(X))
    assert back.shape == X.shape
    assert np.array_equal(back, X)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=50))
def test_response_round_trip(y):
    assert parse_response(response_to_text(y)).tolist() == y


@given(finite)
def test_fmt_float_round_trips(x):
    assert float(fmt_float(x)) == x


def test_file_round_trip(tmp_path):
    X = np.array([[1.0, -0.1], [1e-300, 3.0]])
    write_design(tmp_path / "x.csv", X)
    write_response(tmp_path / "y.txt", [0, 1])
    D = load_design(tmp_path / "x.csv")
    assert np.array_equal(D.entries, X)
    assert load_response(tmp_path / "y.txt", n=2).tolist() == [0, 1]


@pytest.mark.parametrize(
    "text, line, word",
    [
        ("1,2\n3,x\n", 2, "non-numeric"),
        ("1,2\n\n3,nan\n", 3, "NaN"),
        ("1,2\n3,inf\n", 2, "NaN or infinite"),
        ("1,2\n3,4,5\n", 2, "ragged"),
    ],
)
def test_design_errors_name_the_line(text, line, word):
    with pytest.raises(InputError, match=rf"^d\.csv:{line}: .*{word}"):
        parse_design(text, "d.csv")


def test_empty_inputs():
    with pytest.raises(InputError, match="empty design"):
        parse_design("\n\n")
    with pytest.raises(InputError, match="empty response"):
        parse_response("")


def test_response_errors():
    with pytest.raises(InputError, match=r"y:3: .*'2'"):
        parse_response("0\n1\n2\n", "y")
    with pytest.raises(InputError, match=r"y:2:"):
        parse_response("0\n\n1\n", "y")
    assert parse_response("1\n0.0\n\n\n").tolist() == [1, 0]


def test_length_mismatch_names_both_lengths(tmp_path):
    with pytest.raises(InputError, match="response has 3 entries but the design has 4 rows"):
        check_lengths(4, [0, 1, 1])
    (tmp_path / "y").write_text("0\n1\n")
    with pytest.raises(InputError, match="2 entries .* 5 rows"):
        load_response(tmp_path / "y", n=5)


def test_missing_file_is_input_error(tmp_path):
    with pytest.raises(InputError, match="cannot read"):
        load_design(tmp_path / "nope.csv")


def test_json_floats_and_nulls():
    text = dumps({"a": 0.1, "b": math.nan, "c": [1, math.inf, np.float64(2.5)], "d": np.int64(3)})
    data = json.loads(text)
    assert data == {"a": 0.1, "b": None, "c": [1, None, 2.5], "d": 3}
    assert '"a": 0.10000000000000001' in text
    assert "NaN" not in text and "Infinity" not in text


@given(st.recursive(
    st.none() | st.booleans() | st.integers(-10**6, 10**6) | finite | st.text(max_size=5),
    lambda c: st.lists(c, max_size=4) | st.dictionaries(st.text(max_size=4), c, max_size=4),
    max_leaves=12,
))
def test_json_round_trip(obj):
    assert json.loads(dumps(obj)) == obj


def test_table_csv():
    text = table_to_csv(["k", "v"], [("a", 0.1), ("b", 2)])
    assert text == "k,v\na,0.10000000000000001\nb,2\n"
