import pytest

from recordpot.errors import SchemaError
from recordpot.timefmt import format_hms, parse_time


def test_parse_variants():
    assert parse_time("2:01:39") == 7299.0
    assert parse_time("29:38") == 29 * 60 + 38
    assert parse_time("7299") == 7299.0
    assert parse_time("7299.5") == 7299.5


def test_format():
    assert format_hms(7299) == "02:01:39"
    assert format_hms(3481) == "00:58:01"
    assert format_hms(59.6) == "00:01:00"


@pytest.mark.parametrize("whole", [0, 1, 59, 60, 3599, 3600, 7299, 86399])
def test_round_trip_whole_seconds(whole):
    assert parse_time(format_hms(whole)) == whole


@pytest.mark.parametrize("bad", ["", "1:2:3:4", "abc", "-5"])
def test_bad_inputs(bad):
    with pytest.raises(SchemaError):
        parse_time(bad)
