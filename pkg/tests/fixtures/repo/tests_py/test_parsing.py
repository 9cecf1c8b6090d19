from textlib import count_sections, parse_config, parse_pair, safe_int


def test_parse_pair():
    assert parse_pair("k = v") == ("k", "v")
    assert parse_pair("novalue") is None
    assert parse_pair("= v") is None


def test_safe_int_fallback():
    assert safe_int(" 42 ") == 42
    assert safe_int("nope", fallback=7) == 7


def test_parse_config_skips_noise():
    text = "# comment\n\nname = demo\ncount=3\nbroken\n"
    assert parse_config(text) == {"name": "demo", "count": "3"}


def test_count_sections():
    text = "[one]\nk=v\n[two]\n\n[broken\n"
    assert count_sections(text) == 2
    assert count_sections("") == 0
