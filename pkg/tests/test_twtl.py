import pytest

from twtlshield.twtl import (And, Concat, Hold, Not, Or, TwtlSyntaxError,
                             UnknownPropositionError, Within, format_formula,
                             parse_formula, propositions, satisfies, time_bound)
from twtlshield.oracle import enumerate_words, word_satisfies_brute

B = frozenset({"B"})
C = frozenset({"C"})
E = frozenset()

TASK_TEXT = ("[H^1 P]^[0,8] . [H^1 D1]^[0,6] . "
             "([H^1 D2]^[0,6] | [H^1 D3]^[0,6]) . [H^1 Base]^[0,12]")
TASK_PROPS = {"P", "D1", "D2", "D3", "Base"}


class TestParser:
    def test_window_hold(self):
        f = parse_formula("[H^1 B]^[0,2]", {"B"})
        assert f == Within(Hold(1, "B"), 0, 2)

    def test_true_constant(self):
        assert parse_formula("H^0 TRUE") == Hold(0, None)

    def test_task_concatenation(self):
        f = parse_formula("[H^1 P]^[0,8] . [H^1 D1]^[0,6]", TASK_PROPS)
        assert f == Concat(Within(Hold(1, "P"), 0, 8), Within(Hold(1, "D1"), 0, 6))

    def test_negated_hold(self):
        assert parse_formula("H^2 !B", {"B"}) == Hold(2, "B", negated=True)

    def test_precedence(self):
        # not > hold > and > or > concat
        f = parse_formula("H^0 B & H^0 C | H^0 B . H^0 C", {"B", "C"})
        assert isinstance(f, Concat)
        assert isinstance(f.left, Or)
        assert isinstance(f.left.left, And)

    def test_prefix_negation(self):
        f = parse_formula("!(H^0 B & H^0 C)", {"B", "C"})
        assert isinstance(f, Not)
        assert isinstance(f.child, And)

    def test_whitespace_insensitive(self):
        a = parse_formula("[H^1 B]^[0,2]", {"B"})
        b = parse_formula("  [ H^1   B ]^[ 0 , 2 ]  ", {"B"})
        assert a == b

    def test_syntax_error_position(self):
        with pytest.raises(TwtlSyntaxError) as err:
            parse_formula("[H^1 B]^[0,", {"B"})
        assert err.value.line == 1
        assert err.value.column > 1

    def test_unknown_proposition(self):
        with pytest.raises(UnknownPropositionError) as err:
            parse_formula("H^0 D", {"B"})
        assert err.value.name == "D"

    def test_trailing_garbage(self):
        with pytest.raises(TwtlSyntaxError):
            parse_formula("H^0 B )", {"B"})

    def test_bad_window(self):
        with pytest.raises(TwtlSyntaxError):
            parse_formula("[H^0 B]^[3,1]", {"B"})


class TestPrinting:
    ROUND_TRIP = [
        "[H^1 B]^[0,2]",
        "H^0 TRUE",
        "H^2 !B",
        TASK_TEXT,
        "!(H^0 B)",
        "(H^0 B . H^0 C) & [H^1 C]^[0,3]",
        "[[H^0 B]^[0,1]]^[0,3]",
    ]

    @pytest.mark.parametrize("text", ROUND_TRIP)
    def test_round_trip_from_text(self, text):
        f = parse_formula(text)
        assert parse_formula(format_formula(f)) == f

    def test_round_trip_left_nested(self):
        # the parser is right-associative; a left-nested tree needs parentheses
        f = Concat(Concat(Hold(0, "B"), Hold(0, "C")), Hold(0, "B"))
        assert parse_formula(format_formula(f), {"B", "C"}) == f
        g = And(And(Hold(0, "B"), Hold(0, "C")), Hold(1, "B"))
        assert parse_formula(format_formula(g), {"B", "C"}) == g

    def test_propositions(self):
        assert propositions(parse_formula(TASK_TEXT, TASK_PROPS)) == frozenset(TASK_PROPS)


class TestTimeBound:
    def test_hold(self):
        assert time_bound(Hold(1, "B")) == 1

    def test_window(self):
        assert time_bound(parse_formula("[H^1 B]^[0,2]", {"B"})) == 2

    def test_task_formula_is_35(self):
        assert time_bound(parse_formula(TASK_TEXT, TASK_PROPS)) == 35

    def test_concat_adds_one(self):
        f = parse_formula("H^0 B . H^0 C", {"B", "C"})
        assert time_bound(f) == 1

    def test_boolean_takes_max(self):
        f = parse_formula("H^3 B | H^1 C", {"B", "C"})
        assert time_bound(f) == 3
        assert time_bound(Not(f)) == 3

    def test_monotone_under_window_widening(self):
        inner = parse_formula("H^1 B", {"B"})
        bounds = [time_bound(Within(inner, 0, b)) for b in range(1, 8)]
        assert bounds == sorted(bounds)


class TestSatisfies:
    def test_window_hold_words(self):
        f = parse_formula("[H^1 B]^[0,2]", {"B"})
        assert satisfies((B, B, B), f) is True
        assert satisfies((B, E, B), f) is False
        assert satisfies((E, B, B), f) is True

    def test_trailing_symbols_irrelevant(self):
        f = parse_formula("[H^1 B]^[0,2]", {"B"})
        assert satisfies((B, B, E), f) is True
        assert satisfies((B, B, E, E, E), f) is True

    def test_short_word(self):
        f = parse_formula("[H^1 B]^[0,2]", {"B"})
        assert satisfies((B, B), f) is True
        assert satisfies((B,), f) is False
        assert satisfies((), f) is False

    def test_hold_needs_consecutive(self):
        f = parse_formula("H^2 B", {"B"})
        assert satisfies((B, B, B), f) is True
        assert satisfies((B, B, E), f) is False

    def test_negated_hold(self):
        f = parse_formula("H^1 !B", {"B"})
        assert satisfies((E, E), f) is True
        assert satisfies((E, B), f) is False

    def test_concat_earliest_split(self):
        # left operand completes at the first opportunity; the remainder must
        # satisfy the right operand from the next step
        f = parse_formula("[H^0 B]^[0,2] . H^0 C", {"B", "C"})
        assert satisfies((B, C, E, E), f) is True
        # B at 0 commits the split at 0, so C must appear at step 1
        assert satisfies((B, E, C, E), f) is False
        assert satisfies((E, B, C, E), f) is True

    def test_compound_negation(self):
        f = parse_formula("!(H^1 B)", {"B"})
        assert satisfies((B, E), f) is True
        assert satisfies((B, B), f) is False

    def test_within_offset_window(self):
        f = parse_formula("[H^0 B]^[1,2]", {"B"})
        assert satisfies((B, E, E), f) is False
        assert satisfies((E, B, E), f) is True
        assert satisfies((E, E, B), f) is True

    def test_agrees_with_enumeration_oracle(self):
        corpus = [
            "[H^1 B]^[0,2]",
            "H^0 B . H^0 C",
            "!(H^0 B . H^0 C)",
            "[H^0 B | H^0 C]^[0,3]",
            "(H^0 B . H^0 C) & [H^1 C]^[0,3]",
            "[H^1 !B]^[1,4]",
            "!(H^1 B) . H^0 C",
            "[[H^0 B]^[0,1]]^[0,3]",
        ]
        for text in corpus:
            f = parse_formula(text, {"B", "C"})
            length = time_bound(f) + 1
            for word in enumerate_words({"B", "C"}, length):
                assert satisfies(word, f) == word_satisfies_brute(f, word), (text, word)

    def test_exhaustive_two_props_all_lengths(self):
        f = parse_formula("[H^0 B & H^0 C]^[0,2] . H^0 B", {"B", "C"})
        for length in range(time_bound(f) + 2):
            for word in enumerate_words({"B", "C"}, length):
                assert satisfies(word, f) == word_satisfies_brute(f, word)
