import random

import pytest
from hypothesis import given, settings, strategies as st

from known_programs import ROWS
from lasynth.datagen import GenConfig, LoopMode, sample_candidate
from lasynth.lang import (
    VOCAB, BudgetExceeded, ControlFlowClass, IndexOutOfRange, InvariantViolation, ParseError,
    UnboundVariable, UnknownLexeme, classify_control_flow, detokenize, interpret, lex, parse,
    pretty_print, to_token_ids, token_strings, tokenize,
)
from lasynth.lang.nodes import Assign, Decl, For, If, Index, Num, Program, Var
from lasynth.lang.vocab import HEADER_TEXT


# -- vocabulary --

def test_vocab_is_bijective_and_complete():
    assert len(set(VOCAB.itos)) == len(VOCAB)
    for i, tok in enumerate(VOCAB.itos):
        assert VOCAB.id(tok) == i and VOCAB.token(i) == tok
    expected = (
        3                               # specials
        + 7                             # keywords
        + 1 + 4 + 32                    # a, p_k, l_k
        + 9                             # literals -4..4
        + 20                            # punctuation and operators
    )
    assert len(VOCAB) == expected == 76
    for tok in ["int", "for", "break", "continue", "p_3", "l_31", "-4", "4", "++", "<=", "*", ","]:
        assert tok in VOCAB


# -- lexer / tokenizer --

def test_tokenize_statement_fragment():
    assert VOCAB.decode(tokenize("a[p_0] = 3 ;")) == ["a", "[", "p_0", "]", "=", "3", ";"]


def test_tokenize_short_program_length_matches_hand_count():
    # { int p_0 = 2 ; a [ p_0 ] = 3 ; return a ; }  -> counted by hand
    hand = ["{", "int", "p_0", "=", "2", ";", "a", "[", "p_0", "]", "=", "3", ";",
            "return", "a", ";", "}"]
    ids = tokenize(ROWS[0]["short"][0])
    assert len(ids) == len(hand) == 17
    assert VOCAB.decode(ids) == hand


def test_unknown_identifier_is_rejected():
    with pytest.raises(UnknownLexeme) as err:
        tokenize("a[q_9]")
    assert err.value.position == 2


def test_unknown_character_is_rejected():
    with pytest.raises(UnknownLexeme):
        tokenize("a[0] = 1 / 2;")


def test_negative_literal_versus_subtraction():
    assert lex("a[0] = -3;") == ["a", "[", "0", "]", "=", "-3", ";"]
    assert lex("a[0] = a[1] -3;") == ["a", "[", "0", "]", "=", "a", "[", "1", "]", "-", "3", ";"]
    assert lex("l_0 = l_1 - -2;") == ["l_0", "=", "l_1", "-", "-2", ";"]


def test_header_is_not_part_of_the_token_sequence():
    with_header = tokenize(HEADER_TEXT + "{ return a; }")
    assert with_header == tokenize("{ return a; }")


def test_detokenize_roundtrip():
    for row in ROWS:
        ids = tokenize(row["long"])
        assert tokenize(detokenize(ids)) == ids


# -- parser --

def test_parse_short_program_structure():
    prog = parse(tokenize(ROWS[0]["short"][0]))
    assert prog.decls == (Decl("p_0", 2),)
    assert prog.body == (Assign(Index(Var("p_0")), Num(3)),)


def test_parse_empty_body():
    prog = parse(tokenize("{ return a; }"))
    assert prog == Program()


def test_three_operations_violate_invariant():
    with pytest.raises(InvariantViolation):
        parse(tokenize("{ int p_0 = 0; a[p_0] = 1 + 2 + 3 + 4; return a; }"))


def test_two_operations_are_fine():
    parse(tokenize("{ int p_0 = 0; a[p_0] = 1 + 2 - 3; return a; }"))


def test_loop_bound_outside_list_is_rejected():
    with pytest.raises(InvariantViolation):
        parse(tokenize("{ int p_0 = 0; for (p_0 = 0; p_0 <= 4; p_0++) { a[p_0] = 1; } return a; }"),
              list_len=4)


def test_break_outside_loop_is_rejected():
    with pytest.raises(LangErrorTypes):
        parse(tokenize("{ int p_0 = 0; break; return a; }"))


LangErrorTypes = (ParseError, InvariantViolation)


def test_parse_error_reports_position_and_expected():
    with pytest.raises(ParseError) as err:
        parse(tokenize("{ int p_0 = 0; a[p_0] = ; return a; }"))
    assert err.value.position >= 0
    assert err.value.expected


def test_missing_return_is_a_parse_error():
    with pytest.raises(ParseError):
        parse(tokenize("{ int p_0 = 0; a[p_0] = 1; }"))


def test_parse_accepts_ids_with_specials():
    ids = [VOCAB.bos_id] + tokenize(ROWS[0]["short"][0]) + [VOCAB.eos_id, VOCAB.pad_id]
    assert parse(ids) == parse(tokenize(ROWS[0]["short"][0]))


def test_parse_too_long_is_rejected():
    body = " ".join("a[0] = 1;" for _ in range(40))
    with pytest.raises(InvariantViolation):
        parse(tokenize("{ " + body + " return a; }"), max_tokens=64)


# -- printer --

@pytest.mark.parametrize("src", [r["long"] for r in ROWS] + [s for r in ROWS for s in r["short"]])
def test_pretty_print_reproduces_reference_layout(src):
    assert pretty_print(parse(tokenize(src))) == src


def test_identity_program_layout():
    assert pretty_print(Program()) == "int * func_1(int a[])\n{\n    return a;\n}"


def test_token_strings_agree_with_lexer():
    for row in ROWS:
        prog = parse(tokenize(row["long"]))
        assert token_strings(prog) == VOCAB.decode(tokenize(pretty_print(prog)))
        assert to_token_ids(prog) == tokenize(row["long"])


def test_if_else_with_block_roundtrip():
    src = """int * func_1(int a[])
{
    int p_0 = 1;
    int l_3 = -2;
    if (a[p_0] - l_3 <= a[0] + 1)
    {
        a[p_0] = l_3;
        --a[1];
    }
    else
        a[2]--;
    for (int p_1 = 0; p_1 <= 3; p_1++)
    {
        if (a[p_1] != 0)
            continue;
        a[p_1] = (a[p_1] + 2) - 1;
    }
    return a;
}"""
    prog = parse(tokenize(src))
    assert pretty_print(prog) == src


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(LoopMode)))
def test_roundtrip_and_idempotence_on_sampled_programs(seed, mode):
    prog = sample_candidate(random.Random(seed), GenConfig(), mode)
    text = pretty_print(prog)
    again = parse(tokenize(text))
    assert again == prog
    assert pretty_print(again) == text


# -- interpreter --

@pytest.mark.parametrize("row", range(len(ROWS)))
def test_interpreter_reproduces_all_listed_pairs(row):
    r = ROWS[row]
    for src in [r["long"], *r["short"]]:
        prog = parse(tokenize(src))
        for inp, out in r["pairs"]:
            assert interpret(prog, inp) == out


def test_break_and_post_loop_variable():
    prog = parse(tokenize(ROWS[3]["long"]))
    assert interpret(prog, [0, 3, -1, 0, 0]) == [4, 3, -1, 4, 4]


def test_interpret_does_not_mutate_input():
    prog = parse(tokenize(ROWS[0]["short"][0]))
    inp = [2, 4, 1, 2, -3]
    interpret(prog, inp)
    assert inp == [2, 4, 1, 2, -3]


@pytest.mark.parametrize("v", [-7, -1, 1, 2, 100])
def test_nonzero_is_true(v):
    prog = parse(tokenize("{ int p_0 = 0; if (a[0]) a[1] = 1; else a[1] = 2; return a; }"))
    assert interpret(prog, [v, 0, 0, 0, 0])[1] == 1
    assert interpret(prog, [0, 0, 0, 0, 0])[1] == 2


def test_values_are_unbounded():
    prog = parse(tokenize(
        "{ int p_0 = 0; for (p_0 = 0; p_0 <= 4; p_0++) { a[0] = a[0] + a[0] + a[0]; } return a; }"))
    assert interpret(prog, [4, 0, 0, 0, 0])[0] == 4 * 3 ** 5


def test_continue_skips_rest_of_body():
    prog = parse(tokenize(
        "{ int p_0 = 0; for (p_0 = 0; p_0 <= 4; p_0++) { if (p_0 - 2) continue; a[p_0] = 4; } return a; }"))
    assert interpret(prog, [0] * 5) == [0, 0, 4, 0, 0]


def test_break_only_leaves_inner_loop():
    prog = parse(tokenize(
        "{ int p_0 = 0; for (p_0 = 0; p_0 <= 1; p_0++) { for (int p_1 = 2; p_1 <= 4; p_1++) "
        "{ a[p_1]++; break; } a[p_0] = 3; } return a; }"))
    assert interpret(prog, [0] * 5) == [3, 3, 2, 0, 0]


def test_for_declared_variable_scoped_to_loop():
    prog = Program(decls=(Decl("p_0", 0),), body=(
        For("p_1", 0, "<=", 1, "++", (Assign(Index(Num(0)), Num(1)),), declare=True),
        Assign(Index(Var("p_1")), Num(2)),
    ))
    with pytest.raises(UnboundVariable):
        interpret(prog, [0] * 5)


def test_index_out_of_range_is_a_runtime_fault():
    prog = parse(tokenize("{ int p_0 = 0; p_0 = a[0]; a[p_0] = 1; return a; }"))
    assert interpret(prog, [2, 0, 0, 0, 0]) == [2, 0, 1, 0, 0]
    for bad in (-1, 5):
        with pytest.raises(IndexOutOfRange):
            interpret(prog, [bad, 0, 0, 0, 0])


def test_budget_exceeded():
    prog = parse(tokenize(
        "{ int p_0 = 0; for (p_0 = 0; p_0 <= 4; p_0++) { for (int p_1 = 0; p_1 <= 4; p_1++) "
        "{ a[p_1]++; } } return a; }"))
    assert interpret(prog, [0] * 5) == [5] * 5
    with pytest.raises(BudgetExceeded):
        interpret(prog, [0] * 5, budget=20)


def test_interpret_is_deterministic():
    prog = parse(tokenize(ROWS[4]["long"]))
    assert interpret(prog, [1, 0, 0, 4, -3]) == interpret(prog, [1, 0, 0, 4, -3])


# -- control flow classes --

def test_control_flow_classes():
    assert classify_control_flow(parse(tokenize(ROWS[0]["short"][0]))) == ControlFlowClass.SEQ_ONLY
    assert classify_control_flow(parse(tokenize(ROWS[3]["long"]))) == ControlFlowClass.FOR_ONLY
    assert classify_control_flow(parse(tokenize(ROWS[1]["long"]))) == ControlFlowClass.MIXTURE


def test_if_without_loop_counts_as_mixture():
    prog = Program(decls=(Decl("p_0", 0),), body=(If(Index(Num(0)), (Assign(Index(Num(1)), Num(1)),)),))
    assert classify_control_flow(prog) == ControlFlowClass.MIXTURE
