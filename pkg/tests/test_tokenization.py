import pytest
from hypothesis import given
from hypothesis import strategies as st

from divr.errors import EmptyTextError
from divr.tokenization import TokenSequence, segment_sentences, tokenize

words = st.text(alphabet="abcdefg", min_size=1, max_size=6)
tokens = st.one_of(words, st.sampled_from([".", "!", "?", ","]))
token_lists = st.lists(tokens, min_size=1, max_size=40)


def test_basic_split():
    assert list(tokenize("The cat sat.")) == ["the", "cat", "sat", "."]


def test_lowercasing():
    assert list(tokenize("A a A")) == ["a", "a", "a"]


@pytest.mark.parametrize("text", ["", "   ", "\t\n"])
def test_empty_text_rejected(text):
    with pytest.raises(EmptyTextError):
        tokenize(text)


def test_punctuation_single_tokens():
    assert list(tokenize("wait, really?!")) == ["wait", ",", "really", "?", "!"]


@given(token_lists)
def test_retokenize_is_idempotent(toks):
    once = tokenize(" ".join(toks))
    twice = tokenize(" ".join(once))
    assert once == twice


def test_segment_two_terminals():
    seg = segment_sentences(TokenSequence(("a", ".", "b", "?")))
    assert seg.sentences == (("a", "."), ("b", "?"))
    assert seg.boundaries == (2, 4)


def test_segment_no_terminal():
    seg = segment_sentences(TokenSequence(("a", "b", "c")))
    assert seg.sentences == (("a", "b", "c"),)


def test_segment_punctuation_only():
    seg = segment_sentences(TokenSequence((".",)))
    assert seg.sentences == ((".",),)


@given(token_lists)
def test_segmentation_concatenates_to_parent(toks):
    sequence = tokenize(" ".join(toks))
    seg = segment_sentences(sequence)
    flattened = tuple(tok for sentence in seg.sentences for tok in sentence)
    assert flattened == sequence.tokens
    assert all(sentence for sentence in seg.sentences)
    assert seg.boundaries[-1] == len(sequence)
