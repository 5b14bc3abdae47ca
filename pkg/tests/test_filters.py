"""Filter cascade: reply/entity/quote stripping and the CS decision."""

import numpy as np
import pytest

from cswitch import DataError
from cswitch.filters import (
    CodeSwitched,
    FilterLexicons,
    FilterTrace,
    Monolingual,
    Rejected,
    classify_cs,
    default_gazetteer,
    default_translation_terms,
    has_translation_marker,
    load_default_lexicons,
    load_ner_sidecar,
    load_term_file,
    strip_long_quotes,
    strip_named_entities,
    strip_replies,
)
from cswitch.ingest import RawPost
from cswitch.langid import load_default_profiles, tag_tokens


@pytest.fixture(scope="module")
def en_el():
    return load_default_profiles(("en", "el"))


@pytest.fixture(scope="module")
def en_el_ru():
    return load_default_profiles(("en", "el", "ru"))


def make_post(body, post_id="p1", subreddit="greece"):
    return RawPost(id=post_id, author="someone", subreddit=subreddit,
                   created_utc=1_500_000_000, body=body)


class TestStripReplies:
    def test_escaped_marker(self):
        text, trace = strip_replies("&gt; original text\nmy answer")
        assert text == "my answer"
        assert len(trace.removals) == 1
        assert trace.removals[0].kind == "reply"
        assert trace.removals[0].text == "&gt; original text\n"

    def test_raw_marker(self):
        text, trace = strip_replies("> quoted stuff\nreal reply")
        assert text == "real reply"
        assert len(trace.removals) == 1

    def test_no_quote_lines_is_identity(self):
        body = "just a plain post\nwith two lines"
        text, trace = strip_replies(body)
        assert text == body
        assert trace == FilterTrace()

    def test_nested_block_removed_whole(self):
        body = "> > deeper level\n> quoting level\nthe answer"
        text, trace = strip_replies(body)
        assert text == "the answer"
        assert len(trace.removals) == 1
        assert trace.removals[0].text == "> > deeper level\n> quoting level\n"

    def test_blank_line_splits_blocks(self):
        body = "> first block\n\n> second block\nanswer"
        text, trace = strip_replies(body)
        assert text == "\nanswer"
        assert len(trace.removals) == 2

    def test_indented_marker_still_counts(self):
        text, _ = strip_replies("   > indented quote\nkeep this")
        assert text == "keep this"

    def test_block_at_end_without_newline(self):
        text, trace = strip_replies("my text first\n> trailing quote")
        assert text == "my text first\n"
        assert trace.removals[0].text == "> trailing quote"

    def test_plain_line_after_block_is_kept(self):
        text, _ = strip_replies("> a\n> b\nkept one\nkept two")
        assert text == "kept one\nkept two"

    def test_spans_are_byte_offsets(self):
        body = "> πρώτη γραμμή εδώ\nafter"
        text, trace = strip_replies(body)
        assert text == "after"
        removal = trace.removals[0]
        assert removal.start == 0
        assert removal.end == len(body.encode() ) - len(b"after")
        assert body.encode()[removal.start:removal.end].decode() == removal.text


class TestTranslationMarker:
    def test_representative_term(self):
        terms = default_translation_terms()
        assert has_translation_marker("how do you translate this word", terms)

    def test_empty_lexicon_always_false(self):
        assert not has_translation_marker("please translate this", frozenset())

    def test_clean_body(self):
        terms = default_translation_terms()
        assert not has_translation_marker("nothing suspicious in here", terms)

    def test_case_insensitive(self):
        terms = default_translation_terms()
        assert has_translation_marker("TRANSLATED by a friend", terms)

    def test_needs_whole_token(self):
        # "translational" is its own token, not a hit for "translation"
        terms = default_translation_terms()
        assert not has_translation_marker("translational research news", terms)

    def test_load_term_file(self, tmp_path):
        path = tmp_path / "terms.txt"
        path.write_text("# comment\nFoo\n\nbar\n")
        assert load_term_file(path) == frozenset({"foo", "bar"})


class TestStripNamedEntitiesSidecar:
    def test_single_entity(self):
        text, trace = strip_named_entities(
            "I ordered from Amazon yesterday", annotations=[(3, "B-ORG")])
        assert text == "I ordered from yesterday"
        assert trace.removals[0].kind == "named_entity"
        assert trace.removals[0].text == "Amazon "

    def test_multiword_entity(self):
        text, _ = strip_named_entities(
            "flying to New York tomorrow morning",
            annotations=[(2, "B-LOC"), (3, "I-LOC")])
        assert text == "flying to tomorrow morning"

    def test_continuation_requires_adjacency(self):
        # a gap in token indices starts a fresh entity
        text, trace = strip_named_entities(
            "Amazon ships and Google answers",
            annotations=[(0, "B-ORG"), (3, "I-ORG")])
        assert text == "ships and answers"
        assert len(trace.removals) == 2

    def test_orphan_continuation_opens_entity(self):
        text, _ = strip_named_entities(
            "I ordered from Amazon yesterday", annotations=[(3, "I-ORG")])
        assert text == "I ordered from yesterday"

    def test_o_tags_ignored(self):
        text, trace = strip_named_entities(
            "I ordered from Amazon yesterday",
            annotations=[(0, "O"), (3, "B-ORG"), (4, "O")])
        assert text == "I ordered from yesterday"
        assert len(trace.removals) == 1

    def test_empty_annotations_mean_no_entities(self):
        body = "I ordered from Amazon yesterday"
        text, trace = strip_named_entities(body, annotations=[])
        assert text == body
        assert trace.removals == ()

    def test_unknown_index_names_post(self):
        with pytest.raises(DataError, match="post p9"):
            strip_named_entities("short text here", annotations=[(5, "B-ORG")],
                                 post_id="p9")


class TestStripNamedEntitiesHeuristic:
    def test_gazetteer_hit(self):
        text, trace = strip_named_entities("I ordered from Amazon yesterday")
        assert text == "I ordered from yesterday"
        assert trace.removals[0].text == "Amazon "

    def test_sentence_initial_run_is_kept(self):
        body = "Amazon delivers fast around here"
        text, trace = strip_named_entities(body)
        assert text == body
        assert trace.removals == ()

    def test_after_terminator_counts_as_initial(self):
        body = "we waited. Amazon delivered on time"
        text, _ = strip_named_entities(body)
        assert text == body

    def test_newline_counts_as_boundary(self):
        body = "we waited\nAmazon delivered on time"
        text, _ = strip_named_entities(body)
        assert text == body

    def test_multiword_entry(self):
        text, _ = strip_named_entities("we flew to New York last week")
        assert text == "we flew to last week"

    def test_longest_match_wins(self):
        text, trace = strip_named_entities("i use Google Maps every day")
        assert text == "i use every day"
        assert trace.removals[0].text == "Google Maps "

    def test_unlisted_capitalized_word_is_kept(self):
        body = "we met Maria at the station"
        text, _ = strip_named_entities(body)
        assert text == body

    def test_byte_spans_after_multibyte_text(self):
        text, trace = strip_named_entities("ήταν από Amazon χθες το πρωί")
        assert text == "ήταν από χθες το πρωί"
        removal = trace.removals[0]
        assert (removal.start, removal.end) == (16, 23)

    def test_custom_gazetteer(self):
        text, _ = strip_named_entities("we visited Smalltown on friday",
                                       gazetteer=("Smalltown",))
        assert text == "we visited on friday"

    def test_default_gazetteer_loads_once(self):
        assert default_gazetteer() is default_gazetteer()
        assert "Amazon" in default_gazetteer()


class TestStripLongQuotes:
    def test_six_token_quote_removed(self):
        text, trace = strip_long_quotes('he said "one two three four five six" loudly')
        assert text == "he said loudly"
        assert trace.removals[0].kind == "quote"
        assert trace.removals[0].text == '"one two three four five six" '

    def test_five_token_quote_retained(self):
        body = 'he said "one two three four five" loudly'
        text, trace = strip_long_quotes(body)
        assert text == body
        assert trace.removals == ()

    def test_famous_saying_removed(self):
        body = ("“Don't cry because it's over, smile because it "
                "happened.” so true")
        text, _ = strip_long_quotes(body)
        assert text == "so true"

    def test_guillemets(self):
        text, _ = strip_long_quotes("σκέψου «ένα δύο τρία τέσσερα πέντε έξι» πάλι")
        assert text == "σκέψου πάλι"

    def test_punctuation_counts_toward_length(self):
        text, _ = strip_long_quotes('said "one two three four five !!!" ok')
        assert text == "said ok"

    def test_unmatched_open_warns_and_keeps(self):
        body = 'broken "quote start with no ending mark here'
        text, trace = strip_long_quotes(body)
        assert text == body
        assert trace.removals == ()
        assert len(trace.warnings) == 1

    def test_stray_closer_warns(self):
        body = "weird” closer sitting alone here"
        text, trace = strip_long_quotes(body)
        assert text == body
        assert len(trace.warnings) == 1

    def test_two_pairs_independent(self):
        body = '"first long quote of six tokens yes" and "short one" after'
        text, trace = strip_long_quotes(body)
        assert text == 'and "short one" after'
        assert len(trace.removals) == 1


class TestClassifyCs:
    def test_greek_english_post(self, en_el):
        post = make_post("Πράγματι, ήταν too good to be true.")
        decision, trace, final_text = classify_cs(post, en_el)
        assert isinstance(decision, CodeSwitched)
        assert decision.primary_lang == "el"
        assert decision.other_lang == "en"
        assert decision.proportions["en"] == pytest.approx(16 / 29)
        assert decision.proportions["el"] == pytest.approx(13 / 29)
        assert final_text == post.body
        assert trace == FilterTrace()

    def test_reply_only_second_language(self, en_el):
        post = make_post("&gt; Καλημέρα σε όλους τους φίλους μου εδώ\n"
                         "thanks for the warm welcome everyone")
        decision, trace, final_text = classify_cs(post, en_el)
        assert decision == Rejected("reply_only_second_lang")
        assert final_text == "thanks for the warm welcome everyone"
        assert trace.by_kind("reply")

    def test_weblink_rejected(self, en_el):
        post = make_post("δες εδώ http://example.com μου είπε κάποιος χθες")
        decision, trace, _ = classify_cs(post, en_el)
        assert decision == Rejected("weblink")
        assert trace == FilterTrace()

    def test_short_post_rejected(self, en_el):
        decision, _, _ = classify_cs(make_post("πολύ λίγα tokens εδώ"), en_el)
        assert decision == Rejected("too_short")

    def test_translation_post_rejected(self, en_el):
        post = make_post("can someone translate αυτή τη φράση για μένα please")
        decision, trace, _ = classify_cs(post, en_el)
        assert decision == Rejected("translation")
        markers = trace.by_kind("translation_marker")
        assert len(markers) == 1
        assert markers[0].text == "translate"

    def test_translate_inside_reply_does_not_reject(self, en_el):
        post = make_post("&gt; how to translate this\n"
                         "that movie was great fun friends")
        decision, _, _ = classify_cs(post, en_el)
        assert decision == Monolingual("en")

    def test_pure_english_is_monolingual(self, en_el):
        post = make_post("the weather was lovely all week long")
        decision, _, final_text = classify_cs(post, en_el)
        assert decision == Monolingual("en")
        assert final_text == post.body

    def test_pure_greek_is_monolingual(self, en_el):
        post = make_post("Καλημέρα σε όλους τους φίλους μου εδώ πέρα")
        decision, _, _ = classify_cs(post, en_el)
        assert decision == Monolingual("el")

    def test_quote_carried_second_language(self, en_el):
        post = make_post("the party was fun and someone shouted "
                         "“Ελα εδώ τώρα αμέσως φίλε μου έλα” at midnight")
        decision, trace, final_text = classify_cs(post, en_el)
        assert decision == Monolingual("en")
        assert trace.by_kind("quote")
        assert final_text == post.body

    def test_three_languages_rejected(self, en_el_ru):
        post = make_post("Καλημέρα και σε όλους good morning friends "
                         "Привет всем моим друзьям сегодня")
        decision, _, _ = classify_cs(post, en_el_ru)
        assert decision == Rejected("single_language")

    def test_entities_and_quotes_reinserted(self, en_el):
        post = make_post(
            "I ordered from Amazon yesterday και ήταν όλα μια χαρά "
            "“Don't cry because it's over, smile because it happened.” "
            "τέλος πάντων my friends")
        decision, trace, final_text = classify_cs(post, en_el)
        assert isinstance(decision, CodeSwitched)
        assert final_text == post.body
        cut = trace.by_kind("named_entity") + trace.by_kind("quote")
        assert len(cut) == 2
        for removal in cut:
            assert final_text.count(removal.text) == 1

    def test_reply_stays_out_of_final_text(self, en_el):
        post = make_post("> something someone else wrote before\n"
                         "thanks και ευχαριστώ πολύ my friends for everything")
        decision, _, final_text = classify_cs(post, en_el)
        assert isinstance(decision, CodeSwitched)
        assert final_text == "thanks και ευχαριστώ πολύ my friends for everything"

    def test_sidecar_wiring(self, en_el):
        lexicons = FilterLexicons(
            default_translation_terms(), default_gazetteer(),
            ner={"p1": [(0, "B-ORG")]})
        post = make_post("Zorbix λέει ότι όλα good and fine εδώ πέρα φίλε")
        decision, trace, _ = classify_cs(post, en_el, lexicons)
        assert trace.by_kind("named_entity")[0].text.strip() == "Zorbix"
        assert isinstance(decision, CodeSwitched)

    def test_sidecar_bad_index_raises(self, en_el):
        lexicons = FilterLexicons(
            default_translation_terms(), default_gazetteer(),
            ner={"p1": [(99, "B-ORG")]})
        with pytest.raises(DataError, match="post p1"):
            classify_cs(make_post("ένα two τρία four πέντε"), en_el, lexicons)

    def test_decision_is_deterministic(self, en_el):
        post = make_post("Πράγματι, ήταν too good to be true.")
        first = classify_cs(post, en_el)
        second = classify_cs(post, en_el)
        assert first == second


class TestInvariants:
    def cascade(self, body):
        text, _ = strip_replies(body)
        text, _ = strip_named_entities(text)
        text, _ = strip_long_quotes(text)
        return text

    def test_cascade_idempotent(self):
        bodies = [
            "> quoted line\nI ordered from Amazon yesterday "
            '"this quote has more than five tokens inside" '
            "και αυτό είναι ελληνικό κείμενο φίλε μου",
            "plain text without anything special at all",
            "we flew to New York and σκέψου «ένα δύο τρία τέσσερα πέντε έξι» ok",
        ]
        for body in bodies:
            once = self.cascade(body)
            assert self.cascade(once) == once

    def test_second_pass_removes_nothing(self):
        body = ("> reply\nbought it on Amazon and said "
                '"a quote longer than five tokens here" done')
        once = self.cascade(body)
        _, t1 = strip_replies(once)
        _, t2 = strip_named_entities(once)
        _, t3 = strip_long_quotes(once)
        assert t1.removals == t2.removals == t3.removals == ()

    def test_never_cs_on_single_language_residue(self, en_el):
        rng = np.random.default_rng(23)
        words = ("about town market believe holiday window question answer "
                 "morning evening people garden letter number street music "
                 "mountain problem moment history").split()
        for _ in range(20):
            body = " ".join(rng.choice(words, size=rng.integers(6, 15)))
            post = make_post(body)
            decision, _, final_text = classify_cs(post, en_el)
            tags = tag_tokens(final_text, en_el)
            if len({t.language for t in tags}) == 1:
                assert not isinstance(decision, CodeSwitched)

    def test_order_independent(self, en_el):
        posts = [
            make_post("Πράγματι, ήταν too good to be true.", post_id="a"),
            make_post("the weather was lovely all week long", post_id="b"),
            make_post("Καλημέρα σε όλους τους φίλους μου εδώ πέρα", post_id="c"),
        ]
        forward = {p.id: classify_cs(p, en_el)[0] for p in posts}
        backward = {p.id: classify_cs(p, en_el)[0] for p in reversed(posts)}
        assert forward == backward


class TestLexiconPlumbing:
    def test_load_default_lexicons(self):
        lex = load_default_lexicons()
        assert "translate" in lex.translation_terms
        assert "Amazon" in lex.gazetteer
        assert lex.ner is None

    def test_load_ner_sidecar(self, tmp_path):
        path = tmp_path / "ner.tsv"
        path.write_text("# comment\np1\t3\tB-ORG\np1\t4\tI-ORG\np2\t0\tB-LOC\n")
        sidecar = load_ner_sidecar(path)
        assert sidecar == {"p1": [(3, "B-ORG"), (4, "I-ORG")],
                           "p2": [(0, "B-LOC")]}

    def test_sidecar_rejects_short_row(self, tmp_path):
        path = tmp_path / "ner.tsv"
        path.write_text("p1\t3\n")
        with pytest.raises(DataError, match="expected post_id"):
            load_ner_sidecar(path)

    def test_sidecar_rejects_bad_index(self, tmp_path):
        path = tmp_path / "ner.tsv"
        path.write_text("p1\tthree\tB-ORG\n")
        with pytest.raises(DataError, match="not an integer"):
            load_ner_sidecar(path)

    def test_precision_report_reexported(self):
        from cswitch.filters import precision_report, read_annotations
        assert callable(precision_report) and callable(read_annotations)
