import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from embqe.textpipe import (
    ParseError,
    RawDocument,
    analyze,
    parse_topics,
    parse_trec_docs,
    read_stoplist,
    smart_stoplist,
    write_jsonl_docs,
)


def test_analyze_examples():
    assert analyze("International Organized Crime") == ["intern", "organ", "crime"]
    assert analyze("the of and") == []
    assert analyze("crime crime") == ["crime", "crime"]


def test_tokenizer_splits_on_non_alphanumerics():
    assert analyze("Drug-trafficking, 1990s!") == ["drug", "traffick", "1990"]
    assert analyze("Café") == ["caf"]


def test_smart_stoplist():
    stop = smart_stoplist()
    assert len(stop) == 570  # 571 entries, "would" appears twice
    assert {"a", "the", "zero", "yourselves", "appreciate"} <= stop
    assert "crime" not in stop


def test_custom_stoplist_with_comments():
    stop = read_stoplist(["# comment", "Crime", "", "  organized "])
    assert analyze("International Organized Crime", stop) == ["intern"]


@given(st.text(max_size=200))
def test_analyze_reapplied_never_raises(text):
    once = analyze(text)
    stop = smart_stoplist()
    for tok in once:
        assert tok and tok == tok.lower() and tok not in stop
    analyze(" ".join(once))


SGML = b"""<DOC>
<DOCNO> FBIS3-1 </DOCNO>
<HT> header </HT>
<TEXT>
Organized crime rings.
</TEXT>
<TEXT>second part</TEXT>
</DOC>
<DOC>
<DOCNO>FBIS3-2</DOCNO>
<TEXT>Other text</TEXT>
</DOC>
"""


def test_parse_sgml():
    docs = parse_trec_docs(io.BytesIO(SGML))
    assert [d.doc_id for d in docs] == ["FBIS3-1", "FBIS3-2"]
    assert "Organized crime rings." in docs[0].text and "second part" in docs[0].text
    assert "header" not in docs[0].text


def test_parse_single_and_empty():
    assert len(parse_trec_docs(b"<DOC><DOCNO>x</DOCNO><TEXT>t</TEXT></DOC>")) == 1
    assert parse_trec_docs(b"") == []


def test_parse_unterminated_block_reports_offset():
    data = b"<DOC><DOCNO>a</DOCNO></DOC>\n<DOC><DOCNO>b</DOCNO><TEXT>x</TEXT>\n"
    with pytest.raises(ParseError, match="offset 28"):
        parse_trec_docs(data)
    with pytest.raises(ParseError, match="offset 0"):
        parse_trec_docs(b"<DOC><DOCNO>a</DOCNO>\n<DOC><DOCNO>b</DOCNO></DOC>")


def test_parse_missing_docno_and_duplicates():
    with pytest.raises(ParseError, match="DOCNO"):
        parse_trec_docs(b"<DOC><TEXT>x</TEXT></DOC>")
    with pytest.raises(ParseError, match="duplicate"):
        parse_trec_docs(b"<DOC><DOCNO>a</DOCNO></DOC><DOC><DOCNO>a</DOCNO></DOC>")
    with pytest.raises(ParseError, match="duplicate"):
        parse_trec_docs(b'{"doc_id": "a", "text": ""}\n{"doc_id": "a", "text": ""}\n')


def test_jsonl_autodetect():
    data = b'  \n{"doc_id": "d1", "text": "hello world"}\n'
    assert parse_trec_docs(data) == [RawDocument("d1", "hello world")]
    with pytest.raises(ParseError, match="line 1"):
        parse_trec_docs(b'{"doc_id": "d1"}\n')


ids = st.text(alphabet="abcdefXYZ0123-", min_size=1, max_size=8)
texts = st.text(max_size=80)


@given(st.dictionaries(ids, texts, max_size=10))
def test_jsonl_roundtrip(mapping):
    docs = [RawDocument(k, v) for k, v in mapping.items()]
    back = parse_trec_docs(write_jsonl_docs(docs))
    assert [d.doc_id for d in back] == [d.doc_id for d in docs]
    assert [analyze(d.text) for d in back] == [analyze(d.text) for d in docs]


TOPICS = b"""<top>
<num> Number: 301
<title> International Organized Crime

<desc> Description:
Identify organizations that participate in international criminal activity.
</top>
<top>
<num> Number: 302 <title> Poliomyelitis and Post-Polio
<desc> ...
</top>
"""


def test_parse_trec_topics():
    topics = parse_topics(TOPICS)
    assert topics[0].query_id == "301"
    assert topics[0].title_terms == ("intern", "organ", "crime")
    assert topics[1].query_id == "302"
    assert topics[1].title_terms == ("poliomyel", "post", "polio")


def test_parse_jsonl_topics():
    topics = parse_topics(b'{"query_id": "1", "title": "crime"}\n')
    assert topics[0].query_id == "1" and topics[0].title_terms == ("crime",)


def test_all_stopword_title_is_an_error():
    with pytest.raises(ParseError, match="7"):
        parse_topics(json.dumps({"query_id": "7", "title": "the"}).encode())
