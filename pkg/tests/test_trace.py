import pytest
from hypothesis import given
from hypothesis import strategies as st

from clickstream.trace import (
    BrowserId,
    DeviceClass,
    HttpRecord,
    LogParseError,
    classify_device,
    extract_domain,
    filter_abnormal_browsers,
    format_log_line,
    iter_log,
    normalize_url,
    parse_log_line,
    read_labeled_log,
    read_log,
    referer_missing_ratio,
    url_host,
    write_log,
)


def rec(ts, url="http://a.com/x", referer=None, hh="H1", ua="UA1", **kw):
    return HttpRecord(ts, hh, ua, url, referer, **kw)


# ---------------------------------------------------------------- parsing

def test_parse_referer_absent():
    r = parse_log_line("1372636800000\tH1\tUA1\thttp://a.com/x\t-\ttext/html\t512\t200")
    assert r == HttpRecord(1372636800000, "H1", "UA1", "http://a.com/x", None, "text/html", 512, 200)
    assert r.browser == BrowserId("H1", "UA1")


def test_parse_response_fields_absent():
    r = parse_log_line("1372636800000\tH1\tUA1\thttp://a.com/x\thttp://b.com/\t-\t-\t-")
    assert r.referer == "http://b.com/"
    assert r.content_type is None and r.content_length is None and r.status_code is None


def test_parse_bad_timestamp():
    with pytest.raises(LogParseError):
        parse_log_line("notatime\tH1\tUA1\thttp://a.com/x\t-\t-\t-\t-")


@pytest.mark.parametrize("line", [
    "1\tH1\tUA1\thttp://a.com/x\t-\t-\t-",  # too few columns
    "0\tH1\tUA1\thttp://a.com/x\t-\t-\t-\t-",  # timestamp must be positive
    "1\tH1\tUA1\t-\t-\t-\t-\t-",  # url required
    "1\tH1\tUA1\thttp://a.com/x\t-\t-\t-1\t-",  # negative length
    "1\tH1\tUA1\thttp://a.com/x\t-\t-\t-\t999",  # bad status
])
def test_parse_rejects(line):
    with pytest.raises(LogParseError):
        parse_log_line(line, lineno=7)


def test_parse_error_carries_line_number():
    with pytest.raises(LogParseError) as exc:
        list(iter_log(["# comment\n", "x\ty\n"]))
    assert exc.value.lineno == 2


def test_custom_schema_order():
    schema = ("household_id", "timestamp_ms", "user_agent", "url", "referer", "content_type",
              "content_length", "status_code")
    r = parse_log_line("H1\t5\tUA\thttp://a.com/\t-\t-\t-\t-", schema)
    assert r.timestamp == 5 and r.household_id == "H1"
    assert format_log_line(r, schema) == "H1\t5\tUA\thttp://a.com/\t-\t-\t-\t-"


def test_iter_log_skips_comments_and_bad_lines():
    lines = ["# header\n", "1\tH\tU\thttp://a.com/\t-\t-\t-\t-\n", "broken\n", "\n",
             "2\tH\tU\thttp://a.com/y\t-\t-\t-\t-\n"]
    out = list(iter_log(lines, errors="skip"))
    assert [lineno for lineno, _, _ in out] == [2, 5]


def test_write_read_labeled(tmp_path):
    records = [rec(1), rec(2, "http://a.com/y", "http://a.com/x", content_type="image/png",
                          content_length=10, status_code=304)]
    path = tmp_path / "log.tsv"
    write_log(path, records, ["user_action", "automatic"])
    back, labels = read_labeled_log(path)
    assert back == records and labels == ["user_action", "automatic"]
    write_log(path, records)
    assert read_log(path) == records


texts = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=20) \
    .filter(lambda s: s != "-" and "\t" not in s and s.strip() == s)


@given(ts=st.integers(1, 2**62), hh=texts, ua=texts, url=texts, ref=st.none() | texts,
       ctype=st.none() | texts, clen=st.none() | st.integers(0, 10**12),
       status=st.none() | st.integers(100, 599))
def test_record_round_trip(ts, hh, ua, url, ref, ctype, clen, status):
    r = HttpRecord(ts, hh, ua, url, ref, ctype, clen, status)
    line = format_log_line(r)
    assert parse_log_line(line) == r
    assert format_log_line(parse_log_line(line)) == line


# ---------------------------------------------------------------- urls

@pytest.mark.parametrize("url,page", [
    ("http://a.com/p?q=1&r=2", "http://a.com/p"),
    ("http://a.com/p", "http://a.com/p"),
    ("http://a.com/p#frag", "http://a.com/p"),
    ("http://a.com/p#f?x", "http://a.com/p"),
])
def test_normalize_url(url, page):
    assert normalize_url(url) == page


@given(st.text(min_size=1))
def test_normalize_idempotent(url):
    page = normalize_url(url)
    if page:
        assert normalize_url(page) == page


@pytest.mark.parametrize("url,domain", [
    ("http://www.example.com/index.html", "example.com"),
    ("http://localhost/x", "localhost"),
    ("http://192.168.1.4:8080/x", "192.168.1.4"),
    ("http://[2001:db8::1]/x", "2001:db8::1"),
    ("http://WWW.Example.COM./", "example.com"),
])
def test_extract_domain(url, domain):
    assert extract_domain(url) == domain


def test_extract_domain_suffix_list():
    assert extract_domain("http://a.b.co.uk/x", {"co.uk", "uk"}) == "b.co.uk"
    assert extract_domain("http://a.b.co.uk/x", set()) == "co.uk"


def test_extract_domain_no_host():
    with pytest.raises(ValueError):
        extract_domain("http:///nohost")


labels = st.text(alphabet="abcdefghij0123456789-", min_size=1, max_size=8).filter(
    lambda s: not s.startswith("-") and not s.endswith("-"))


@given(st.lists(labels, min_size=1, max_size=5))
def test_domain_is_suffix_of_host(parts):
    host = ".".join(parts)
    url = f"http://{host}/p"
    domain = extract_domain(url)
    assert url_host(url).endswith(domain)


# ---------------------------------------------------------------- devices

@pytest.mark.parametrize("ua,cls", [
    ("Mozilla/5.0 (Windows NT 10.0; Win64; x64)", DeviceClass.PC),
    ("Mozilla/5.0 (iPad; CPU OS 6_1_3 like Mac OS X)", DeviceClass.TABLET),
    ("Mozilla/5.0 (iPhone; CPU iPhone OS 6_1_4 like Mac OS X)", DeviceClass.SMARTPHONE),
    ("Mozilla/5.0 (Linux; Android 4.2.2; Nexus 4) Mobile Safari", DeviceClass.SMARTPHONE),
    ("Mozilla/5.0 (Linux; Android 4.2.2; Nexus 7) Safari", DeviceClass.TABLET),
    ("Mozilla/5.0 (Macintosh; Intel Mac OS X 10_8_4)", DeviceClass.PC),
    ("CustomAgent/1.0", DeviceClass.OTHER),
])
def test_classify_device(ua, cls):
    assert classify_device(ua) == cls


def test_classify_device_custom_rules_first_match():
    rules = [("Windows NT", "PC"), ("Windows", "Other")]
    assert classify_device("Windows NT 6.1", rules) == DeviceClass.PC
    assert classify_device("Windows CE", rules) == DeviceClass.OTHER


# ---------------------------------------------------------------- abnormal browsers

def test_referer_missing_ratio():
    records = [rec(i + 1, referer="http://a.com/") for i in range(9)] + [rec(10)]
    assert referer_missing_ratio(records) == pytest.approx(0.1)
    assert referer_missing_ratio([rec(1), rec(2)]) == 1.0
    with pytest.raises(ValueError):
        referer_missing_ratio([])


def _browser(hh, n, n_missing):
    return [rec(i + 1, hh=hh, referer=None if i < n_missing else "http://a.com/") for i in range(n)]


def test_filter_abnormal_browsers():
    bad = _browser("bad", 10, 6)
    good = _browser("good", 100, 12)
    kept, removed = filter_abnormal_browsers(bad + good, 0.5)
    assert kept == good
    assert removed == {BrowserId("bad", "UA1"): pytest.approx(0.6)}
    assert filter_abnormal_browsers([], 0.5) == ([], {})


@given(st.lists(st.tuples(st.sampled_from("abc"), st.booleans()), max_size=40),
       st.floats(0.05, 1.0))
def test_filter_subset_and_stable(spec, threshold):
    records = [rec(i + 1, hh=hh, referer=None if missing else "http://r.com/") for i, (hh, missing) in enumerate(spec)]
    kept, _ = filter_abnormal_browsers(records, threshold)
    assert all(r in records for r in kept)
    again, removed = filter_abnormal_browsers(kept, threshold)
    assert again == kept and removed == {}
