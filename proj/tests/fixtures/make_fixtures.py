#!/usr/bin/env python3
"""Regenerates the committed test fixtures and oracle values.

Deterministic: running it twice yields byte-identical output. Oracle scores
come from independent implementations (python-Levenshtein, distance, nltk,
scikit-learn), never from the C++ code under test.

    python3 tests/fixtures/make_fixtures.py
"""

import datetime as dt
import json
import os
import random
import re
import shutil
from pathlib import Path
from urllib.parse import quote
from xml.sax.saxutils import escape

HERE = Path(__file__).resolve().parent
DATA = HERE.parent / "data"

OAI_NS = ('xmlns="http://www.openarchives.org/OAI/2.0/" '
          'xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" '
          'xsi:schemaLocation="http://www.openarchives.org/OAI/2.0/ '
          'http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd"')
DC_NS = ('xmlns:oai_dc="http://www.openarchives.org/OAI/2.0/oai_dc/" '
         'xmlns:dc="http://purl.org/dc/elements/1.1/" '
         'xsi:schemaLocation="http://www.openarchives.org/OAI/2.0/oai_dc/ '
         'http://www.openarchives.org/OAI/2.0/oai_dc.xsd"')

# ---------------------------------------------------------------------------
# Replay files


def request_key(url):
    h = 0xCBF29CE484222325
    for b in ("GET " + url).encode():
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return "%016x" % h


def enc(s):
    return quote(s, safe="-_.~")


def write_response(directory, url, status, body, content_type, extra=()):
    reasons = {200: "OK", 404: "Not Found", 429: "Too Many Requests",
               500: "Internal Server Error", 503: "Service Unavailable"}
    if isinstance(body, str):
        body = body.encode()
    head = "HTTP/1.1 %d %s\r\n" % (status, reasons[status])
    if content_type:
        head += "Content-Type: %s\r\n" % content_type
    for k, v in extra:
        head += "%s: %s\r\n" % (k, v)
    head += "Content-Length: %d\r\n\r\n" % len(body)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / (request_key(url) + ".http")).write_bytes(head.encode() + body)


def reset(path):
    if path.exists():
        shutil.rmtree(path)
    path.mkdir(parents=True)


# ---------------------------------------------------------------------------
# Text

WORDS = """analysis approach boundary calibration coefficient collision
correlation coupling cross decay density detector dimension distribution
dynamics effect energy equation estimate experiment field fluctuation flux
framework function gauge gradient graph hadron inference instability
interaction invariant lattice limit magnetic manifold mass measurement method
model momentum network neutrino observable operator parameter particle phase
photon potential prediction probability quantum radiation regime relation
resonance sample scalar scattering signal simulation space spectrum stability
statistics structure symmetry system temperature tensor theory transition
uncertainty vacuum variable velocity wave""".split()
LINKS = """we show that the and for with in of to is are this which from by as
on we find using these our""".split()


def sentence(rng, n=None):
    n = n or rng.randint(8, 16)
    words = [rng.choice(WORDS if rng.random() < 0.6 else LINKS) for _ in range(n)]
    return words[0].capitalize() + " " + " ".join(words[1:]) + "."


def paragraph(rng, sentences):
    return " ".join(sentence(rng) for _ in range(sentences))


def title_text(rng):
    words = [rng.choice(WORDS) for _ in range(rng.randint(4, 8))]
    return " ".join(w.capitalize() if i == 0 else w for i, w in enumerate(words))


def edit_text(rng, text, fraction):
    """Replaces about `fraction` of the words with other words."""
    words = text.split(" ")
    for i in range(len(words)):
        if rng.random() < fraction:
            tail = "." if words[i].endswith(".") else ""
            words[i] = rng.choice(WORDS) + tail
    return " ".join(words)


class Doc:
    def __init__(self, title, abstract, sections):
        self.title = title
        self.abstract = abstract
        self.sections = sections  # [(heading, [paragraph, ...])]

    def body_text(self):
        parts = []
        for heading, paras in self.sections:
            parts.append(heading)
            parts.extend(paras)
        return " ".join(parts)

    def edited(self, rng, fraction):
        return Doc(edit_text(rng, self.title, fraction),
                   edit_text(rng, self.abstract, fraction) if self.abstract else None,
                   [(h, [edit_text(rng, p, fraction) for p in ps]) for h, ps in self.sections])


def random_doc(rng):
    headings = ["Introduction", "Model", "Results", "Discussion", "Conclusion"]
    sections = [(h, [paragraph(rng, rng.randint(2, 4)) for _ in range(rng.randint(1, 3))])
                for h in headings[:rng.randint(2, 5)]]
    return Doc(title_text(rng), paragraph(rng, 3), sections)


# ---------------------------------------------------------------------------
# XML writers


def jats(doc, doi, with_table=False, math=False, body=True):
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<!DOCTYPE article PUBLIC "-//NLM//DTD JATS (Z39.96) Journal Publishing DTD v1.1 20151215//EN" '
           '"JATS-journalpublishing1.dtd">',
           '<article xmlns:mml="http://www.w3.org/1998/Math/MathML" '
           'xmlns:xlink="http://www.w3.org/1999/xlink" article-type="research-article" dtd-version="1.1">',
           '<front>',
           '<journal-meta><journal-id journal-id-type="publisher-id">PRD</journal-id>'
           '<journal-title-group><journal-title>Physical Review D</journal-title></journal-title-group>'
           '<issn pub-type="ppub">2470-0010</issn></journal-meta>',
           '<article-meta>',
           '<article-id pub-id-type="doi">%s</article-id>' % escape(doi),
           '<title-group><article-title>%s</article-title></title-group>' % escape(doc.title),
           '<contrib-group><contrib contrib-type="author"><name><surname>Noether</surname>'
           '<given-names>E.</given-names></name></contrib></contrib-group>',
           '<pub-date pub-type="epub"><day>01</day><month>07</month><year>2016</year></pub-date>']
    if doc.abstract is not None:
        out.append('<abstract><p>%s</p></abstract>' % escape(doc.abstract))
    out.append('</article-meta>')
    out.append('</front>')
    if body:
        out.append('<body>')
        for i, (heading, paras) in enumerate(doc.sections):
            out.append('<sec id="s%d"><title>%s</title>' % (i + 1, escape(heading)))
            for p in paras:
                out.append('<p>%s</p>' % escape(p))
            if with_table and i == 0:
                out.append('<table-wrap id="t1"><label>Table 1</label><caption><p>Fitted values.</p></caption>'
                           '<table><tr><td>mass</td><td>1.0</td></tr></table></table-wrap>')
            if math and i == 0:
                out.append('<disp-formula id="e1"><mml:math alttext="E = m c^2"><mml:mi>E</mml:mi><mml:mo>=</mml:mo>'
                           '<mml:mi>m</mml:mi><mml:msup><mml:mi>c</mml:mi><mml:mn>2</mml:mn></mml:msup></mml:math>'
                           '</disp-formula>')
            out.append('</sec>')
        out.append('</body>')
    out.append('<back><ack><p>We thank the referees.</p></ack><ref-list><title>References</title>'
               '<ref id="r1"><mixed-citation>A. Author, Phys. Rev. Lett. 1, 1 (1958).</mixed-citation></ref>'
               '</ref-list></back>')
    out.append('</article>')
    return "\n".join(out) + "\n"


def elsevier(doc, doi, rawtext_only=False):
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<full-text-retrieval-response xmlns="http://www.elsevier.com/xml/svapi/article/dtd" '
           'xmlns:ce="http://www.elsevier.com/xml/common/dtd" xmlns:dc="http://purl.org/dc/elements/1.1/" '
           'xmlns:ja="http://www.elsevier.com/xml/ja/dtd" xmlns:prism="http://prismstandard.org/namespaces/basic/2.0/" '
           'xmlns:xocs="http://www.elsevier.com/xml/xocs/dtd" xmlns:sb="http://www.elsevier.com/xml/common/struct-bib/dtd">',
           '<coredata>',
           '<prism:doi>%s</prism:doi>' % escape(doi),
           '<dc:title>%s</dc:title>' % escape(doc.title),
           '<prism:publicationName>Physics Letters B</prism:publicationName>']
    if doc.abstract is not None:
        out.append('<dc:description>%s</dc:description>' % escape(doc.abstract))
    out.append('<openaccess>1</openaccess>')
    out.append('</coredata>')
    out.append('<originalText><xocs:doc><xocs:meta><xocs:content-family>serial</xocs:content-family>'
               '<xocs:doi>%s</xocs:doi></xocs:meta>' % escape(doi))
    if rawtext_only:
        out.append('<xocs:rawtext>%s</xocs:rawtext>' % escape(doc.body_text()))
    else:
        out.append('<xocs:serial-item><ja:article docsubtype="fla"><ja:head>')
        out.append('<ce:title>%s</ce:title>' % escape(doc.title))
        if doc.abstract is not None:
            out.append('<ce:abstract class="author"><ce:section-title>Abstract</ce:section-title>'
                       '<ce:abstract-sec><ce:simple-para>%s</ce:simple-para></ce:abstract-sec></ce:abstract>'
                       % escape(doc.abstract))
        out.append('</ja:head><ja:body><ce:sections>')
        for i, (heading, paras) in enumerate(doc.sections):
            out.append('<ce:section id="s%d"><ce:section-title>%s</ce:section-title>' % (i + 1, escape(heading)))
            for p in paras:
                out.append('<ce:para>%s</ce:para>' % escape(p))
            out.append('</ce:section>')
        out.append('</ce:sections></ja:body><ja:tail><ce:bibliography><ce:bibliography-sec>'
                   '<ce:bib-reference id="b1"><ce:label>[1]</ce:label><sb:reference><sb:contribution><sb:title>'
                   '<sb:maintitle>Old results</sb:maintitle></sb:title></sb:contribution></sb:reference>'
                   '</ce:bib-reference></ce:bibliography-sec></ce:bibliography></ja:tail></ja:article>'
                   '</xocs:serial-item>')
    out.append('</xocs:doc></originalText>')
    out.append('</full-text-retrieval-response>')
    return "\n".join(out) + "\n"


def tei(doc, references=False):
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<TEI xml:space="preserve" xmlns="http://www.tei-c.org/ns/1.0" '
           'xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xmlns:xlink="http://www.w3.org/1999/xlink">',
           '<teiHeader xml:lang="en">',
           '<fileDesc><titleStmt><title level="a" type="main">%s</title></titleStmt>' % escape(doc.title),
           '<publicationStmt><publisher/><availability status="unknown"><licence/></availability></publicationStmt>',
           '<sourceDesc><biblStruct><analytic><author><persName><forename type="first">Emmy</forename>'
           '<surname>Noether</surname></persName></author><title level="a" type="main">%s</title></analytic>'
           '<monogr><imprint><date/></imprint></monogr></biblStruct></sourceDesc></fileDesc>' % escape(doc.title),
           '<encodingDesc><appInfo><application version="0.7.2" ident="GROBID">'
           '<label>GROBID</label></application></appInfo></encodingDesc>']
    if doc.abstract is not None:
        out.append('<profileDesc><abstract><div xmlns="http://www.tei-c.org/ns/1.0"><p>%s</p></div></abstract>'
                   '</profileDesc>' % escape(doc.abstract))
    else:
        out.append('<profileDesc><abstract/></profileDesc>')
    out.append('</teiHeader>')
    out.append('<text xml:lang="en"><body>')
    for i, (heading, paras) in enumerate(doc.sections):
        out.append('<div xmlns="http://www.tei-c.org/ns/1.0"><head>%s</head>' % escape(heading))
        for p in paras:
            out.append('<p>%s</p>' % escape(p))
        out.append('</div>')
    out.append('</body><back>')
    if references:
        out.append('<div type="references"><listBibl><biblStruct xml:id="b0"><analytic>'
                   '<title level="a" type="main">Old results</title></analytic><monogr>'
                   '<title level="j">Phys. Rev.</title><imprint><date type="published" when="1958"/></imprint>'
                   '</monogr></biblStruct></listBibl></div>')
    out.append('</back></text></TEI>')
    return "\n".join(out) + "\n"


def oai_record(rec):
    lines = ['<record>', '<header>',
             '<identifier>oai:arXiv.org:%s</identifier>' % rec["id"],
             '<datestamp>%s</datestamp>' % rec["dates"][-1]]
    for s in rec["sets"]:
        lines.append('<setSpec>%s</setSpec>' % s)
    lines += ['</header>', '<metadata>', '<oai_dc:dc %s>' % DC_NS,
              '<dc:title>%s</dc:title>' % escape(rec["title"]),
              '<dc:creator>Noether, Emmy</dc:creator>',
              '<dc:subject>%s</dc:subject>' % rec.get("subject", "Physics")]
    if rec.get("abstract"):
        lines.append('<dc:description>  %s\n</dc:description>' % escape(rec["abstract"]))
    lines.append('<dc:description>Comment: 12 pages, 3 figures</dc:description>')
    for d in rec["dates"]:
        lines.append('<dc:date>%s</dc:date>' % d)
    lines += ['<dc:type>text</dc:type>',
              '<dc:identifier>http://arxiv.org/abs/%s</dc:identifier>' % rec["id"]]
    if rec.get("doi"):
        prefix = "" if rec["doi"].startswith("http") else "doi:"
        lines.append('<dc:identifier>%s%s</dc:identifier>' % (prefix, rec["doi"]))
    lines += ['</oai_dc:dc>', '</metadata>', '</record>']
    return "\n".join(lines)


def oai_page(records, token, cursor, total, request_url):
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<OAI-PMH %s>' % OAI_NS,
           '<responseDate>2019-05-21T11:45:25Z</responseDate>',
           '<request verb="ListRecords" metadataPrefix="oai_dc">%s</request>' % escape(request_url),
           '<ListRecords>']
    out += [oai_record(r) for r in records]
    if token is not None:
        out.append('<resumptionToken cursor="%d" completeListSize="%d">%s</resumptionToken>'
                   % (cursor, total, escape(token)))
    else:
        out.append('<resumptionToken cursor="%d" completeListSize="%d"/>' % (cursor, total))
    out += ['</ListRecords>', '</OAI-PMH>']
    return "\n".join(out) + "\n"


def write_oai_world(directory, endpoint, records, page_sizes, token_stem):
    first = endpoint + "?verb=ListRecords&metadataPrefix=oai_dc"
    url = first
    start = 0
    for i, size in enumerate(page_sizes):
        chunk = records[start:start + size]
        last = i == len(page_sizes) - 1
        token = None if last else "%s|%d" % (token_stem, start + size)
        write_response(directory, url, 200, oai_page(chunk, token, start, len(records), endpoint), "text/xml")
        start += size
        if token:
            url = endpoint + "?verb=ListRecords&resumptionToken=" + enc(token)
    return first


def crossref_work(doi, publisher, issued, links, print_date=None, online_date=None):
    msg = {"indexed": {"date-parts": [[2019, 5, 1]]}, "publisher": publisher, "DOI": doi, "type": "journal-article"}
    if issued:
        msg["issued"] = {"date-parts": [list(issued)]}
    if print_date:
        msg["published-print"] = {"date-parts": [list(print_date)]}
    if online_date:
        msg["published-online"] = {"date-parts": [list(online_date)]}
    msg["license"] = [{"URL": "http://creativecommons.org/licenses/by/4.0/", "content-version": "vor",
                       "delay-in-days": 0, "start": {"date-parts": [list(issued or (2016, 1, 1))]}}]
    msg["link"] = links
    return json.dumps({"status": "ok", "message-type": "work", "message-version": "1.0.0", "message": msg},
                      indent=1, sort_keys=True)


def tdm_link(url, content_type):
    return {"URL": url, "content-type": content_type, "content-version": "vor", "intended-application": "text-mining"}


def fake_pdf(label):
    return ("%%PDF-1.4\n%%\xe2\xe3\xcf\xd3\n1 0 obj << /Title (%s) >> endobj\ntrailer << /Root 1 0 R >>\n%%%%EOF\n"
            % label).encode("latin-1", "replace")


def iso(d):
    return d.isoformat()


# ---------------------------------------------------------------------------
# Small samples


def write_samples():
    rng = random.Random(7)
    xml = HERE / "xml"
    reset(xml)
    doc = random_doc(rng)
    doc.title = "Gauge — invariant scattering in curved space"
    (xml / "jats_full.xml").write_text(jats(doc, "10.1103/PhysRevD.94.014001"))
    (xml / "jats_no_body.xml").write_text(jats(doc, "10.1103/PhysRevD.94.014002", body=False))
    (xml / "jats_with_table.xml").write_text(jats(doc, "10.1103/PhysRevD.94.014003", with_table=True))
    (xml / "jats_math.xml").write_text(jats(doc, "10.1103/PhysRevD.94.014004", math=True))
    (xml / "elsevier_full.xml").write_text(elsevier(doc, "10.1016/j.physletb.2016.01.001"))
    (xml / "elsevier_rawtext.xml").write_text(elsevier(doc, "10.1016/j.physletb.2016.01.002", rawtext_only=True))
    (xml / "tei_complete.xml").write_text(tei(doc))
    no_abstract = Doc(doc.title, None, doc.sections)
    (xml / "tei_missing_abstract.xml").write_text(tei(no_abstract))
    (xml / "tei_with_references.xml").write_text(tei(doc, references=True))
    expected = {"title": doc.title, "abstract": doc.abstract, "body": doc.body_text()}
    (xml / "expected_sections.json").write_text(json.dumps(expected, indent=1, ensure_ascii=False) + "\n")

    rec = {"id": "0704.0001", "sets": ["physics:hep-ph"], "title": "Calculation of prompt diphoton production",
           "abstract": "A fully differential calculation in perturbative quantum chromodynamics is presented.",
           "dates": ["2007-04-02", "2007-05-23", "2007-07-24"], "doi": "10.1103/PhysRevD.76.013009",
           "subject": "High Energy Physics - Phenomenology"}
    (HERE / "oai").mkdir(exist_ok=True)
    envelope = oai_page([rec], None, 0, 1, "http://export.arxiv.org/oai2")
    (HERE / "oai" / "record_three_versions.xml").write_text(envelope)


# ---------------------------------------------------------------------------
# Three-page harvest, empty set and registry lookups


def write_harvest_world():
    rng = random.Random(11)
    directory = HERE / "replay_harvest"
    reset(directory)
    endpoint = "http://oai.test/oai2"
    records = []
    for i in range(5):
        records.append({"id": "1605.%05d" % (i + 1), "sets": ["physics:hep-th"], "title": title_text(rng),
                        "abstract": paragraph(rng, 2), "dates": ["2016-05-%02d" % (i + 1)],
                        "doi": "10.1000/harvest.%d" % i if i % 2 == 0 else None})
    write_oai_world(directory, endpoint, records, [2, 2, 1], "6960524/2016-05-01")
    expected = sorted(r["id"] for r in records)
    (directory / "expected_ids.txt").write_text("\n".join(expected) + "\n")

    empty = HERE / "replay_empty"
    reset(empty)
    url = "http://oai.test/oai2?verb=ListRecords&metadataPrefix=oai_dc&set=math"
    body = ('<?xml version="1.0" encoding="UTF-8"?>\n<OAI-PMH %s>\n'
            '<responseDate>2019-05-21T11:45:25Z</responseDate>\n'
            '<request verb="ListRecords" metadataPrefix="oai_dc" set="math">http://oai.test/oai2</request>\n'
            '<error code="noRecordsMatch">No records match</error>\n</OAI-PMH>\n' % OAI_NS)
    write_response(empty, url, 200, body, "text/xml")

    crossref = HERE / "replay_crossref"
    reset(crossref)
    base = "http://api.crossref.test"
    doi = "10.1103/physrevd.76.013009"
    work = crossref_work(doi, "American Physical Society (APS)", (2007, 7, 31),
                         [{"URL": "http://link.aps.test/article/%s" % doi, "content-type": "unspecified",
                           "content-version": "vor", "intended-application": "similarity-checking"},
                          tdm_link("http://harvest.aps.test/v2/journals/articles/%s/fulltext" % doi,
                                   "application/xml")],
                         print_date=(2007, 7, 1), online_date=(2007, 7, 31))
    write_response(crossref, base + "/works/" + enc(doi), 200, work, "application/json")
    doi2 = "10.1016/j.nolinks.2010.01.001"
    write_response(crossref, base + "/works/" + enc(doi2), 200,
                   crossref_work(doi2, "Elsevier BV", (2010, 1, 15), []), "application/json")
    write_response(crossref, base + "/works/" + enc("10.9999/missing"), 404, "Resource not found.", "text/plain")


# ---------------------------------------------------------------------------
# corpus20: a full pipeline world


def write_corpus20():
    rng = random.Random(20)
    root = HERE / "corpus20"
    reset(root)
    replay = root / "replay"
    preprints = root / "preprints"
    segmented = root / "segmented"
    preprints.mkdir()
    segmented.mkdir()
    endpoint = "http://oai.corpus20.test/oai2"
    registry = "http://api.crossref.test"
    sets = ["physics:hep-th", "physics:cond-mat", "math", "cs", "physics:astro-ph"]

    records = []
    pairs = []
    base_day = dt.date(2015, 1, 5)
    for i in range(20):
        arxiv_id = "1501.%05d" % (100 + i)
        doi = "10.1000/corpus.%03d" % i
        published = random_doc(rng)
        n_versions = 1 + i % 3
        latest = published.edited(rng, 0.03 * (i % 5))
        versions = [latest]
        for _ in range(n_versions - 1):
            versions.insert(0, versions[0].edited(rng, 0.1))
        first_upload = base_day + dt.timedelta(days=7 * i)
        dates = [first_upload + dt.timedelta(days=40 * k) for k in range(n_versions)]
        if i == 17:
            pub_date = dates[-1]  # same day
        elif i in (5, 12):
            pub_date = dates[-1] - dt.timedelta(days=3 + i)  # publisher first
        else:
            pub_date = dates[-1] + dt.timedelta(days=[12, 45, 100, 200, 400, 900][i % 6])
        kind = "elsevier" if i in (3, 9, 15) else "pdf" if i in (4, 10, 16) else "jats"
        records.append({"id": arxiv_id, "sets": [sets[i % len(sets)]] + (["cs"] if i % 7 == 0 else []),
                        "title": versions[-1].title, "abstract": versions[-1].abstract,
                        "dates": [iso(d) for d in dates], "doi": doi.upper() if i == 2 else doi})
        pairs.append((arxiv_id, doi, published, versions, pub_date, kind))

    extras = [
        {"id": "1502.00001", "sets": ["math"], "title": "No DOI here", "dates": ["2015-02-01"], "doi": None},
        {"id": "1502.00002", "sets": ["cs"], "title": "Also without DOI", "dates": ["2015-02-02"], "doi": None},
        {"id": "1502.00003", "sets": ["math"], "title": "Twin one", "dates": ["2015-02-03"],
         "doi": "10.1000/twin"},
        {"id": "1502.00004", "sets": ["math"], "title": "Twin two", "dates": ["2015-02-04"],
         "doi": "https://doi.org/10.1000/twin"},
        {"id": "1502.00005", "sets": ["cs"], "title": "Unknown to the registry", "dates": ["2015-02-05"],
         "doi": "10.1000/unregistered"},
        {"id": "1502.00006", "sets": ["cs"], "title": "No text-mining link", "dates": ["2015-02-06"],
         "doi": "10.1000/nolink"},
        {"id": "1502.00007", "sets": ["physics:hep-th"], "title": "Server keeps failing", "dates": ["2015-02-07"],
         "doi": "10.1000/broken"},
    ]
    all_records = records + extras
    rng.shuffle(all_records)
    write_oai_world(replay, endpoint, all_records, [9, 9, 9], "7000000/2015-01-01")

    tdm = "http://tdm.publisher.test"
    for n, (arxiv_id, doi, published, versions, pub_date, kind) in enumerate(pairs):
        url = "%s/%s/%s" % (tdm, kind, doi)
        media = {"jats": "application/xml", "elsevier": "text/xml", "pdf": "application/pdf"}[kind]
        if n == 6:
            media = "application/pdf"  # mislabeled XML: magic bytes win
        if n == 7:
            media = "text/html"
        issued = (pub_date.year, pub_date.month, pub_date.day)
        extra = {}
        if n == 8:
            extra = {"print_date": (pub_date.year, pub_date.month, 1), "online_date": issued}
        work = crossref_work(doi, "Elsevier BV" if kind == "elsevier" else "American Physical Society (APS)",
                             issued, [tdm_link(url, media)], **extra)
        write_response(replay, registry + "/works/" + enc(doi), 200, work, "application/json")
        if kind == "jats":
            body = jats(published, doi)
        elif kind == "elsevier":
            body = elsevier(published, doi, rawtext_only=(n == 15))
        else:
            body = fake_pdf(doi)
            (segmented / ("%s.tei.xml" % arxiv_id)).write_text(tei(published))
        write_response(replay, url, 200, body, media)

        pid = arxiv_id
        for k, v in enumerate(versions, start=1):
            if n == 11 and k == 1:
                continue  # first version never obtained
            style = n % 3
            if style == 0:
                d = preprints / pid / ("v%d" % k)
                d.mkdir(parents=True)
                (d / "title.txt").write_text(v.title + "\n")
                if v.abstract:
                    (d / "abstract.txt").write_text(v.abstract + "\n")
                (d / "body.txt").write_text(v.body_text() + "\n")
            elif style == 1:
                doc = v if n != 13 else Doc(v.title, None, v.sections)
                (preprints / ("%sv%d.tei.xml" % (pid, k))).write_text(tei(doc, references=True))
            else:
                (preprints / ("%sv%d.pdf" % (pid, k))).write_bytes(fake_pdf(pid))
                (preprints / ("%sv%d.tei.xml" % (pid, k))).write_text(tei(v))

    write_response(replay, registry + "/works/" + enc("10.1000/unregistered"), 404, "Resource not found.",
                   "text/plain")
    write_response(replay, registry + "/works/" + enc("10.1000/nolink"), 200,
                   crossref_work("10.1000/nolink", "Wiley", (2015, 6, 1), []), "application/json")
    write_response(replay, registry + "/works/" + enc("10.1000/broken"), 200,
                   crossref_work("10.1000/broken", "Wiley", (2015, 6, 2),
                                 [tdm_link(tdm + "/jats/10.1000/broken", "application/xml")]), "application/json")
    write_response(replay, tdm + "/jats/10.1000/broken", 500, "internal error", "text/plain")

    summary = {"records": len(all_records), "with_doi": sum(1 for r in all_records if r["doi"]),
               "pairs": 20, "downloads_attempted": 21, "downloads_failed": 1, "xml": 17, "pdf": 3,
               "ambiguous": ["10.1000/twin"]}
    (root / "expected.json").write_text(json.dumps(summary, indent=1) + "\n")
    (root / "config.json").write_text(json.dumps({"oai_endpoint": endpoint, "registry_endpoint": registry,
                                                  "rate_per_host": 2.0}, indent=1) + "\n")


# ---------------------------------------------------------------------------
# identity20: published text equals the pre-print text


def write_identity20():
    rng = random.Random(2020)
    root = HERE / "identity20"
    reset(root)
    replay = root / "replay"
    preprints = root / "preprints"
    preprints.mkdir()
    endpoint = "http://oai.identity.test/oai2"
    registry = "http://api.crossref.test"
    records = []
    for i in range(20):
        arxiv_id = "1601.%05d" % (i + 1)
        doi = "10.2000/identity.%02d" % i
        doc = random_doc(rng)
        upload = dt.date(2016, 1, 4) + dt.timedelta(days=3 * i)
        records.append({"id": arxiv_id, "sets": ["physics:hep-th"], "title": doc.title, "abstract": doc.abstract,
                        "dates": [iso(upload)], "doi": doi})
        url = "http://tdm.identity.test/jats/" + doi
        pub = upload + dt.timedelta(days=60)
        write_response(replay, registry + "/works/" + enc(doi), 200,
                       crossref_work(doi, "American Physical Society (APS)", (pub.year, pub.month, pub.day),
                                     [tdm_link(url, "application/xml")]), "application/json")
        write_response(replay, url, 200, jats(doc, doi), "application/xml")
        if i % 2:
            (preprints / ("%sv1.tei.xml" % arxiv_id)).write_text(tei(doc, references=True))
        else:
            d = preprints / arxiv_id / "v1"
            d.mkdir(parents=True)
            (d / "title.txt").write_text(doc.title + "\n")
            (d / "abstract.txt").write_text(doc.abstract + "\n")
            (d / "body.txt").write_text(doc.body_text() + "\n")
    write_oai_world(replay, endpoint, records, [7, 7, 6], "8000000/2016-01-01")
    (root / "config.json").write_text(json.dumps({"oai_endpoint": endpoint, "registry_endpoint": registry},
                                                 indent=1) + "\n")


# ---------------------------------------------------------------------------
# order10: publication order with a calendar oracle


def write_order10():
    root = HERE / "order10"
    reset(root)
    rng = random.Random(10)
    articles, pairs, expected = [], [], []
    for i in range(10):
        arxiv_id = "1703.%05d" % (i + 1)
        first = dt.date(2016, 12, 20) + dt.timedelta(days=17 * i)
        latest = first + dt.timedelta(days=rng.randint(0, 120))
        versions = [{"n": 1, "date": iso(first)}]
        if latest != first:
            versions.append({"n": 2, "date": iso(latest)})
        if i == 6:
            published = latest - dt.timedelta(days=rng.randint(1, 40))
        else:
            published = latest + dt.timedelta(days=rng.randint(1, 1000))
        doi = "10.3000/order.%d" % i
        articles.append({"arxiv_id": arxiv_id, "doi": doi, "title_raw": "Order %d" % i, "abstract_raw": None,
                         "categories": ["math"], "versions": versions})
        pairs.append({"arxiv_id": arxiv_id, "doi": doi, "publisher": "Wiley", "pub_date": iso(published),
                      "format": "xml", "preprint_files": {}, "published_file": "published/%s.xml" % arxiv_id})
        diff = (published - latest).days
        cls = "preprint_first" if diff > 0 else "publisher_first" if diff < 0 else "same_day"
        expected.append((arxiv_id, cls, diff))
    manifest = {"schema_version": 1, "created": "2019-05-21T00:00:00Z",
                "counters": {"records_harvested": 10, "records_with_doi": 10, "downloads_attempted": 10,
                             "downloads_failed": 0, "xml_count": 10, "pdf_count": 0},
                "articles": articles, "pairs": pairs, "ambiguous": []}
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    lines = ["pair_id,classification,day_difference"] + ["%s,%s,%d" % e for e in sorted(expected)]
    (root / "expected_order.csv").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Perturbation pairs and their oracle scores


def load_stopwords():
    words = []
    for line in (DATA / "stopwords_english.txt").read_text().splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.append(line)
    return set(words)


def oracle_scores(a, b, stopwords):
    import Levenshtein
    import distance
    from nltk.stem.porter import PorterStemmer
    from sklearn.metrics.pairwise import cosine_similarity

    stemmer = PorterStemmer(mode=PorterStemmer.MARTIN_EXTENSIONS)

    def terms(text):
        out = {}
        for tok in re.findall(r"[^\W_]+", text):
            tok = tok.lower()
            if tok in stopwords:
                continue
            if re.fullmatch(r"[a-z]+", tok):
                tok = stemmer.stem(tok)
            out[tok] = out.get(tok, 0) + 1
        return out

    ta, tb = terms(a), terms(b)
    keys = sorted(set(ta) | set(tb))
    cos = cosine_similarity([[ta.get(k, 0) for k in keys]], [[tb.get(k, 0) for k in keys]])[0][0]
    return {
        "edit_ratio": Levenshtein.ratio(a, b),
        "length": 1 - abs(len(a) - len(b)) / max(len(a), len(b)),
        "sorensen": 1 - distance.sorensen(a, b),
        "jaccard": 1 - distance.jaccard(a, b),
        "cosine": float(cos),
    }


def write_perturbation():
    root = HERE / "perturbation"
    reset(root)
    stopwords = load_stopwords()
    rng = random.Random(55)
    base = random_doc(random.Random(5))
    body = base.body_text()
    chars = list(body)
    letters = [i for i, c in enumerate(chars) if c.isalpha()]
    picks = rng.sample(letters, len(chars) // 10)
    for i in picks:
        alphabet = "abcdefghijklmnopqrstuvwxyz"
        chars[i] = rng.choice(alphabet.replace(chars[i].lower(), ""))
    body_edit = "".join(chars)

    dash_title_pre = "Scalar — tensor coupling and vacuum—field stability"
    dash_title_pub = "Scalar - tensor coupling and vacuum-field stability"
    pairs = {
        "body10": ({"title": base.title, "abstract": base.abstract, "body": body_edit},
                   {"title": base.title, "abstract": base.abstract, "body": body}),
        "emdash": ({"title": dash_title_pre, "abstract": base.abstract, "body": body},
                   {"title": dash_title_pub, "abstract": base.abstract, "body": body}),
    }
    expected = []
    for name, (pre, pub) in pairs.items():
        for side, sections in (("preprint", pre), ("published", pub)):
            d = root / name / side
            d.mkdir(parents=True)
            for section, text in sections.items():
                (d / (section + ".txt")).write_text(text + "\n")
        for section in ("title", "abstract", "body"):
            scores = oracle_scores(pre[section], pub[section], stopwords)
            for metric, value in scores.items():
                expected.append("%s,%s,%s,%.17g" % (name, section, metric, value))
    (root / "expected_scores.csv").write_text("pair,section,metric,score\n" + "\n".join(expected) + "\n")


if __name__ == "__main__":
    os.chdir(HERE)
    write_samples()
    write_harvest_world()
    write_corpus20()
    write_identity20()
    write_order10()
    write_perturbation()
