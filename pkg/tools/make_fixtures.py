"""Deterministic generator for the bundled test fixtures.

Run from the repository root:

    python3 tools/make_fixtures.py

Rewrites tests/fixtures/ in place and validates what it wrote: the
labeled corpus must clear the filter-cascade precision and recall bars,
and the pipeline corpus must run end to end byte-identically twice.
Everything is generated from fixed RNG seeds, so reruns reproduce the
same bytes.
"""

import csv
import io
import json
import random
import re
import shutil
import subprocess
import sys
import tempfile
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from cswitch.filters import CodeSwitched, classify_cs  # noqa: E402
from cswitch.ingest import RawPost  # noqa: E402
from cswitch.langid import load_default_profiles  # noqa: E402
from synthetic import parallel_pairs  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"
SEED_DIR = ROOT / "src" / "cswitch" / "data" / "seed"

FOOD = [
    "my grandmother taught me this recipe for lentil soup with fresh herbs",
    "the bakery near the old market sells warm bread every single morning",
    "we cooked dinner together and the kitchen smelled of garlic and lemon",
    "street food here means grilled corn and roasted chestnuts in winter",
    "the village taverna serves baked fish with olive oil and wild greens",
    "i finally learned how to fold dumplings without tearing the dough",
    "her cheese pie recipe needs three kinds of cheese and patience",
    "the farmers market had ripe tomatoes and honey from the mountains",
    "slow cooked beans with smoked paprika taste better the next day",
    "nothing beats fresh yogurt with walnuts and a spoon of honey",
    "the bakery apprentice burned the first tray of sesame rings again",
    "a proper stew wants cheap cuts and a very low flame for hours",
    "pickled cabbage with dill is the only side dish my uncle accepts",
    "we argued about whether the soup needed more lemon or more salt",
]
TRAVEL = [
    "we booked cheap flights to the islands for the summer holidays",
    "the overnight ferry to the port was late but the sunrise was worth it",
    "hiking the gorge took six hours and every minute was beautiful",
    "the hostel by the beach rents bicycles for a couple of coins",
    "border control asked about our luggage and waved us through",
    "the mountain villages empty out completely during the cold months",
    "trains here are slow but the window views make up for everything",
    "we missed the last bus and walked the coastal road under the stars",
    "the old town alleys hide tiny courtyards full of orange trees",
    "my backpack strap snapped halfway up the trail to the monastery",
    "the campsite by the lake floods every spring so book the high side",
    "renting a scooter is the only sane way around the island in august",
    "the airport shuttle dropped us in the wrong suburb at midnight",
    "travel insurance finally paid out for the cancelled ferry crossing",
]
WORK = [
    "the deadline for the project moved again and the whole office sighed",
    "my manager wants the quarterly report finished before the meeting",
    "remote work suits me but i miss the coffee machine conversations",
    "the interview had three rounds and a coding exercise on a whiteboard",
    "our team shipped the new feature after two weeks of late evenings",
    "the university library stays open late during the exam period",
    "i failed the statistics exam once and passed it with honors the second time",
    "the internship pays little but the mentoring is genuinely excellent",
    "payroll made an error and everyone refreshed their banking app twice",
    "the thesis defense lasted an hour and the committee was kind",
    "open plan offices make deep work nearly impossible for me",
    "the client changed the requirements for the third time this month",
    "her startup survived the funding winter by cutting cloud costs",
    "night shifts at the hospital rearranged my entire sense of time",
]
POOLS = [FOOD, TRAVEL, WORK]

CASUAL = ["lol", "u know what i mean", "im not even joking",
          "gonna regret this", "dont ask me why"]

NE_SENTENCES = [
    "We flew with Aegean Airlines from Athens to Berlin last spring",
    "My cousin streams music on Spotify and watches Netflix all weekend",
    "The office moved from Bucharest to Cluj two years ago",
    "She ordered the desk from IKEA and the chair from Amazon",
    "Olympiacos beat Panathinaikos in the derby and the city went quiet",
    "He sold his PlayStation to buy a secondhand MacBook for university",
    "The layover in Vienna was shorter than the queue at Starbucks",
    "Everyone in the group chat moved from WhatsApp to Telegram",
    "Thessaloniki feels smaller than Madrid but livelier than Vienna",
    "They drove the old Toyota from Manila to Quezon City in an afternoon",
    "The Erasmus office posted the Eurovision party photos on Instagram",
    "Her flight with Ryanair landed in Jakarta nine hours late",
    "Steaua and Dinamo fans argued politely for once on Reddit",
    "I found the apartment on Airbnb near Saint Petersburg station",
    "Google Maps kept rerouting us around Santorini all morning",
]

SHORT_BODIES = ["nice one", "thanks", "haha same here", "agreed",
                "so true", "what a day", "good luck", "same", "this",
                "well said"]


def partner_sentences(code, lo=4, hi=14):
    """Clean sentence pool from a bundled seed text."""
    text = (SEED_DIR / f"{code}.txt").read_text(encoding="utf-8")
    out = []
    for raw in re.split(r"(?<=[.!?;])\s+", text):
        sentence = " ".join(raw.split())
        words = sentence.split()
        if lo <= len(words) <= hi and not any(ch.isdigit() for ch in sentence):
            out.append(sentence)
    return out


def jsonl(records):
    return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n"
                   for r in records)


# ------------------------------------------------- labeled filter fixture

def build_labeled():
    rng = random.Random(2024)
    partners = {code: partner_sentences(code) for code in
                ("el", "ru", "ro", "tl", "id")}

    def english(n=1):
        return " ".join(rng.choice(rng.choice(POOLS)) for _ in range(n))

    entries = []  # (body, label)

    # Greek and Russian announce themselves by script, so a single foreign
    # sentence inside an English post is enough.  Latin-script partners are
    # only separable from English when they dominate the post, so those
    # bodies lead with two foreign sentences and close with one English one.
    cs_mix = ["el"] * 20 + ["ru"] * 20 + ["ro"] * 14 + ["tl"] * 13 + ["id"] * 13
    for code in cs_mix:
        if code in ("el", "ru"):
            foreign = rng.choice(partners[code])
            if rng.random() < 0.5:
                body = f"{english()} {foreign}"
            else:
                body = f"{foreign} {english()}"
        else:
            while True:
                foreign = " ".join(rng.choice(partners[code]) for _ in range(2))
                tail = english()
                if len(foreign) > len(tail) + 30:
                    break
            body = f"{foreign} {tail}"
        entries.append((body, "cs"))

    for _ in range(40):
        entries.append((english(rng.choice([1, 2])), "not_cs"))
    for sentence in NE_SENTENCES:
        entries.append((f"{english()} {sentence}", "not_cs"))
    for i in range(15):
        code = rng.choice(["el", "ru", "ro"])
        quoted = rng.choice(partners[code])
        entries.append((f"> {quoted}\n{english()}", "not_cs"))
    for i in range(10):
        code = rng.choice(["el", "ru"])
        foreign = rng.choice(partners[code])
        entries.append(
            (f"can anyone translate this for me {foreign}", "not_cs"))
    for i in range(10):
        code = rng.choice(["el", "ru", "ro"])
        quote = rng.choice([s for s in partners[code]
                            if len(s.split()) >= 7])
        entries.append((f'{english()} "{quote}" {english()}', "not_cs"))
    for i in range(10):
        entries.append(
            (f"{english()} details at https://example.org/page{i}", "not_cs"))
    for body in SHORT_BODIES:
        entries.append((body, "not_cs"))
    for i in range(10):
        code = rng.choice(["el", "ru"])
        entries.append((" ".join(rng.choice(partners[code])
                                 for _ in range(2)), "not_cs"))

    assert len(entries) == 200
    rng.shuffle(entries)

    posts, labels = [], []
    for i, (body, label) in enumerate(entries):
        post_id = f"lp_{i:04d}"
        posts.append({"id": post_id, "author": f"writer{i % 23}",
                      "subreddit": "mixed", "created_utc": 3000 + i,
                      "body": body})
        labels.append((post_id, label))

    (FIXTURES / "labeled_posts.jsonl").write_text(jsonl(posts),
                                                  encoding="utf-8")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["post_id", "label"])
    writer.writerows(labels)
    with open(FIXTURES / "labeled_labels.csv", "w", encoding="utf-8",
              newline="") as fh:
        fh.write(buf.getvalue())
    return posts, dict(labels)


def validate_labeled(posts, labels):
    profiles = load_default_profiles()
    start = time.perf_counter()
    tp = fp = fn = tn = 0
    misses = []
    for record in posts:
        post = RawPost(id=record["id"], author=record["author"],
                       subreddit=record["subreddit"],
                       created_utc=record["created_utc"],
                       body=record["body"])
        decision, _, _ = classify_cs(post, profiles)
        predicted = isinstance(decision, CodeSwitched)
        actual = labels[post.id] == "cs"
        tp += predicted and actual
        fp += predicted and not actual
        fn += actual and not predicted
        tn += not predicted and not actual
        if predicted != actual:
            misses.append((post.id, labels[post.id], decision))
    elapsed = time.perf_counter() - start
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    print(f"labeled fixture: precision {precision:.3f}, recall {recall:.3f}, "
          f"{elapsed:.2f}s for 200 posts")
    for miss in misses:
        print(f"  miss: {miss}")
    assert precision >= 0.95, f"precision {precision:.3f} under the 0.95 bar"
    assert recall >= 0.85, f"recall {recall:.3f} under the 0.85 bar"


# ------------------------------------------------------ pipeline fixture

AOA = {
    "recipe": 7.2, "soup": 4.1, "bread": 3.9, "market": 5.6, "cheese": 4.0,
    "honey": 4.3, "dinner": 3.8, "kitchen": 3.5, "fish": 3.2, "beans": 4.4,
    "flights": 7.9, "ferry": 6.8, "island": 5.1, "beach": 4.2, "luggage": 6.9,
    "mountain": 4.9, "trains": 4.6, "road": 3.7, "trail": 6.2, "airport": 5.8,
    "deadline": 9.4, "project": 7.6, "office": 6.1, "report": 7.8,
    "interview": 8.2, "library": 5.4, "exam": 7.1, "internship": 11.3,
    "thesis": 12.0, "client": 8.8, "hospital": 5.2, "university": 7.0,
}
CONCRETENESS = {
    "soup": 4.9, "bread": 4.9, "market": 4.4, "cheese": 4.9, "honey": 4.8,
    "kitchen": 4.7, "fish": 4.9, "beans": 4.8, "ferry": 4.7, "island": 4.6,
    "beach": 4.8, "luggage": 4.8, "mountain": 4.8, "trains": 4.8,
    "road": 4.7, "airport": 4.6, "office": 4.5, "library": 4.6,
    "hospital": 4.7, "deadline": 2.1, "project": 2.9, "report": 3.6,
    "interview": 3.4, "exam": 3.7, "thesis": 3.3, "patience": 1.6,
    "insurance": 2.3, "recipe": 4.0, "dinner": 4.4, "university": 4.2,
}

PARSE_TREES = [
    "(S (NP (PRP we)) (VP (VBD cooked) (NP (NN dinner)) "
    "(PP (IN with) (NP (NN garlic)))))",
    "(S (NP (DT the) (NN ferry)) (VP (VBD was) (ADJP (JJ late))) (. .))",
    "(S (NP (PRP i)) (VP (VBP think) (SBAR (IN that) (S (NP (DT the) "
    "(NN soup)) (VP (VBZ needs) (NP (NN lemon)))))))",
    "(S (NP (DT the) (NN manager)) (VP (VBD moved) (NP (DT the) "
    "(NN deadline)) (ADVP (RB again))))",
    "(S (NP (PRP we)) (VP (VBD walked) (NP (DT the) (JJ coastal) "
    "(NN road)) (PP (IN under) (NP (DT the) (NNS stars)))))",
    "(S (SBAR (IN while) (S (NP (PRP she)) (VP (VBD studied)))) "
    "(NP (PRP i)) (VP (VBD baked) (NP (NN bread))))",
    "(S (NP (DT the) (NN committee)) (VP (VBD was) (ADJP (JJ kind))))",
    "(S (NP (NN payroll)) (VP (VBD made) (NP (DT an) (NN error))))",
]

PIPELINE_CONFIG = """\
[paths]
dump = dump.jsonl
out_dir = out
rank_list = ranks.tsv
parallel_informal = informal.txt
parallel_formal = formal.txt
aoa_lexicon = aoa.tsv
concreteness_lexicon = concreteness.tsv
parse_sidecar = parses.txt

[languages]
partners = el, ro
subreddits = greece, romania

[thresholds]
min_author_tokens = 12
min_cohort_posts = 10
high_cs_fraction = 0.2
low_cs_fraction = 0.02

[lda]
t_min = 2
t_max = 3
lda_iterations = 150
lda_seeds = 0, 1
n_partitions = 4
top_terms_n = 10
coherence_top_n = 5

[run]
seed = 0
"""


def build_pipeline():
    out = FIXTURES / "pipeline"
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(77)
    greek = partner_sentences("el")
    romanian = partner_sentences("ro")

    posts = []

    def add(author, subreddit, body):
        posts.append({"id": f"pp_{len(posts):04d}", "author": author,
                      "subreddit": subreddit,
                      "created_utc": 40000 + len(posts), "body": body})

    def english(pool, n):
        main, others = POOLS[pool], POOLS[:pool] + POOLS[pool + 1:]
        return " ".join(
            rng.choice(main) if rng.random() < 0.8
            else rng.choice(rng.choice(others))
            for _ in range(n))

    def casual(body, rate):
        if rng.random() < rate:
            return f"{body} {rng.choice(CASUAL)}"
        return body

    def switch(pool, foreign):
        # Romanian will read as English unless it dominates the post;
        # Greek script speaks for itself
        if foreign is romanian:
            while True:
                lead = " ".join(rng.choice(foreign) for _ in range(2))
                tail = english(pool, 1)
                if len(lead) > len(tail) + 30:
                    return f"{lead} {tail}"
        return f"{english(pool, 1)} {rng.choice(foreign)}"

    # eight high-switching authors, half per subreddit
    for i in range(8):
        author = f"high{i}"
        subreddit = "greece" if i < 4 else "romania"
        foreign = greek if i < 4 else romanian
        pool = i % 3
        for _ in range(5):
            add(author, subreddit, casual(switch(pool, foreign), 0.7))
        for _ in range(9):
            add(author, subreddit, casual(english(pool, 2), 0.2))

    # eight authors who never switch
    for i in range(8):
        author = f"low{i}"
        subreddit = "greece" if i < 4 else "romania"
        pool = i % 3
        for _ in range(12):
            add(author, subreddit, casual(english(pool, 2), 0.1))

    # small accounts below the cohort post floor
    for i in range(8):
        author = f"minor{i}"
        subreddit = "greece" if i % 2 else "romania"
        foreign = greek if subreddit == "greece" else romanian
        add(author, subreddit, switch(i % 3, foreign))
        add(author, subreddit, switch(i % 3, foreign))
        add(author, subreddit, english(i % 3, 2))
        add(author, subreddit, english(i % 3, 2))

    # noise the cascade must reject or ignore
    add("high0", "greece", f"{english(0, 1)} see https://example.org/thread")
    add("low3", "romania", "look at www.example.com please")
    add("minor1", "greece", "so true")
    add("minor2", "romania", "haha")
    add("high5", "romania",
        f"how would you translate {rng.choice(romanian)}")
    add("high1", "greece", f"> {english(1, 1)}\n{rng.choice(greek)}")
    for i in range(4):
        add(f"offsite{i}", "random", english(i % 3, 2))

    (out / "dump.jsonl").write_text(jsonl(posts), encoding="utf-8")

    counts = {}
    for record in posts:
        for word in record["body"].lower().split():
            word = word.strip('".,!?;:()>')
            if word.isalpha():
                counts[word] = counts.get(word, 0) + 1
    ranked = sorted(counts, key=lambda w: (-counts[w], w))
    (out / "ranks.tsv").write_text(
        "".join(f"{w}\t{i + 1}\n" for i, w in enumerate(ranked)),
        encoding="utf-8")

    informal, formal = parallel_pairs(500, seed=17)
    (out / "informal.txt").write_text("\n".join(informal) + "\n",
                                      encoding="utf-8")
    (out / "formal.txt").write_text("\n".join(formal) + "\n",
                                    encoding="utf-8")

    for name, table in (("aoa.tsv", AOA), ("concreteness.tsv", CONCRETENESS)):
        lines = ["word\trating"]
        lines += [f"{word}\t{rating}" for word, rating in sorted(table.items())]
        (out / name).write_text("\n".join(lines) + "\n", encoding="utf-8")

    # parse trees for two monolingual posts per profiled author sample
    mono_ids = {}
    for record in posts:
        author = record["author"]
        body = record["body"]
        if (author in ("high0", "high1", "low0", "low1")
                and not any(ord(ch) > 0x2000 for ch in body)
                and "http" not in body and not body.startswith(">")
                and len(body.split()) >= 12):
            mono_ids.setdefault(author, []).append(record["id"])
    lines = ["# bracketed parses for a sample of monolingual posts"]
    tree_iter = iter(PARSE_TREES * 2)
    for author in ("high0", "high1", "low0", "low1"):
        for post_id in mono_ids[author][:2]:
            lines.append(f"#post:{post_id}")
            lines.append(next(tree_iter))
            lines.append(next(tree_iter))
    (out / "parses.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    (out / "pipeline.ini").write_text(PIPELINE_CONFIG, encoding="utf-8")
    return posts


def run_pipeline(out_dir):
    config = FIXTURES / "pipeline" / "pipeline.ini"
    for command in ("build-corpus", "topics", "style", "proficiency"):
        proc = subprocess.run(
            [sys.executable, "-m", "cswitch.cli", command,
             "--config", str(config), "--out", str(out_dir)],
            cwd=FIXTURES / "pipeline", capture_output=True, text=True)
        if proc.returncode != 0:
            raise SystemExit(f"{command} failed:\n{proc.stderr}")


def validate_pipeline():
    start = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        first = Path(tmp) / "first"
        second = Path(tmp) / "second"
        run_pipeline(first)
        run_pipeline(second)
        names = sorted(p.name for p in first.iterdir())
        assert names == sorted(p.name for p in second.iterdir())
        for name in names:
            a = (first / name).read_bytes()
            b = (second / name).read_bytes()
            assert a == b, f"{name} differs between identical runs"
        elapsed = time.perf_counter() - start

        cohorts = {}
        with open(first / "cohorts.csv", encoding="utf-8", newline="") as fh:
            for row in list(csv.reader(fh))[1:]:
                cohorts[row[0]] = row[-1]
        for i in range(8):
            assert cohorts.get(f"high{i}") == "high", (f"high{i}", cohorts)
            assert cohorts.get(f"low{i}") == "low", (f"low{i}", cohorts)
            assert cohorts.get(f"minor{i}") == "neither", (f"minor{i}", cohorts)
        with open(first / "informality.csv", encoding="utf-8") as fh:
            pairs = len(fh.readlines()) - 1
        assert pairs >= 6, f"only {pairs} authors usable for the paired style test"

        print(f"pipeline fixture: {len(names)} outputs byte-identical across "
              f"two runs, {elapsed:.1f}s for both; {pairs} style pairs, "
              f"{len(cohorts)} cohort authors")
        assert elapsed < 180, "two pipeline runs must fit inside three minutes"


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    shutil.rmtree(FIXTURES / "pipeline", ignore_errors=True)
    posts, labels = build_labeled()
    validate_labeled(posts, labels)
    build_pipeline()
    validate_pipeline()
    print("fixtures written to", FIXTURES)


if __name__ == "__main__":
    main()
