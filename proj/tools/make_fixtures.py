#!/usr/bin/env python3
"""Regenerates the bundled fixtures under data/.

    python3 tools/make_fixtures.py [--data-dir data]

Output is fully determined by the seeds below.
"""

import argparse
import json
import random
from pathlib import Path

CITIES = [
    "Arlen", "Brevik", "Calder", "Dunmore", "Eastwick", "Farrow", "Glenholm", "Harwick",
    "Zürich", "Łódź", "São Paulo", "Kilbride", "Lowther", "Marlow", "Norcombe", "Ostend",
    "Penrith", "Quarry Bay", "Redmere", "Selby", "Tarrow", "Ulverston", "Valmont", "Westerly",
]
PEOPLE = [
    "Anna Keller", "Tomas Reyes", "Henrik Dahl", "Marta Novak", "Antonín Dvořák", "Léa Moreau",
    "Oskar Lind", "Ruth Abbott", "Samuel Price", "Ines Duarte", "Karl Berger", "Nora Quinn",
    "Pavel Sokolov", "Elena Rossi", "Jonas Weber", "Clara Hume", "Felix Baron", "Greta Olsen",
    "Ivan Petrov", "Maya Torres", "Owen Marsh", "Lucia Ferreira", "Emil Ångström", "Hugo Brandt",
]
THINGS = ["harbour", "cathedral", "library", "railway station", "bridge", "town hall",
          "observatory", "museum", "market hall", "university", "canal", "lighthouse"]
EVENTS = ["the flood", "the great fire", "the harvest festival", "the rail strike",
          "the census", "the royal visit", "the trade fair", "the election"]
NOUNS = ["river", "mill", "guild", "orchestra", "garrison", "ferry", "abbey", "quarry",
         "printing press", "council", "brewery", "school", "hospital", "theatre", "foundry",
         "tramway"]
VERBS = ["closed", "expanded", "moved north", "changed hands", "was restored", "grew quickly",
         "lost its charter", "reopened"]
GOODS = ["wool", "salt", "timber", "copper", "grain", "glass", "linen", "coal", "amber", "tea"]
REGIONS = ["northern", "southern", "eastern", "western", "upper", "lower"]
MATERIALS = ["stone", "brick", "iron", "oak", "granite", "marble"]
TITLES = ["Dr.", "Prof.", "Mr.", "Mrs.", "St."]
AGENCIES = ["the U.S. Geological Survey", "the Royal Society", "the U.K. Met Office",
            "the city archive", "the Geological Institute"]
FILLER = [
    "It remains in use today.",
    "Few records survive.",
    "The details are disputed.",
    "Visitors still come every summer.",
    "Its origins are obscure.",
    "Much of it was rebuilt later.",
]


def sentence_pool(rng, city, used):
    """Candidate sentences for one paragraph as (text, [(question, answer)])."""

    def pick(seq, tag):
        choices = [x for x in seq if (tag, x) not in used]
        x = rng.choice(choices or seq)
        used.add((tag, x))
        return x

    year = rng.randint(1120, 1990)
    person = pick(PEOPLE, "person")
    thing = pick(THINGS, "thing")
    noun = pick(NOUNS, "noun")
    verb = rng.choice(VERBS)
    good_a, good_b = rng.sample(GOODS, 2)
    region = rng.choice(REGIONS)
    material = rng.choice(MATERIALS)
    pop = rng.randint(1200, 980000)
    pct = f"{rng.randint(1, 9)}.{rng.randint(1, 9)}"
    height = f"{rng.randint(10, 90)}.{rng.randint(1, 9)}"
    event = rng.choice(EVENTS)
    title = rng.choice(TITLES[:4])
    agency = rng.choice(AGENCIES)
    other = pick(PEOPLE, "person")

    return [
        (f"The {thing} of {city} was completed in {year}, and it was later extended by {person}.",
         [(f"Who extended the {thing} of {city}?", person),
          (f"When was the {thing} of {city} completed?", str(year))]),
        (f"{person} settled in {city} in {year}, and the {noun} {verb} soon afterwards.",
         [(f"What {verb} soon after {person} settled in {city}?", f"the {noun}")]),
        (f"The market of {city} traded {good_a}, and {good_b} from the {region} valley.",
         [(f"Which goods did the market of {city} trade?", f"{good_a}, and {good_b}")]),
        (f"By {year} the population had reached {pop:,}, and average rents rose by {pct} percent.",
         [(f"What population had {city} reached by {year}?", f"{pop:,}")]),
        (f"{title} {other} of {agency} surveyed the area in {year + 3}.",
         [(f"Who surveyed the area around {city}?", f"{title} {other}")]),
        (f"The {thing} is {height} metres tall, and J. R. {other.split()[-1]} designed its roof.",
         [(f"How tall is the {thing}?", f"{height} metres")]),
        (f"Locals called the {noun} \"the old crown.\" The name was never official.",
         [(f"What did locals call the {noun}?", "the old crown")]),
        (f"During {event} the {noun} of {city} was badly damaged by the water.",
         [(f"What was damaged during {event}?", f"the {noun} of {city}")]),
        (f"The {thing} was rebuilt in {material}, and the {thing} was rebuilt in {material}.", []),
        (f"Why did the {noun} fail? Historians blame the {region} trade routes.",
         [(f"What do historians blame for the failure of the {noun}?",
           f"the {region} trade routes")]),
        (f"In {year + 40} the {noun} employed {rng.randint(12, 800)} workers, e.g. weavers and "
         f"carters from {city}.", []),
        (rng.choice(FILLER), []),
        (f"{person} wrote about the {thing} in a letter to {other}.",
         [(f"To whom did {person} write about the {thing}?", other)]),
    ]


def make_wiki_fixture(rng):
    articles = []
    sentence_total = 0
    qid = 0
    for ai in range(20):
        city = CITIES[ai]
        used = set()
        paragraphs = []
        for pi in range(3):
            pool = sentence_pool(rng, city, used)
            # Always one splittable sentence, then a random mix.
            chosen = [pool[0]] + rng.sample(pool[1:], rng.randint(3, 5))
            rng.shuffle(chosen)
            context = " ".join(text for text, _ in chosen)
            qas = []
            for text, pairs in chosen:
                for question, answer in pairs:
                    start = context.find(answer)
                    # Unique answers only, so offsets stay unambiguous.
                    if start < 0 or context.count(answer) != 1:
                        continue
                    qid += 1
                    qas.append({
                        "id": f"{rng.getrandbits(64):016x}{qid:08x}",
                        "question": question,
                        "answers": [{"text": answer, "answer_start": start}],
                    })
            paragraphs.append({"context": context, "qas": qas})
            sentence_total += sum(text.count(". ") + 1 for text, _ in chosen)
        articles.append({"title": city.replace(" ", "_"), "paragraphs": paragraphs})
    return {"version": "1.1", "data": articles}


def make_lm_corpus(rng, n):
    lines = []
    while len(lines) < n:
        city = rng.choice(CITIES)
        for text, _ in sentence_pool(rng, city, set()):
            for piece in text.replace(", and ", ". ").split(". "):
                lines.append(piece.rstrip(".") + ".")
    rng.shuffle(lines)
    return lines[:n]


def make_threshold_records(rng, n):
    """Scored records with scripted perplexities covering every gate."""
    records = []
    kinds = ["ok", "low_ppl", "high_ppl", "edge_low", "edge_high", "short", "redundant",
             "numeric_loss", "no_candidate"]
    for i in range(n):
        kind = kinds[i % len(kinds)] if i < 2 * len(kinds) else rng.choice(kinds)
        city = rng.choice(CITIES)
        person = rng.choice(PEOPLE)
        year = rng.randint(1200, 1990)
        original = f"{person} reached {city} in {year}, and the council granted a charter."
        candidate = [f"{person} reached {city} in {year}.", "The council granted a charter."]
        words = 13
        ppl = round(rng.uniform(60.0, 590.0), 3)
        if kind == "low_ppl":
            ppl = round(rng.uniform(1.5, 49.9), 3)
        elif kind == "high_ppl":
            ppl = round(rng.uniform(600.1, 4000.0), 3)
        elif kind == "edge_low":
            ppl = 50.0
        elif kind == "edge_high":
            ppl = 600.0
        elif kind == "short":
            original = f"{city}, and {person}."
            candidate = [f"{city}.", f"{person}."]
            words = len(original.split())
        elif kind == "redundant":
            candidate = [f"{person} reached {city}.", f"  {person} reached {city}. "]
        elif kind == "numeric_loss":
            candidate = [f"{person} reached {city}.", "The council granted a charter."]
        record = {
            "context_id": f"{i // 10}_{i % 10 // 5}",
            "sentence_index": i % 5,
            "original": original,
            "original_word_count": words,
            "status": "scored",
            "candidate": candidate,
            "perplexity": ppl,
        }
        if kind == "no_candidate":
            record.update(status="rejected", candidate=None, perplexity=None,
                          reason="backend_failure", error="scripted failure")
        # Random draws can land any kind on any perplexity.
        if i >= 2 * len(kinds) and kind not in ("low_ppl", "high_ppl", "edge_low",
                                                 "edge_high", "no_candidate"):
            if rng.random() < 0.2:
                record["perplexity"] = round(rng.uniform(1.0, 5000.0), 3)
        records.append(record)
    return records


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data-dir", default=str(Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    data = Path(args.data_dir)
    (data / "fixtures").mkdir(parents=True, exist_ok=True)

    fixture = make_wiki_fixture(random.Random(20240601))
    with open(data / "fixtures" / "wiki_fixture.json", "w", encoding="utf-8") as f:
        json.dump(fixture, f, ensure_ascii=False, indent=1)
        f.write("\n")

    lines = make_lm_corpus(random.Random(7), 10000)
    with open(data / "stub_lm_corpus.txt", "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")

    records = make_threshold_records(random.Random(99), 240)
    with open(data / "fixtures" / "threshold_records.jsonl", "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
