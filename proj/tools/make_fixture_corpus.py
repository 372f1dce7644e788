#!/usr/bin/env python3
# Copyright 2026 The entcal Authors
# SPDX-License-Identifier: Apache-2.0
"""Generates the bundled fixture corpus (data/fixture_corpus.txt).

The corpus is synthetic encyclopedia-style prose: one paragraph per line,
lowercased, punctuation split into separate tokens. Paragraphs are drawn
from a small probabilistic grammar with topic-specific lexicons, recurring
named entities and fixed multiword expressions, so that an n-gram model
trained on it shows the usual mix of predictable collocations and
open-class slots. Output is byte-identical for a given seed.
"""

import argparse
import random

SYLLABLES = [
    "ka", "ro", "mi", "tan", "vel", "dor", "sa", "lin", "bre", "cho", "mar",
    "en", "tus", "gal", "ori", "vas", "pel", "qui", "nor", "das", "hel",
    "bur", "ti", "zan", "ost", "ler", "fen", "ada", "gor", "ius",
]

TOPICS = {
    "rivers": dict(
        nouns="river valley delta bridge flood basin tributary bank dam canal "
              "current harbour estuary lake stream waterfall mill fishery "
              "meadow levee source mouth channel ferry island".split(),
        verbs="flows drains floods crosses feeds joins irrigates carves".split(),
        adjs="navigable shallow muddy wide northern upper lower tidal".split(),
    ),
    "music": dict(
        nouns="album song band orchestra symphony concert singer guitarist "
              "composer melody chorus recording label tour single opera "
              "quartet piano violin studio audience festival rhythm lyric "
              "ballad".split(),
        verbs="recorded performed composed released toured sang arranged "
              "produced".split(),
        adjs="acoustic classical live debut orchestral popular solo "
             "experimental".split(),
    ),
    "railways": dict(
        nouns="railway station line locomotive train track platform depot "
              "junction tunnel carriage route freight passenger signal "
              "viaduct terminus timetable engine gauge branch service "
              "yard crossing conductor".split(),
        verbs="opened connected extended electrified closed operated "
              "served rebuilt".split(),
        adjs="narrow main suburban express electric regional disused "
             "double".split(),
    ),
    "medicine": dict(
        nouns="hospital patient disease treatment physician vaccine clinic "
              "surgeon infection symptom therapy nurse epidemic drug trial "
              "diagnosis ward fever injury research laboratory dose cure "
              "outbreak".split(),
        verbs="treated diagnosed prescribed infected cured studied "
              "vaccinated admitted".split(),
        adjs="chronic clinical infectious medical surgical rare acute "
             "public".split(),
    ),
    "football": dict(
        nouns="club season match goal league stadium striker coach cup "
              "championship player team manager final fixture referee "
              "transfer squad supporter trophy defender penalty debut "
              "derby".split(),
        verbs="scored won signed promoted relegated played defeated "
              "captained".split(),
        adjs="professional domestic national regular promoted senior "
             "youth top".split(),
    ),
    "astronomy": dict(
        nouns="star planet telescope orbit galaxy comet observatory moon "
              "satellite nebula eclipse astronomer asteroid cluster "
              "spectrum crater mission probe sky radiation horizon mass "
              "atmosphere surface".split(),
        verbs="observed discovered orbits measured launched detected "
              "photographed catalogued".split(),
        adjs="bright distant faint solar lunar stellar orbital "
             "visible".split(),
    ),
    "farming": dict(
        nouns="farm crop harvest wheat cattle field barn orchard grain "
              "soil farmer plough sheep pasture village market estate "
              "drought irrigation vineyard dairy fence tenant granary "
              "livestock".split(),
        verbs="harvested grew planted grazed ploughed sold cultivated "
              "inherited".split(),
        adjs="fertile rural agricultural arable dry seasonal organic "
             "local".split(),
    ),
    "warfare": dict(
        nouns="army battle siege regiment general fortress treaty campaign "
              "soldier cavalry victory defeat garrison navy fleet officer "
              "castle invasion truce border alliance rebellion commander "
              "wall".split(),
        verbs="besieged captured defended invaded surrendered commanded "
              "fought retreated".split(),
        adjs="decisive military royal naval bloody fortified allied "
             "rebel".split(),
    ),
    "computing": dict(
        nouns="computer software program processor network language "
              "memory algorithm compiler system database server user "
              "interface version machine code protocol chip device "
              "operating kernel terminal storage".split(),
        verbs="developed programmed released designed implemented "
              "licensed ported compiled".split(),
        adjs="digital open portable graphical parallel commercial "
             "early fast".split(),
    ),
    "cooking": dict(
        nouns="dish recipe bread cheese sauce restaurant kitchen chef "
              "soup meat flour spice oven meal wine fruit pastry butter "
              "rice cuisine festival market flavour dessert".split(),
        verbs="cooked baked served roasted seasoned prepared brewed "
              "invented".split(),
        adjs="traditional sweet spicy regional fresh savoury baked "
             "famous".split(),
    ),
    "ships": dict(
        nouns="ship vessel voyage crew captain harbour port hull cargo "
              "sail mast deck shipyard expedition coast storm wreck "
              "anchor lighthouse sailor island cannon convoy dock".split(),
        verbs="sailed launched sank docked wrecked explored anchored "
              "commissioned".split(),
        adjs="merchant wooden armed coastal steam royal sunken "
             "ocean".split(),
    ),
    "painting": dict(
        nouns="painting artist portrait museum gallery canvas exhibition "
              "sculpture landscape painter collection studio style "
              "colour fresco patron critic sketch masterpiece movement "
              "workshop chapel altar print".split(),
        verbs="painted exhibited sketched commissioned restored "
              "collected sculpted illustrated".split(),
        adjs="abstract modern baroque religious famous oil early "
             "vivid".split(),
    ),
}

GENERAL_NOUNS = (
    "city town region country people government year century family "
    "church school university history period war state area group "
    "company building population name king queen emperor council time "
    "work part number life world house road land son daughter wife "
    "brother father mother book report record member record house "
    "district province empire society community village world word "
    "reason result system form place end side case point fact example "
    "design project attempt decision career age interest influence "
    "success order tradition practice period generation"
).split()

GENERAL_VERBS = (
    "became remained moved returned described established founded "
    "built used included produced received began continued lived "
    "died married joined left published wrote reached replaced "
    "introduced developed supported opposed created considered "
    "named granted held led followed lost gained started changed"
).split()

GENERAL_ADJS = (
    "new old large small first last early late great important "
    "major local several many different long short british french "
    "german english american roman ancient modern original main "
    "second third single private public own similar "
    "significant notable famous popular"
).split()

ADVERBS = "later also still only soon eventually again finally often".split()

PLACES_SUFFIX = ["ton", "burg", "ford", "ia", "ville", "mouth", "dale", "port"]

COLLOCATIONS = [
    "one of the", "in the early", "in the late", "as well as",
    "at the same time", "for the first time", "in addition to",
    "according to the", "at the end of the", "on the other hand",
    "during the reign of", "in the middle of the", "a number of",
    "as a result of", "in the course of the", "the rest of the",
    "at the beginning of the", "for a period of", "in the years that followed",
    "by the end of the", "with the exception of",
]

CONNECTIVES = [
    "however ,", "in addition ,", "after this ,", "at that time ,",
    "as a result ,", "despite this ,", "in later years ,", "meanwhile ,",
    "by then ,", "shortly afterwards ,",
]


def zipf_pick(rng, items, s=1.1):
    weights = [1.0 / (r + 1) ** s for r in range(len(items))]
    return rng.choices(items, weights=weights, k=1)[0]


def make_name(rng, n_syll):
    return "".join(rng.choice(SYLLABLES) for _ in range(n_syll))


class Paragraph:
    def __init__(self, rng, topic, names, places):
        self.rng = rng
        self.lex = TOPICS[topic]
        self.people = rng.sample(names, 3)
        self.places = rng.sample(places, 2)
        self.year = rng.randint(1100, 1990)

    def noun(self):
        rng = self.rng
        if rng.random() < 0.55:
            return zipf_pick(rng, self.lex["nouns"])
        return zipf_pick(rng, GENERAL_NOUNS)

    def adj(self):
        rng = self.rng
        if rng.random() < 0.5:
            return zipf_pick(rng, self.lex["adjs"])
        return zipf_pick(rng, GENERAL_ADJS)

    def verb(self):
        rng = self.rng
        if rng.random() < 0.5:
            return zipf_pick(rng, self.lex["verbs"])
        return zipf_pick(rng, GENERAL_VERBS)

    def entity(self):
        rng = self.rng
        r = rng.random()
        if r < 0.6:
            return zipf_pick(rng, self.people, 1.5)
        return zipf_pick(rng, self.places, 1.0)

    def np(self, depth=0):
        rng = self.rng
        r = rng.random()
        if r < 0.22:
            return self.entity()
        det = rng.choices(["the", "a", "its", "his", "their", "this"],
                          weights=[10, 4, 2, 2, 1, 1])[0]
        words = [det]
        if rng.random() < 0.35:
            words.append(self.adj())
        words.append(self.noun())
        if depth < 2 and rng.random() < 0.3:
            words += [rng.choice(["of", "of", "in", "from", "near", "with"])]
            words.append(self.np(depth + 1))
        return " ".join(words)

    def year_phrase(self):
        rng = self.rng
        self.year += rng.randint(0, 6)
        return rng.choice(["in", "in", "by", "until", "after"]) + " " + str(
            self.year)

    def clause(self, depth=0):
        rng = self.rng
        subj = self.np()
        r = rng.random()
        if r < 0.45:
            vp = self.verb() + " " + self.np()
        elif r < 0.6:
            vp = "was " + rng.choice(["a", "the"]) + " " + self.adj() + \
                 " " + self.noun()
        elif r < 0.72:
            vp = rng.choice(["was", "became", "remained"]) + " " + self.adj()
        elif r < 0.84 and depth < 1:
            vp = rng.choice(["said that", "reported that", "claimed that",
                             "believed that"]) + " " + self.clause(depth + 1)
        else:
            vp = "was " + rng.choice(["known", "used", "built", "named",
                                      "described"]) + " " + \
                 rng.choice(["as", "by", "for"]) + " " + self.np()
        if rng.random() < 0.15:
            vp = zipf_pick(rng, ADVERBS) + " " + vp
        return subj + " " + vp

    def sentence(self):
        rng = self.rng
        parts = []
        if rng.random() < 0.25:
            parts.append(rng.choice(CONNECTIVES))
        if rng.random() < 0.25:
            parts.append(self.year_phrase() + " ,")
        if rng.random() < 0.3:
            parts.append(rng.choice(COLLOCATIONS) + " " + self.noun() + " ,")
        parts.append(self.clause())
        r = rng.random()
        if r < 0.25:
            parts.append(rng.choice(["and", "but", "while", "although",
                                     "because"]) + " " + self.clause())
        elif r < 0.4:
            parts.append(self.year_phrase())
        elif r < 0.5:
            parts.append(", " + "which " + self.verb() + " " + self.np() +
                         " ,")
            parts.append(rng.choice(COLLOCATIONS) + " " + self.noun())
        return " ".join(parts) + " ."

    def render(self, n_sent):
        text = " ".join(self.sentence() for _ in range(n_sent))
        return " ".join(text.replace(" , .", " .").split())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/fixture_corpus.txt")
    ap.add_argument("--paragraphs", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=20230101)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    names = sorted({make_name(rng, rng.randint(2, 3)) for _ in range(400)})
    places = sorted({make_name(rng, 2) + rng.choice(PLACES_SUFFIX)
                     for _ in range(200)})
    topics = sorted(TOPICS)
    with open(args.out, "w", encoding="utf-8") as fh:
        for _ in range(args.paragraphs):
            topic = rng.choice(topics)
            para = Paragraph(rng, topic, names, places)
            fh.write(para.render(rng.randint(7, 12)) + "\n")


if __name__ == "__main__":
    main()
