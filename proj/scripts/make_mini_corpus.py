#!/usr/bin/env python3
"""Generate the bundled mini-corpus of synthetic case opinions.

The output is deterministic for a given seed. Every case cites other cases
of the corpus through full citations (some with parallel reporters), "Id.",
supra, signals (See, See also, Cf.) and statutes, and quotes other opinions
verbatim with curly quotes.
"""

import argparse
import json
import random

OPEN, CLOSE = "“", "”"

# (doc_id, caption, short name, cites, court/year parenthetical, topic)
CASES = [
    ("c01", "Celotex Corp. v. Catrett", "Celotex",
     ["477 U.S. 317", "106 S.Ct. 2548", "91 L.Ed.2d 265"], "(1986)", "sj"),
    ("c02", "Anderson v. Liberty Lobby, Inc.", "Anderson",
     ["477 U.S. 242", "106 S.Ct. 2505", "91 L.Ed.2d 202"], "(1986)", "sj"),
    ("c03", "Hughes v. Rowe", "Hughes",
     ["449 U.S. 5", "101 S.Ct. 173", "66 L.Ed.2d 163"], "(1980)", "prose"),
    ("c04", "Matzker v. Herr", "Matzker", ["748 F.2d 1142"], "(7th Cir.1984)", "prose"),
    ("c05", "Estelle v. Gamble", "Estelle",
     ["429 U.S. 97", "97 S.Ct. 285", "50 L.Ed.2d 251"], "(1976)", "prison"),
    ("c06", "Bartholet v. Reishauer A.G. (Zurich)", "Bartholet",
     ["953 F.2d 1073"], "(7th Cir.1992)", "pleading"),
    ("c07", "Haines v. Kerner", "Haines",
     ["404 U.S. 519", "92 S.Ct. 594", "30 L.Ed.2d 652"], "(1972)", "prose"),
    ("c08", "Marlowe v. Keene Mills", "Marlowe", ["61 F.3d 902"], "(3d Cir.1995)", "erisa"),
    ("c09", "Dunmore v. Ostrander", "Dunmore", ["812 F.2d 1199"], "(9th Cir.1987)", "search"),
    ("c10", "Pell Valley Cooperative v. Sandoz", "Pell Valley",
     ["148 F. Supp. 2d 711"], "(N.D. Ill. 2001)", "contract"),
    ("c11", "In re Harrow Grain Elevator Co.", "Harrow Grain",
     ["810 F.2d 580"], "(6th Cir.1987)", "bankruptcy"),
    ("c12", "Quist v. Lambert", "Quist",
     ["512 U.S. 88", "114 S.Ct. 2011", "129 L.Ed.2d 74"], "(1994)", "immunity"),
    ("c13", "Ferrante v. Board of Education", "Ferrante", ["97 F.3d 1304"], "(2d Cir.1996)", "speech"),
    ("c14", "Tolliver v. Amsted Rail", "Tolliver", ["233 F.3d 455"], "(7th Cir.2000)", "employment"),
    ("c15", "Oakes v. City of Marlin", "Oakes", ["44 F. Supp. 2d 1098"], "(W.D. Tex. 1999)", "immunity"),
    ("c16", "Reyes v. Pinecrest Health Plan", "Reyes", ["173 F.3d 341"], "(5th Cir.1999)", "erisa"),
    ("c17", "United States v. Holloway", "Holloway", ["51 F.3d 1449"], "(9th Cir.1995)", "search"),
    ("c18", "Garber v. Whitcomb", "Garber",
     ["431 U.S. 211", "97 S.Ct. 1702", "52 L.Ed.2d 301"], "(1977)", "speech"),
    ("c19", "Linden Mutual Insurance Co. v. Avery", "Linden Mutual",
     ["766 F.2d 27"], "(1st Cir.1985)", "contract"),
    ("c20", "In re Castellan Shipping Corp.", "Castellan",
     ["122 F.R.D. 445"], "(S.D.N.Y. 1988)", "bankruptcy"),
    ("c21", "Whitfield v. Morrow County", "Whitfield", ["302 F.3d 617"], "(6th Cir.2002)", "prison"),
    ("c22", "Sorensen v. Delta Freight Lines", "Sorensen", ["88 F.3d 1192"], "(10th Cir.1996)", "employment"),
    ("c23", "Kessler v. Ambrose", "Kessler",
     ["468 U.S. 412", "104 S.Ct. 3301", "82 L.Ed.2d 555"], "(1984)", "pleading"),
    ("c24", "Arnett v. Foxworth", "Arnett", ["957 F.2d 404"], "(7th Cir.1992)", "sj"),
    ("c25", "Prieto v. Carraway Mills", "Prieto", ["186 F. Supp. 2d 560"], "(E.D. Pa. 2002)", "employment"),
    ("c26", "Lowell v. Strand", "Lowell", ["71 F.3d 1178"], "(8th Cir.1995)", "search"),
    ("c27", "Nadeau v. Granite State Bank", "Nadeau", ["39 F.3d 8"], "(1st Cir.1994)", "contract"),
    ("c28", "Burkhart v. Ellery", "Burkhart", ["645 F.2d 1321"], "(9th Cir.1981)", "prison"),
    ("c29", "Voss v. Harmon Trucking", "Voss", ["214 F.3d 777"], "(7th Cir.2000)", "sj"),
    ("c30", "Talbot v. Cordova", "Talbot", ["128 F.3d 963"], "(6th Cir.1997)", "immunity"),
]

TOPICS = {
    "sj": ("summary judgment", ["genuine issue", "material fact", "moving party", "nonmoving party",
            "affidavits", "depositions", "burden of production", "trial record", "evidentiary showing"]),
    "prose": ("pro se pleading", ["pro se litigant", "complaint", "liberal construction", "formal pleadings",
               "motion to dismiss", "inartful drafting", "legal theory", "leave to amend", "meaningful consideration"]),
    "prison": ("conditions of confinement", ["inmate", "medical care", "deliberate indifference", "prison officials",
                "serious medical need", "grievance", "Eighth Amendment", "treatment delay", "infirmary staff"]),
    "pleading": ("notice pleading", ["plaintiff", "short and plain statement", "legal theory", "factual allegations",
                  "dismissal", "amended complaint", "notice", "claim for relief", "statute"]),
    "erisa": ("benefit plan review", ["plan administrator", "fiduciary", "beneficiary", "claim denial",
               "discretionary authority", "de novo review", "plan document", "disability benefits", "trustee"]),
    "search": ("warrantless search", ["officer", "reasonable suspicion", "probable cause", "vehicle stop",
                "consent", "exclusionary rule", "suppression hearing", "frisk", "informant"]),
    "contract": ("contract interpretation", ["ambiguity", "parol evidence", "course of dealing", "breach",
                  "damages", "indemnity clause", "insurer", "policy language", "mutual assent"]),
    "bankruptcy": ("bankruptcy administration", ["debtor", "trustee", "creditor", "automatic stay",
                    "estate property", "priority claim", "reorganization plan", "preference", "discharge"]),
    "immunity": ("qualified immunity", ["official", "clearly established right", "objective reasonableness",
                  "discretionary function", "municipality", "policy or custom", "civil rights claim",
                  "interlocutory appeal", "constitutional violation"]),
    "speech": ("public employee speech", ["teacher", "school board", "matter of public concern", "retaliation",
                "protected expression", "disruption", "balancing test", "termination", "curriculum"]),
    "employment": ("employment discrimination", ["employer", "employee", "pretext", "prima facie case",
                    "adverse action", "comparator", "hostile environment", "reasonable accommodation",
                    "legitimate reason"]),
}

STATUTES = ["Fed.R.Civ.P. 56(c)", "29 U.S.C. § 1002(5)", "42 U.S.C. § 1983",
            "Fed.R.Civ.P. 12(b)(6)", "11 U.S.C. § 362(a)", "29 U.S.C. § 1132(a)(1)(B)",
            "42 U.S.C. § 2000e-2(a)", "28 U.S.C. § 1915(e)(2)"]

SENTENCE_FRAMES = [
    "The {a} must be weighed against the {b} before the court may act.",
    "Here the {a} was raised only after the {b} had been fully briefed.",
    "Nothing in the record suggests that the {a} turned on the {b}.",
    "The district court treated the {a} as controlling and gave little weight to the {b}.",
    "We review the question of {a} independently, without deference to findings on the {b}.",
    "The parties agree that the {a} is relevant but dispute how the {b} bears on it.",
    "A careful reading of the {b} shows that the {a} was never seriously contested.",
    "On appeal the {a} is the principal issue, although the {b} received some attention below.",
    "The court below found the {a} sufficient and did not reach the {b}.",
    "Counsel conceded at argument that the {a} depends in part on the {b}.",
]

HOLDING_FRAMES = [
    "the {a} cannot be resolved without considering the {b}",
    "a court must examine the {a} in light of the {b}",
    "the {a} alone does not establish the {b}",
    "the {a} is measured by what the {b} reveals",
    "no rule of {t} permits a court to ignore the {a}",
    "the {a} carries weight only when the {b} supports it",
]

SIGNALS = ["See", "See also", "Cf.", "See generally"]

# Paragraph from the worked retrieval example; cited by c31.
SUMMARY_JUDGMENT_PARAGRAPH = (
    "Summary judgment should be granted where " + OPEN + "the pleadings, depositions, answers to "
    "interrogatories and admissions on file, together with the affidavits, if any, show there is no "
    "genuine issue as to any material fact and that the moving party is entitled to judgment as a "
    "matter of law." + CLOSE + " Fed.R.Civ.P. 56(c). The moving party has the responsibility of "
    "informing the Court of portions of the record or affidavits that demonstrate the absence of a "
    "triable issue. Celotex Corp. v. Catrett, 477 U.S. 317, 322, 106 S.Ct. 2548, 91 L.Ed.2d 265 (1986). "
    "The moving party may meet its burden of showing an absence of disputed material facts by "
    "demonstrating " + OPEN + "that there is an absence of evidence to support the non-moving "
    "party’s case." + CLOSE + " Id. at 325, 106 S.Ct. 2548. Any doubt as to the existence of a "
    "genuine issue for trial is resolved against the moving party. Anderson v. Liberty Lobby, Inc., "
    "477 U.S. 242, 255, 106 S.Ct. 2505, 91 L.Ed.2d 202 (1986); Fed.R.Civ.P. 56(c)."
)

# Paragraph from the worked generation example; cited by c32.
PROSE_PARAGRAPH = (
    "A pro se complaint, " + OPEN + "however inartfully pleaded," + CLOSE + " is held " + OPEN +
    "to less stringent standards than formal pleadings drafted by lawyers." + CLOSE + " Hughes v. Rowe, "
    "449 U.S. 5, 9, 101 S.Ct. 173, 66 L.Ed.2d 163 (1980). The court’s role is to ensure that claims "
    "of pro se litigants are given " + OPEN + "fair and meaningful consideration." + CLOSE + " Matzker v. "
    "Herr, 748 F.2d 1142, 1146 (7th Cir.1984). Accordingly, pro se complaints must be liberally construed. "
    "Estelle v. Gamble, 429 U.S. 97, 106, 97 S.Ct. 285, 50 L.Ed.2d 251 (1976). The complaint need not "
    "specify the correct legal theory, nor point to the correct statute in order to survive a motion to "
    "dismiss. Bartholet v. Reishauer A.G. (Zurich), 953 F.2d 1073, 1078 (7th Cir.1992). Finally, a "
    "district court may dismiss a complaint only if " + OPEN + "it appears beyond doubt that the "
    "plaintiff can prove no set of facts in support of his claim which would entitle him to relief." +
    CLOSE + " Hughes, supra, 449 U.S. at 10, 101 S.Ct. 173."
)

# Sentences the worked paragraphs quote; they appear verbatim in the cited opinions.
EXTRA_HOLDINGS = {
    "c01": ["that there is an absence of evidence to support the non-moving party’s case"],
    "c03": ["to less stringent standards than formal pleadings drafted by lawyers"],
    "c04": ["fair and meaningful consideration"],
    "c07": ["it appears beyond doubt that the plaintiff can prove no set of facts in support of "
            "his claim which would entitle him to relief"],
}


def page_of(cite):
    return int(cite.rsplit(" ", 1)[1])


def full_cite(case, rng, with_pin=True):
    _, caption, _, cites, paren, _ = case
    first = cites[0]
    parts = [first]
    if with_pin:
        parts[0] = f"{first}, {page_of(first) + rng.randint(1, 12)}"
    parts.extend(cites[1:])
    return f"{caption}, {', '.join(parts)} {paren}"


def filler(topic, rng, n):
    name, terms = TOPICS[topic]
    out = []
    for _ in range(n):
        a, b = rng.sample(terms, 2)
        out.append(rng.choice(SENTENCE_FRAMES).format(a=a, b=b))
    return " ".join(out)


def holdings_for(case, rng):
    doc_id, _, _, _, _, topic = case
    name, terms = TOPICS[topic]
    hs = list(EXTRA_HOLDINGS.get(doc_id, []))
    while len(hs) < 4:
        a, b = rng.sample(terms, 2)
        h = rng.choice(HOLDING_FRAMES).format(a=a, b=b, t=name)
        if h not in hs:
            hs.append(h)
    return hs


def cite_paragraph(me, targets, holdings, rng):
    """Paragraph with full citations of every target, a quote, Id. and supra."""
    topic = me[5]
    sentences = [filler(topic, rng, 1)]
    first = targets[0]
    q = rng.choice(holdings[first[0]])
    sentences.append(f"The rule is settled that {OPEN}{q}.{CLOSE} {full_cite(first, rng)}.")
    if rng.random() < 0.6:
        pin = page_of(first[3][0]) + rng.randint(1, 15)
        sentences.append(f"{filler(topic, rng, 1)[:-1]}. Id. at {pin}.")
    for t in targets[1:]:
        form = rng.random()
        if form < 0.35:
            sentences.append(f"{rng.choice(SIGNALS)} {full_cite(t, rng)}.")
        elif form < 0.7:
            q = rng.choice(holdings[t[0]])
            sentences.append(f"Courts have also recognized that {OPEN}{q}.{CLOSE} {full_cite(t, rng)}.")
        else:
            sentences.append(f"{filler(topic, rng, 1)[:-1]}, {rng.choice(['see', 'cf.'])} "
                             f"{full_cite(t, rng)}.")
    if rng.random() < 0.5:
        sentences.append(f"{filler(topic, rng, 1)[:-1]}. {rng.choice(STATUTES)}.")
    if rng.random() < 0.4:
        t = rng.choice(targets)
        pin = page_of(t[3][0]) + rng.randint(1, 9)
        sentences.append(f"{filler(topic, rng, 1)[:-1]}. {t[2]}, supra, at {pin}.")
    sentences.append(filler(topic, rng, 1))
    return " ".join(sentences)


def build(seed, n_cases):
    rng = random.Random(seed)
    cases = CASES[:n_cases]
    holdings = {c[0]: holdings_for(c, rng) for c in cases}
    same_topic = {c[0]: [o for o in cases if o[5] == c[5] and o[0] != c[0]] for c in cases}
    records = []
    for case in cases:
        doc_id, caption, _, cites, _, topic = case
        others = [o for o in cases if o[0] != doc_id]
        paragraphs = [
            filler(topic, rng, 4) + f" The claim arises under {rng.choice(STATUTES)}.",
            filler(topic, rng, 3) + " " + " ".join(f"The court has explained that {OPEN}{h}.{CLOSE}"
                                                    if i == 0 else f"It is also true that {h}."
                                                    for i, h in enumerate(holdings[doc_id][:2])),
            cite_paragraph(case, rng.sample(others, 1), holdings, rng),
            filler(topic, rng, 5),
            " ".join(f"We note that {h}." for h in holdings[doc_id][2:]) + " " + filler(topic, rng, 3),
        ]
        n_cite = rng.randint(3, 5)
        for _ in range(n_cite):
            pool = same_topic[doc_id] + others
            k = rng.randint(2, 3)
            picked = []
            for o in rng.sample(pool, len(pool)):
                if o not in picked:
                    picked.append(o)
                if len(picked) == k:
                    break
            paragraphs.append(cite_paragraph(case, picked, holdings, rng))
        paragraphs.append(filler(topic, rng, 3) + " The judgment is affirmed in part and reversed in part.")
        majority = "\n\n".join(paragraphs)
        opinions = [{"type": "majority", "text": majority}]
        if rng.random() < 0.3:
            opinions.append({"type": "concurrence",
                             "text": filler(topic, rng, 3) + "\n" + filler(topic, rng, 2)})
        records.append({"id": doc_id, "name": caption, "cite": cites[0], "opinions": opinions})

    # Two citing opinions built around the worked examples.
    by_id = {c[0]: c for c in cases}
    extra = [("c31", "Ruiz v. Northfield Logistics", "sj", SUMMARY_JUDGMENT_PARAGRAPH, ["c24", "c29"]),
             ("c32", "Pruitt v. Dallman", "prose", PROSE_PARAGRAPH, ["c07", "c23"])]
    for doc_id, caption, topic, worked, tail in extra:
        ps = [filler(topic, rng, 4), filler(topic, rng, 4), worked, filler(topic, rng, 4),
              cite_paragraph((doc_id, caption, caption, [], "", topic),
                             [by_id[t] for t in tail if t in by_id], holdings, rng),
              cite_paragraph((doc_id, caption, caption, [], "", topic),
                             [by_id[t] for t in ("c02", "c05") if t in by_id], holdings, rng),
              filler(topic, rng, 3)]
        records.append({"id": doc_id, "name": caption, "cite": f"{rng.randint(100, 999)} F.3d "
                        f"{rng.randint(100, 1500)}", "opinions": [{"type": "majority",
                                                                   "text": "\n\n".join(ps)}]})
    return records


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--output", default="data/mini_corpus.jsonl")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--cases", type=int, default=len(CASES))
    args = ap.parse_args()
    records = build(args.seed, args.cases)
    with open(args.output, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
