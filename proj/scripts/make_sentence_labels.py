#!/usr/bin/env python3
"""Write hand-labeled citation sentences as byte offsets (data/sentence_labels.jsonl)."""

import json
import sys

# (text, citation substring, expected sentence substring). Labels mark the
# full grammatical sentence, except that each clause of a semicolon-separated
# string cite counts as its own citation sentence.
LABELS = [
    ("The moving party has the responsibility of informing the Court of portions of the record. "
     "Celotex Corp. v. Catrett, 477 U.S. 317, 322, 106 S.Ct. 2548, 91 L.Ed.2d 265 (1986). "
     "The moving party may meet its burden.",
     "477 U.S. 317",
     "Celotex Corp. v. Catrett, 477 U.S. 317, 322, 106 S.Ct. 2548, 91 L.Ed.2d 265 (1986)."),
    ("Pro se complaints must be liberally construed. Estelle v. Gamble, 429 U.S. 97, 106, "
     "97 S.Ct. 285, 50 L.Ed.2d 251 (1976). The complaint need not specify the correct legal theory.",
     "429 U.S. 97",
     "Estelle v. Gamble, 429 U.S. 97, 106, 97 S.Ct. 285, 50 L.Ed.2d 251 (1976)."),
    ("Claims of pro se litigants are given fair consideration. Matzker v. Herr, 748 F.2d 1142, "
     "1146 (7th Cir.1984). Accordingly, the order is vacated.",
     "748 F.2d 1142",
     "Matzker v. Herr, 748 F.2d 1142, 1146 (7th Cir.1984)."),
    ("The officer lacked probable cause. See United States v. Holloway, 51 F.3d 1449, 1452 "
     "(9th Cir.1995). We therefore reverse.",
     "51 F.3d 1449",
     "See United States v. Holloway, 51 F.3d 1449, 1452 (9th Cir.1995)."),
    ("The plan administrator acted within its discretion, see Marlowe v. Keene Mills, 61 F.3d 902, "
     "905 (3d Cir.1995), and the denial stands. Nothing more is required.",
     "61 F.3d 902",
     "The plan administrator acted within its discretion, see Marlowe v. Keene Mills, 61 F.3d 902, "
     "905 (3d Cir.1995), and the denial stands."),
    ("Any doubt is resolved against the moving party. Anderson v. Liberty Lobby, Inc., 477 U.S. 242, "
     "255, 106 S.Ct. 2505, 91 L.Ed.2d 202 (1986); Fed.R.Civ.P. 56(c). The motion fails.",
     "477 U.S. 242",
     "Anderson v. Liberty Lobby, Inc., 477 U.S. 242, 255, 106 S.Ct. 2505, 91 L.Ed.2d 202 (1986);"),
    ("The stay applies to estate property. In re Harrow Grain Elevator Co., 810 F.2d 580, 583 "
     "(6th Cir.1987). The creditor may not proceed.",
     "810 F.2d 580",
     "In re Harrow Grain Elevator Co., 810 F.2d 580, 583 (6th Cir.1987)."),
    ("Cf. Pell Valley Cooperative v. Sandoz, 148 F. Supp. 2d 711, 715 (N.D. Ill. 2001). "
     "The clause is ambiguous.",
     "148 F. Supp. 2d 711",
     "Cf. Pell Valley Cooperative v. Sandoz, 148 F. Supp. 2d 711, 715 (N.D. Ill. 2001)."),
    ("The teacher spoke on a matter of public concern. Ferrante v. Board of Education, 97 F.3d 1304, "
     "1310 (2d Cir.1996) (holding that curriculum speech is protected). The board must justify the "
     "termination.",
     "97 F.3d 1304",
     "Ferrante v. Board of Education, 97 F.3d 1304, 1310 (2d Cir.1996) (holding that curriculum "
     "speech is protected)."),
    ("A complaint survives unless it appears beyond doubt that the plaintiff can prove no set of "
     "facts. Haines v. Kerner, 404 U.S. 519, 520-21, 92 S.Ct. 594, 30 L.Ed.2d 652 (1972). "
     "That standard is met here.",
     "404 U.S. 519",
     "Haines v. Kerner, 404 U.S. 519, 520-21, 92 S.Ct. 594, 30 L.Ed.2d 652 (1972)."),
    ("Officials are shielded where the right was not clearly established, Quist v. Lambert, "
     "512 U.S. 88, 94, 114 S.Ct. 2011, 129 L.Ed.2d 74 (1994), and no such right existed here.",
     "512 U.S. 88",
     "Officials are shielded where the right was not clearly established, Quist v. Lambert, "
     "512 U.S. 88, 94, 114 S.Ct. 2011, 129 L.Ed.2d 74 (1994), and no such right existed here."),
    ("The employer offered a legitimate reason. Tolliver v. Amsted Rail, 233 F.3d 455, 459 "
     "(7th Cir.2000); see also Sorensen v. Delta Freight Lines, 88 F.3d 1192, 1196 (10th Cir.1996). "
     "Pretext was not shown.",
     "88 F.3d 1192",
     "see also Sorensen v. Delta Freight Lines, 88 F.3d 1192, 1196 (10th Cir.1996)."),
]


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "data/sentence_labels.jsonl"
    with open(out, "w", encoding="utf-8") as f:
        for text, cite, sentence in LABELS:
            b = text.encode("utf-8")
            c = b.index(cite.encode("utf-8"))
            # The citation span starts at the volume; the sentence contains it.
            s = b.index(sentence.encode("utf-8"))
            assert s <= c < s + len(sentence.encode("utf-8"))
            f.write(json.dumps({"text": text, "citation_start": c, "start": s,
                                "end": s + len(sentence.encode("utf-8"))},
                               ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
