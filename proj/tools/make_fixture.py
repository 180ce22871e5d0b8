#!/usr/bin/env python3
"""Writes the bundled synthetic pain ontology, lexicon and sentence files.

The ontology mimics a clinical hierarchy: a root concept, body-region
categories, modifier-specific children, and per-category treatments, disease
findings and preventions. Drug classes and an unrelated fever branch are not
reachable from the lexicon and exercise the one-hop extraction.
"""
import argparse
import pathlib
import random

CATEGORIES = [
    "abdominal pain", "chest pain", "headache", "back pain", "joint pain",
    "ear pain", "limb pain", "pelvic pain", "neck pain", "dental pain",
]
MODIFIERS = [
    "acute", "chronic", "severe", "mild", "intermittent", "persistent",
    "recurrent", "postoperative", "nocturnal", "radiating", "burning", "throbbing",
]
DRUGS = [
    "hyoscine", "mebeverine", "omeprazole", "glyceryl trinitrate", "ranolazine", "atenolol",
    "sumatriptan", "rizatriptan", "propranolol", "naproxen", "diclofenac", "methocarbamol",
    "celecoxib", "meloxicam", "etoricoxib", "otomize", "ciprofloxacin ear drops", "lidocaine",
    "gabapentin", "pregabalin", "amitriptyline", "tranexamic acid", "mefenamic acid", "dydrogesterone",
    "baclofen", "tizanidine", "cyclobenzaprine", "benzocaine", "clove oil", "chlorhexidine",
]
DISEASES = [
    "appendicitis", "pancreatitis", "angina", "pericarditis", "migraine", "tension headache disorder",
    "lumbar disc prolapse", "spinal stenosis", "osteoarthritis", "rheumatoid arthritis",
    "otitis media", "otitis externa", "peripheral neuropathy", "deep vein thrombosis",
    "pelvic lipomatosis", "endometriosis", "cervical spondylosis", "whiplash injury",
    "dental caries", "pulpitis",
]
PREVENTIVES = [
    "dietary fibre", "aspirin low dose", "topiramate", "core strengthening", "weight reduction",
    "ear protection", "compression stockings", "combined oral contraceptive", "posture training",
    "fluoride toothpaste",
]
VARIANTS = {
    "response to pain": "pain",
    "on examination - painful ear": "ear pain",
    "stomach ache": "abdominal pain",
    "tummy pain": "abdominal pain",
    "head ache": "headache",
    "sore throat pain": "neck pain",
    "toothache": "dental pain",
    "lower back ache": "back pain",
    "painful joints": "joint pain",
    "leg ache": "limb pain",
}
UNLINKED_MENTIONS = ["sore sensation quality", "discomfort"]
FILLERS = [
    "patient reports", "complains of", "describes", "was seen for", "ongoing", "noted",
    "since last week", "worse at night", "after the fall", "on review", "today", "again",
]


def build(seed):
    rng = random.Random(seed)
    onto = []
    children = {}
    for ci, cat in enumerate(CATEGORIES):
        onto.append((cat, "is a", "pain"))
        kids = [f"{m} {cat}" for m in MODIFIERS]
        children[cat] = kids
        drugs = DRUGS[3 * ci:3 * ci + 3]
        diseases = DISEASES[2 * ci:2 * ci + 2]
        prevent = PREVENTIVES[ci]
        for d in drugs:
            onto.append((cat, "may be treated by", d))
        for kid in kids:
            onto.append((kid, "is a", cat))
            for d in drugs:
                if rng.random() < 0.8:
                    onto.append((kid, "may be treated by", d))
            if rng.random() < 0.15:
                onto.append((kid, "may be treated by", rng.choice(DRUGS)))
            for dis in diseases:
                if rng.random() < 0.8:
                    onto.append((kid, "may be finding of disease", dis))
            if rng.random() < 0.9:
                onto.append((kid, "may be prevented by", prevent))
        for dis in diseases:
            onto.append((cat, "may be finding of disease", dis))
    onto.append(("pain", "is a", "clinical finding"))
    onto.append(("pain", "may be treated by", "aspirin"))
    onto.append(("pain", "may be treated by", "paracetamol"))
    # Not reachable from any seed.
    for d in DRUGS[:12]:
        onto.append((d, "is a", "analgesic"))
    onto.append(("fever", "is a", "clinical finding"))
    onto.append(("high fever", "is a", "fever"))
    onto.append(("fever", "may be treated by", "paracetamol"))
    rng.shuffle(onto)

    lexicon = [("pain", "pain", "L0000")]
    idx = 1
    for cat in CATEGORIES:
        lexicon.append((cat, cat, f"L{idx:04d}"))
        idx += 1
        for kid in children[cat]:
            lexicon.append((kid, kid, f"L{idx:04d}"))
            idx += 1
    for variant, canon in VARIANTS.items():
        lexicon.append((variant, canon, ""))

    mentions = list(VARIANTS) + UNLINKED_MENTIONS + CATEGORIES + [k for c in CATEGORIES for k in children[c][:4]]
    sentences = []
    for i in range(300):
        picked = rng.sample(mentions, rng.choice([1, 1, 2]))
        words = [rng.choice(FILLERS)]
        for m in picked:
            words += [m, rng.choice(FILLERS)]
        sentences.append((f"s{i:04d}", " ".join(words), "|".join(picked)))
    # One record without concepts: dropped on load.
    sentences.append(("s9999", "no pain concepts here", ""))
    return onto, lexicon, sentences


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "fixture"))
    ap.add_argument("--seed", type=int, default=555)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    onto, lexicon, sentences = build(args.seed)
    (out / "ontology.tsv").write_text("".join("\t".join(t) + "\n" for t in onto))
    (out / "lexicon.tsv").write_text("".join("\t".join(t) + "\n" for t in lexicon))
    (out / "sentences.tsv").write_text("".join("\t".join(t) + "\n" for t in sentences))


if __name__ == "__main__":
    main()
