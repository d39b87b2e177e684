"""Regenerates planted.jsonl and planted_embeddings.txt (deterministic)."""
import json
import random

THEMES = [
    "tumor carcinoma kinase oncogene metastasis chemotherapy lymphoma leukemia apoptosis angiogenesis "
    "neoplasm sarcoma melanoma cytotoxic antitumor proliferation malignant biopsy radiotherapy glioma",
    "arthritis lupus psoriasis antibody interleukin cytokine inflammation immunoglobulin lymphocyte autoantibody "
    "rheumatoid sclerosis colitis crohn tnf integrin macrophage thymus antigen immunosuppressant",
    "analgesic opioid nociceptor migraine neuropathic morphine fentanyl anesthetic ibuprofen naproxen "
    "headache neuralgia fibromyalgia cannabinoid capsaicin lidocaine ketamine oxycodone hyperalgesia sedation",
]
THEMES = [t.split() for t in THEMES]
FILLER = "compound composition pharmaceutical formulation dose administration tablet patient salt carrier".split()
STOP = "the of and wherein said which is a an to in for with".split()
COMPANIES = ["Acme Pharma", "Borealis Labs", "Cobalt Therapeutics", "Delta Bio", "Evergreen Health", "Fulcrum Drugs"]
MOLECULES = ["Avelor", "Brimex", "Cordane", "Dovitine", "Elzapam", "Fenorix", "Glutavir", "Hexamol", "Isotrane"]
INVENTORS = [f"{f} {l}" for f, l in zip(
    "Ana Bruno Carla Davi Elisa Fabio Gina Hugo Iris Joao Karen Luis Marta Nuno Olga Pedro Quel Rita Saulo Tania Ugo Vera Wagner Xenia Yara".split(),
    "Silva Souza Costa Lima Rocha Alves Dias Melo Pinto Reis Gomes Ramos Nunes Moura Barros Cunha Viana Lopes Freitas Cardoso Teixeira Mendes Correia Araujo Batista".split(),
)]

rng = random.Random(20240601)


def phrase(words, n):
    weights = [1.0 / (r + 1) ** 0.5 for r in range(len(words))]
    return rng.choices(words, weights=weights, k=n)


def sentence(theme, n_theme, n_filler):
    toks = phrase(THEMES[theme], n_theme) + rng.choices(FILLER, k=n_filler)
    rng.shuffle(toks)
    out = []
    for t in toks:
        if rng.random() < 0.3:
            out.append(rng.choice(STOP))
        out.append(t)
    return out


records = []
for i in range(60):
    theme = i % 3
    title = " ".join(["Method"] + sentence(theme, 3, 0))
    desc = sentence(theme, 24, 6)
    desc.insert(rng.randrange(len(desc)), str(2000 + rng.randrange(25)))
    if theme == 2 and (i // 3) % 2 == 0:
        desc[rng.randrange(len(desc)):0] = ["nitric", "oxide"]
    filed = None if i % 15 == 14 else 2003 + i % 18
    granted = None if (i % 10 == 9 or filed is None) else filed + 2
    inventors = sorted({INVENTORS[i % 25], INVENTORS[(i * 7 + 3) % 25]})
    pid = f"T{theme}-{i:02d}"
    records.append({
        "id": pid,
        "title": title.capitalize() + ".",
        "description": " ".join(desc) + ".",
        "abstract": f"Abstract of {pid}.",
        "drug": MOLECULES[i % 9],
        "company": COMPANIES[i % 6],
        "url": f"https://patents.example.org/{pid}",
        "strength": f"{5 * (1 + i % 4)}mg" if i % 5 else "",
        "trade_name": f"{MOLECULES[i % 9]}X" if i % 4 else "",
        "inventors": inventors,
        "filed_year": filed,
        "granted_year": granted,
    })

with open("planted.jsonl", "w") as f:
    for r in records:
        rec = {k: v for k, v in r.items() if v is not None}
        f.write(json.dumps(rec) + "\n")


def vec(center):
    return [c + rng.gauss(0, 0.25) for c in center]


lines = []
for t, words in enumerate(THEMES):
    center = [0.0] * 8
    center[2 * t] = center[2 * t + 1] = 1.0
    for w in words:
        lines.append((w, vec(center)))
filler_center = [0.0] * 6 + [1.0, 1.0]
for w in FILLER + ["method", "nitric"]:
    lines.append((w, vec(filler_center)))
for w in ["unrelated", "lexicon", "padding"]:
    lines.append((w, [rng.gauss(0, 1) for _ in range(8)]))

with open("planted_embeddings.txt", "w") as f:
    f.write(f"{len(lines)} 8\n")
    for w, v in lines:
        f.write(w + " " + " ".join(f"{x:.6f}" for x in v) + "\n")

inv = {n for r in records for n in r["inventors"]}
print("patents", len(records), "companies", len({r["company"] for r in records}),
      "molecules", len({r["drug"] for r in records}), "inventors", len(inv))
