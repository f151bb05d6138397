"""Regenerate the bundled Guess Who rosters.

    python scripts/make_rosters.py

Writes ``classic24.json`` and ``generated100.json`` into the package data
directory. Attributes are drawn at random (fixed seed) and redrawn until no
two characters are attribute-identical.
"""

import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "bedgames" / "data"

SCHEMA = {
    "gender": ["male", "female"],
    "hair_color": ["brown", "blonde", "black", "red", "white", "gray"],
    "hair_style": ["short", "long", "bald", "ponytail", "bun"],
    "eye_color": ["brown", "blue", "green", "hazel"],
    "facial_hair": ["none", "mustache", "beard", "goatee"],
    "skin_tone": ["light", "fair", "medium", "tan", "dark"],
    "hat_type": ["none", "cap", "beanie", "fedora"],
    "hair_texture": ["straight", "wavy", "curly"],
    "eyewear_style": ["none", "round", "square", "aviator"],
    "nose_shape": ["pointed", "round", "straight", "wide"],
    "ear_size": ["small", "medium", "large"],
    "smile_type": ["wide", "subtle", "toothy", "closed"],
    "clothing_style": ["casual", "formal", "sporty", "bohemian"],
    "age_range": ["young", "middle-aged", "senior"],
    "complexion": ["fair", "olive", "rosy", "tan"],
    "cheek_features": ["dimples", "freckles", "none", "rosy"],
}
ACCESSORIES = ["glasses", "scarf", "earrings", "necklace", "watch", "bowtie"]

ALEX = {
    "name": "Alex", "gender": "male", "hair_color": "brown", "hair_style": "short", "eye_color": "brown",
    "accessories": ["glasses"], "facial_hair": "mustache", "skin_tone": "light", "hat_type": "none",
    "hair_texture": "straight", "eyewear_style": "round", "nose_shape": "pointed", "ear_size": "medium",
    "smile_type": "wide", "clothing_style": "casual", "age_range": "middle-aged", "complexion": "fair",
    "cheek_features": "dimples",
}
ELENA = {
    "name": "Elena", "gender": "female", "hair_color": "blonde", "hair_style": "short", "eye_color": "green",
    "accessories": ["scarf"], "facial_hair": "none", "skin_tone": "fair", "hat_type": "none",
    "hair_texture": "straight", "eyewear_style": "round", "nose_shape": "round", "ear_size": "small",
    "smile_type": "wide", "clothing_style": "sporty", "age_range": "middle-aged", "complexion": "olive",
    "cheek_features": "freckles",
}

CLASSIC = ["Alex", "Alfred", "Anita", "Anne", "Bernard", "Bill", "Charles", "Claire", "David", "Eric",
           "Frans", "George", "Herman", "Joe", "Maria", "Max", "Paul", "Peter", "Philip", "Richard",
           "Robert", "Sam", "Susan", "Tom"]
EXTRA = ["Elena", "Aaron", "Beatriz", "Caleb", "Dana", "Emeka", "Fatima", "Gus", "Hana", "Ivan", "Jada",
         "Kenji", "Lila", "Marco", "Nadia", "Omar", "Priya", "Quinn", "Rosa", "Sven", "Tara", "Umar",
         "Vera", "Wes", "Ximena", "Yusuf", "Zoe", "Ada", "Bruno", "Chloe", "Dmitri", "Esme", "Felix",
         "Greta", "Hugo", "Iris", "Jonas", "Kira", "Leo", "Mila", "Nico", "Olga", "Pablo", "Rhea",
         "Silas", "Thea", "Uri", "Viola", "Wren", "Yara", "Zane", "Amara", "Boris", "Celia", "Dario",
         "Edith", "Farid", "Gemma", "Hector", "Ines", "Jasper", "Kai", "Lena", "Milo", "Nora", "Otto",
         "Petra", "Raul", "Sana", "Theo", "Una", "Victor", "Wanda", "Xavier", "Yvonne", "Zack"]


def _random_character(name, rng):
    c = {"name": name}
    for key, values in SCHEMA.items():
        c[key] = str(rng.choice(values))
    n_acc = int(rng.choice([0, 1, 1, 2]))
    c["accessories"] = sorted(str(a) for a in rng.choice(ACCESSORIES, size=n_acc, replace=False))
    if c["gender"] == "female" and c["facial_hair"] != "none":
        c["facial_hair"] = "none"
    return c


def _key(c):
    return json.dumps({k: v for k, v in c.items() if k != "name"}, sort_keys=True)


def make(names, fixed, seed):
    rng = np.random.default_rng(seed)
    roster, seen = [], set()
    for name in names:
        c = fixed.get(name)
        while c is None or _key(c) in seen:
            c = _random_character(name, rng)
        seen.add(_key(c))
        roster.append(c)
    return roster


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    fixed = {"Alex": ALEX, "Elena": ELENA}
    classic = make(CLASSIC, fixed, seed=24)
    generated = classic + make(EXTRA, fixed, seed=100)
    assert len(generated) == 100 and len({c["name"] for c in generated}) == 100
    assert len({_key(c) for c in generated}) == 100
    (OUT / "classic24.json").write_text(json.dumps(classic, indent=2) + "\n")
    (OUT / "generated100.json").write_text(json.dumps(generated, indent=2) + "\n")


if __name__ == "__main__":
    main()
