#!/usr/bin/env python3
"""Regenerate crates/core/data/fixture_corpus.jsonl.

Synthetic food-composition records, deterministic for a fixed seed. Values are
per 100 g; micronutrients are written in mg / ug so ingestion exercises unit
conversion.
"""
import json
import random
import sys
from pathlib import Path

SEED = 20251016
OUT = Path(__file__).resolve().parent.parent / "crates/core/data/fixture_corpus.jsonl"

# (group, names, protein, carbs, sugar share, fat, fibre, salt) ranges
GROUPS = {
    "Cheeses": (["Gouda", "Edam", "Emmental", "Parmesan", "Mozzarella", "Brie", "Camembert",
                 "Ricotta", "Feta", "Mascarpone", "Gorgonzola", "Tolminc", "Mohant",
                 "Cottage curd", "Halloumi", "Manchego", "Pecorino", "Gruyere", "Cheddar",
                 "Havarti", "Paneer", "Quark", "Scamorza"],
                (8, 36), (0, 5), (0.0, 1.0), (10, 34), (0, 0.2), (0.3, 3.5)),
    "Fish": (["Atlantic salmon", "Cod fillet", "Rainbow trout", "Sardines", "Mackerel",
              "Tuna steak", "Sea bass", "Gilthead bream", "Anchovies", "Herring",
              "Hake", "Pollock", "Sole", "Carp", "Catfish", "Pike", "Halibut",
              "Smoked salmon", "Canned tuna", "Tilapia", "Monkfish", "Turbot"],
             (15, 28), (0, 1), (0.0, 1.0), (0.5, 16), (0, 0.01), (0.1, 3.0)),
    "Fresh beef": (["Beef sirloin", "Beef tenderloin", "Ground beef", "Beef brisket",
                    "Beef ribeye", "Beef shank", "Beef chuck", "Beef flank", "Veal cutlet",
                    "Beef round", "Beef cheek", "Oxtail", "Beef tongue", "Beef liver",
                    "Beef heart", "Beef t-bone", "Beef rump", "Beef skirt", "Beef topside",
                    "Beef silverside", "Beef short ribs"],
                   (17, 31), (0, 1.5), (0.0, 0.5), (2, 25), (0, 0.01), (0.1, 0.3)),
    "Dry fruits": (["Dried apricots", "Raisins", "Prunes", "Dried figs", "Dates",
                    "Dried cranberries", "Dried mango", "Dried apple rings", "Sultanas",
                    "Goji berries", "Dried banana chips", "Dried pears", "Currants",
                    "Dried cherries", "Dried pineapple", "Dried blueberries",
                    "Mulberries, dried", "Dried papaya", "Dried peaches", "Candied peel"],
                   (1, 14), (45, 80), (0.5, 0.95), (0.2, 2.5), (3, 11), (0.0, 0.1)),
    "Chicken meat": (["Chicken breast", "Chicken thigh", "Chicken drumstick", "Chicken wings",
                      "Chicken liver", "Whole chicken", "Chicken leg quarter",
                      "Chicken breast, skinless", "Chicken mince", "Chicken gizzards",
                      "Chicken heart", "Chicken schnitzel", "Chicken fillet strips",
                      "Chicken tenderloins", "Chicken neck", "Chicken back",
                      "Chicken thigh, boneless", "Chicken sausage", "Roast chicken",
                      "Chicken skin", "Chicken feet"],
                     (12, 32), (0, 2), (0.0, 0.5), (1.5, 20), (0, 0.01), (0.1, 2.0)),
    "Vegetables": (["Carrot", "Broccoli", "Spinach", "Kale", "Cauliflower", "Zucchini",
                    "Bell pepper", "Tomato", "Cucumber", "Eggplant", "Beetroot", "Leek",
                    "Onion", "Garlic", "Asparagus", "Brussels sprouts", "Cabbage",
                    "Celery", "Lettuce", "Radish", "Pumpkin", "Green peas", "Sweet corn"],
                   (0.5, 6), (2, 20), (0.2, 0.7), (0.1, 0.8), (1, 5), (0.0, 0.2)),
    "Breads": (["Rye loaf", "Wholegrain loaf", "White toast", "Baguette", "Ciabatta",
                "Sourdough", "Pumpernickel", "Spelt loaf", "Bagel", "Pita", "Focaccia",
                "Brioche", "Corn loaf", "Multigrain roll", "Kaiser roll", "Tortilla",
                "Naan", "Crispbread", "Buckwheat loaf", "Oat loaf"],
               (6, 14), (40, 60), (0.02, 0.15), (1, 12), (2, 12), (0.8, 2.0)),
    "Yogurts": (["Plain yoghurt", "Greek style yoghurt", "Strawberry yoghurt", "Kefir",
                 "Skyr", "Drinking yoghurt", "Vanilla yoghurt", "Low fat yoghurt",
                 "Goat milk yoghurt", "Sheep milk yoghurt", "Blueberry yoghurt",
                 "Probiotic yoghurt", "Lactose free yoghurt", "Coconut yoghurt",
                 "Peach yoghurt", "Honey yoghurt", "Stracciatella yoghurt",
                 "Cherry yoghurt", "Apricot yoghurt", "Acidophilus milk"],
                (2.5, 11), (3, 16), (0.6, 1.0), (0.1, 10), (0, 0.5), (0.05, 0.2)),
    "Breakfast cereals": (["Corn flakes", "Muesli", "Granola", "Oat flakes", "Bran flakes",
                           "Puffed rice", "Chocolate pillows", "Honey rings", "Wheat biscuits",
                           "Spelt flakes", "Crunchy clusters", "Millet flakes", "Rice crisps",
                           "Frosted flakes", "Buckwheat flakes", "Barley flakes",
                           "Fruit muesli", "Nut granola", "Cocoa puffs", "Multigrain hoops"],
                          (6, 14), (55, 85), (0.03, 0.4), (1, 20), (3, 15), (0.0, 1.8)),
    "Fruit juices": (["Orange juice", "Apple juice", "Grape juice", "Pineapple juice",
                      "Cranberry juice", "Pomegranate juice", "Grapefruit juice",
                      "Carrot-orange juice", "Multivitamin juice", "Cherry nectar",
                      "Peach nectar", "Pear nectar", "Blackcurrant juice", "Mango nectar",
                      "Lemonade base", "Aronia juice", "Elderflower cordial",
                      "Tomato juice", "Beet juice", "Sea buckthorn juice"],
                     (0, 1.2), (8, 16), (0.7, 1.0), (0, 0.5), (0, 0.5), (0.0, 0.1)),
}

MICROS = [
    # name, unit, range (in that unit)
    ("potassium", "mg", (50, 1200)),
    ("magnesium", "mg", (5, 260)),
    ("calcium", "mg", (5, 1100)),
    ("iron", "mg", (0.1, 6)),
    ("vitamin c", "mg", (0, 60)),
    ("cholesterol", "mg", (0, 110)),
    ("vitamin b12", "µg", (0, 6)),
    ("water", "g", (5, 90)),
]


def r2(x):
    return round(x, 2)


def component(value, unit):
    return {"value": value, "unit": unit}


def make_item(rng, idx, group, name, spec, kind):
    _, p_r, c_r, s_share, f_r, fib_r, salt_r = spec
    protein = r2(rng.uniform(*p_r))
    carbs = r2(rng.uniform(*c_r))
    sugars = r2(carbs * rng.uniform(*s_share))
    fat = r2(rng.uniform(*f_r))
    sat = r2(fat * rng.uniform(0.15, 0.65))
    fibre = r2(rng.uniform(*fib_r))
    salt = r2(rng.uniform(*salt_r))
    energy = r2(4 * protein + 4 * carbs + 9 * fat + 2 * fibre)
    comps = {
        "energy": component(energy, "kcal"),
        "protein, total": component(protein, "g"),
        "carbohydrates, total": component(carbs, "g"),
        "sugars, total": component(sugars, "g"),
        "fat, total": component(fat, "g"),
        "fatty acids, total saturated": component(sat, "g"),
        "fibre, total dietary": component(fibre, "g"),
        "salt": component(salt, "g"),
    }
    if kind == "branded":
        # labels frequently omit saturated fat / fibre
        for opt in ("fatty acids, total saturated", "fibre, total dietary", "sugars, total"):
            if rng.random() < 0.25:
                del comps[opt]
    else:
        for mname, unit, (lo, hi) in MICROS:
            if rng.random() < 0.85:
                val = round(rng.uniform(lo, hi), 1)
                if mname == "cholesterol" and group in ("Vegetables", "Dry fruits",
                                                        "Fruit juices", "Breads",
                                                        "Breakfast cereals"):
                    val = 0.0
                comps[mname] = component(val, unit)
        comps["sodium"] = component(round(salt * 400, 1), "mg")
    return {
        "id": f"fcdb-{idx:04d}",
        "name": name,
        "food_group": group,
        "kind": kind,
        "components": comps,
    }


def main():
    rng = random.Random(SEED)
    items = []
    idx = 1
    for group, spec in GROUPS.items():
        for n, name in enumerate(spec[0]):
            kind = "branded" if n % 3 == 2 else "generic"
            items.append(make_item(rng, idx, group, name, spec, kind))
            idx += 1

    # reference record plus boundary rows for range questions
    items.append({
        "id": f"fcdb-{idx:04d}", "name": "Cheese Provolon", "food_group": "Cheeses",
        "kind": "branded",
        "components": {
            "energy": component(365.30, "kcal"),
            "protein, total": component(26.30, "g"),
            "carbohydrates, total": component(0.00, "g"),
            "fat, total": component(29.90, "g"),
            "fibre, total dietary": component(0.00, "g"),
            "salt": component(2.19, "g"),
        },
    })
    idx += 1
    for name, group, protein in (("Dried beef jerky strips", "Fresh beef", 30.0),
                                 ("Grilled chicken cubes", "Chicken meat", 35.0)):
        item = make_item(rng, idx, group, name, GROUPS[group], "generic")
        item["components"]["protein, total"] = component(protein, "g")
        items.append(item)
        idx += 1

    for it in items:
        for g in GROUPS:
            sentence_name = it["name"]
            assert g not in sentence_name, (g, sentence_name)

    with OUT.open("w", encoding="utf-8") as fh:
        for it in items:
            fh.write(json.dumps(it, ensure_ascii=False) + "\n")
    print(f"wrote {len(items)} items to {OUT}", file=sys.stderr)


if __name__ == "__main__":
    main()
