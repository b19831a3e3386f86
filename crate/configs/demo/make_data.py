"""Writes the demo inputs under data/ plus evidence.json.

Rate decisions follow the 2004-2008 target path. Indicator values are
smoothed approximations and the report text is placeholder prose; both
exist only so the pipeline has something to chew on.
"""

import csv
import datetime as dt
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))

# (meeting date, lower, upper)
RATES = [
    ("2004-05-04", 1.00, 1.00), ("2004-06-30", 1.25, 1.25), ("2004-08-10", 1.50, 1.50),
    ("2004-09-21", 1.75, 1.75), ("2004-11-10", 2.00, 2.00), ("2004-12-14", 2.25, 2.25),
    ("2005-02-02", 2.50, 2.50), ("2005-03-22", 2.75, 2.75), ("2005-05-03", 3.00, 3.00),
    ("2005-06-30", 3.25, 3.25), ("2005-08-09", 3.50, 3.50), ("2005-09-20", 3.75, 3.75),
    ("2005-11-01", 4.00, 4.00), ("2005-12-13", 4.25, 4.25), ("2006-01-31", 4.50, 4.50),
    ("2006-03-28", 4.75, 4.75), ("2006-05-10", 5.00, 5.00), ("2006-06-29", 5.25, 5.25),
    ("2006-08-08", 5.25, 5.25), ("2006-09-20", 5.25, 5.25), ("2006-10-25", 5.25, 5.25),
    ("2006-12-12", 5.25, 5.25), ("2007-01-31", 5.25, 5.25), ("2007-03-21", 5.25, 5.25),
    ("2007-05-09", 5.25, 5.25), ("2007-06-28", 5.25, 5.25), ("2007-08-07", 5.25, 5.25),
    ("2007-09-18", 4.75, 4.75), ("2007-10-31", 4.50, 4.50), ("2007-12-11", 4.25, 4.25),
    ("2008-01-22", 3.50, 3.50), ("2008-01-30", 3.00, 3.00), ("2008-03-18", 2.25, 2.25),
    ("2008-04-30", 2.00, 2.00), ("2008-06-25", 2.00, 2.00), ("2008-08-05", 2.00, 2.00),
    ("2008-09-16", 2.00, 2.00), ("2008-10-08", 1.50, 1.50), ("2008-10-29", 1.00, 1.00),
    ("2008-12-16", 0.00, 0.25),
]

# (month, unemployment, inflation) anchors, linearly interpolated
ANCHORS = [
    ("2004-01", 5.7, 1.9), ("2004-12", 5.4, 3.3), ("2005-09", 5.0, 4.7), ("2005-12", 4.9, 3.4),
    ("2006-06", 4.6, 4.3), ("2006-10", 4.4, 1.3), ("2007-03", 4.4, 2.8), ("2007-08", 4.6, 2.0),
    ("2007-11", 4.7, 4.3), ("2008-03", 5.1, 4.0), ("2008-07", 5.8, 5.6), ("2008-12", 7.3, 0.1),
]

TEXT = {
    "tight": [
        ("Summary", "Reports indicated that economic activity expanded at a solid pace."),
        ("Prices", "Input costs rose further and more firms passed increases on to customers."),
        ("Labor", "Labor markets were tight in several districts."),
    ],
    "mixed": [
        ("Summary", "Economic activity continued to expand, though growth was uneven across districts."),
        ("Prices", "Price pressures were described as moderate."),
        ("Housing", "Residential real estate activity was mixed."),
    ],
    "loose": [
        ("Summary", "Reports indicated that economic activity softened in most districts."),
        ("Housing", "Residential real estate markets weakened further."),
        ("Credit", "Lenders reported tighter credit standards and weaker loan demand."),
    ],
}


def month_index(s):
    y, m = s.split("-")[:2]
    return int(y) * 12 + int(m) - 1


def monthly():
    anchors = [(month_index(a), u, i) for a, u, i in ANCHORS]
    out = []
    for k in range(anchors[0][0], anchors[-1][0] + 1):
        for (k0, u0, i0), (k1, u1, i1) in zip(anchors, anchors[1:]):
            if k0 <= k <= k1:
                w = (k - k0) / (k1 - k0)
                out.append((k, round(u0 + w * (u1 - u0), 1), round(i0 + w * (i1 - i0), 1)))
                break
    return out


def token_for(series, release):
    """Evidence from the three indicator months before the release month."""
    cutoff = release.year * 12 + release.month - 1
    window = [(u, i) for k, u, i in series if k < cutoff][-3:]
    du = window[-1][0] - window[0][0]
    infl = window[-1][1]
    if du >= 0.2:
        return "loose"
    if infl >= 3.0 and du <= 0.0:
        return "tight"
    return "mixed"


def main():
    series = monthly()
    data = os.path.join(HERE, "data")
    os.makedirs(data, exist_ok=True)
    with open(os.path.join(data, "rates.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["meeting_date", "target_lower", "target_upper"])
        for d, lo, hi in RATES:
            w.writerow([d, f"{lo:.2f}", f"{hi:.2f}"])
    with open(os.path.join(data, "indicators.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["date", "series", "value"])
        for k, u, i in series:
            month = f"{k // 12}-{k % 12 + 1:02d}-01"
            w.writerow([month, "unemployment_rate", u])
            w.writerow([month, "inflation_rate", i])

    evidence = {}
    with open(os.path.join(data, "beige_book.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["date", "topic", "order", "sentence"])
        for d, _, _ in RATES:
            meeting = dt.date.fromisoformat(d)
            release = meeting - dt.timedelta(days=14)
            token = token_for(series, release)
            evidence[d] = token
            for order, (topic, sentence) in enumerate(TEXT[token], start=1):
                w.writerow([release.isoformat(), topic, order, sentence])

    doc = {
        "meetings": evidence,
        "variants": {t: {"remove_indicators": "mixed"} for t in ("tight", "loose")},
    }
    with open(os.path.join(HERE, "evidence.json"), "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
