#!/usr/bin/env python3
"""Write trade.csv / gdp.csv for each snapshot year.

Bilateral goods exports among the listed economies are reporter-side annual
totals in billions of USD, rounded to 0.1. The ROW pseudo-country closes each
economy's books: exports to ROW are total exports minus exports to listed
partners, and ROW's exports to an economy are its total imports minus what
listed reporters say they shipped to it. Negative residuals are written as 0.
"""
import csv
import os

CODES = ["CAN", "CHN", "DEU", "FRA", "GBR", "HKG", "ITA", "JPN", "MAC", "RUS", "USA"]

YEARS = {
    2018: {
        "exports": {
            "USA": dict(CAN=298.9, CHN=120.1, DEU=57.7, FRA=36.6, GBR=66.3, HKG=37.3, ITA=23.2, JPN=75.0, MAC=0.9, RUS=6.6),
            "CAN": dict(USA=338.0, CHN=21.3, DEU=3.9, FRA=2.5, GBR=13.5, HKG=3.5, ITA=1.7, JPN=10.0, RUS=0.5),
            "CHN": dict(USA=478.4, CAN=35.2, DEU=77.6, FRA=30.7, GBR=56.6, HKG=303.0, ITA=33.2, JPN=147.1, MAC=3.2, RUS=48.0),
            "HKG": dict(CHN=313.5, USA=45.0, CAN=3.8, DEU=10.0, FRA=4.4, GBR=10.4, ITA=2.8, JPN=17.6, MAC=8.6, RUS=3.0),
            "MAC": dict(CHN=0.1, HKG=1.0, USA=0.1),
            "DEU": dict(USA=127.5, CAN=11.5, CHN=109.9, FRA=124.0, GBR=96.9, HKG=8.6, ITA=82.0, JPN=23.6, MAC=0.2, RUS=30.2),
            "FRA": dict(USA=46.9, CAN=4.4, CHN=24.4, DEU=86.6, GBR=39.4, HKG=5.6, ITA=43.5, JPN=10.1, MAC=0.3, RUS=4.0),
            "GBR": dict(USA=64.4, CAN=8.8, CHN=29.0, DEU=49.5, FRA=32.2, HKG=10.3, ITA=13.6, JPN=9.6, MAC=0.1, RUS=3.1),
            "ITA": dict(USA=50.6, CAN=4.7, CHN=15.4, DEU=68.3, FRA=57.5, GBR=28.4, HKG=4.6, JPN=7.8, MAC=0.2, RUS=8.9),
            "JPN": dict(USA=140.6, CAN=9.4, CHN=143.9, DEU=20.9, FRA=6.8, GBR=13.6, HKG=34.8, ITA=5.4, MAC=0.3, RUS=8.1),
            "RUS": dict(USA=12.5, CAN=0.5, CHN=56.1, DEU=34.2, FRA=5.4, GBR=8.8, HKG=0.5, ITA=14.2, JPN=12.7),
        },
        "total_exports": dict(USA=1664, CAN=450, CHN=2487, HKG=569, MAC=1.3, DEU=1560, FRA=582, GBR=486, ITA=547, JPN=738, RUS=443),
        "total_imports": dict(USA=2614, CAN=469, CHN=2136, HKG=627, MAC=11.0, DEU=1286, FRA=660, GBR=672, ITA=501, JPN=748, RUS=249),
        # CHN is the residual that makes CHN+HKG+MAC equal the published 12.79 trillion.
        "gdp": dict(USA=20580, CAN=1701, DEU=3951, FRA=2780, GBR=2828, ITA=2075, JPN=4779, RUS=1647, CHN=12372.5, HKG=363.0, MAC=54.5),
        "world_gdp": 86400,
    },
    2000: {
        "exports": {
            "USA": dict(CAN=178.9, CHN=16.2, DEU=29.4, FRA=20.3, GBR=41.6, HKG=14.6, ITA=11.0, JPN=64.9, MAC=0.1, RUS=2.1),
            "CAN": dict(USA=239.0, CHN=2.3, DEU=2.3, FRA=1.4, GBR=3.2, HKG=0.6, ITA=1.0, JPN=6.3, RUS=0.2),
            "CHN": dict(USA=52.1, CAN=3.2, DEU=9.3, FRA=3.7, GBR=6.3, HKG=44.5, ITA=3.8, JPN=41.7, MAC=0.6, RUS=2.2),
            "HKG": dict(CHN=69.9, USA=46.0, CAN=2.1, DEU=8.0, FRA=2.9, GBR=8.1, ITA=2.0, JPN=11.0, MAC=1.1, RUS=0.5),
            "MAC": dict(USA=1.2, HKG=0.3, CHN=0.1, DEU=0.2, GBR=0.1, FRA=0.1),
            "DEU": dict(USA=56.7, CAN=3.9, CHN=9.4, FRA=62.0, GBR=46.0, HKG=3.5, ITA=41.2, JPN=10.2, RUS=7.3),
            "FRA": dict(USA=25.9, CAN=2.2, CHN=2.8, DEU=44.4, GBR=28.3, HKG=2.3, ITA=26.6, JPN=4.8, RUS=1.2),
            "GBR": dict(USA=44.3, CAN=4.1, CHN=2.1, DEU=34.3, FRA=26.4, HKG=3.5, ITA=12.8, JPN=5.6, RUS=1.1),
            "ITA": dict(USA=24.3, CAN=1.9, CHN=2.9, DEU=36.1, FRA=29.4, GBR=16.5, HKG=2.2, JPN=4.3, RUS=2.2),
            "JPN": dict(USA=144.0, CAN=7.0, CHN=30.4, DEU=20.0, FRA=6.2, GBR=14.8, HKG=27.3, ITA=3.9, MAC=0.1, RUS=0.6),
            "RUS": dict(USA=4.6, CAN=0.2, CHN=5.2, DEU=9.2, FRA=2.9, GBR=4.6, HKG=0.2, ITA=7.0, JPN=2.7),
        },
        "total_exports": dict(USA=781, CAN=277, CHN=249, HKG=202, MAC=2.5, DEU=551, FRA=298, GBR=284, ITA=240, JPN=479, RUS=105),
        "total_imports": dict(USA=1259, CAN=245, CHN=225, HKG=213, MAC=2.3, DEU=497, FRA=305, GBR=340, ITA=238, JPN=380, RUS=34),
        "gdp": dict(USA=10252, CAN=744, DEU=1950, FRA=1362, GBR=1662, ITA=1143, JPN=4968, RUS=260, CHN=1211, HKG=172, MAC=6.5),
        "world_gdp": 33830,
    },
}


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    for year, d in YEARS.items():
        rows = []
        for r in CODES:
            listed = d["exports"][r]
            for p in CODES:
                if p != r and p in listed:
                    rows.append((r, p, listed[p]))
            rows.append((r, "ROW", max(0.0, round(d["total_exports"][r] - sum(listed.values()), 1))))
        for p in CODES:
            shipped = sum(d["exports"][r].get(p, 0.0) for r in CODES if r != p)
            rows.append(("ROW", p, max(0.0, round(d["total_imports"][p] - shipped, 1))))
        out = os.path.join(here, str(year))
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "trade.csv"), "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["reporter_iso3", "partner_iso3", "export_value"])
            for r, p, v in rows:
                w.writerow([r, p, f"{v:.1f}"])
        gdp = dict(d["gdp"])
        gdp["ROW"] = round(d["world_gdp"] - sum(gdp.values()), 1)
        with open(os.path.join(out, "gdp.csv"), "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["iso3", "gdp"])
            for c in sorted(gdp):
                w.writerow([c, f"{gdp[c]:.1f}"])


if __name__ == "__main__":
    main()
