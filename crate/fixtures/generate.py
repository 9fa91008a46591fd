#!/usr/bin/env python3
"""Regenerates the bundled fixture catalogs.

Everything here is synthetic except the handful of named airports, whose
coordinates are approximate. Output is deterministic (fixed seeds), so
re-running the script leaves the committed files unchanged.

    python3 fixtures/generate.py
"""

import json
import math
import os
import random

R = 6.371e6
HERE = os.path.dirname(os.path.abspath(__file__))


def destination(lat, lon, d, brg):
    p1 = math.radians(lat)
    l1 = math.radians(lon)
    t = math.radians(brg)
    dl = d / R
    p2 = math.asin(math.sin(p1) * math.cos(dl) + math.cos(p1) * math.sin(dl) * math.cos(t))
    l2 = l1 + math.atan2(math.sin(t) * math.sin(dl) * math.cos(p1), math.cos(dl) - math.sin(p1) * math.sin(p2))
    lon2 = (math.degrees(l2) + 540.0) % 360.0 - 180.0
    return math.degrees(p2), lon2


def runway(lat, lon, heading, side, length=1600.0):
    a = destination(lat, lon, length / 2, heading + 180.0)
    b = destination(lat, lon, length / 2, heading)
    return "%.6f:%.6f:%.6f:%.6f:%.1f:%s" % (a[0], a[1], b[0], b[1], heading % 360.0, side)


def circle(lat, lon, radius, n=48):
    ring = []
    for i in range(n):
        p = destination(lat, lon, radius, 360.0 * i / n)
        ring.append([round(p[1], 6), round(p[0], 6)])
    ring.append(ring[0])
    return ring


def write_airports(path, rows):
    with open(path, "w", newline="\n") as f:
        f.write("# format_version: 1\n")
        f.write("id,name,lat,lon,elev_m,fuel_price_per_l,runways\n")
        for r in rows:
            price = "" if r["price"] is None else "%.2f" % r["price"]
            name = r["name"]
            if "," in name:
                name = '"%s"' % name
            f.write("%s,%s,%.6f,%.6f,%.1f,%s,%s\n" % (
                r["id"], name, r["lat"], r["lon"], r["elev"], price, ";".join(r["runways"])))


def airport(id_, name, lat, lon, elev, price, rwys):
    return {
        "id": id_, "name": name, "lat": lat, "lon": lon, "elev": elev, "price": price,
        "runways": [runway(lat, lon, h, s) for (h, s) in rwys],
    }


def write_pois(path, pois):
    with open(path, "w", newline="\n") as f:
        f.write(json.dumps({"format_version": 1}) + "\n")
        for p in pois:
            f.write(json.dumps(p, sort_keys=True) + "\n")


def write_zones(path, features):
    with open(path, "w", newline="\n") as f:
        json.dump({"type": "FeatureCollection", "format_version": 1, "features": features}, f, indent=1, sort_keys=True)
        f.write("\n")


def zone_feature(id_, ring, props):
    props = dict(props)
    props["id"] = id_
    return {"type": "Feature", "geometry": {"type": "Polygon", "coordinates": [ring]}, "properties": props}


def rect_ring(lat0, lon0, lat1, lon1):
    return [[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]


LAF = airport("LAF", "Purdue University Airport", 40.4123, -86.9369, 184.0, 1.65, [(50.0, "L"), (100.0, "R")])
IND = airport("IND", "Indianapolis International Airport", 39.7173, -86.2944, 241.0, 1.92, [(50.0, "L"), (140.0, "R")])
TYQ = airport("TYQ", "Zionsville Executive Airport", 40.0306, -86.2514, 280.0, 1.71, [(180.0, "L")])
FKR = airport("FKR", "Frankfort Municipal Airport", 40.2735, -86.5622, 262.0, None, [(90.0, "L")])

# 12-airport transcontinental corridor. Prices are chosen so that the
# cheapest chain differs from the shortest one.
CORRIDOR = [
    airport("JFK", "New York John F. Kennedy International Airport", 40.6413, -73.7781, 4.0, 2.41, [(40.0, "L"), (130.0, "R")]),
    airport("PIT", "Pittsburgh International Airport", 40.4915, -80.2329, 367.0, 1.38, [(100.0, "L")]),
    airport("IND", "Indianapolis International Airport", 39.7173, -86.2944, 241.0, 1.92, [(50.0, "L"), (140.0, "R")]),
    airport("STL", "St. Louis Lambert International Airport", 38.7487, -90.3700, 188.0, 1.12, [(120.0, "L")]),
    airport("MCI", "Kansas City International Airport", 39.2976, -94.7139, 313.0, 2.05, [(10.0, "L")]),
    airport("ICT", "Wichita Eisenhower National Airport", 37.6499, -97.4331, 404.0, None, [(10.0, "R")]),
    airport("AMA", "Rick Husband Amarillo International Airport", 35.2194, -101.7059, 1099.0, 0.98, [(40.0, "L")]),
    airport("ABQ", "Albuquerque International Sunport", 35.0402, -106.6091, 1631.0, 1.57, [(80.0, "L")]),
    airport("FLG", "Flagstaff Pulliam Airport", 35.1385, -111.6712, 2135.0, 1.21, [(30.0, "R")]),
    airport("LAS", "Las Vegas Harry Reid International Airport", 36.0840, -115.1537, 665.0, 2.33, [(10.0, "L")]),
    airport("PHX", "Phoenix Sky Harbor International Airport", 33.4342, -112.0116, 345.0, 1.05, [(80.0, "L")]),
    airport("LAX", "Los Angeles International Airport", 33.9416, -118.4085, 38.0, 2.62, [(70.0, "L"), (70.0, "R")]),
]


def gen_conus():
    rng = random.Random(20250301)
    named = [
        airport("CLI", "Clintonville Municipal Airport", 44.6138, -88.7313, 251.0, 0.74, [(140.0, "L")]),
        airport("ADQ", "Kodiak Airport", 57.7500, -152.4938, 24.0, 2.77, [(70.0, "L")]),
        LAF, IND, TYQ, FKR,
    ]
    seen = {a["id"] for a in named}
    for a in CORRIDOR:
        if a["id"] not in seen:
            named.append(a)
            seen.add(a["id"])
    total, priced = 2577, 2076
    rows = list(named)
    n_priced = sum(1 for a in rows if a["price"] is not None)
    i = 0
    while len(rows) < total:
        i += 1
        lat = rng.uniform(25.5, 48.8)
        lon = rng.uniform(-124.0, -67.5)
        need_price = priced - n_priced
        slots = total - len(rows)
        has_price = rng.random() < need_price / slots
        price = round(rng.uniform(0.75, 2.76), 2) if has_price else None
        if has_price:
            n_priced += 1
        rwys = [(rng.choice(range(0, 180, 10)) * 1.0, rng.choice("LR"))]
        if rng.random() < 0.3:
            rwys.append(((rwys[0][0] + 90.0) % 180.0, rng.choice("LR")))
        rows.append(airport("X%04d" % i, "Field %04d" % i, lat, lon, round(rng.uniform(0, 2200), 1), price, rwys))
    assert len(rows) == total and n_priced == priced
    os.makedirs(os.path.join(HERE, "conus"), exist_ok=True)
    write_airports(os.path.join(HERE, "conus", "airports.csv"), rows)


def gen_uc1():
    rng = random.Random(1)
    d = os.path.join(HERE, "uc1")
    os.makedirs(d, exist_ok=True)
    write_airports(os.path.join(d, "airports.csv"), [LAF, IND, FKR])
    pois = []
    # 25 forest cells inside 5 km, 5 just outside.
    for k in range(30):
        inside = k < 25
        dist = rng.uniform(900.0, 4800.0) if inside else rng.uniform(5600.0, 9000.0)
        lat, lon = destination(LAF["lat"], LAF["lon"], dist, rng.uniform(0.0, 360.0))
        pois.append({"id": "forest-%02d" % k, "name": "Forest cell %02d" % k, "category": "forest",
                     "lat": round(lat, 6), "lon": round(lon, 6)})
    pois.append({"id": "school-01", "name": "Klondike Elementary", "category": "school", "lat": 40.4470, "lon": -86.9500})
    pois.append({"id": "pharm-wl", "name": "West Lafayette Pharmacy", "category": "pharmacy", "lat": 40.4250,
                 "lon": -86.9080, "rating": 4.0, "review_count": 37})
    write_pois(os.path.join(d, "pois.jsonl"), pois)


def gen_uc2():
    d = os.path.join(HERE, "uc2")
    os.makedirs(d, exist_ok=True)
    write_airports(os.path.join(d, "airports.csv"), [IND, LAF, TYQ, FKR])
    pois = [
        {"id": "ph-leb", "name": "Lebanon Drug", "category": "pharmacy", "lat": 40.0484, "lon": -86.4692, "rating": 4.5, "review_count": 120},
        {"id": "ph-zio", "name": "Zionsville Pharmacy", "category": "pharmacy", "lat": 39.9509, "lon": -86.2619, "rating": 3.5, "review_count": 40},
        {"id": "ph-fra", "name": "Frankfort Apothecary", "category": "pharmacy", "lat": 40.2795, "lon": -86.5108, "rating": 4.0, "review_count": 15},
        {"id": "ph-bro", "name": "Brownsburg Rx", "category": "pharmacy", "lat": 39.8434, "lon": -86.3978, "rating": 2.5, "review_count": 210},
        {"id": "ph-wl", "name": "West Lafayette Pharmacy", "category": "pharmacy", "lat": 40.4250, "lon": -86.9080, "rating": 4.0, "review_count": 37},
        {"id": "sm-leb", "name": "Lebanon Market", "category": "supermarket", "lat": 40.0390, "lon": -86.4870, "rating": 3.0, "review_count": 88},
        {"id": "sm-tho", "name": "Thorntown Grocery", "category": "supermarket", "lat": 40.1281, "lon": -86.6067, "rating": 4.5, "review_count": 22},
        {"id": "sm-laf", "name": "Lafayette Fresh Foods", "category": "supermarket", "lat": 40.4167, "lon": -86.8753, "rating": 4.0, "review_count": 310},
        {"id": "sm-whi", "name": "Whitestown Supermarket", "category": "supermarket", "lat": 39.9972, "lon": -86.3458, "rating": 3.5, "review_count": 64},
        {"id": "sm-ind", "name": "Speedway Supermarket", "category": "supermarket", "lat": 39.7900, "lon": -86.2470, "rating": 2.0, "review_count": 12},
        {"id": "park-1", "name": "Eagle Creek Park", "category": "park", "lat": 39.8650, "lon": -86.3000},
    ]
    write_pois(os.path.join(d, "pois.jsonl"), pois)

    zones = [
        zone_feature("ctl-tyq", circle(TYQ["lat"], TYQ["lon"], 6000.0), {"class": "D", "floor_alt_m": 0.0, "ceiling_alt_m": 1200.0}),
        zone_feature("ctl-leb", circle(40.10, -86.56, 5000.0), {"class": "D", "floor_alt_m": 0.0, "ceiling_alt_m": 1500.0}),
        zone_feature("moa-high", circle(40.20, -86.70, 9000.0), {"class": "MOA", "floor_alt_m": 3000.0, "ceiling_alt_m": 5500.0}),
    ]
    write_zones(os.path.join(d, "airspace.geojson"), zones)

    pop = [
        zone_feature("city-lebanon", rect_ring(40.02, -86.51, 40.08, -86.43), {"density_weight": 1.0}),
        zone_feature("city-frankfort", rect_ring(40.26, -86.54, 40.30, -86.48), {"density_weight": 0.8}),
        zone_feature("city-lafayette", rect_ring(40.37, -86.93, 40.45, -86.83), {"density_weight": 2.0}),
        zone_feature("city-indy-nw", rect_ring(39.76, -86.33, 39.90, -86.18), {"density_weight": 1.5}),
    ]
    write_zones(os.path.join(d, "population.geojson"), pop)

    write_weather(os.path.join(d, "weather.txt"))


def write_weather(path):
    origin_lat, origin_lon, cell, rows, cols = 39.5, -87.3, 0.05, 24, 28

    def field(band, name, r, c):
        lat = origin_lat + (r + 0.5) * cell
        lon = origin_lon + (c + 0.5) * cell
        # storm cell near Lebanon, weaker disturbance near Lafayette
        s1 = math.exp(-(((lat - 40.05) / 0.12) ** 2 + ((lon + 86.62) / 0.15) ** 2))
        s2 = math.exp(-(((lat - 40.35) / 0.10) ** 2 + ((lon + 86.95) / 0.10) ** 2))
        hi = band == "high"
        if name == "temperature":
            return (-42.0 if hi else 6.0) - 14.0 * s1 - 4.0 * s2 + 0.8 * math.sin(lat * 9.0)
        if name == "relative_humidity":
            return 55.0 + 40.0 * s1 + 25.0 * s2
        if name == "cloud_mixing_ratio":
            return 0.05 + 0.6 * s1 + 0.2 * s2
        if name == "vertical_velocity":
            return 0.2 + 4.5 * s1 + 1.0 * s2
        if name == "cape":
            return 150.0 + 2400.0 * s1 + 600.0 * s2
        if name == "wind_shear":
            return 0.002 + 0.015 * s1 + (0.006 if hi else 0.0)
        if name == "wind_u":
            return (28.0 if hi else 6.0) + 4.0 * s2
        if name == "wind_v":
            return (6.0 if hi else 2.0) - 3.0 * s1
        raise KeyError(name)

    params = ["temperature", "relative_humidity", "cloud_mixing_ratio", "vertical_velocity",
              "cape", "wind_shear", "wind_u", "wind_v"]
    with open(path, "w", newline="\n") as f:
        f.write("format_version: 1\n")
        f.write("origin_lat: %.4f\norigin_lon: %.4f\ncell_deg: %.4f\nrows: %d\ncols: %d\n" % (origin_lat, origin_lon, cell, rows, cols))
        f.write("bands: low high\n")
        for band in ("low", "high"):
            for p in params:
                f.write("[%s.%s]\n" % (band, p))
                for r in range(rows):
                    f.write(" ".join("%.4f" % field(band, p, r, c) for c in range(cols)) + "\n")


def gen_uc3():
    d = os.path.join(HERE, "uc3")
    os.makedirs(d, exist_ok=True)
    write_airports(os.path.join(d, "airports.csv"), CORRIDOR)
    hi = {"class": "R", "floor_alt_m": 4572.0, "ceiling_alt_m": 12192.0}
    zones = [
        zone_feature("r-pecos", circle(35.13, -104.15, 30000.0), hi),
        zone_feature("r-mojave", circle(35.05, -116.75, 25000.0), hi),
        zone_feature("r-ozark", circle(39.05, -92.50, 20000.0), hi),
        zone_feature("low-only", circle(40.10, -77.00, 30000.0), {"class": "D", "floor_alt_m": 0.0, "ceiling_alt_m": 1500.0}),
    ]
    write_zones(os.path.join(d, "airspace.geojson"), zones)


if __name__ == "__main__":
    gen_conus()
    gen_uc1()
    gen_uc2()
    gen_uc3()
