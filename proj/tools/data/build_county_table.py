#!/usr/bin/env python3
"""Build an approximate county table in gazetteer layout.

Inputs:
  counties-10m.json  us-atlas county TopoJSON (Census cartographic boundaries)
  cities500.json     GeoNames populated places (population >= 500)

County centroids and land areas come from the polygons. County population is
the summed population of the GeoNames places that fall inside the polygon, so
it under-counts rural population. This is a stand-in for a census extract.
"""

import argparse
import csv
import json
import math

from shapely.geometry import Point, Polygon, MultiPolygon
from shapely.strtree import STRtree

KM_PER_DEG = 6371.0 * math.pi / 180.0


def decode_arcs(topo):
    sx, sy = topo["transform"]["scale"]
    tx, ty = topo["transform"]["translate"]
    arcs = []
    for arc in topo["arcs"]:
        x = y = 0
        pts = []
        for dx, dy in arc:
            x += dx
            y += dy
            pts.append((x * sx + tx, y * sy + ty))
        arcs.append(pts)
    return arcs


def ring(arcs, idxs):
    pts = []
    for i in idxs:
        a = arcs[i] if i >= 0 else list(reversed(arcs[~i]))
        pts.extend(a if not pts else a[1:])
    return pts


def polygon(arcs, rings_idx):
    rings = [r for r in (ring(arcs, r) for r in rings_idx) if len(r) >= 4]
    return Polygon(rings[0], rings[1:]) if rings else None


def geometry(arcs, g):
    parts = [g["arcs"]] if g["type"] == "Polygon" else g["arcs"]
    polys = [p for p in (polygon(arcs, r) for r in parts) if p is not None]
    return polys[0] if len(polys) == 1 else MultiPolygon(polys)


def area_km2(geom):
    # Equirectangular scaling at the centroid latitude; adequate at county scale.
    lat = geom.centroid.y
    return geom.area * KM_PER_DEG * KM_PER_DEG * math.cos(math.radians(lat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("atlas")
    ap.add_argument("places")
    ap.add_argument("out")
    args = ap.parse_args()

    topo = json.load(open(args.atlas))
    arcs = decode_arcs(topo)
    counties = []
    for g in topo["objects"]["counties"]["geometries"]:
        fips = g["id"]
        # Contiguous states and DC only.
        if int(fips[:2]) > 56 or fips[:2] in ("02", "15"):
            continue
        raw = geometry(arcs, g)
        geom = raw.buffer(0)
        if geom.is_empty:
            # Collapsed at this resolution (e.g. small independent cities).
            parts = [g["arcs"]] if g["type"] == "Polygon" else g["arcs"]
            xs, ys = zip(*[c for p in parts for r in p for c in ring(arcs, r)])
            geom = Point(sum(xs) / len(xs), sum(ys) / len(ys)).buffer(0.01)
        counties.append((fips, g["properties"]["name"], geom))

    tree = STRtree([c[2] for c in counties])
    pop = [0] * len(counties)
    places = json.load(open(args.places))
    for p in places.values():
        if p["countrycode"] != "US":
            continue
        pt = Point(p["longitude"], p["latitude"])
        for k in tree.query(pt):
            if counties[k][2].covers(pt):
                pop[k] += int(p["population"])
                break

    rows = sorted(zip(counties, pop), key=lambda r: r[0][0])
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["fips", "name", "lat", "lon", "population", "land_area_km2"])
        for (fips, name, geom), n in rows:
            c = geom.representative_point() if not geom.contains(geom.centroid) else geom.centroid
            w.writerow([fips, name, f"{c.y:.6f}", f"{c.x:.6f}", n, f"{max(area_km2(geom), 1.0):.3f}"])


if __name__ == "__main__":
    main()
