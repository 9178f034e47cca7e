#!/usr/bin/env python3
"""Download the SLICOT benchmarks used by the acceptance suite and convert
them to Matrix Market files `<out>/<name>.{E,A,B,C}.mtx`.

    python3 scripts/fetch_slicot.py [--out data] [--base URL] [--local DIR]

`--local DIR` skips the download and reads `DIR/<archive>` (zip or .mat)
instead. Needs numpy and scipy.
"""

import argparse
import io
import pathlib
import sys
import urllib.request
import zipfile

import numpy as np
import scipy.io
import scipy.sparse

BASE = "http://slicot.org/objects/software/shared/bench-data/"

# output name -> archive name on the SLICOT benchmark page
ARCHIVES = {
    "mna4": "MNA_4.zip",
    "tline": "tline.zip",
    "iss": "iss.zip",
}


def fetch(name, base, local):
    if local is not None:
        for candidate in (local / name, local / name.replace(".zip", ".mat")):
            if candidate.exists():
                return candidate.name, candidate.read_bytes()
        sys.exit(f"{name} not found in {local}")
    url = base + name
    print(f"downloading {url}")
    with urllib.request.urlopen(url, timeout=60) as r:
        return name, r.read()


def load_mat(filename, blob):
    if filename.endswith(".zip"):
        with zipfile.ZipFile(io.BytesIO(blob)) as z:
            mats = [n for n in z.namelist() if n.endswith(".mat")]
            if not mats:
                sys.exit(f"{filename} holds no .mat file")
            blob = z.read(mats[0])
    return scipy.io.loadmat(io.BytesIO(blob))


def pick(mat, key):
    for k, v in mat.items():
        if k.lower() == key.lower():
            return v
    return None


def write(path, m):
    if scipy.sparse.issparse(m):
        scipy.io.mmwrite(str(path), scipy.sparse.coo_matrix(m))
    else:
        scipy.io.mmwrite(str(path), np.atleast_2d(np.asarray(m)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data", type=pathlib.Path)
    ap.add_argument("--base", default=BASE)
    ap.add_argument("--local", type=pathlib.Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for out_name, archive in ARCHIVES.items():
        mat = load_mat(*fetch(archive, args.base, args.local))
        a, b, c = (pick(mat, k) for k in "ABC")
        if a is None or b is None or c is None:
            sys.exit(f"{archive}: missing A, B or C (keys {sorted(mat)})")
        e = pick(mat, "E")
        for key, m in (("A", a), ("B", b), ("C", c), ("E", e)):
            if m is None:
                continue
            if key in "BC" and scipy.sparse.issparse(m):
                m = m.toarray()
            write(args.out / f"{out_name}.{key}.mtx", m)
        print(f"{out_name}: n = {a.shape[0]}, m = {b.shape[1]}, p = {c.shape[0]}, E {'given' if e is not None else 'identity'}")


if __name__ == "__main__":
    main()
