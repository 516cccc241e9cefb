"""Writers that emit CSV files in the solver's published format, so the
tests exercise the real contract without importing the solver."""
from __future__ import annotations

import os

import numpy as np


def fmt(x: float) -> str:
    return "%.17g" % float(x)


def write_snap(path, t, omega, h, lx=1.0, ly=1.0, nu=0.1, model="meanfield"):
    omega = np.asarray(omega)
    h = np.asarray(h)
    nx, ny = omega.shape
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("t,nx,ny,lx,ly,nu,model\n")
        fh.write(",".join([fmt(t), str(nx), str(ny), fmt(lx), fmt(ly), fmt(nu), model]) + "\n")
        fh.write("omega,h\n")
        for a, b in zip(omega.reshape(-1), h.reshape(-1)):
            fh.write(f"{fmt(a)},{fmt(b)}\n")


def random_fields(nx, ny, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, (nx, ny)), rng.uniform(0.0, 2.0, (nx, ny))


def snap_dir(root, count=3, nx=6, ny=5, nu=0.1):
    """Directory with `count` snapshots of one run."""
    os.makedirs(root, exist_ok=True)
    names = []
    for k in range(count):
        t = 0.1 * k
        name = f"snap_{t:.6f}.csv"
        omega, h = random_fields(nx, ny, seed=100 + k)
        write_snap(os.path.join(root, name), t, omega, h, nu=nu)
        names.append(name)
    return names


def write_distances(path, nus=(0.1, 0.05, 0.025), ps=(1.0, 2.0)):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("nu_i,nu_j,p,distance\n")
        for p in ps:
            for i in range(len(nus)):
                for j in range(i + 1, len(nus)):
                    d = 0.01 * (nus[i] - nus[j]) / nus[0] * p
                    fh.write(f"{fmt(nus[i])},{fmt(nus[j])},{p:g},{fmt(d)}\n")


def write_layers(path, nus=(0.1, 0.05), depths=5):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("nu,face_group,depth,depth_over_nu,omega\n")
        for nu in nus:
            for side in ("left", "right", "bottom", "top"):
                for j in range(depths):
                    depth = 0.05 * j
                    omega = 2.0 * np.exp(-depth / nu)
                    fh.write(f"{fmt(nu)},{side},{fmt(depth)},{fmt(depth / nu)},{fmt(omega)}\n")


def write_entropy(path, phi_ids=("b00", "b01", "b02"), xis=(-0.5, 0.5)):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("xi,phi_id,residual,pass\n")
        for xi in xis:
            for k, pid in enumerate(phi_ids):
                r = -1e-4 * (k + 1) * abs(xi)
                fh.write(f"{fmt(xi)},{pid},{fmt(r)},1\n")


def sweep_dir(root):
    """Sweep layout: run_nu_* subdirectories plus the summary tables."""
    os.makedirs(root, exist_ok=True)
    for nu, seed in ((0.1, 7), (0.05, 8)):
        sub = os.path.join(root, f"run_nu_{nu:g}")
        os.makedirs(sub, exist_ok=True)
        for k in range(2):
            t = 0.15 * k
            omega, h = random_fields(8, 8, seed=seed + k)
            write_snap(os.path.join(sub, f"snap_{t:.6f}.csv"), t, omega, h, nu=nu)
    write_distances(os.path.join(root, "distances.csv"), nus=(0.1, 0.05))
    write_layers(os.path.join(root, "layers.csv"), nus=(0.1, 0.05))


def tree_digest(root) -> dict:
    """Relative path -> raw bytes for every file under root."""
    out = {}
    for dirpath, _, names in os.walk(root):
        for name in names:
            p = os.path.join(dirpath, name)
            with open(p, "rb") as fh:
                out[os.path.relpath(p, root)] = fh.read()
    return out
