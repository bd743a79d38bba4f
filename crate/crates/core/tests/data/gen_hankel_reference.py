"""Regenerates hankel_reference.csv with mpmath.

J and Y grow like e^{Im z} while H^(1) decays like e^{-Im z}, so the working
precision is raised with Im z and every value is confirmed by a second
evaluation at higher precision.

Sweep: 200 points in the closed upper half-plane, |z| log-uniform in
[1e-2, 1e3], argument uniform in [0, pi], both from a fixed-seed LCG.
"""
import mpmath as mp

mp.mp.dps = 40


def lcg(seed):
    state = seed
    while True:
        state = (6364136223846793005 * state + 1442695040888963407) % 2**64
        yield state / 2**64


def hankel_pair(z):
    base = 40 + int(float(z.imag) * 0.87)
    results = []
    for dps in (base, base + 30):
        with mp.workdps(dps):
            zz = mp.mpc(z)
            results.append((mp.hankel1(0, zz), mp.hankel1(1, zz)))
    for lo, hi in zip(*results):
        if hi != 0 and abs(lo - hi) > abs(hi) * mp.mpf(10) ** -30:
            raise RuntimeError(f"unstable reference at {z}")
    return results[1]


def main():
    rng = lcg(20210917)
    rows = []
    for i in range(200):
        u, v = next(rng), next(rng)
        mag = mp.mpf(10) ** (-2 + 5 * mp.mpf(u))
        if i < 10:
            arg = mp.mpf(0)  # real axis
        elif i < 20:
            arg = mp.pi  # negative real axis
        elif i < 30:
            arg = mp.pi / 2  # imaginary axis
        else:
            arg = mp.pi * mp.mpf(v)
        z = mp.mpc(float(mag * mp.cos(arg)), float(mag * mp.sin(arg)))
        if z.imag < 0:
            z = mp.mpc(z.real, 0)
        h0, h1 = hankel_pair(z)
        rows.append((z, h0, h1))
    with open("hankel_reference.csv", "w") as f:
        f.write("z_re,z_im,h0_re,h0_im,h1_re,h1_im\n")
        for z, h0, h1 in rows:
            vals = [z.real, z.imag, h0.real, h0.imag, h1.real, h1.imag]
            f.write(",".join(mp.nstr(x, 20, min_fixed=0, max_fixed=0) if x != 0 else "0" for x in vals) + "\n")


if __name__ == "__main__":
    main()
