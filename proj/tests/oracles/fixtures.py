"""Independent high-precision reference values frozen into the C++ tests.

Run with: python3 tests/oracles/fixtures.py
Uses mpmath only; shares no code with the library.
"""
import mpmath as mp

mp.mp.dps = 40


def beta(x):
    return x**2 / ((1 + x) * (x - mp.log1p(x)))


def g(lam, x):
    return lam * x - mp.log1p(lam * x)


def main():
    print("lambert cap 1+W0(-e^-2) =", 1 + mp.lambertw(-mp.e**-2, 0).real)
    print("zeta(3) =", mp.zeta(3))
    print("Li2(0.5) =", mp.polylog(2, 0.5), " identity:", mp.pi**2 / 12 - mp.log(2)**2 / 2)
    print("Li2(0.95) =", mp.polylog(2, 0.95))
    for q in (1.5, 1.999, 1.25, 1.1):
        xs = mp.findroot(lambda x: beta(x) - q, (mp.mpf("1e-6"), mp.mpf(1e8)), solver="bisect")
        print(f"q={q} x*={xs} c*={xs**(2-q)}")
    print("g(0.5,1) =", g(0.5, 1))
    # g_tilde(0.5, 2; k=1.5)
    lam, x, k = mp.mpf(0.5), mp.mpf(2), mp.mpf(1.5)
    x1, x2 = k, k**2
    a = (x2 - x) / (x2 - x1)
    m = lam**2 / (1 + lam * x2) ** 2
    gt = a * g(lam, x1) + (1 - a) * g(lam, x2) - m * a * (1 - a) * (x2 - x1) ** 2 / 2
    print("g_tilde(0.5,2;1.5) =", gt, " g =", g(lam, x))
    print("g_tilde(0.3,-0.5) =", mp.mpf(0.09) * 0.25 / (2 * 0.7))
    print("heavy example =", 0.3 * 1.5 - g(0.3, 1.5))
    psi = -mp.mpf(0.3) - mp.log(0.7)
    print("eb example =", 0.45 - psi * 2.25, " psiE(0.3)=", psi)

    # DDRM with defaults
    lmax, xi, r, eta = mp.mpf(1) / 2, mp.mpf(8) / 5, 2, mp.mpf("0.95")
    zr = mp.zeta(r)
    factor = 1 + mp.polylog(r, eta) / (eta * zr)
    z = [mp.mpf(1) / 2 * (xi - 1) / xi ** (1 + j) * factor for j in range(10000)]
    lams = [lmax / xi ** (j + mp.mpf(1) / 2) for j in range(10000)]
    print("z mass (1e4 terms) =", mp.fsum(z), " closed form =", factor / 2)
    print("w0 =", 1 / zr)

    def wealth0(y):
        return mp.fsum(zj * mp.exp(lj * y) for zj, lj in zip(z[:400], lams[:400]))

    for alpha in (mp.mpf("0.05"), mp.mpf("0.025"), mp.mpf("0.01")):
        y = mp.findroot(lambda y: wealth0(y) - 1 / alpha, (mp.mpf(0), mp.mpf(200)), solver="bisect")
        print(f"t=0 boundary alpha={alpha}: {y}")


if __name__ == "__main__":
    main()
