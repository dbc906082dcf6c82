"""Regenerates the worked-example fixtures with mpmath at 50 digits."""
import json
import os

import mpmath as mp

mp.mp.dps = 50
HERE = os.path.dirname(os.path.abspath(__file__))


def c(z):
    z = mp.mpc(z)
    return [float(z.real), float(z.imag)]


def mat(rows):
    m = mp.matrix(rows)
    return {"rows": m.rows, "cols": m.cols,
            "data": [c(m[i, j]) for i in range(m.rows) for j in range(m.cols)]}


def lifting(cv, bv, av):
    e = mat([[cv, 0], [bv, av]])
    return {"E": {"dim": 2, "arity": 1, "blocks": [e]}, "split": 1}


def defect(e):
    m = mp.matrix(e)
    vals, vecs = mp.eighe(mp.eye(2) - m.H * m)
    root = mp.diag([mp.sqrt(max(mp.re(v), 0)) for v in vals])
    return vecs * root * vecs.H


def series(coeffs):
    return [c(x) for x in coeffs]


def example_5_1(alpha, name):
    alpha = mp.mpc(alpha)
    r = 1 - abs(alpha) ** 2
    b = mp.sqrt(3) / 2 * mp.sqrt(r)
    k = 1 / mp.sqrt(1 - abs(alpha) ** 2 / 4)
    n = 20
    blaschke = [-alpha] + [r * mp.conj(alpha) ** (k - 1) for k in range(1, n + 1)]
    return {
        "name": name,
        "formula": "θ_{C,E} = (z − α)σ/(1 − ᾱz)",
        "lifting": lifting(mp.mpf(1) / 2, b, alpha),
        "degree": n,
        "alpha": c(alpha),
        "expected": {
            "b": c(b),
            "gamma": c(1),
            "dstar_gamma_norm": 0.0,
            "d_e": mat([[k * 3 * abs(alpha) ** 2 / 4, -k * b * alpha],
                        [-k * b * mp.conj(alpha), k * r]]),
            "d_e_check": mat(defect([[mp.mpf(1) / 2, 0], [b, alpha]]).tolist()),
            "sigma_de": mat([[-mp.conj(alpha) * mp.sqrt(3) / 2, mp.sqrt(r)]]),
            "components": [{"label": "blaschke", "coeffs": series(blaschke)}],
        },
    }


def example_5_2():
    n = 6
    s3 = mp.sqrt(3)
    return {
        "name": "5.2",
        "formula": "θ_{C,E} = [√2/√3, z/√3]",
        "lifting": lifting(mp.mpf(1) / 2, mp.mpf(1) / 2, 0),
        "degree": n,
        "expected": {
            "b": c(mp.mpf(1) / 2),
            "gamma": c(1 / s3),
            "dstar_gamma_norm": float(mp.sqrt(mp.mpf(2) / 3)),
            "d_e": mat([[1 / mp.sqrt(2), 0], [0, 1]]),
            "sigma_ambient": mat([[1, 0], [0, 1]]),
            "components": [
                {"label": "theta e1", "coeffs": series([mp.sqrt(2) / s3] + [0] * n)},
                {"label": "theta e2", "coeffs": series([0, 1 / s3] + [0] * (n - 1))},
            ],
        },
    }


def taylor(num, den, n):
    """Coefficients of (num[0] + num[1] z)/(den[0] + den[1] z)."""
    out = []
    prev = mp.mpf(0)
    for k in range(n + 1):
        a = (num[k] if k < len(num) else 0)
        x = (a - den[1] * prev) / den[0]
        out.append(x)
        prev = x
    return out


def example_5_3():
    n = 12
    s5, s3 = mp.sqrt(5), mp.sqrt(3)
    s = mp.sqrt(s5 * (s5 + 2))
    half = mp.mpf(1) / 2
    de = [[(s5 + 2) / (2 * s), -1 / (2 * s)], [-1 / (2 * s), (s5 + 3) / (2 * s)]]
    sigma = [[(s5 + 3) / (s3 * s), 1 / (s3 * s)], [-1 / (s3 * s), (s5 + 3) / (s3 * s)]]
    col = [[half, -1 / (2 * s), (s5 + 3) / (2 * s)],
           [1 / s3, (s5 + 2) / (s3 * s), -1 / (s3 * s)]]
    return {
        "name": "5.3",
        "formula": "θ_{C,E}D_E = [(4 − 3z)/(4√3(1 − z/2)), 2(z − 1/2)/(3(1 − z/2))]",
        "lifting": lifting(half, half, half),
        "degree": n,
        "expected": {
            "b": c(half),
            "gamma": c(mp.mpf(2) / 3),
            "dstar_gamma_norm": float(s5 / 3),
            "d_e": mat(de),
            "d_e_check": mat(defect([[half, 0], [half, half]]).tolist()),
            "sigma_de": mat([[s5 / (2 * s3), 0], [-1 / (2 * s3), s3 / 2]]),
            "sigma_ambient": mat(sigma),
            "colligation": mat(col),
            "components": [
                {"label": "theta D_E e_C",
                 "coeffs": series(taylor([4 / (4 * s3), -3 / (4 * s3)], [1, -half], n))},
                {"label": "gamma theta_A",
                 "coeffs": series(taylor([-2 * half / 3, mp.mpf(2) / 3], [1, -half], n))},
                {"label": "theta D_E e_A",
                 "coeffs": series(taylor([-half / s3, 1 / s3], [1, -half], n))},
            ],
        },
    }


def main():
    items = {
        "example_5_1_a.json": example_5_1(mp.mpf("0.3"), "5.1a"),
        "example_5_1_b.json": example_5_1(mp.mpc(0, "0.5"), "5.1b"),
        "example_5_2.json": example_5_2(),
        "example_5_3.json": example_5_3(),
    }
    for fname, obj in items.items():
        with open(os.path.join(HERE, fname), "w") as fh:
            json.dump(obj, fh, indent=1, ensure_ascii=False)
            fh.write("\n")


if __name__ == "__main__":
    main()
