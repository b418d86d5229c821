"""Smoke test of the Python bindings. Run after installing the extension:

    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install --no-build-isolation dist/kummerlab-*.whl
    python3 python/smoke_test.py
"""
import math

import kummerlab as kl


def close(x, y, tol=1e-10):
    return abs(x - y) <= tol * max(abs(x), abs(y), 1.0)


# U(1, 1, z) = e^z E1(z); U(a, a+1, z) = z^-a.
assert close(kl.kummer_u(1.5, 2.5, 2.0), 2.0 ** -1.5)
assert close(math.exp(kl.log_kummer_u(0.5, 1.5, 3.0)), 3.0 ** -0.5)
assert kl.ode_residual(1.2, 0.7, 2.0, 1e-3) < 1e-5

try:
    kl.kummer_u(-1.0, 1.0, 1.0)
    raise AssertionError("negative a accepted")
except ValueError:
    pass

law = kl.Law("kummer:1,2,3,1")
assert law == kl.Law.kummer(1.0, 2.0, 3.0, 1.0)
assert str(law).startswith("kummer:")
xs = law.sample(20000, seed=7)
assert xs == law.sample(20000, seed=7)
assert all(x > 0 for x in xs)
assert 0.0 < law.cdf(1.0) < 1.0
assert math.isfinite(law.log_density(0.5))

g = kl.Law.gamma(2.0, 4.0)
assert close(g.mean, 0.5)
assert abs(sum(g.sample(50000, seed=1)) / 50000 - 0.5) < 0.01

# psi is an involution.
u, v = kl.psi(1.0, 2.0, 0.3, 1.7)
x, y = kl.psi(1.0, 2.0, u, v)
assert close(x, 0.3, 1e-13) and close(y, 1.7, 1e-13)
assert kl.jacobian(1.0, 2.0, 0.3, 1.7) > 0
assert kl.apply_map({"map": "lukacs"}, 1.0, 3.0) == (3.0, 4.0)

q = kl.BalanceQuadruple(1.0, 2.0, 1.5, 0.7, 1.0)
r = q.identity_residuals(0.3, 0.9, 0.5)
assert max(v for k, v in r.items() if k != "id2" and v is not None) < 1e-8
assert close(kl.transform(q.x_law(), 0.0, 0.0, 1e-12), 1.0, 1e-9)

reports = q.verify(n=20000, seed=3)
assert {rep["name"] for rep in reports} >= {"ks_u", "ks_v"}
assert all(rep["pass"] for rep in reports), reports

lim = kl.verify_limit("lukacs", n_list=[10, 100], sample_n=5000, seed=2)
assert len(lim) == 2

run = kl.lattice({
    "sites": 200, "steps": 5, "seed": 1,
    "map": {"map": "psi", "alpha": 1.0, "beta": 2.0},
    "x_law": "kummer:1,1.5,1.5,1", "y_law": "kummer:2,1.5,1.5,1",
})
assert len(run["final_state"]) == 200
assert {rep["name"] for rep in run["reports"]} >= {"interior_ks", "lag1_corr"}

print("python smoke test: ok")
