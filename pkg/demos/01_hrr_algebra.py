#!/usr/bin/env python3
# Binding, unbinding and counting with d x d encodings.
import numpy as np

from dcyk.hrr import HrrSpace, decode_op, encode, identity_score

space = HrrSpace(1000, seed=0)
E = lambda s: encode(space, s)
D = lambda s: decode_op(space, s)

# a symbol cancels against its own inverse, from either side
print("phi(a) phi_inv(a):", round(identity_score(E("a") @ D("a")), 3))
print("phi_inv(a) phi(a):", round(identity_score(D("a") @ E("a")), 3))
print("phi(a) phi_inv(b):", round(identity_score(E("a") @ D("b")), 3))

# but the Frobenius distance to I is about 1 either way: the diagonal is the signal
for label, m in [("self", E("a") @ D("a") - np.eye(1000)), ("cross", E("a") @ D("b"))]:
    print(f"{label} ||.||_F / sqrt(d) = {np.linalg.norm(m) / np.sqrt(1000):.3f}")

# a set of two strings: "a b S" and "D S a"
words = E("a") @ E("b") @ E("S") + E("D") @ E("S") @ E("a")
print("is 'a b S' in the set?", round(identity_score(D("S") @ D("b") @ D("a") @ words), 3))
print("is 'a D S' in the set?", round(identity_score(D("S") @ D("D") @ D("a") @ words), 3))

# multisets count
for k in (1, 2, 3):
    print(f"{k} copies of a ->", round(identity_score(D("a") @ (k * E("a"))), 3))
