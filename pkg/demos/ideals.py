"""Diagonal operators, their ideals and the exhaustive lattice check."""
from __future__ import annotations

from fractions import Fraction

from banachforge.core import Coeffs
from banachforge.diagalg import DiagOp, IdealSpec, check_ideal_lattice, ideal_membership, multiply

if __name__ == "__main__":
    T = DiagOp(Fraction(0), Coeffs({1: 1, 2: -1}))
    S = DiagOp(Fraction(2), Coeffs({2: -2}))
    print("S*T =", multiply(S, T).to_json())
    for text in ("", "1", "3,omega", "2,5.."):
        L = IdealSpec.parse(text)
        print(f"L = {{{text}}}: T in A_L = {ideal_membership(T, L)}, S in A_L = {ideal_membership(S, L)}")
    rep = check_ideal_lattice()
    print(f"lattice check over {rep['specs']} ideals: pass = {rep['pass']}")
