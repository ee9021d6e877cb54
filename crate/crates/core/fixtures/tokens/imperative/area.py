import sympy as sp

r = sp.Integer(3)
area = sp.pi * (r**2)
result = sp.nsimplify(area)
assert result == 9 * sp.pi
print(sp.simplify(area))
