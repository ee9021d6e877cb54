import sympy as sp

values = [sp.Integer(3), sp.Integer(4)]
total = sp.Integer(0)
for value in values:
    total += value
total = sp.nsimplify(total)
print(total)
