# Symmetry reductions and solutions of the supersymmetric sinh-Gordon equation
