# Numerical core: linear algebra, Riccati flow, optimality checks and solvers
