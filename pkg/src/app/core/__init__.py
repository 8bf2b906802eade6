# Numerical kernels, oracles and reproduction logic
