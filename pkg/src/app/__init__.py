# Prolate Spectrum - eigenvalues of the time-frequency limiting operator
