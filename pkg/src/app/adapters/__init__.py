# Reference data and report output
