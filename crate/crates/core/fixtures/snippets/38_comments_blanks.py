# compute the total
total = 0

for v in values:  # each value
    total += v
