for k in range(1, n + 1):
    product *= k
